#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hedonic {

// Deterministic 64-bit generator (splitmix64 seeding + xoshiro256**).
// The standard <random> distributions are implementation-defined, which
// would make fixture files and Monte Carlo tests differ across library
// versions; everything here is pinned bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Box-Muller, one deviate per pair of uniforms (no cached second value,
  // so the stream is insensitive to call interleaving).
  double normal() {
    double u1 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_;
};

// Golden-section minimization of a unimodal-ish 1-D function on [lo, hi].
// The caller is expected to have bracketed the minimum; plateaus resolve
// toward the lower end, which keeps repeated runs deterministic.
inline double golden_section_minimize(const std::function<double(double)>& f,
                                      double lo, double hi, double tol,
                                      int max_iter = 200) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

struct NelderMeadResult {
  std::vector<double> x;
  double fmin = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
};

// Deterministic Nelder-Mead with the standard (1, 2, 0.5, 0.5) coefficients
// and a fixed axis-step initial simplex. Ties in the vertex ordering are
// broken by index so identical inputs replay identically.
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& start, double step, double ftol,
    int max_iter = 2000) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

  std::vector<std::size_t> order(n + 1);
  NelderMeadResult res;
  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];

    if (std::abs(fv[worst] - fv[best]) <=
        ftol * (std::abs(fv[best]) + std::abs(fv[worst]) + 1e-30)) {
      res.x = pts[best];
      res.fmin = fv[best];
      res.iterations = iter;
      res.converged = true;
      return res;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + t * (pts[worst][j] - centroid[j]);
      return p;
    };

    std::vector<double> xr = blend(-1.0);
    const double fr = f(xr);
    if (fr < fv[order[0]]) {
      std::vector<double> xe = blend(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = std::move(xe);
        fv[worst] = fe;
      } else {
        pts[worst] = std::move(xr);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      pts[worst] = std::move(xr);
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      std::vector<double> xc = blend(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[worst])) {
        pts[worst] = std::move(xc);
        fv[worst] = fc;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < n; ++j)
            pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
          fv[i] = f(pts[i]);
        }
      }
    }
  }

  for (std::size_t i = 0; i <= n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
  res.x = pts[order[0]];
  res.fmin = fv[order[0]];
  res.iterations = max_iter;
  res.converged = false;
  return res;
}

}  // namespace hedonic
