#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hedonic/numeric.hpp"

namespace hedonic::distfit {

// ---------------------------------------------------------------------------
// Modified Bessel function K1, exponentially scaled: k1e(z) = e^z K1(z).
//
// Three regimes:
//   z <= 4   : ascending series in extended precision,
//              K1(z) = 1/z + ln(z/2) I1(z)
//                      - (z/4) sum_k [psi(k+1)+psi(k+2)] (z^2/4)^k / (k!(k+1)!)
//   4 < z < 16 : trapezoidal evaluation of the integral representation
//              e^z K1(z) = int_0^inf exp(-z(cosh t - 1)) cosh t dt
//              under t = sinh(u); the transformed integrand decays doubly
//              exponentially, so a fixed step is accurate to ~1e-13. The
//              plain series loses digits to cancellation here and the
//              asymptotic series has not converged yet.
//   z >= 16  : divergent asymptotic expansion truncated at its smallest term.
// ---------------------------------------------------------------------------
inline double bessel_k1_scaled(double z) {
  if (!(z > 0.0)) throw std::invalid_argument("bessel_k1_scaled: need z > 0");

  if (z <= 4.0) {
    const long double zl = z;
    const long double half = zl / 2.0L;
    const long double w = half * half;  // z^2/4
    // psi(1) = -gamma_E
    long double psi_a = -0.57721566490153286060651209008240243L;  // psi(k+1)
    long double psi_b = psi_a + 1.0L;                             // psi(k+2)
    long double factor = 1.0L;  // w^k / (k! (k+1)!)
    long double i1_sum = 0.0L;
    long double psi_sum = 0.0L;
    for (int k = 0; k < 80; ++k) {
      i1_sum += factor;
      psi_sum += (psi_a + psi_b) * factor;
      const long double term = (psi_a + psi_b) * factor;
      if (k > 2 && std::abs((double)term) < 1e-25L * std::abs((double)psi_sum))
        break;
      factor *= w / ((long double)(k + 1) * (long double)(k + 2));
      psi_a += 1.0L / (long double)(k + 1);
      psi_b += 1.0L / (long double)(k + 2);
    }
    const long double i1 = half * i1_sum;
    const long double k1 =
        1.0L / zl + std::log(half) * i1 - (zl / 4.0L) * psi_sum;
    return static_cast<double>(k1 * std::exp(zl));
  }

  if (z < 16.0) {
    const double h = 0.05;
    double sum = 0.5;  // integrand at u = 0 equals 1
    for (int j = 1; j < 4000; ++j) {
      const double u = h * j;
      const double t = std::sinh(u);
      const double e = z * (std::cosh(t) - 1.0);
      if (e > 745.0) break;
      const double g = std::exp(-e) * std::cosh(t) * std::cosh(u);
      sum += g;
      if (g < 1e-22 * sum) break;
    }
    return h * sum;
  }

  // a_0 = 1, a_{k+1} = a_k (4 - (2k+1)^2) / (8 (k+1))
  double term = 1.0, sum = 1.0;
  double prev = std::numeric_limits<double>::max();
  for (int k = 0; k < 30; ++k) {
    const double num = 4.0 - (2.0 * k + 1.0) * (2.0 * k + 1.0);
    term *= num / (8.0 * (k + 1.0)) / z;
    if (std::abs(term) >= prev) break;  // past the smallest term
    sum += term;
    prev = std::abs(term);
  }
  return std::sqrt(M_PI / (2.0 * z)) * sum;
}

// ---------------------------------------------------------------------------
// Normal-inverse Gaussian distribution.
//
// Density, with gamma = sqrt(alpha^2 - beta^2) and q = sqrt(delta^2+(x-mu)^2):
//   f(x) = (alpha delta / pi) exp(delta gamma + beta (x - mu))
//          K1(alpha q) / q
// ---------------------------------------------------------------------------
struct NigParams {
  double alpha = 1.0;  // tail heaviness, > |beta|
  double beta = 0.0;   // asymmetry
  double delta = 1.0;  // scale, > 0
  double mu = 0.0;     // location

  bool valid() const {
    return std::isfinite(alpha) && std::isfinite(beta) &&
           std::isfinite(delta) && std::isfinite(mu) &&
           alpha > std::abs(beta) && delta > 0.0;
  }

  double gamma() const { return std::sqrt((alpha - beta) * (alpha + beta)); }
};

inline double nig_logpdf_one(const NigParams& p, double x) {
  const double dx = x - p.mu;
  const double q = std::sqrt(p.delta * p.delta + dx * dx);
  const double arg = p.alpha * q;
  return std::log(p.alpha * p.delta / M_PI) + p.delta * p.gamma() +
         p.beta * dx - arg + std::log(bessel_k1_scaled(arg)) - std::log(q);
}

inline std::vector<double> nig_logpdf(const NigParams& params,
                                      const std::vector<double>& x) {
  if (!params.valid())
    throw std::invalid_argument(
        "nig_logpdf: invalid parameters (need alpha > |beta|, delta > 0)");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = nig_logpdf_one(params, x[i]);
  return out;
}

struct NormalParams {
  double mean = 0.0;
  double variance = 1.0;  // MLE convention, divisor n
};

inline double normal_logpdf_one(const NormalParams& p, double x) {
  const double dx = x - p.mean;
  return -0.5 * (std::log(2.0 * M_PI * p.variance) + dx * dx / p.variance);
}

enum class Family { Normal, Nig };

inline std::string family_name(Family f) {
  return f == Family::Normal ? "normal" : "nig";
}

struct FitResult {
  Family family = Family::Normal;
  NormalParams normal;
  NigParams nig;
  double loglik = 0.0;
  int iterations = 0;
};

// Maximization failure carries the best parameters reached so the caller
// can inspect how far the search got.
class NigFitError : public std::runtime_error {
 public:
  NigFitError(const std::string& msg, const NigParams& best, double loglik)
      : std::runtime_error(msg), best_params(best), best_loglik(loglik) {}
  NigParams best_params;
  double best_loglik;
};

namespace detail {

struct SampleMoments {
  double mean = 0.0, variance = 0.0, skewness = 0.0, ex_kurtosis = 0.0;
};

inline SampleMoments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  SampleMoments m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2;
  m.skewness = m3 / std::pow(m2, 1.5);
  m.ex_kurtosis = m4 / (m2 * m2) - 3.0;
  return m;
}

// Moment inversion for the NIG start point. Sample skewness S and excess
// kurtosis K satisfy 3K - 5S^2 = 9 gamma / (delta alpha^2) and
// S^2/K = 3r/(1+4r) with r = (beta/alpha)^2; both are clamped away from
// the boundary so light-tailed samples still produce a usable start.
inline NigParams nig_moment_start(const SampleMoments& m) {
  const double S = m.skewness;
  double K = m.ex_kurtosis;
  const double min_spread = 0.05;
  if (3.0 * K - 5.0 * S * S < min_spread) K = (min_spread + 5.0 * S * S) / 3.0;
  double r = (K > 0.0) ? S * S / (3.0 * K - 4.0 * S * S) : 0.0;
  r = std::clamp(r, 0.0, 0.8);

  const double gamma = 3.0 / std::sqrt(m.variance * (3.0 * K - 5.0 * S * S));
  NigParams p;
  p.alpha = gamma / std::sqrt(1.0 - r);
  p.beta = (S >= 0.0 ? 1.0 : -1.0) * p.alpha * std::sqrt(r);
  p.delta = m.variance * gamma * gamma * gamma / (p.alpha * p.alpha);
  p.mu = m.mean - p.delta * p.beta / gamma;
  return p;
}

// Optimization runs over (log(alpha - |beta|), beta, log delta, mu), which
// keeps every Nelder-Mead trial point inside the parameter space.
inline NigParams unpack(const std::vector<double>& v) {
  NigParams p;
  p.beta = v[1];
  p.alpha = std::abs(p.beta) + std::exp(v[0]);
  p.delta = std::exp(v[2]);
  p.mu = v[3];
  return p;
}

inline std::vector<double> pack(const NigParams& p) {
  return {std::log(p.alpha - std::abs(p.beta)), p.beta, std::log(p.delta),
          p.mu};
}

}  // namespace detail

inline FitResult fit_mle(const std::vector<double>& sample, Family family) {
  FitResult result;
  result.family = family;
  const std::size_t n = sample.size();

  if (family == Family::Normal) {
    if (n < 2) throw std::invalid_argument("fit_mle: Normal needs n >= 2");
    const auto m = detail::moments(sample);
    if (m.variance <= 0.0)
      throw std::invalid_argument("fit_mle: degenerate sample (zero variance)");
    result.normal = {m.mean, m.variance};
    result.loglik = 0.0;
    for (double x : sample)
      result.loglik += normal_logpdf_one(result.normal, x);
    return result;
  }

  if (n < 50)
    throw std::invalid_argument(
        "fit_mle: NIG needs n >= 50 for the moment initialization");
  const auto m = detail::moments(sample);
  if (m.variance <= 0.0)
    throw std::invalid_argument("fit_mle: degenerate sample (zero variance)");

  const auto negloglik = [&](const std::vector<double>& v) {
    const NigParams p = detail::unpack(v);
    if (!p.valid() || p.alpha > 1e8 || p.delta > 1e8 || p.delta < 1e-10)
      return 1e100;
    double ll = 0.0;
    for (double x : sample) ll += nig_logpdf_one(p, x);
    return std::isfinite(ll) ? -ll : 1e100;
  };

  const NigParams start = detail::nig_moment_start(m);
  const auto nm =
      nelder_mead(negloglik, detail::pack(start), 0.25, 1e-11, 2000);
  result.nig = detail::unpack(nm.x);
  result.loglik = -nm.fmin;
  result.iterations = nm.iterations;
  if (!nm.converged)
    throw NigFitError("fit_mle: NIG optimizer failed to converge within 2000 "
                      "iterations",
                      result.nig, result.loglik);
  return result;
}

// ---------------------------------------------------------------------------
// Fig.-1-style histogram/density report.
// ---------------------------------------------------------------------------
struct HistogramBin {
  double left = 0.0, right = 0.0, density = 0.0;
};

struct DensityCurve {
  Family family = Family::Normal;
  FitResult fit;
  std::vector<double> grid;
  std::vector<double> density;
};

struct HistogramReport {
  std::vector<HistogramBin> bins;
  std::vector<DensityCurve> curves;
  std::map<std::string, double> loglik;
};

// Freedman-Diaconis binning, counts normalized to a density, plus each fit's
// density on a 512-point grid spanning the sample range +/- 5%.
inline HistogramReport density_report(const std::vector<double>& sample,
                                      const std::vector<FitResult>& fits) {
  if (sample.empty())
    throw std::invalid_argument("density_report: empty sample");
  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front(), hi = sorted.back();
  const double range = hi - lo;
  const double n = static_cast<double>(sample.size());

  const double q1 = sorted[static_cast<std::size_t>(0.25 * (n - 1))];
  const double q3 = sorted[static_cast<std::size_t>(0.75 * (n - 1))];
  const double iqr = q3 - q1;
  double width = 2.0 * iqr / std::cbrt(n);
  int nbins;
  if (range <= 0.0) {
    nbins = 1;
    width = 1.0;
  } else {
    if (width <= 0.0) width = range / std::ceil(std::sqrt(n));
    nbins = std::max(1, static_cast<int>(std::ceil(range / width)));
    width = range / nbins;
  }

  HistogramReport report;
  report.bins.resize(nbins);
  for (int b = 0; b < nbins; ++b) {
    report.bins[b].left = lo + b * width;
    report.bins[b].right = lo + (b + 1) * width;
  }
  for (double x : sample) {
    int b = range <= 0.0
                ? 0
                : std::min(nbins - 1, static_cast<int>((x - lo) / width));
    report.bins[b].density += 1.0 / (n * width);
  }

  const double pad = 0.05 * (range > 0.0 ? range : 1.0);
  const int grid_n = 512;
  for (const FitResult& fit : fits) {
    DensityCurve curve;
    curve.family = fit.family;
    curve.fit = fit;
    curve.grid.resize(grid_n);
    curve.density.resize(grid_n);
    for (int i = 0; i < grid_n; ++i) {
      const double x =
          (lo - pad) + (range + 2 * pad) * i / static_cast<double>(grid_n - 1);
      curve.grid[i] = x;
      curve.density[i] = fit.family == Family::Normal
                             ? std::exp(normal_logpdf_one(fit.normal, x))
                             : std::exp(nig_logpdf_one(fit.nig, x));
    }
    report.curves.push_back(std::move(curve));
    report.loglik[family_name(fit.family)] = fit.loglik;
  }
  return report;
}

inline nlohmann::json to_json(const HistogramReport& report) {
  nlohmann::json j;
  j["bins"] = nlohmann::json::array();
  for (const auto& b : report.bins)
    j["bins"].push_back(
        {{"left", b.left}, {"right", b.right}, {"density", b.density}});
  j["curves"] = nlohmann::json::array();
  for (const auto& c : report.curves) {
    nlohmann::json jc;
    jc["family"] = family_name(c.family);
    if (c.family == Family::Normal)
      jc["params"] = {{"mean", c.fit.normal.mean},
                      {"variance", c.fit.normal.variance}};
    else
      jc["params"] = {{"alpha", c.fit.nig.alpha},
                      {"beta", c.fit.nig.beta},
                      {"delta", c.fit.nig.delta},
                      {"mu", c.fit.nig.mu}};
    jc["grid"] = c.grid;
    jc["density"] = c.density;
    j["curves"].push_back(std::move(jc));
  }
  j["loglik"] = report.loglik;
  return j;
}

}  // namespace hedonic::distfit
