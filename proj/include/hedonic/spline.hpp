#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hedonic::spline {

// Cubic (by default) B-spline basis with a discrete difference penalty on
// adjacent coefficients, i.e. the P-spline building block.
//
// Two knot layouts:
//  - UniformExtended (default): equally spaced knots extended degree steps
//    past each end of the domain. This is the Eilers-Marx construction; the
//    order-2 difference penalty then shrinks exactly toward straight lines,
//    because the Greville abscissae form an arithmetic progression.
//  - QuantileClamped: interior knots at quantiles of the observed values,
//    boundary knots replicated degree+1 times so the basis interpolates at
//    the domain endpoints. Robust to heavily skewed factors, but the plain
//    difference penalty no longer has lines in its null space near the
//    boundary spans.
enum class KnotPlacement { UniformExtended, QuantileClamped };

struct SplineBasis {
  int degree = 3;
  int k_basis = 10;
  int penalty_order = 2;
  KnotPlacement placement = KnotPlacement::UniformExtended;
  Eigen::VectorXd knots;     // length k_basis + degree + 1
  double domain_min = 0.0;
  double domain_max = 1.0;
  Eigen::MatrixXd penalty;   // k x k, D^T D for the order-d difference D
};

// Order-d difference operator, shape (k - d) x k.
// d = 2, k = 4 gives [[1,-2,1,0],[0,1,-2,1]].
inline Eigen::MatrixXd difference_matrix(int k, int d) {
  if (d < 1 || d >= k)
    throw std::invalid_argument("difference_matrix: need 1 <= d < k");
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(k, k);
  for (int order = 0; order < d; ++order) {
    const Eigen::Index r = D.rows() - 1;
    Eigen::MatrixXd next(r, k);
    for (Eigen::Index i = 0; i < r; ++i) next.row(i) = D.row(i) - D.row(i + 1);
    D = next;
  }
  return D;
}

namespace detail {

inline double quantile_of_sorted(const std::vector<double>& sorted, double f) {
  const double pos = f * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace detail

inline SplineBasis make_basis(
    const Eigen::VectorXd& values, int k_basis = 10, int degree = 3,
    int penalty_order = 2,
    KnotPlacement placement = KnotPlacement::UniformExtended) {
  if (k_basis <= degree)
    throw std::invalid_argument("make_basis: k_basis must exceed degree");
  if (penalty_order >= k_basis)
    throw std::invalid_argument("make_basis: penalty_order must be < k_basis");
  if (values.size() == 0)
    throw std::invalid_argument("make_basis: empty value vector");

  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (static_cast<int>(sorted.size()) < k_basis)
    throw std::invalid_argument(
        "make_basis: only " + std::to_string(sorted.size()) +
        " distinct values for k_basis=" + std::to_string(k_basis) +
        "; treat this factor as linear instead");

  SplineBasis basis;
  basis.degree = degree;
  basis.k_basis = k_basis;
  basis.penalty_order = penalty_order;
  basis.placement = placement;
  basis.domain_min = sorted.front();
  basis.domain_max = sorted.back();
  basis.knots.resize(k_basis + degree + 1);

  if (placement == KnotPlacement::UniformExtended) {
    // k - degree equal segments over the domain, extended degree steps out
    const double h =
        (basis.domain_max - basis.domain_min) / (k_basis - degree);
    for (int i = 0; i <= k_basis + degree; ++i)
      basis.knots[i] = basis.domain_min + (i - degree) * h;
  } else {
    const int n_interior = k_basis - degree - 1;
    for (int i = 0; i <= degree; ++i) basis.knots[i] = basis.domain_min;
    for (int i = 0; i < n_interior; ++i) {
      const double f =
          static_cast<double>(i + 1) / static_cast<double>(n_interior + 1);
      basis.knots[degree + 1 + i] = detail::quantile_of_sorted(sorted, f);
    }
    for (int i = 0; i <= degree; ++i)
      basis.knots[k_basis + i] = basis.domain_max;
  }

  // knots must be strictly increasing across the domain spans
  for (int i = degree + 1; i <= k_basis; ++i)
    if (!(basis.knots[i] > basis.knots[i - 1]))
      throw std::invalid_argument("make_basis: degenerate interior knots");

  const Eigen::MatrixXd D = difference_matrix(k_basis, penalty_order);
  basis.penalty = D.transpose() * D;
  return basis;
}

// Cox-de Boor evaluation of the degree+1 basis functions that are nonzero
// at x. `first` receives the index of the first nonzero basis function.
inline void nonzero_basis(const SplineBasis& basis, double x, int& first,
                          double* values) {
  const int p = basis.degree;
  const int k = basis.k_basis;
  const Eigen::VectorXd& t = basis.knots;

  // Knot span: largest i in [p, k-1] with t[i] <= x (rightmost span at max).
  int span;
  if (x >= basis.domain_max) {
    span = k - 1;
  } else {
    span = p;
    while (span < k - 1 && t[span + 1] <= x) ++span;
  }
  first = span - p;

  // Triangular recurrence over the p+1 active functions.
  std::vector<double> left(p + 1), right(p + 1);
  values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : values[r] / denom;
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
}

// Rows are the k_basis B-spline values at each x; each row sums to one.
// Inputs outside the domain are clamped to its nearest endpoint; the count
// of clamped rows is reported through `clamped` when given.
inline Eigen::MatrixXd evaluate_basis(const SplineBasis& basis,
                                      const Eigen::VectorXd& x,
                                      int* clamped = nullptr) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(x.size(), basis.k_basis);
  std::vector<double> vals(basis.degree + 1);
  int n_clamped = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double xi = x[i];
    if (!std::isfinite(xi))
      throw std::invalid_argument("evaluate_basis: non-finite input");
    if (xi < basis.domain_min) {
      xi = basis.domain_min;
      ++n_clamped;
    } else if (xi > basis.domain_max) {
      xi = basis.domain_max;
      ++n_clamped;
    }
    int first = 0;
    nonzero_basis(basis, xi, first, vals.data());
    for (int j = 0; j <= basis.degree; ++j) B(i, first + j) = vals[j];
  }
  if (clamped) *clamped = n_clamped;
  return B;
}

// Sum-to-zero reparameterization over the rows of `B`: returns the reduced
// basis B*Z (one column fewer) and the k x (k-1) map Z back to the original
// coefficient space. Any coefficient vector in the reduced space yields a
// smooth whose fitted values over these rows sum to zero. Transform the
// penalty as Z^T P Z to stay consistent.
struct CenteredBasis {
  Eigen::MatrixXd basis;      // n x (k-1)
  Eigen::MatrixXd transform;  // k x (k-1), orthonormal columns
};

inline CenteredBasis center_constraint(const Eigen::MatrixXd& basis_matrix) {
  const Eigen::Index k = basis_matrix.cols();
  Eigen::VectorXd c = basis_matrix.colwise().sum().transpose();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  CenteredBasis out;
  out.transform = Q.rightCols(k - 1);
  out.basis = basis_matrix * out.transform;
  return out;
}

}  // namespace hedonic::spline
