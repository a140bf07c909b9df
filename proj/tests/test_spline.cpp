#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "hedonic/numeric.hpp"
#include "hedonic/spline.hpp"

using namespace hedonic::spline;

namespace {

Eigen::VectorXd linspace(double lo, double hi, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1.0);
  return v;
}

}  // namespace

TEST_CASE("difference matrix hand check", "[spline]") {
  const Eigen::MatrixXd D = difference_matrix(4, 2);
  REQUIRE(D.rows() == 2);
  REQUIRE(D.cols() == 4);
  Eigen::MatrixXd expect(2, 4);
  expect << 1, -2, 1, 0, 0, 1, -2, 1;
  REQUIRE((D - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("penalty rank and null space", "[spline]") {
  const auto basis = make_basis(linspace(0, 1, 60), 10, 3, 2);
  REQUIRE(basis.penalty.rows() == 10);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(basis.penalty);
  int zero_count = 0;
  for (int i = 0; i < 10; ++i)
    if (std::abs(eig.eigenvalues()[i]) < 1e-10) ++zero_count;
  REQUIRE(zero_count == 2);  // rank k - d = 8

  // constant and linear-in-index coefficient vectors are unpenalized
  Eigen::VectorXd ones = Eigen::VectorXd::Constant(10, 3.7);
  Eigen::VectorXd ramp(10);
  for (int i = 0; i < 10; ++i) ramp[i] = 0.5 * (i + 1);
  REQUIRE(ones.dot(basis.penalty * ones) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(ramp.dot(basis.penalty * ramp) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("penalty quadratic form equals direct squared differences",
          "[spline]") {
  hedonic::Rng rng(3);
  const int k = 10, d = 2;
  const Eigen::MatrixXd D = difference_matrix(k, d);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd c(k);
    for (int i = 0; i < k; ++i) c[i] = rng.normal();
    double direct = 0.0;
    for (int i = 0; i + d < k; ++i) {
      const double dd = c[i] - 2.0 * c[i + 1] + c[i + 2];
      direct += dd * dd;
    }
    const double quad = c.dot(D.transpose() * D * c);
    REQUIRE(quad == Catch::Approx(direct).margin(1e-12));
  }
}

TEST_CASE("partition of unity and local support", "[spline]") {
  hedonic::Rng rng(5);
  Eigen::VectorXd values(200);
  for (int i = 0; i < 200; ++i) values[i] = rng.uniform(-2.0, 5.0);
  const auto basis = make_basis(values, 10, 3, 2);

  Eigen::VectorXd x(1000);
  for (int i = 0; i < 1000; ++i)
    x[i] = rng.uniform(basis.domain_min, basis.domain_max);
  const Eigen::MatrixXd B = evaluate_basis(basis, x);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(std::abs(B.row(i).sum() - 1.0) < 1e-10);
    int nonzero = 0;
    for (int j = 0; j < 10; ++j)
      if (B(i, j) != 0.0) ++nonzero;
    REQUIRE(nonzero <= basis.degree + 1);
  }
}

TEST_CASE("boundary basis values and clamping", "[spline]") {
  // degree-fold boundary replication interpolates at the domain endpoints
  const auto basis = make_basis(linspace(2.0, 9.0, 40), 8, 3, 2,
                                KnotPlacement::QuantileClamped);
  Eigen::VectorXd x(3);
  x << 2.0, 1.0, 10.5;  // min, below domain, above domain
  int clamped = 0;
  const Eigen::MatrixXd B = evaluate_basis(basis, x, &clamped);
  REQUIRE(clamped == 2);

  REQUIRE(B(0, 0) == 1.0);  // degree-fold replication interpolates at min
  for (int j = 1; j < 8; ++j) REQUIRE(B(0, j) == 0.0);
  REQUIRE((B.row(1) - B.row(0)).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd at_max(1);
  at_max << 9.0;
  const Eigen::MatrixXd Bmax = evaluate_basis(basis, at_max);
  REQUIRE(Bmax(0, 7) == 1.0);
  REQUIRE((B.row(2) - Bmax.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degree-1 hats split evenly at a span midpoint", "[spline]") {
  // two uniform spans over [0,1]: knots {-0.5, 0, 0.5, 1, 1.5}
  Eigen::VectorXd values = linspace(0.0, 1.0, 21);
  const auto basis = make_basis(values, 3, 1, 1);
  REQUIRE(basis.knots.size() == 5);
  REQUIRE(basis.knots[2] == Catch::Approx(0.5));

  Eigen::VectorXd x(1);
  x << 0.25;
  const Eigen::MatrixXd B = evaluate_basis(basis, x);
  REQUIRE(B(0, 0) == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(B(0, 1) == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(B(0, 2) == 0.0);
}

TEST_CASE("quantile knots land inside the domain and stay ordered",
          "[spline]") {
  hedonic::Rng rng(17);
  Eigen::VectorXd skewed(500);
  for (int i = 0; i < 500; ++i)
    skewed[i] = std::exp(rng.normal(0.0, 1.2));  // heavy right tail
  const auto basis =
      make_basis(skewed, 12, 3, 2, KnotPlacement::QuantileClamped);
  for (int i = 1; i < basis.knots.size(); ++i)
    REQUIRE(basis.knots[i] >= basis.knots[i - 1]);
  for (int i = basis.degree + 1; i <= basis.k_basis; ++i)
    REQUIRE(basis.knots[i] > basis.knots[i - 1]);
}

TEST_CASE("uniform-extended bases represent straight lines with index-affine "
          "coefficients",
          "[spline]") {
  hedonic::Rng rng(19);
  Eigen::VectorXd values(100);
  for (int i = 0; i < 100; ++i) values[i] = rng.uniform(-3.0, 2.0);
  const auto basis = make_basis(values, 10, 3, 2);

  // equal spacing throughout, including the extension knots
  const double h = basis.knots[1] - basis.knots[0];
  for (int i = 1; i < basis.knots.size(); ++i)
    REQUIRE(basis.knots[i] - basis.knots[i - 1] == Catch::Approx(h));

  // Greville abscissae t*_i reproduce x: sum_i t*_i B_i(x) = x, and t* is an
  // arithmetic progression, so index-affine coefficients give exact lines
  Eigen::VectorXd greville(10);
  for (int i = 0; i < 10; ++i) {
    double s = 0.0;
    for (int j = 1; j <= basis.degree; ++j) s += basis.knots[i + j];
    greville[i] = s / basis.degree;
  }
  for (int i = 1; i < 9; ++i)
    REQUIRE(greville[i + 1] - greville[i] ==
            Catch::Approx(greville[1] - greville[0]));

  Eigen::VectorXd x(50);
  for (int i = 0; i < 50; ++i)
    x[i] = rng.uniform(basis.domain_min, basis.domain_max);
  const Eigen::MatrixXd B = evaluate_basis(basis, x);
  const Eigen::VectorXd reproduced = B * greville;
  REQUIRE((reproduced - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("too few distinct values suggests a linear term", "[spline]") {
  Eigen::VectorXd few(30);
  for (int i = 0; i < 30; ++i) few[i] = static_cast<double>(i % 5);
  REQUIRE_THROWS_WITH(make_basis(few, 10, 3, 2),
                      Catch::Matchers::ContainsSubstring("linear"));
}

TEST_CASE("centering constraint zeroes fitted sums and keeps rank",
          "[spline]") {
  hedonic::Rng rng(23);
  Eigen::VectorXd x(80);
  for (int i = 0; i < 80; ++i) x[i] = rng.uniform(0.0, 1.0);
  const auto basis = make_basis(x, 9, 3, 2);
  const Eigen::MatrixXd B = evaluate_basis(basis, x);
  const auto centered = center_constraint(B);

  REQUIRE(centered.basis.cols() == 8);
  REQUIRE(centered.transform.rows() == 9);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd theta(8);
    for (int i = 0; i < 8; ++i) theta[i] = rng.normal();
    REQUIRE(std::abs((centered.basis * theta).sum()) < 1e-8);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered.transform);
  REQUIRE(qr.rank() == 8);
}

TEST_CASE("centered-plus-intercept fit matches the direct basis fit",
          "[spline]") {
  hedonic::Rng rng(29);
  const int n = 50;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform(0.0, 2.0);
    y[i] = std::sin(2.0 * x[i]) + 0.1 * rng.normal();
  }
  const auto basis = make_basis(x, 8, 3, 2);
  const Eigen::MatrixXd B = evaluate_basis(basis, x);
  const auto centered = center_constraint(B);

  // same column space: span{1, B Z} = span{B} by partition of unity
  Eigen::MatrixXd with_intercept(n, 1 + centered.basis.cols());
  with_intercept.col(0).setOnes();
  with_intercept.rightCols(centered.basis.cols()) = centered.basis;

  const Eigen::VectorXd fit_centered =
      with_intercept * with_intercept.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd fit_direct = B * B.colPivHouseholderQr().solve(y);
  REQUIRE((fit_centered - fit_direct).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("make_basis input validation", "[spline]") {
  REQUIRE_THROWS_AS(make_basis(linspace(0, 1, 30), 3, 3, 2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_basis(linspace(0, 1, 30), 5, 3, 5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_basis(Eigen::VectorXd(), 5, 3, 2),
                    std::invalid_argument);
}
