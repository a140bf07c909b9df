#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "hedonic/dataset.hpp"

namespace hedonic::glm {

enum class Variant {
  Linear,                         // glm-l
  LinearMultiplicative,           // glm-lm
  LinearQuadratic,                // glm-lq
  LinearMultiplicativeQuadratic,  // glm-lmq
  Polynomial                      // glm-p, all terms up to degree 3
};

inline std::string variant_code(Variant v) {
  switch (v) {
    case Variant::Linear: return "glm-l";
    case Variant::LinearMultiplicative: return "glm-lm";
    case Variant::LinearQuadratic: return "glm-lq";
    case Variant::LinearMultiplicativeQuadratic: return "glm-lmq";
    case Variant::Polynomial: return "glm-p";
  }
  return "glm-?";
}

inline std::optional<Variant> parse_variant(const std::string& code) {
  if (code == "glm-l") return Variant::Linear;
  if (code == "glm-lm") return Variant::LinearMultiplicative;
  if (code == "glm-lq") return Variant::LinearQuadratic;
  if (code == "glm-lmq") return Variant::LinearMultiplicativeQuadratic;
  if (code == "glm-p") return Variant::Polynomial;
  return std::nullopt;
}

// One candidate monomial over model columns; `indices` lists column indices
// with multiplicity (e.g. {i, i, j} is x_i^2 x_j), kept sorted.
struct Term {
  std::vector<int> indices;
  std::string label;

  int degree() const { return static_cast<int>(indices.size()); }

  bool involves(int column) const {
    return std::find(indices.begin(), indices.end(), column) != indices.end();
  }
};

struct TermSet {
  Variant variant = Variant::Linear;
  std::vector<Term> terms;

  int candidate_count() const { return static_cast<int>(terms.size()); }
};

namespace detail {

inline std::string term_label(const std::vector<int>& indices,
                              const std::vector<std::string>& names) {
  std::string out;
  std::size_t i = 0;
  while (i < indices.size()) {
    std::size_t j = i;
    while (j < indices.size() && indices[j] == indices[i]) ++j;
    if (!out.empty()) out += "*";
    out += names[indices[i]];
    if (j - i > 1) out += "^" + std::to_string(j - i);
    i = j;
  }
  return out;
}

}  // namespace detail

// Candidate expansion with deterministic ordering: linear terms in column
// order, then pairwise products (lexicographic), squares, triples, mixed
// cubics (x_i^2 x_j then x_i x_j^2 per pair), cubes. A 0/1 column equals its
// own square, so binary columns never appear squared or cubed.
inline TermSet expand_terms(Variant variant,
                            const std::vector<std::string>& names,
                            const std::vector<dataset::ColumnKind>& kinds) {
  if (names.empty()) throw std::invalid_argument("expand_terms: no factors");
  if (names.size() != kinds.size())
    throw std::invalid_argument("expand_terms: names/kinds mismatch");
  const int m = static_cast<int>(names.size());
  const bool pairs = variant == Variant::LinearMultiplicative ||
                     variant == Variant::LinearMultiplicativeQuadratic ||
                     variant == Variant::Polynomial;
  const bool squares = variant == Variant::LinearQuadratic ||
                       variant == Variant::LinearMultiplicativeQuadratic ||
                       variant == Variant::Polynomial;
  const bool cubics = variant == Variant::Polynomial;
  const auto continuous = [&](int i) {
    return kinds[i] == dataset::ColumnKind::Continuous;
  };

  TermSet set;
  set.variant = variant;
  auto add = [&](std::vector<int> idx) {
    Term t;
    t.label = detail::term_label(idx, names);
    t.indices = std::move(idx);
    set.terms.push_back(std::move(t));
  };

  for (int i = 0; i < m; ++i) add({i});
  if (pairs)
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) add({i, j});
  if (squares)
    for (int i = 0; i < m; ++i)
      if (continuous(i)) add({i, i});
  if (cubics) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = j + 1; k < m; ++k) add({i, j, k});
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        if (continuous(i)) add({i, i, j});
        if (continuous(j)) add({i, j, j});
      }
    for (int i = 0; i < m; ++i)
      if (continuous(i)) add({i, i, i});
  }
  return set;
}

inline TermSet expand_terms(Variant variant, const dataset::ModelDataset& ds) {
  std::vector<std::string> names;
  std::vector<dataset::ColumnKind> kinds;
  for (const auto& c : ds.columns) {
    names.push_back(c.name);
    kinds.push_back(c.kind);
  }
  return expand_terms(variant, names, kinds);
}

inline Eigen::VectorXd term_column(const dataset::ModelDataset& ds,
                                   const Term& term) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(ds.n());
  for (int idx : term.indices) v.array() *= ds.columns[idx].values.array();
  return v;
}

struct TraceEntry {
  int round = 0;
  std::string candidate;
  double deviance_before = 0.0;
  double deviance_after = 0.0;
  double p_enter = 1.0;
  std::string decision;  // "added" or "rejected"
};

struct GlmFit {
  Variant variant = Variant::Linear;
  TermSet termset;             // full candidate set
  std::vector<int> selected;   // termset indices in order of addition
  Eigen::VectorXd beta;        // intercept first
  double dispersion = 0.0;     // RSS / (n - p)
  Eigen::MatrixXd covariance;  // dispersion * (X^T X)^{-1}
  std::vector<double> pvalues; // per coefficient, two-sided t
  double deviance = 0.0;       // RSS
  std::vector<TraceEntry> selection_trace;
  int n = 0;
  std::vector<std::string> coef_names;
  Eigen::VectorXd fitted;
};

namespace detail {

inline Eigen::MatrixXd design_matrix(const dataset::ModelDataset& ds,
                                     const TermSet& termset,
                                     const std::vector<int>& chosen) {
  Eigen::MatrixXd X(ds.n(), 1 + chosen.size());
  X.col(0).setOnes();
  for (std::size_t t = 0; t < chosen.size(); ++t)
    X.col(1 + t) = term_column(ds, termset.terms[chosen[t]]);
  return X;
}

inline double two_sided_t_pvalue(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

inline double f_pvalue(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  if (!std::isfinite(f)) return 0.0;
  const boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace detail

// Gaussian identity-link least squares over the chosen candidate subset.
inline GlmFit fit_ols(const dataset::ModelDataset& ds, const TermSet& termset,
                      const std::vector<int>& chosen) {
  const int n = ds.n();
  const int p = 1 + static_cast<int>(chosen.size());
  if (p > n) throw std::invalid_argument("fit_ols: more parameters than rows");

  const Eigen::MatrixXd X = detail::design_matrix(ds, termset, chosen);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    // Express the first non-pivot column in terms of the pivot columns to
    // name a dependent set.
    const auto perm = qr.colsPermutation().indices();
    const int rank = static_cast<int>(qr.rank());
    const Eigen::MatrixXd R = qr.matrixR()
                                  .topLeftCorner(rank, p)
                                  .template triangularView<Eigen::Upper>();
    std::string msg = "fit_ols: rank-deficient design; column '";
    auto col_name = [&](int orig) {
      return orig == 0 ? std::string("(intercept)")
                       : termset.terms[chosen[orig - 1]].label;
    };
    const int bad = perm[rank];  // first column outside the pivot set
    msg += col_name(bad) + "' is linearly dependent on {";
    const Eigen::VectorXd z =
        R.topLeftCorner(rank, rank)
            .template triangularView<Eigen::Upper>()
            .solve(Eigen::VectorXd(R.col(rank)));
    bool first = true;
    for (int i = 0; i < rank; ++i)
      if (std::abs(z[i]) > 1e-6) {
        if (!first) msg += ", ";
        msg += col_name(perm[i]);
        first = false;
      }
    msg += "}";
    throw std::invalid_argument(msg);
  }

  GlmFit fit;
  fit.variant = termset.variant;
  fit.termset = termset;
  fit.selected = chosen;
  fit.n = n;
  fit.beta = qr.solve(ds.response);
  fit.fitted = X * fit.beta;
  const Eigen::VectorXd resid = ds.response - fit.fitted;
  fit.deviance = resid.squaredNorm();
  const double df_resid = n - p;
  fit.dispersion = df_resid > 0 ? fit.deviance / df_resid : 0.0;

  // (X^T X)^{-1} from the pivoted R factor
  const Eigen::MatrixXd R =
      qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.template triangularView<Eigen::Upper>().solve(
          Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd XtX_inv_perm = Rinv * Rinv.transpose();
  const auto P = qr.colsPermutation();
  fit.covariance = fit.dispersion * (P * XtX_inv_perm * P.transpose());

  fit.coef_names.push_back("(intercept)");
  for (int idx : chosen) fit.coef_names.push_back(termset.terms[idx].label);
  fit.pvalues.resize(p);
  for (int i = 0; i < p; ++i) {
    const double se = std::sqrt(std::max(0.0, fit.covariance(i, i)));
    fit.pvalues[i] = se > 0.0 && df_resid > 0
                         ? detail::two_sided_t_pvalue(fit.beta[i] / se,
                                                      df_resid)
                         : 1.0;
  }
  return fit;
}

inline GlmFit fit_ols_all(const dataset::ModelDataset& ds,
                          const TermSet& termset) {
  std::vector<int> all(termset.terms.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return fit_ols(ds, termset, all);
}

// Forward stepwise selection. Starts from the intercept-only model; each
// round scores every remaining candidate by the deviance reduction it would
// bring, converts that to an F-test p-value (1 numerator df, dispersion from
// the enlarged model), and admits the lowest p-value if it clears
// `alpha_enter`. Ties break on candidate order. Candidate scoring runs on an
// orthonormal basis of the current design, so each round costs O(n * p) per
// candidate rather than a refit.
inline GlmFit stepwise_fit(const dataset::ModelDataset& ds,
                           const TermSet& termset, double alpha_enter = 0.05) {
  if (!(alpha_enter > 0.0 && alpha_enter <= 1.0))
    throw std::invalid_argument("stepwise_fit: alpha_enter must be in (0, 1]");
  const int n = ds.n();
  const int n_cand = termset.candidate_count();

  Eigen::MatrixXd candidates(n, n_cand);
  for (int c = 0; c < n_cand; ++c)
    candidates.col(c) = term_column(ds, termset.terms[c]);

  // Orthonormal basis of the current model span, intercept included.
  Eigen::MatrixXd Q(n, std::min(n, n_cand + 1));
  Q.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  int p = 1;
  Eigen::VectorXd resid =
      ds.response - Q.col(0) * (Q.col(0).dot(ds.response));
  double rss = resid.squaredNorm();

  std::vector<bool> in_model(n_cand, false);
  std::vector<int> selected;
  std::vector<TraceEntry> trace;

  for (int round = 1;; ++round) {
    if (p >= n - 2) break;
    const double df_resid_new = n - p - 1;
    if (df_resid_new <= 0) break;

    int best = -1;
    double best_p = 2.0, best_delta = 0.0;
    Eigen::VectorXd best_q;
    for (int c = 0; c < n_cand; ++c) {
      if (in_model[c]) continue;
      Eigen::VectorXd u = candidates.col(c);
      const double norm0 = u.norm();
      u -= Q.leftCols(p) * (Q.leftCols(p).transpose() * u);
      u -= Q.leftCols(p) * (Q.leftCols(p).transpose() * u);  // re-orthogonalize
      const double d = u.squaredNorm();
      if (norm0 <= 0.0 || d <= 1e-16 * norm0 * norm0) continue;  // collinear
      const double proj = u.dot(resid);
      double delta = proj * proj / d;
      delta = std::min(delta, rss);
      const double f = delta * df_resid_new / std::max(rss - delta, 1e-300);
      const double pval = detail::f_pvalue(f, 1.0, df_resid_new);
      if (pval < best_p - 1e-15) {
        best_p = pval;
        best = c;
        best_delta = delta;
        best_q = u / std::sqrt(d);
      }
    }
    if (best < 0) break;

    TraceEntry entry;
    entry.round = round;
    entry.candidate = termset.terms[best].label;
    entry.deviance_before = rss;
    entry.deviance_after = rss - best_delta;
    entry.p_enter = best_p;
    if (best_p <= alpha_enter) {
      entry.decision = "added";
      trace.push_back(entry);
      in_model[best] = true;
      selected.push_back(best);
      Q.col(p) = best_q;
      resid -= best_q * best_q.dot(resid);
      rss = resid.squaredNorm();
      ++p;
    } else {
      entry.decision = "rejected";
      trace.push_back(entry);
      break;
    }
  }

  GlmFit fit = fit_ols(ds, termset, selected);
  fit.selection_trace = std::move(trace);
  return fit;
}

// ---------------------------------------------------------------------------
// Factor-level significance for Table-1/3-shaped reports: a joint Wald
// F-test over every fitted coefficient whose term touches the factor.
// ---------------------------------------------------------------------------

struct FactorSignificance {
  std::string factor;
  double pvalue = 1.0;
  bool included = false;
};

inline std::vector<FactorSignificance> factor_significance(
    const GlmFit& fit, const dataset::ModelDataset& ds) {
  std::vector<FactorSignificance> out;
  const double df_resid = fit.n - fit.beta.size();
  for (const auto& factor : ds.factors) {
    FactorSignificance sig;
    sig.factor = factor.name;
    std::vector<int> coef_idx;
    for (std::size_t t = 0; t < fit.selected.size(); ++t) {
      const Term& term = fit.termset.terms[fit.selected[t]];
      for (int col : factor.columns)
        if (term.involves(col)) {
          coef_idx.push_back(static_cast<int>(t) + 1);
          break;
        }
    }
    if (coef_idx.empty()) {
      out.push_back(sig);  // NI
      continue;
    }
    const int q = static_cast<int>(coef_idx.size());
    Eigen::VectorXd b(q);
    Eigen::MatrixXd V(q, q);
    for (int i = 0; i < q; ++i) {
      b[i] = fit.beta[coef_idx[i]];
      for (int j = 0; j < q; ++j)
        V(i, j) = fit.covariance(coef_idx[i], coef_idx[j]);
    }
    const double wald = b.dot(V.ldlt().solve(b));
    sig.included = true;
    sig.pvalue = detail::f_pvalue(wald / q, q, df_resid);
    out.push_back(sig);
  }
  return out;
}

inline nlohmann::json trace_to_json(const std::vector<TraceEntry>& trace) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : trace)
    arr.push_back({{"round", e.round},
                   {"candidate", e.candidate},
                   {"deviance_before", e.deviance_before},
                   {"deviance_after", e.deviance_after},
                   {"p_enter", e.p_enter},
                   {"decision", e.decision}});
  return arr;
}

}  // namespace hedonic::glm
