#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hedonic/dataset.hpp"

namespace hedonic::diagnostics {

inline constexpr const char* kBicFormula =
    "BIC = n*ln(2*pi*RSS/n) + n + (df_model+1)*ln(n)";

// The four Table-2 statistics. BIC counts the intercept inside df_model + 1
// and keeps the Gaussian constants, so values are comparable across the
// models of one run but carry a model-independent offset against other
// tools; every report prints the formula.
struct FitStats {
  double adj_r2 = 0.0;
  double mse = 0.0;
  double mare = 0.0;
  double bic = 0.0;
  int n = 0;
  double df_model = 0.0;
  bool perfect_fit = false;  // RSS = 0: BIC reported as -infinity
};

inline FitStats fit_stats(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                          double df_model) {
  if (y.size() != yhat.size())
    throw std::invalid_argument("fit_stats: length mismatch");
  const int n = static_cast<int>(y.size());
  if (n <= df_model + 1)
    throw std::invalid_argument("fit_stats: need n > df_model + 1");
  for (int i = 0; i < n; ++i)
    if (y[i] == 0.0)
      throw std::invalid_argument("fit_stats: zero response value at row " +
                                  std::to_string(i + 1));

  const double rss = (y - yhat).squaredNorm();
  const double mean = y.mean();
  const double tss = (y.array() - mean).square().sum();

  FitStats s;
  s.n = n;
  s.df_model = df_model;
  s.mse = rss / n;
  s.mare = ((y - yhat).array().abs() / y.array().abs()).mean();
  s.adj_r2 = 1.0 - (rss / (n - df_model - 1.0)) / (tss / (n - 1.0));
  if (rss <= 0.0) {
    s.perfect_fit = true;
    s.bic = -std::numeric_limits<double>::infinity();
  } else {
    s.bic = n * std::log(2.0 * M_PI * rss / n) + n +
            (df_model + 1.0) * std::log(static_cast<double>(n));
  }
  return s;
}

// Table 1 footnote convention.
inline std::string format_pvalue(double p) {
  if (p < 2e-16) return "< 2e-16";
  std::ostringstream os;
  os << std::setprecision(3) << p;
  return os.str();
}

struct FactorCell {
  double pvalue = 1.0;
  bool included = false;  // false renders as NI
};

struct ModelReport {
  std::string name;
  FitStats stats;
  std::map<std::string, FactorCell> significance;  // keyed by factor name
};

struct ComparisonReport {
  std::vector<ModelReport> models;          // requested order
  std::vector<std::string> factor_order;    // canonical order, union of models
  std::map<std::string, std::vector<std::string>> rankings;
};

inline ComparisonReport compare_models(const std::vector<ModelReport>& fits) {
  if (fits.empty())
    throw std::invalid_argument("compare_models: no models");
  ComparisonReport report;
  report.models = fits;

  for (const auto& name : dataset::canonical_factor_order()) {
    for (const auto& m : fits)
      if (m.significance.count(name)) {
        report.factor_order.push_back(name);
        break;
      }
  }
  // any factor outside the canonical list, in first-seen order
  for (const auto& m : fits)
    for (const auto& [name, cell] : m.significance)
      if (std::find(report.factor_order.begin(), report.factor_order.end(),
                    name) == report.factor_order.end())
        report.factor_order.push_back(name);

  if (fits.size() > 1) {
    auto rank_by = [&](const std::string& stat, auto key, bool maximize) {
      std::vector<int> order(fits.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = key(fits[a].stats), vb = key(fits[b].stats);
        return maximize ? va > vb : va < vb;
      });
      std::vector<std::string> names;
      for (int i : order) names.push_back(fits[i].name);
      report.rankings[stat] = std::move(names);
    };
    rank_by("adj_r2", [](const FitStats& s) { return s.adj_r2; }, true);
    rank_by("mse", [](const FitStats& s) { return s.mse; }, false);
    rank_by("mare", [](const FitStats& s) { return s.mare; }, false);
    rank_by("bic", [](const FitStats& s) { return s.bic; }, false);
  }
  return report;
}

inline nlohmann::json to_json(const ComparisonReport& report) {
  nlohmann::json j;
  j["conventions"] = {{"bic", kBicFormula},
                      {"pvalue_display", "values below 2e-16 print as < 2e-16"},
                      {"NI", "not included in model"}};
  j["statistics"] = nlohmann::json::array();
  for (const auto& m : report.models) {
    j["statistics"].push_back({{"model", m.name},
                               {"adj_r2", m.stats.adj_r2},
                               {"mse", m.stats.mse},
                               {"mare", m.stats.mare},
                               {"bic", m.stats.bic},
                               {"n", m.stats.n},
                               {"df_model", m.stats.df_model}});
  }
  j["significance"] = nlohmann::json::object();
  j["significance"]["factors"] = report.factor_order;
  j["significance"]["models"] = nlohmann::json::array();
  for (const auto& m : report.models)
    j["significance"]["models"].push_back(m.name);
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& factor : report.factor_order) {
    nlohmann::json row = nlohmann::json::object();
    for (const auto& m : report.models) {
      const auto it = m.significance.find(factor);
      if (it == m.significance.end() || !it->second.included)
        row[m.name] = "NI";
      else
        row[m.name] = it->second.pvalue;
    }
    cells[factor] = std::move(row);
  }
  j["significance"]["pvalues"] = std::move(cells);
  if (!report.rankings.empty()) j["rankings"] = report.rankings;
  return j;
}

// Plain-text tables in the shape of the paper's Tables 1-3.
inline std::string render_text(const ComparisonReport& report) {
  std::ostringstream os;
  os << "Model fit statistics (" << kBicFormula << ")\n\n";

  const int name_w = 12, col_w = 12;
  os << std::left << std::setw(name_w) << "Model" << std::right
     << std::setw(col_w) << "Adj.R2" << std::setw(col_w) << "MSE"
     << std::setw(col_w) << "MARE" << std::setw(col_w) << "BIC"
     << std::setw(col_w) << "df" << "\n";
  for (const auto& m : report.models) {
    os << std::left << std::setw(name_w) << m.name << std::right
       << std::fixed << std::setprecision(4) << std::setw(col_w)
       << m.stats.adj_r2 << std::setw(col_w) << m.stats.mse << std::setw(col_w)
       << m.stats.mare;
    os.unsetf(std::ios_base::floatfield);
    os << std::setprecision(6) << std::setw(col_w) << m.stats.bic
       << std::setprecision(3) << std::setw(col_w) << m.stats.df_model << "\n";
  }

  if (!report.rankings.empty()) {
    os << "\nRankings (best first):\n";
    for (const auto& [stat, names] : report.rankings) {
      os << "  " << std::left << std::setw(8) << stat << ":";
      for (const auto& n : names) os << " " << n;
      os << "\n";
    }
  }

  os << "\nFactor significance (p-values; * means < 2e-16; NI = not included "
        "in model)\n\n";
  int factor_w = 12;
  for (const auto& f : report.factor_order)
    factor_w = std::max(factor_w,
                        static_cast<int>(dataset::factor_display_name(f).size()) + 2);
  os << std::left << std::setw(factor_w) << "Factor";
  for (const auto& m : report.models)
    os << std::right << std::setw(col_w) << m.name;
  os << "\n";
  for (const auto& factor : report.factor_order) {
    os << std::left << std::setw(factor_w)
       << dataset::factor_display_name(factor);
    for (const auto& m : report.models) {
      const auto it = m.significance.find(factor);
      std::string cell;
      if (it == m.significance.end() || !it->second.included)
        cell = "NI";
      else if (it->second.pvalue < 2e-16)
        cell = "*";
      else
        cell = format_pvalue(it->second.pvalue);
      os << std::right << std::setw(col_w) << cell;
    }
    os << "\n";
  }
  os << std::left << std::setw(factor_w) << "Adj. R^2";
  for (const auto& m : report.models) {
    std::ostringstream v;
    v << std::fixed << std::setprecision(4) << m.stats.adj_r2;
    os << std::right << std::setw(col_w) << v.str();
  }
  os << "\n";
  return os.str();
}

}  // namespace hedonic::diagnostics
