// Command-line pipeline: ingest -> distance -> fit -> report, plus distfit
// and the bundled synthetic-city fixture generator. Artifacts live on disk
// between stages so model families can be refit and compared without
// re-ingesting.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hedonic/dataset.hpp"
#include "hedonic/diagnostics.hpp"
#include "hedonic/distfit.hpp"
#include "hedonic/fixture.hpp"
#include "hedonic/gam.hpp"
#include "hedonic/geo.hpp"
#include "hedonic/glm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitModelFailure = 1;
constexpr int kExitInputFailure = 2;

struct RunConfig {
  std::string listings;
  std::string offenders;
  hedonic::dataset::FilterConfig filters;
  bool include_borough = false;
  bool include_environment = false;
  bool include_distance = false;
  std::vector<std::string> force_linear;
  std::vector<std::string> models = {"gam", "glm-l"};
  std::string stratify;
  std::string name_suffix;  // e.g. "-env" to store gam as gam-env
  std::string out = "out";
  std::uint64_t seed = 1;
  double alpha_enter = 0.05;
  int k_basis = 10;
};

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  in >> j;
  RunConfig cfg;
  if (j.contains("listings")) cfg.listings = j.at("listings").get<std::string>();
  if (j.contains("offenders"))
    cfg.offenders = j.at("offenders").get<std::string>();
  if (j.contains("filters"))
    cfg.filters = hedonic::dataset::filter_config_from_json(j.at("filters"));
  if (j.contains("factors")) {
    const auto& f = j.at("factors");
    if (f.contains("borough")) cfg.include_borough = f.at("borough").get<bool>();
    if (f.contains("environment"))
      cfg.include_environment = f.at("environment").get<bool>();
    if (f.contains("distance"))
      cfg.include_distance = f.at("distance").get<bool>();
    if (f.contains("force_linear"))
      cfg.force_linear = f.at("force_linear").get<std::vector<std::string>>();
  }
  if (j.contains("models"))
    cfg.models = j.at("models").get<std::vector<std::string>>();
  if (j.contains("stratify")) cfg.stratify = j.at("stratify").get<std::string>();
  if (j.contains("name_suffix"))
    cfg.name_suffix = j.at("name_suffix").get<std::string>();
  if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("alpha_enter"))
    cfg.alpha_enter = j.at("alpha_enter").get<double>();
  if (j.contains("k_basis")) cfg.k_basis = j.at("k_basis").get<int>();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json_file(const fs::path& path, const json& j) {
  write_text(path, j.dump(1) + "\n");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

hedonic::dataset::FactorSpec factor_spec_of(const RunConfig& cfg) {
  hedonic::dataset::FactorSpec spec;
  spec.include_borough = cfg.include_borough;
  spec.include_environment = cfg.include_environment;
  spec.include_distance = cfg.include_distance;
  spec.force_linear = cfg.force_linear;
  return spec;
}

void fill_distances(std::vector<hedonic::dataset::ListingRecord>& records,
                    const std::string& offenders_path) {
  const auto offenders = hedonic::geo::read_points_csv(offenders_path);
  std::vector<hedonic::geo::GeoPoint> sites(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    sites[i] = {records[i].latitude, records[i].longitude};
  const auto distances = hedonic::geo::nearest_distance(sites, offenders);
  for (std::size_t i = 0; i < records.size(); ++i)
    records[i].distance = distances[i];
}

// --------------------------------------------------------------------------
// ingest
// --------------------------------------------------------------------------
int cmd_ingest(const RunConfig& cfg) {
  if (cfg.listings.empty())
    throw std::runtime_error("config is missing 'listings'");
  auto result = hedonic::dataset::ingest_csv(cfg.listings, cfg.filters);

  if (cfg.include_distance) {
    if (cfg.offenders.empty() || !fs::exists(cfg.offenders))
      throw std::runtime_error(
          "Distance factor requested but offenders file '" + cfg.offenders +
          "' is missing");
    fill_distances(result.records, cfg.offenders);
    result.notes.push_back("distance computed against " + cfg.offenders);
  }

  fs::create_directories(cfg.out);
  hedonic::dataset::save_artifact(result, (fs::path(cfg.out) / "dataset.json").string());

  std::ofstream rejlog(fs::path(cfg.out) / "rejections.jsonl");
  for (const auto& r : result.rejections)
    rejlog << json({{"row", r.row}, {"reason", r.reason}}).dump() << "\n";

  std::cout << "ingested " << result.records.size() << " records ("
            << result.rejections.size() << " rejected) -> " << cfg.out
            << "/dataset.json\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// distance
// --------------------------------------------------------------------------
int cmd_distance(const RunConfig& cfg) {
  const fs::path artifact = fs::path(cfg.out) / "dataset.json";
  auto ingest = hedonic::dataset::load_artifact(artifact.string());
  if (cfg.offenders.empty() || !fs::exists(cfg.offenders))
    throw std::runtime_error(
        "Distance computation needs an offenders file; '" + cfg.offenders +
        "' is missing");
  fill_distances(ingest.records, cfg.offenders);
  ingest.notes.push_back("distance computed against " + cfg.offenders);
  hedonic::dataset::save_artifact(ingest, artifact.string());
  std::cout << "distance filled for " << ingest.records.size()
            << " records\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// fit
// --------------------------------------------------------------------------
json stats_to_json(const hedonic::diagnostics::FitStats& s) {
  json j = {{"adj_r2", s.adj_r2}, {"mse", s.mse},
            {"mare", s.mare},     {"bic", s.bic},
            {"n", s.n},           {"df_model", s.df_model}};
  if (!std::isfinite(s.bic)) j["bic"] = "-inf";  // JSON has no infinities
  return j;
}

hedonic::diagnostics::FitStats stats_from_json(const json& j) {
  hedonic::diagnostics::FitStats s;
  s.adj_r2 = j.at("adj_r2").get<double>();
  s.mse = j.at("mse").get<double>();
  s.mare = j.at("mare").get<double>();
  s.bic = j.at("bic").is_string() ? -std::numeric_limits<double>::infinity()
                                  : j.at("bic").get<double>();
  s.n = j.at("n").get<int>();
  s.df_model = j.at("df_model").get<double>();
  return s;
}

json fit_one_model(const std::string& name,
                   const hedonic::dataset::ModelDataset& ds,
                   const RunConfig& cfg) {
  json envelope;
  envelope["schema"] = "hedonic-model-v1";
  envelope["name"] = name;
  envelope["response"] = "ln_price";

  json significance = json::array();
  hedonic::diagnostics::FitStats stats;

  const std::string base = name.substr(0, name.find('@'));
  if (base == "gam") {
    const auto spec = hedonic::gam::default_spec(ds, cfg.k_basis);
    auto fit = hedonic::gam::select_lambdas(ds, spec);
    stats = hedonic::diagnostics::fit_stats(ds.response, fit.fitted,
                                            fit.edf_total);
    for (const auto& sig : fit.significance)
      significance.push_back({{"factor", sig.term},
                              {"pvalue", sig.pvalue},
                              {"included", true},
                              {"edf", sig.edf},
                              {"kind", sig.kind}});
    envelope["kind"] = "gam";
    envelope["fit"] = hedonic::gam::gam_to_json(fit);
  } else {
    const auto variant = hedonic::glm::parse_variant(base);
    if (!variant) throw std::runtime_error("unknown model '" + base + "'");
    const auto termset = hedonic::glm::expand_terms(*variant, ds);
    const auto fit = *variant == hedonic::glm::Variant::Linear
                         ? hedonic::glm::fit_ols_all(ds, termset)
                         : hedonic::glm::stepwise_fit(ds, termset,
                                                      cfg.alpha_enter);
    stats = hedonic::diagnostics::fit_stats(
        ds.response, fit.fitted, static_cast<double>(fit.beta.size() - 1));
    for (const auto& sig : hedonic::glm::factor_significance(fit, ds))
      significance.push_back({{"factor", sig.factor},
                              {"pvalue", sig.pvalue},
                              {"included", sig.included}});
    json jfit;
    jfit["variant"] = hedonic::glm::variant_code(*variant);
    jfit["alpha_enter"] = cfg.alpha_enter;
    jfit["deviance"] = fit.deviance;
    jfit["dispersion"] = fit.dispersion;
    json coefs = json::array();
    for (Eigen::Index i = 0; i < fit.beta.size(); ++i)
      coefs.push_back({{"term", fit.coef_names[i]},
                       {"beta", fit.beta[i]},
                       {"se", std::sqrt(std::max(0.0, fit.covariance(i, i)))},
                       {"pvalue", fit.pvalues[i]}});
    jfit["coefficients"] = std::move(coefs);
    jfit["trace"] = hedonic::glm::trace_to_json(fit.selection_trace);
    envelope["kind"] = "glm";
    envelope["fit"] = std::move(jfit);
  }

  envelope["stats"] = stats_to_json(stats);
  envelope["significance"] = std::move(significance);
  return envelope;
}

std::string stratum_suffix(const std::string& level) {
  std::string s = level.substr(0, 4);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return "-" + s;
}

int cmd_fit(const RunConfig& cfg) {
  const fs::path artifact = fs::path(cfg.out) / "dataset.json";
  if (!fs::exists(artifact))
    throw std::runtime_error("dataset artifact " + artifact.string() +
                             " does not exist; run `hedonic ingest` first");
  const auto ingest = hedonic::dataset::load_artifact(artifact.string());

  auto spec = factor_spec_of(cfg);
  if (spec.include_distance)
    for (const auto& r : ingest.records)
      if (!r.distance)
        throw std::runtime_error(
            "Distance factor requested but the dataset artifact has no "
            "computed distances; run `hedonic distance` first");

  const auto full = hedonic::dataset::build_dataset(ingest.records, spec);

  // (display name, dataset) pairs to fit each requested model against
  std::vector<std::pair<std::string, const hedonic::dataset::ModelDataset*>>
      strata;
  std::optional<std::pair<hedonic::dataset::ModelDataset,
                          hedonic::dataset::ModelDataset>>
      split;
  std::string match_suffix;
  if (!cfg.stratify.empty()) {
    const auto rule = hedonic::dataset::parse_stratify_rule(cfg.stratify);
    split = hedonic::dataset::stratify(full, rule);
    match_suffix = stratum_suffix(rule.level);
    strata.push_back({match_suffix, &split->first});
    strata.push_back({"-non", &split->second});
  } else {
    strata.push_back({"", &full});
  }

  json manifest;
  manifest["models"] = json::array();
  manifest["failures"] = json::array();
  bool any_failed = false;

  for (const auto& model : cfg.models) {
    for (const auto& [suffix, ds] : strata) {
      const std::string label = model + cfg.name_suffix + suffix;
      try {
        json envelope = fit_one_model(model, *ds, cfg);
        envelope["name"] = label;
        const fs::path file = fs::path(cfg.out) / ("model_" + label + ".json");
        write_json_file(file, envelope);
        manifest["models"].push_back({{"name", label},
                                      {"file", file.filename().string()},
                                      {"stats", envelope["stats"]}});
        std::cout << "fitted " << label << " (adj R^2 = "
                  << envelope["stats"]["adj_r2"].get<double>() << ")\n";
      } catch (const std::exception& e) {
        any_failed = true;
        manifest["failures"].push_back({{"name", label}, {"error", e.what()}});
        std::cerr << "model " << label << " failed: " << e.what() << "\n";
      }
    }
  }
  write_json_file(fs::path(cfg.out) / "stats.json", manifest);
  return any_failed ? kExitModelFailure : kExitOk;
}

// --------------------------------------------------------------------------
// distfit
// --------------------------------------------------------------------------
int cmd_distfit(const RunConfig& cfg) {
  const fs::path artifact = fs::path(cfg.out) / "dataset.json";
  const auto ingest = hedonic::dataset::load_artifact(artifact.string());
  std::vector<double> sample;
  sample.reserve(ingest.records.size());
  for (const auto& r : ingest.records) sample.push_back(std::log(r.price));

  std::vector<hedonic::distfit::FitResult> fits;
  fits.push_back(
      hedonic::distfit::fit_mle(sample, hedonic::distfit::Family::Normal));
  try {
    fits.push_back(
        hedonic::distfit::fit_mle(sample, hedonic::distfit::Family::Nig));
  } catch (const hedonic::distfit::NigFitError& e) {
    std::cerr << "NIG fit failed: " << e.what() << "\n";
    write_json_file(fs::path(cfg.out) / "distfit.json",
                    hedonic::distfit::to_json(
                        hedonic::distfit::density_report(sample, fits)));
    return kExitModelFailure;
  }
  const auto report = hedonic::distfit::density_report(sample, fits);
  write_json_file(fs::path(cfg.out) / "distfit.json",
                  hedonic::distfit::to_json(report));
  std::cout << "distfit: normal loglik = " << fits[0].loglik
            << ", nig loglik = " << fits[1].loglik << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// report
// --------------------------------------------------------------------------
int cmd_report(const RunConfig& cfg) {
  std::vector<std::string> labels;
  if (!cfg.stratify.empty()) {
    const auto rule = hedonic::dataset::parse_stratify_rule(cfg.stratify);
    for (const auto& m : cfg.models) {
      labels.push_back(m + stratum_suffix(rule.level));
      labels.push_back(m + "-non");
    }
  } else {
    labels = cfg.models;
  }

  std::vector<hedonic::diagnostics::ModelReport> reports;
  std::string response;
  for (const auto& label : labels) {
    const fs::path file = fs::path(cfg.out) / ("model_" + label + ".json");
    if (!fs::exists(file))
      throw std::runtime_error("model file " + file.string() +
                               " does not exist; run `hedonic fit` first");
    const json j = read_json_file(file);
    const std::string this_response = j.at("response").get<std::string>();
    if (response.empty())
      response = this_response;
    else if (response != this_response)
      throw std::runtime_error(
          "models disagree on the response definition: " + response + " vs " +
          this_response);
    hedonic::diagnostics::ModelReport mr;
    mr.name = j.at("name").get<std::string>();
    mr.stats = stats_from_json(j.at("stats"));
    for (const auto& sig : j.at("significance"))
      mr.significance[sig.at("factor").get<std::string>()] = {
          sig.at("pvalue").get<double>(), sig.at("included").get<bool>()};
    reports.push_back(std::move(mr));
  }

  const auto comparison = hedonic::diagnostics::compare_models(reports);
  write_json_file(fs::path(cfg.out) / "report.json",
                  hedonic::diagnostics::to_json(comparison));
  const std::string text = hedonic::diagnostics::render_text(comparison);
  write_text(fs::path(cfg.out) / "report.txt", text);
  std::cout << text;
  return kExitOk;
}

// --------------------------------------------------------------------------
// fixture
// --------------------------------------------------------------------------
int cmd_fixture(const std::string& out, std::uint64_t seed, int n) {
  fs::create_directories(out);
  hedonic::fixture::FixtureConfig cfg;
  cfg.seed = seed;
  cfg.n = n;
  hedonic::fixture::write_city_csv((fs::path(out) / "city.csv").string(), cfg);
  hedonic::fixture::write_offenders_csv(
      (fs::path(out) / "offenders.csv").string(), cfg);
  json truth;
  truth["seed"] = seed;
  truth["n"] = n;
  truth["ground_truth"] = hedonic::fixture::truth_description();
  write_json_file(fs::path(out) / "truth.json", truth);
  std::cout << "fixture written to " << out << " (n=" << n << ", seed=" << seed
            << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hedonic: P-spline GAM and GLM hedonic pricing pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string models_csv, stratify_flag, out_flag, suffix_flag;
  bool env_flag = false;
  std::optional<std::uint64_t> seed_flag;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration JSON");
    sub->add_option("--models", models_csv,
                    "comma-separated model list (gam,glm-l,glm-lm,glm-lq,"
                    "glm-lmq,glm-p)");
    sub->add_option("--stratify", stratify_flag,
                    "stratification rule, e.g. dwelling=Condo");
    sub->add_option("--name-suffix", suffix_flag,
                    "suffix for stored model names, e.g. -env");
    sub->add_flag("--env-factors", env_flag,
                  "include the four environmental factors");
    sub->add_option("--out", out_flag, "output directory");
    sub->add_option("--seed", seed_flag, "seed for synthetic diagnostics");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "ingest a listings CSV");
  CLI::App* distance =
      app.add_subcommand("distance", "fill nearest-offender distances");
  CLI::App* fit = app.add_subcommand("fit", "fit the requested models");
  CLI::App* distfit_cmd =
      app.add_subcommand("distfit", "fit Normal and NIG to the log-prices");
  CLI::App* report = app.add_subcommand("report", "assemble comparison report");
  for (CLI::App* sub : {ingest, distance, fit, distfit_cmd, report})
    add_common(sub);

  CLI::App* fixture = app.add_subcommand("fixture", "write the synthetic city");
  std::string fixture_out = "fixture";
  std::uint64_t fixture_seed = 42;
  int fixture_n = 2000;
  fixture->add_option("--out", fixture_out, "output directory");
  fixture->add_option("--seed", fixture_seed, "generator seed");
  fixture->add_option("--n", fixture_n, "number of listings");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fixture) return cmd_fixture(fixture_out, fixture_seed, fixture_n);

    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!models_csv.empty()) {
      cfg.models.clear();
      std::stringstream ss(models_csv);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) cfg.models.push_back(item);
    }
    if (!stratify_flag.empty()) cfg.stratify = stratify_flag;
    if (!suffix_flag.empty()) cfg.name_suffix = suffix_flag;
    if (env_flag) cfg.include_environment = true;
    if (!out_flag.empty()) cfg.out = out_flag;
    if (seed_flag) cfg.seed = *seed_flag;
    if (cfg.models.empty())
      throw std::runtime_error("at least one model must be requested");

    if (*ingest) return cmd_ingest(cfg);
    if (*distance) return cmd_distance(cfg);
    if (*fit) return cmd_fit(cfg);
    if (*distfit_cmd) return cmd_distfit(cfg);
    if (*report) return cmd_report(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputFailure;
  }
  return kExitOk;
}
