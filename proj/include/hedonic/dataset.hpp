#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hedonic/csv.hpp"

namespace hedonic::dataset {

// ---------------------------------------------------------------------------
// Listing schema
// ---------------------------------------------------------------------------

enum class Dwelling { SingleFamily, MultiFamily, Townhouse, Condo };

inline const std::vector<std::string>& dwelling_levels() {
  static const std::vector<std::string> levels = {"SingleFamily", "MultiFamily",
                                                  "Townhouse", "Condo"};
  return levels;
}

inline std::string dwelling_name(Dwelling d) {
  return dwelling_levels()[static_cast<int>(d)];
}

inline std::optional<Dwelling> parse_dwelling(const std::string& s) {
  const auto& levels = dwelling_levels();
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (s == levels[i]) return static_cast<Dwelling>(i);
  return std::nullopt;
}

struct ListingRecord {
  double price = 0.0;        // USD
  Dwelling dwelling = Dwelling::SingleFamily;
  double beds = 0.0;
  double baths = 0.0;        // 0.5 steps allowed
  double indoors = 0.0;      // square feet
  double lot = 0.0;          // square feet, 0 = no lot (condos)
  double year = 0.0;         // year construction completed
  double days = 0.0;         // days on market
  std::optional<double> hoa; // USD/month; absent = no fee reported
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<std::string> borough;
  std::optional<bool> waterfront, accessible, green, air_cond;
  std::optional<double> distance;  // km to nearest offender, filled by geo
};

// Mirrors Appendix Table A1. The lot minimum applies only to listings that
// report a lot at all; condos come through with an empty lot cell.
struct FilterConfig {
  double price_min = 50000.0;
  double price_max = 10000000.0;
  double beds_min = 1.0;
  double baths_min = 1.0;
  double sqft_min = 250.0;
  double lot_min = 250.0;
};

inline nlohmann::json to_json(const FilterConfig& f) {
  return {{"price_min", f.price_min}, {"price_max", f.price_max},
          {"beds_min", f.beds_min},   {"baths_min", f.baths_min},
          {"sqft_min", f.sqft_min},   {"lot_min", f.lot_min}};
}

inline FilterConfig filter_config_from_json(const nlohmann::json& j) {
  FilterConfig f;
  if (j.contains("price_min")) f.price_min = j.at("price_min").get<double>();
  if (j.contains("price_max")) f.price_max = j.at("price_max").get<double>();
  if (j.contains("beds_min")) f.beds_min = j.at("beds_min").get<double>();
  if (j.contains("baths_min")) f.baths_min = j.at("baths_min").get<double>();
  if (j.contains("sqft_min")) f.sqft_min = j.at("sqft_min").get<double>();
  if (j.contains("lot_min")) f.lot_min = j.at("lot_min").get<double>();
  return f;
}

struct Rejection {
  int row = 0;  // 1-based data row number (header not counted)
  std::string reason;
};

struct IngestResult {
  std::vector<ListingRecord> records;
  std::vector<Rejection> rejections;
  std::string source;
  FilterConfig filters;
  int n_input = 0;
  std::vector<std::string> notes;
};

// Thrown when ingestion produces zero accepted rows; callers treat this
// differently from a malformed file.
class NoRowsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// $50K / $10M style for the default bounds, plain dollars otherwise.
inline std::string dollars(double v) {
  std::ostringstream os;
  if (v >= 1e6 && std::fmod(v, 1e6) == 0.0)
    os << "$" << static_cast<long long>(v / 1e6) << "M";
  else if (v >= 1e3 && std::fmod(v, 1e3) == 0.0)
    os << "$" << static_cast<long long>(v / 1e3) << "K";
  else
    os << "$" << v;
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

inline IngestResult ingest_csv(const std::string& path,
                               const FilterConfig& filters) {
  const csv::Table table = csv::read_file(path);

  const std::vector<std::string> required = {
      "price", "dwelling", "beds", "baths",    "indoors", "lot",
      "year",  "days",     "hoa",  "latitude", "longitude"};
  std::map<std::string, int> col;
  for (const auto& name : required) {
    const int idx = table.column(name);
    if (idx < 0)
      throw SchemaError("missing required column '" + name + "' in " + path);
    col[name] = idx;
  }
  const int borough_col = table.column("borough");
  const std::vector<std::string> env_names = {"waterfront", "accessible",
                                              "green", "air_cond"};
  std::map<std::string, int> env_col;
  for (const auto& name : env_names) env_col[name] = table.column(name);

  IngestResult result;
  result.source = path;
  result.filters = filters;
  result.n_input = static_cast<int>(table.rows.size());

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int rownum = static_cast<int>(r) + 1;
    auto reject = [&](const std::string& reason) {
      result.rejections.push_back({rownum, reason});
    };
    if (row.size() < table.header.size()) {
      reject("short row: " + std::to_string(row.size()) + " of " +
             std::to_string(table.header.size()) + " fields");
      continue;
    }

    auto cell = [&](const std::string& name) { return row[col.at(name)]; };
    auto num = [&](const std::string& name) {
      return csv::parse_double(cell(name));
    };

    const auto price = num("price");
    const auto beds = num("beds");
    const auto baths = num("baths");
    const auto indoors = num("indoors");
    const auto year = num("year");
    const auto days = num("days");
    const auto latitude = num("latitude");
    const auto longitude = num("longitude");
    const auto dwelling = parse_dwelling(cell("dwelling"));

    if (!price) { reject("unparseable price '" + cell("price") + "'"); continue; }
    if (!dwelling) {
      reject("unknown dwelling type '" + cell("dwelling") + "'");
      continue;
    }
    if (!beds || !baths || !indoors || !year || !days || !latitude ||
        !longitude) {
      reject("unparseable numeric cell");
      continue;
    }

    // lot and hoa cells may legitimately be empty
    std::optional<double> lot = std::nullopt;
    if (!csv::trim(cell("lot")).empty()) {
      lot = num("lot");
      if (!lot) { reject("unparseable lot '" + cell("lot") + "'"); continue; }
    }
    std::optional<double> hoa = std::nullopt;
    if (!csv::trim(cell("hoa")).empty()) {
      hoa = num("hoa");
      if (!hoa) { reject("unparseable hoa '" + cell("hoa") + "'"); continue; }
    }

    if (*price <= 0.0) { reject("price not positive"); continue; }
    if (*price < filters.price_min) {
      reject("price below min " + detail::dollars(filters.price_min));
      continue;
    }
    if (*price > filters.price_max) {
      reject("price above max " + detail::dollars(filters.price_max));
      continue;
    }
    if (*beds < filters.beds_min) { reject("beds below min"); continue; }
    if (*baths < filters.baths_min) { reject("baths below min"); continue; }
    if (std::abs(*baths * 2.0 - std::round(*baths * 2.0)) > 1e-9) {
      reject("baths not in 0.5 steps");
      continue;
    }
    if (*indoors < filters.sqft_min) {
      reject("indoors below min " + std::to_string(
                 static_cast<long long>(filters.sqft_min)) + " sqft");
      continue;
    }
    if (lot && *lot > 0.0 && *lot < filters.lot_min) {
      reject("lot below min");
      continue;
    }
    if (lot && *lot < 0.0) { reject("negative lot"); continue; }
    if (*latitude < -90.0 || *latitude > 90.0) {
      reject("latitude out of range [-90, 90]");
      continue;
    }
    if (*longitude < -180.0 || *longitude > 180.0) {
      reject("longitude out of range [-180, 180]");
      continue;
    }
    if (*days < 0.0) { reject("negative days on market"); continue; }
    if (hoa && *hoa < 0.0) { reject("negative hoa"); continue; }

    ListingRecord rec;
    rec.price = *price;
    rec.dwelling = *dwelling;
    rec.beds = *beds;
    rec.baths = *baths;
    rec.indoors = *indoors;
    rec.lot = lot.value_or(0.0);
    rec.year = *year;
    rec.days = *days;
    rec.hoa = hoa;
    rec.latitude = *latitude;
    rec.longitude = *longitude;
    if (borough_col >= 0 && !csv::trim(row[borough_col]).empty())
      rec.borough = csv::trim(row[borough_col]);
    auto flag = [&](const std::string& name) -> std::optional<bool> {
      const int c = env_col.at(name);
      if (c < 0 || csv::trim(row[c]).empty()) return std::nullopt;
      return csv::parse_bool(row[c]);
    };
    rec.waterfront = flag("waterfront");
    rec.accessible = flag("accessible");
    rec.green = flag("green");
    rec.air_cond = flag("air_cond");
    result.records.push_back(std::move(rec));
  }

  if (result.records.empty())
    throw NoRowsError("no rows accepted from " + path + " (" +
                      std::to_string(result.rejections.size()) +
                      " rejected)");
  return result;
}

// ---------------------------------------------------------------------------
// Encoded model dataset
// ---------------------------------------------------------------------------

struct FactorSpec {
  bool include_borough = false;
  bool include_environment = false;
  bool include_distance = false;
  std::vector<std::string> force_linear;  // consumed by the GAM layer
};

enum class ColumnKind { Continuous, Binary };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  Eigen::VectorXd values;  // standardized when continuous
};

enum class FactorKind { Continuous, Category, Boolean };

struct Factor {
  std::string name;  // e.g. "dwelling", "latitude"
  FactorKind kind = FactorKind::Continuous;
  std::vector<int> columns;          // indices into ModelDataset::columns
  std::string reference;             // category reference level
  std::vector<std::string> levels;   // observed category levels (incl. ref)
};

struct Standardization {
  double mean = 0.0;
  double sd = 1.0;
};

struct Provenance {
  std::string source;
  nlohmann::json filters;
  int n_input = 0;
  std::vector<Rejection> rejections;
  std::vector<std::string> notes;
};

// Raw (pre-standardization) factor values for one row; the model layers
// standardize with their stored metadata before use.
struct FactorRow {
  std::map<std::string, double> numeric;
  std::map<std::string, std::string> category;
};

// Canonical factor ordering used by every report.
inline const std::vector<std::string>& canonical_factor_order() {
  static const std::vector<std::string> order = {
      "dwelling", "borough",  "latitude",   "longitude", "beds",  "baths",
      "indoors",  "lot",      "year",       "days",      "hoa",   "distance",
      "waterfront", "accessible", "green",  "air_cond"};
  return order;
}

inline std::string factor_display_name(const std::string& name) {
  static const std::map<std::string, std::string> display = {
      {"dwelling", "Dwelling"},   {"borough", "Borough"},
      {"latitude", "Latitude"},   {"longitude", "Longitude"},
      {"beds", "Beds"},           {"baths", "Baths"},
      {"indoors", "Indoors"},     {"lot", "Lot"},
      {"year", "Year"},           {"days", "Days"},
      {"hoa", "HOA"},             {"distance", "Distance"},
      {"waterfront", "Waterfront"}, {"accessible", "Accessible"},
      {"green", "Green"},         {"air_cond", "Air Cond"}};
  const auto it = display.find(name);
  return it == display.end() ? name : it->second;
}

class ModelDataset {
 public:
  Eigen::VectorXd response;  // ln(price)
  std::vector<Column> columns;
  std::vector<Factor> factors;
  std::map<std::string, Standardization> standardization;  // by column name
  Provenance provenance;
  std::vector<ListingRecord> records;
  FactorSpec spec;

  int n() const { return static_cast<int>(response.size()); }
  int n_columns() const { return static_cast<int>(columns.size()); }

  const Factor* find_factor(const std::string& name) const {
    for (const auto& f : factors)
      if (f.name == name) return &f;
    return nullptr;
  }

  const Column& column(int idx) const { return columns[idx]; }

  Eigen::MatrixXd column_matrix() const {
    Eigen::MatrixXd X(n(), n_columns());
    for (int j = 0; j < n_columns(); ++j) X.col(j) = columns[j].values;
    return X;
  }

  std::vector<FactorRow> factor_rows() const;
};

namespace detail {

inline double column_mean(const Eigen::VectorXd& v) { return v.mean(); }

inline double column_sd(const Eigen::VectorXd& v) {
  const double m = v.mean();
  const double ss = (v.array() - m).square().sum();
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

inline ModelDataset build_dataset(const std::vector<ListingRecord>& records,
                                  const FactorSpec& spec,
                                  bool enforce_min_rows = true) {
  if (records.empty())
    throw std::invalid_argument("build_dataset: no records");
  const int n = static_cast<int>(records.size());

  ModelDataset ds;
  ds.records = records;
  ds.spec = spec;
  ds.response.resize(n);
  for (int i = 0; i < n; ++i) ds.response[i] = std::log(records[i].price);

  int hoa_filled = 0;
  for (const auto& r : records)
    if (!r.hoa) ++hoa_filled;
  if (hoa_filled > 0)
    ds.provenance.notes.push_back("hoa missing for " +
                                  std::to_string(hoa_filled) +
                                  " records; treated as $0/month");

  if (spec.include_distance)
    for (int i = 0; i < n; ++i)
      if (!records[i].distance)
        throw std::invalid_argument(
            "build_dataset: Distance requested but record " +
            std::to_string(i + 1) + " has no computed distance");

  // Factor construction in canonical order. Zero-variance columns are
  // excluded with a provenance note rather than failing the build.
  auto add_continuous = [&](const std::string& name, auto getter) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = getter(records[i]);
    const double sd = detail::column_sd(v);
    if (!(sd > 0.0)) {
      ds.provenance.notes.push_back("factor '" + name +
                                    "' excluded: constant across rows");
      return;
    }
    const double mean = detail::column_mean(v);
    Column c;
    c.name = name;
    c.kind = ColumnKind::Continuous;
    c.values = (v.array() - mean) / sd;
    ds.standardization[name] = {mean, sd};
    Factor f;
    f.name = name;
    f.kind = FactorKind::Continuous;
    f.columns = {static_cast<int>(ds.columns.size())};
    ds.columns.push_back(std::move(c));
    ds.factors.push_back(std::move(f));
  };

  auto add_boolean = [&](const std::string& name, auto getter) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
      v[i] = getter(records[i]).value_or(false) ? 1.0 : 0.0;
    if (v.minCoeff() == v.maxCoeff()) {
      ds.provenance.notes.push_back("factor '" + name +
                                    "' excluded: constant across rows");
      return;
    }
    Column c;
    c.name = name;
    c.kind = ColumnKind::Binary;
    c.values = v;
    Factor f;
    f.name = name;
    f.kind = FactorKind::Boolean;
    f.columns = {static_cast<int>(ds.columns.size())};
    ds.columns.push_back(std::move(c));
    ds.factors.push_back(std::move(f));
  };

  // dwelling: reference SingleFamily (first observed level if absent)
  {
    std::vector<std::string> observed;
    for (const auto& level : dwelling_levels()) {
      for (const auto& r : records)
        if (dwelling_name(r.dwelling) == level) {
          observed.push_back(level);
          break;
        }
    }
    if (observed.size() <= 1) {
      ds.provenance.notes.push_back(
          "factor 'dwelling' excluded: single dwelling class " +
          (observed.empty() ? std::string("?") : observed.front()));
    } else {
      const std::string reference = observed.front();
      Factor f;
      f.name = "dwelling";
      f.kind = FactorKind::Category;
      f.reference = reference;
      f.levels = observed;
      for (const auto& level : observed) {
        if (level == reference) continue;
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i)
          v[i] = dwelling_name(records[i].dwelling) == level ? 1.0 : 0.0;
        Column c;
        c.name = "dwelling=" + level;
        c.kind = ColumnKind::Binary;
        c.values = v;
        f.columns.push_back(static_cast<int>(ds.columns.size()));
        ds.columns.push_back(std::move(c));
      }
      ds.provenance.notes.push_back("dwelling reference level: " + reference);
      ds.factors.push_back(std::move(f));
    }
  }

  if (spec.include_borough) {
    int missing = 0;
    std::set<std::string> level_set;
    for (const auto& r : records) {
      if (!r.borough)
        ++missing;
      else
        level_set.insert(*r.borough);
    }
    if (missing > 0)
      throw std::invalid_argument("build_dataset: borough requested but " +
                                  std::to_string(missing) +
                                  " records lack it");
    std::vector<std::string> observed(level_set.begin(), level_set.end());
    if (observed.size() <= 1) {
      ds.provenance.notes.push_back(
          "factor 'borough' excluded: single borough");
    } else {
      const std::string reference = observed.front();  // first alphabetical
      Factor f;
      f.name = "borough";
      f.kind = FactorKind::Category;
      f.reference = reference;
      f.levels = observed;
      for (const auto& level : observed) {
        if (level == reference) continue;
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i)
          v[i] = *records[i].borough == level ? 1.0 : 0.0;
        Column c;
        c.name = "borough=" + level;
        c.kind = ColumnKind::Binary;
        c.values = v;
        f.columns.push_back(static_cast<int>(ds.columns.size()));
        ds.columns.push_back(std::move(c));
      }
      ds.provenance.notes.push_back("borough reference level: " + reference);
      ds.factors.push_back(std::move(f));
    }
  }

  add_continuous("latitude", [](const ListingRecord& r) { return r.latitude; });
  add_continuous("longitude",
                 [](const ListingRecord& r) { return r.longitude; });
  add_continuous("beds", [](const ListingRecord& r) { return r.beds; });
  add_continuous("baths", [](const ListingRecord& r) { return r.baths; });
  add_continuous("indoors", [](const ListingRecord& r) { return r.indoors; });
  add_continuous("lot", [](const ListingRecord& r) { return r.lot; });
  add_continuous("year", [](const ListingRecord& r) { return r.year; });
  add_continuous("days", [](const ListingRecord& r) { return r.days; });
  add_continuous("hoa",
                 [](const ListingRecord& r) { return r.hoa.value_or(0.0); });
  if (spec.include_distance)
    add_continuous("distance",
                   [](const ListingRecord& r) { return *r.distance; });
  if (spec.include_environment) {
    add_boolean("waterfront",
                [](const ListingRecord& r) { return r.waterfront; });
    add_boolean("accessible",
                [](const ListingRecord& r) { return r.accessible; });
    add_boolean("green", [](const ListingRecord& r) { return r.green; });
    add_boolean("air_cond", [](const ListingRecord& r) { return r.air_cond; });
  }

  if (ds.columns.empty())
    throw std::invalid_argument("build_dataset: every factor degenerate");
  if (enforce_min_rows && n < ds.n_columns() + 1 + 10)
    throw std::invalid_argument(
        "build_dataset: insufficient rows (" + std::to_string(n) +
        ") for " + std::to_string(ds.n_columns() + 1) + " parameters");

  for (const auto& c : ds.columns)
    if (!c.values.allFinite())
      throw std::invalid_argument("build_dataset: non-finite values in '" +
                                  c.name + "'");
  return ds;
}

inline std::vector<FactorRow> ModelDataset::factor_rows() const {
  std::vector<FactorRow> rows(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ListingRecord& r = records[i];
    FactorRow& row = rows[i];
    row.category["dwelling"] = dwelling_name(r.dwelling);
    if (r.borough) row.category["borough"] = *r.borough;
    row.numeric["latitude"] = r.latitude;
    row.numeric["longitude"] = r.longitude;
    row.numeric["beds"] = r.beds;
    row.numeric["baths"] = r.baths;
    row.numeric["indoors"] = r.indoors;
    row.numeric["lot"] = r.lot;
    row.numeric["year"] = r.year;
    row.numeric["days"] = r.days;
    row.numeric["hoa"] = r.hoa.value_or(0.0);
    if (r.distance) row.numeric["distance"] = *r.distance;
    row.numeric["waterfront"] = r.waterfront.value_or(false) ? 1.0 : 0.0;
    row.numeric["accessible"] = r.accessible.value_or(false) ? 1.0 : 0.0;
    row.numeric["green"] = r.green.value_or(false) ? 1.0 : 0.0;
    row.numeric["air_cond"] = r.air_cond.value_or(false) ? 1.0 : 0.0;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Stratification
// ---------------------------------------------------------------------------

struct StratifyRule {
  std::string factor;  // "dwelling" or "borough"
  std::string level;
};

// Parses "dwelling=Condo".
inline StratifyRule parse_stratify_rule(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size())
    throw std::invalid_argument("stratify rule must look like factor=Level: " +
                                text);
  return {csv::trim(text.substr(0, eq)), csv::trim(text.substr(eq + 1))};
}

inline std::pair<ModelDataset, ModelDataset> stratify(
    const ModelDataset& ds, const StratifyRule& rule) {
  if (rule.factor != "dwelling" && rule.factor != "borough")
    throw std::invalid_argument("stratify: '" + rule.factor +
                                "' is not an encoded category factor");
  std::vector<ListingRecord> matching, complement;
  for (const auto& r : ds.records) {
    const std::string level = rule.factor == "dwelling"
                                  ? dwelling_name(r.dwelling)
                                  : r.borough.value_or("");
    (level == rule.level ? matching : complement).push_back(r);
  }
  if (matching.empty())
    throw std::invalid_argument("stratify: empty stratum " + rule.factor +
                                "=" + rule.level);
  if (complement.empty())
    throw std::invalid_argument("stratify: empty complement of " +
                                rule.factor + "=" + rule.level);

  // a stratum only errors when empty; fit preconditions re-check row counts
  ModelDataset a = build_dataset(matching, ds.spec, false);
  ModelDataset b = build_dataset(complement, ds.spec, false);
  a.provenance = ds.provenance;
  b.provenance = ds.provenance;
  a.provenance.notes.push_back("stratum " + rule.factor + "=" + rule.level +
                               " (n=" + std::to_string(a.n()) + ")");
  b.provenance.notes.push_back("stratum complement of " + rule.factor + "=" +
                               rule.level + " (n=" + std::to_string(b.n()) +
                               ")");
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Dataset artifact (records + provenance), bit-exact JSON round trip
// ---------------------------------------------------------------------------

inline nlohmann::json record_to_json(const ListingRecord& r) {
  nlohmann::json j;
  j["price"] = r.price;
  j["dwelling"] = dwelling_name(r.dwelling);
  j["beds"] = r.beds;
  j["baths"] = r.baths;
  j["indoors"] = r.indoors;
  j["lot"] = r.lot;
  j["year"] = r.year;
  j["days"] = r.days;
  if (r.hoa) j["hoa"] = *r.hoa; else j["hoa"] = nullptr;
  j["latitude"] = r.latitude;
  j["longitude"] = r.longitude;
  if (r.borough) j["borough"] = *r.borough;
  if (r.waterfront) j["waterfront"] = *r.waterfront;
  if (r.accessible) j["accessible"] = *r.accessible;
  if (r.green) j["green"] = *r.green;
  if (r.air_cond) j["air_cond"] = *r.air_cond;
  if (r.distance) j["distance"] = *r.distance;
  return j;
}

inline ListingRecord record_from_json(const nlohmann::json& j) {
  ListingRecord r;
  r.price = j.at("price").get<double>();
  const auto d = parse_dwelling(j.at("dwelling").get<std::string>());
  if (!d) throw std::runtime_error("bad dwelling in dataset artifact");
  r.dwelling = *d;
  r.beds = j.at("beds").get<double>();
  r.baths = j.at("baths").get<double>();
  r.indoors = j.at("indoors").get<double>();
  r.lot = j.at("lot").get<double>();
  r.year = j.at("year").get<double>();
  r.days = j.at("days").get<double>();
  if (!j.at("hoa").is_null()) r.hoa = j.at("hoa").get<double>();
  r.latitude = j.at("latitude").get<double>();
  r.longitude = j.at("longitude").get<double>();
  if (j.contains("borough")) r.borough = j.at("borough").get<std::string>();
  if (j.contains("waterfront")) r.waterfront = j.at("waterfront").get<bool>();
  if (j.contains("accessible")) r.accessible = j.at("accessible").get<bool>();
  if (j.contains("green")) r.green = j.at("green").get<bool>();
  if (j.contains("air_cond")) r.air_cond = j.at("air_cond").get<bool>();
  if (j.contains("distance")) r.distance = j.at("distance").get<double>();
  return r;
}

inline nlohmann::json artifact_to_json(const IngestResult& ingest) {
  nlohmann::json j;
  j["schema"] = "hedonic-dataset-v1";
  j["source"] = ingest.source;
  j["filters"] = to_json(ingest.filters);
  j["n_input"] = ingest.n_input;
  j["records"] = nlohmann::json::array();
  for (const auto& r : ingest.records) j["records"].push_back(record_to_json(r));
  j["rejections"] = nlohmann::json::array();
  for (const auto& rej : ingest.rejections)
    j["rejections"].push_back({{"row", rej.row}, {"reason", rej.reason}});
  j["notes"] = ingest.notes;
  return j;
}

inline IngestResult artifact_from_json(const nlohmann::json& j) {
  if (!j.contains("schema") || j.at("schema") != "hedonic-dataset-v1")
    throw std::runtime_error("not a hedonic dataset artifact");
  IngestResult out;
  out.source = j.at("source").get<std::string>();
  out.filters = filter_config_from_json(j.at("filters"));
  out.n_input = j.at("n_input").get<int>();
  for (const auto& rj : j.at("records"))
    out.records.push_back(record_from_json(rj));
  for (const auto& rj : j.at("rejections"))
    out.rejections.push_back(
        {rj.at("row").get<int>(), rj.at("reason").get<std::string>()});
  for (const auto& note : j.at("notes"))
    out.notes.push_back(note.get<std::string>());
  return out;
}

inline void save_artifact(const IngestResult& ingest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << artifact_to_json(ingest).dump(1) << "\n";
}

inline IngestResult load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset artifact " + path);
  nlohmann::json j;
  in >> j;
  return artifact_from_json(j);
}

}  // namespace hedonic::dataset
