#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "hedonic/dataset.hpp"
#include "test_support.hpp"

using namespace hedonic::dataset;

namespace {

constexpr const char* kHeader =
    "price,dwelling,beds,baths,indoors,lot,year,days,hoa,latitude,longitude,"
    "waterfront,accessible,green,air_cond";

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& contents,
                   const std::string& name = "dataset_test.csv")
      : path(name) {
    std::ofstream out(path);
    out << contents;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

std::string row(const std::string& price, const std::string& rest) {
  return price + "," + rest + "\n";
}

const std::string kGoodRest =
    "SingleFamily,3,2.0,1800,4000,1985,30,120,47.61,-122.33,0,0,1,1";

}  // namespace

TEST_CASE("ingest applies the Appendix filters", "[dataset]") {
  std::string csv = std::string(kHeader) + "\n";
  csv += row("40000", kGoodRest);    // below $50K
  csv += row("250000", kGoodRest);   // fine
  csv += row("12000000", kGoodRest); // above $10M
  TempCsv file(csv);

  const auto result = ingest_csv(file.path, FilterConfig{});
  REQUIRE(result.records.size() == 1);
  REQUIRE(result.rejections.size() == 2);
  REQUIRE(result.rejections[0].row == 1);
  REQUIRE_THAT(result.rejections[0].reason,
               Catch::Matchers::ContainsSubstring("price below min $50K"));
  REQUIRE_THAT(result.rejections[1].reason,
               Catch::Matchers::ContainsSubstring("price above max $10M"));
}

TEST_CASE("boundary row at the filter minimum is accepted", "[dataset]") {
  std::string csv = std::string(kHeader) + "\n";
  csv += row("60000",
             "Condo,1,1.0,250,,1999,0,100,47.61,-122.33,0,0,0,0");
  TempCsv file(csv);
  const auto result = ingest_csv(file.path, FilterConfig{});
  REQUIRE(result.records.size() == 1);
  REQUIRE(result.rejections.empty());
  REQUIRE(result.records[0].indoors == 250.0);
  REQUIRE(result.records[0].lot == 0.0);  // empty lot cell = no lot
}

TEST_CASE("bad latitude in one of three rows", "[dataset]") {
  std::string csv = std::string(kHeader) + "\n";
  csv += row("250000", kGoodRest);
  csv += row("300000",
             "Townhouse,2,1.5,1200,900,1970,10,,95.0,-122.33,0,0,0,0");
  csv += row("350000", kGoodRest);
  TempCsv file(csv);
  const auto result = ingest_csv(file.path, FilterConfig{});
  REQUIRE(result.records.size() == 2);
  REQUIRE(result.rejections.size() == 1);
  REQUIRE(result.rejections[0].row == 2);
  REQUIRE_THAT(result.rejections[0].reason,
               Catch::Matchers::ContainsSubstring("latitude"));
}

TEST_CASE("ingest input accounting is exact", "[dataset]") {
  std::string csv = std::string(kHeader) + "\n";
  csv += row("250000", kGoodRest);
  csv += row("nonsense", kGoodRest);
  csv += row("300000", "Castle,3,2.0,1800,4000,1985,30,120,47.61,-122.33,0,0,0,0");
  csv += row("300000", kGoodRest);
  csv += row("49999", kGoodRest);
  TempCsv file(csv);
  const auto result = ingest_csv(file.path, FilterConfig{});
  REQUIRE(result.n_input == 5);
  REQUIRE(result.records.size() + result.rejections.size() == 5);
}

TEST_CASE("ingest schema and no-rows errors", "[dataset]") {
  TempCsv missing("price,dwelling,beds\n1,2,3\n", "missing_cols.csv");
  REQUIRE_THROWS_MATCHES(
      ingest_csv(missing.path, FilterConfig{}), SchemaError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("baths")));

  std::string csv = std::string(kHeader) + "\n" + row("10", kGoodRest);
  TempCsv norows(csv, "norows.csv");
  REQUIRE_THROWS_AS(ingest_csv(norows.path, FilterConfig{}), NoRowsError);
}

TEST_CASE("half-bath steps are validated", "[dataset]") {
  std::string csv = std::string(kHeader) + "\n";
  csv += row("250000",
             "SingleFamily,3,2.25,1800,4000,1985,30,120,47.61,-122.33,0,0,0,0");
  csv += row("250000", kGoodRest);
  TempCsv file(csv);
  const auto result = ingest_csv(file.path, FilterConfig{});
  REQUIRE(result.records.size() == 1);
  REQUIRE_THAT(result.rejections[0].reason,
               Catch::Matchers::ContainsSubstring("0.5"));
}

TEST_CASE("build_dataset takes the natural log of price", "[dataset]") {
  auto records = test_support::make_records(40);
  records[0].price = 100000.0;
  const auto ds = build_dataset(records, FactorSpec{});
  REQUIRE(ds.response[0] == std::log(100000.0));
  REQUIRE(ds.response[0] == Catch::Approx(11.512925464970229).epsilon(1e-12));
  REQUIRE(ds.n() == 40);
}

TEST_CASE("dummy encoding against the declared reference", "[dataset]") {
  const auto records = test_support::make_records(60);
  const auto ds = build_dataset(records, FactorSpec{});
  const Factor* dwelling = ds.find_factor("dwelling");
  REQUIRE(dwelling != nullptr);
  REQUIRE(dwelling->reference == "SingleFamily");
  REQUIRE(dwelling->columns.size() == 3);  // 4 observed levels -> 3 dummies

  // dummies sum to <= 1 per row
  for (int i = 0; i < ds.n(); ++i) {
    double sum = 0.0;
    for (int c : dwelling->columns) sum += ds.columns[c].values[i];
    REQUIRE(sum <= 1.0);
    REQUIRE(sum >= 0.0);
  }
  bool note_found = false;
  for (const auto& note : ds.provenance.notes)
    if (note.find("SingleFamily") != std::string::npos) note_found = true;
  REQUIRE(note_found);
}

TEST_CASE("constant factors are excluded with a warning", "[dataset]") {
  auto records = test_support::make_records(40);
  for (auto& r : records) r.year = 1990.0;
  const auto ds = build_dataset(records, FactorSpec{});
  REQUIRE(ds.find_factor("year") == nullptr);
  bool note_found = false;
  for (const auto& note : ds.provenance.notes)
    if (note.find("'year' excluded") != std::string::npos) note_found = true;
  REQUIRE(note_found);
}

TEST_CASE("continuous columns are standardized", "[dataset]") {
  const auto records = test_support::make_records(120);
  const auto ds = build_dataset(records, FactorSpec{});
  for (const auto& col : ds.columns) {
    if (col.kind != ColumnKind::Continuous) continue;
    const double mean = col.values.mean();
    const double sd = std::sqrt((col.values.array() - mean).square().sum() /
                                (ds.n() - 1.0));
    REQUIRE(std::abs(mean) < 1e-10);
    REQUIRE(std::abs(sd - 1.0) < 1e-10);
    REQUIRE(ds.standardization.count(col.name) == 1);
  }
}

TEST_CASE("hoa fill-in is recorded in provenance", "[dataset]") {
  const auto records = test_support::make_records(60);
  const auto ds = build_dataset(records, FactorSpec{});
  bool note_found = false;
  for (const auto& note : ds.provenance.notes)
    if (note.find("hoa missing") != std::string::npos) note_found = true;
  REQUIRE(note_found);
}

TEST_CASE("insufficient rows error", "[dataset]") {
  const auto records = test_support::make_records(12);
  REQUIRE_THROWS_WITH(build_dataset(records, FactorSpec{}),
                      Catch::Matchers::ContainsSubstring("insufficient rows"));
}

TEST_CASE("environment and distance factor toggles", "[dataset]") {
  const auto records = test_support::make_records(80);
  FactorSpec spec;
  spec.include_environment = true;
  spec.include_distance = true;
  const auto ds = build_dataset(records, spec);
  REQUIRE(ds.find_factor("waterfront") != nullptr);
  REQUIRE(ds.find_factor("air_cond") != nullptr);
  REQUIRE(ds.find_factor("distance") != nullptr);

  const auto plain = build_dataset(records, FactorSpec{});
  REQUIRE(plain.find_factor("waterfront") == nullptr);
  REQUIRE(plain.find_factor("distance") == nullptr);

  auto no_distance = records;
  for (auto& r : no_distance) r.distance = std::nullopt;
  REQUIRE_THROWS_WITH(build_dataset(no_distance, spec),
                      Catch::Matchers::ContainsSubstring("Distance"));
}

TEST_CASE("stratify partitions rows and rebuilds encodings", "[dataset]") {
  auto records = test_support::make_records(10, 99);
  // force exactly 4 condos
  for (int i = 0; i < 10; ++i)
    records[i].dwelling = i < 4 ? Dwelling::Condo : Dwelling::Townhouse;
  for (int i = 4; i < 10; ++i) records[i].lot = 1000.0 + i;
  const auto ds = build_dataset(records, FactorSpec{}, false);

  const auto [condos, rest] = stratify(ds, {"dwelling", "Condo"});
  REQUIRE(condos.n() == 4);
  REQUIRE(rest.n() == 6);
  REQUIRE(condos.n() + rest.n() == ds.n());

  // single-class stratum: the dwelling factor vanishes
  REQUIRE(condos.find_factor("dwelling") == nullptr);
  REQUIRE(rest.find_factor("dwelling") == nullptr);

  // no row in both strata (match on price, which is unique in the fixture)
  std::set<double> condo_prices;
  for (const auto& r : condos.records) condo_prices.insert(r.price);
  for (const auto& r : rest.records)
    REQUIRE(condo_prices.count(r.price) == 0);

  REQUIRE_THROWS_WITH(stratify(ds, {"dwelling", "SingleFamily"}),
                      Catch::Matchers::ContainsSubstring("SingleFamily"));
  REQUIRE_THROWS_AS(stratify(ds, {"beds", "3"}), std::invalid_argument);
}

TEST_CASE("stratified fits see per-stratum standardization", "[dataset]") {
  const auto records = test_support::make_records(200, 5);
  const auto ds = build_dataset(records, FactorSpec{});
  const auto [condos, rest] = stratify(ds, {"dwelling", "Condo"});
  for (const auto& sub : {condos, rest}) {
    const auto* indoors = sub.find_factor("indoors");
    REQUIRE(indoors != nullptr);
    const auto& v = sub.columns[indoors->columns[0]].values;
    REQUIRE(std::abs(v.mean()) < 1e-10);
  }
}

TEST_CASE("dataset artifact round trip is bit exact", "[dataset]") {
  std::string csv = std::string(kHeader) + "\n";
  csv += row("250000", kGoodRest);
  csv += row("1234567",
             "Condo,2,1.5,987,,2003,45,321,47.6153,-122.3301,1,0,1,0");
  TempCsv file(csv);
  auto result = ingest_csv(file.path, FilterConfig{});
  result.records[0].distance = 1.234567890123456789;

  const std::string path = "artifact_roundtrip.json";
  save_artifact(result, path);
  const auto loaded = load_artifact(path);
  std::remove(path.c_str());

  REQUIRE(loaded.records.size() == result.records.size());
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    const auto& a = result.records[i];
    const auto& b = loaded.records[i];
    REQUIRE(a.price == b.price);
    REQUIRE(a.beds == b.beds);
    REQUIRE(a.baths == b.baths);
    REQUIRE(a.indoors == b.indoors);
    REQUIRE(a.lot == b.lot);
    REQUIRE(a.year == b.year);
    REQUIRE(a.days == b.days);
    REQUIRE(a.hoa == b.hoa);
    REQUIRE(a.latitude == b.latitude);
    REQUIRE(a.longitude == b.longitude);
    REQUIRE(a.distance == b.distance);
    REQUIRE(a.waterfront == b.waterfront);
    REQUIRE(dwelling_name(a.dwelling) == dwelling_name(b.dwelling));
  }
  REQUIRE(loaded.rejections.size() == result.rejections.size());
}

TEST_CASE("filter config JSON round trip", "[dataset]") {
  FilterConfig f;
  f.price_min = 75000;
  f.sqft_min = 300;
  const auto j = to_json(f);
  const auto g = filter_config_from_json(j);
  REQUIRE(g.price_min == 75000);
  REQUIRE(g.sqft_min == 300);
  REQUIRE(g.price_max == f.price_max);
}
