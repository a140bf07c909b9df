#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hedonic/geo.hpp"
#include "hedonic/numeric.hpp"

using hedonic::geo::GeoPoint;
using hedonic::geo::haversine_km;
using hedonic::geo::nearest_distance;

namespace {
// one degree of longitude at the equator, pi R / 180
const double kOneDegreeKm = M_PI * hedonic::geo::kEarthRadiusKm / 180.0;
}  // namespace

TEST_CASE("haversine identity and closed-form checks", "[geo]") {
  const GeoPoint a{40.7, -74.0};
  REQUIRE(haversine_km(a, a) == 0.0);

  REQUIRE(haversine_km({0.0, 0.0}, {0.0, 1.0}) ==
          Catch::Approx(kOneDegreeKm).margin(1e-3));
  REQUIRE(kOneDegreeKm == Catch::Approx(111.195).margin(1e-3));

  // antipodal distance is half the circumference
  REQUIRE(haversine_km({0.0, 0.0}, {0.0, 180.0}) ==
          Catch::Approx(M_PI * hedonic::geo::kEarthRadiusKm).margin(1e-6));
}

TEST_CASE("haversine symmetry and nonnegativity on random pairs", "[geo]") {
  hedonic::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const GeoPoint a{rng.uniform(-90, 90), rng.uniform(-180, 180)};
    const GeoPoint b{rng.uniform(-90, 90), rng.uniform(-180, 180)};
    const double dab = haversine_km(a, b);
    REQUIRE(dab >= 0.0);
    REQUIRE(dab == haversine_km(b, a));
  }
}

TEST_CASE("haversine triangle inequality on random triples", "[geo]") {
  hedonic::Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const GeoPoint a{rng.uniform(-90, 90), rng.uniform(-180, 180)};
    const GeoPoint b{rng.uniform(-90, 90), rng.uniform(-180, 180)};
    const GeoPoint c{rng.uniform(-90, 90), rng.uniform(-180, 180)};
    REQUIRE(haversine_km(a, c) <=
            haversine_km(a, b) + haversine_km(b, c) + 1e-9);
  }
}

TEST_CASE("nearest_distance basics", "[geo]") {
  const GeoPoint listing{47.6, -122.3};
  REQUIRE(nearest_distance({listing}, {listing})[0] == 0.0);

  const auto d = nearest_distance({{0.0, 0.0}}, {{0.0, 1.0}, {0.0, 2.0}});
  REQUIRE(d[0] == Catch::Approx(kOneDegreeKm).margin(1e-3));

  REQUIRE_THROWS_AS(nearest_distance({listing}, {}), std::invalid_argument);
}

TEST_CASE("nearest_distance matches a plain double loop and is dominated by "
          "every offender",
          "[geo]") {
  hedonic::Rng rng(13);
  std::vector<GeoPoint> listings(200), offenders(50);
  for (auto& p : listings)
    p = {rng.uniform(47.0, 48.0), rng.uniform(-123.0, -122.0)};
  for (auto& p : offenders)
    p = {rng.uniform(47.0, 48.0), rng.uniform(-123.0, -122.0)};

  const auto result = nearest_distance(listings, offenders);
  for (std::size_t i = 0; i < listings.size(); ++i) {
    double expect = std::numeric_limits<double>::infinity();
    for (const auto& o : offenders)
      expect = std::min(expect, haversine_km(listings[i], o));
    REQUIRE(result[i] == expect);  // brute force is the contract, bit for bit
    for (const auto& o : offenders)
      REQUIRE(result[i] <= haversine_km(listings[i], o));
  }
}

TEST_CASE("offender coordinate file round trip", "[geo]") {
  const std::string path = "geo_points_test.csv";
  {
    std::ofstream out(path);
    out << "latitude,longitude\n47.61,-122.33\n47.70,-122.40\n";
  }
  const auto pts = hedonic::geo::read_points_csv(path);
  REQUIRE(pts.size() == 2);
  REQUIRE(pts[0].latitude == 47.61);
  REQUIRE(pts[1].longitude == -122.40);
  std::remove(path.c_str());

  {
    std::ofstream out(path);
    out << "lat,lon\n1,2\n";
  }
  REQUIRE_THROWS_WITH(hedonic::geo::read_points_csv(path),
                      Catch::Matchers::ContainsSubstring("latitude"));
  std::remove(path.c_str());

  {
    std::ofstream out(path);
    out << "latitude,longitude\n95.0,10.0\n";
  }
  REQUIRE_THROWS_WITH(hedonic::geo::read_points_csv(path),
                      Catch::Matchers::ContainsSubstring("out of range"));
  std::remove(path.c_str());
}
