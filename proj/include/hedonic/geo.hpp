#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hedonic/csv.hpp"

namespace hedonic::geo {

// IUGG mean Earth radius.
inline constexpr double kEarthRadiusKm = 6371.0088;

struct GeoPoint {
  double latitude = 0.0;   // degrees, [-90, 90]
  double longitude = 0.0;  // degrees, [-180, 180]

  bool valid() const {
    return std::isfinite(latitude) && std::isfinite(longitude) &&
           latitude >= -90.0 && latitude <= 90.0 && longitude >= -180.0 &&
           longitude <= 180.0;
  }
};

inline double deg2rad(double deg) { return deg * (M_PI / 180.0); }

// Great-circle distance on the mean-radius sphere, in kilometers.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg2rad(a.latitude);
  const double phi2 = deg2rad(b.latitude);
  const double dphi = deg2rad(b.latitude - a.latitude);
  const double dlam = deg2rad(b.longitude - a.longitude);
  const double sp = std::sin(dphi * 0.5);
  const double sl = std::sin(dlam * 0.5);
  double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

// Element i is the distance from listings[i] to its closest offender.
// Deliberately brute force: O(n*m) is the contract that any accelerated
// variant has to reproduce exactly.
inline std::vector<double> nearest_distance(
    const std::vector<GeoPoint>& listings,
    const std::vector<GeoPoint>& offenders) {
  if (offenders.empty())
    throw std::invalid_argument(
        "nearest_distance: offender list is empty; Distance factor cannot be "
        "computed");
  std::vector<double> out(listings.size());
  for (std::size_t i = 0; i < listings.size(); ++i) {
    double best = haversine_km(listings[i], offenders[0]);
    for (std::size_t j = 1; j < offenders.size(); ++j) {
      const double d = haversine_km(listings[i], offenders[j]);
      if (d < best) best = d;
    }
    out[i] = best;
  }
  return out;
}

// Coordinate file: CSV with header `latitude,longitude`.
inline std::vector<GeoPoint> read_points_csv(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  const int lat_col = table.column("latitude");
  const int lon_col = table.column("longitude");
  if (lat_col < 0 || lon_col < 0)
    throw std::runtime_error(
        "coordinate file must have 'latitude,longitude' header: " + path);
  std::vector<GeoPoint> pts;
  pts.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto lat = csv::parse_double(row[lat_col]);
    const auto lon = csv::parse_double(row[lon_col]);
    if (!lat || !lon)
      throw std::runtime_error("coordinate file row " + std::to_string(r + 2) +
                               ": unparseable latitude/longitude");
    GeoPoint p{*lat, *lon};
    if (!p.valid())
      throw std::runtime_error("coordinate file row " + std::to_string(r + 2) +
                               ": coordinates out of range");
    pts.push_back(p);
  }
  return pts;
}

}  // namespace hedonic::geo
