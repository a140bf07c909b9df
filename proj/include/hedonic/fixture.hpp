#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hedonic/geo.hpp"
#include "hedonic/numeric.hpp"

namespace hedonic::fixture {

// Synthetic "city" standing in for the unavailable listing snapshots. The
// log-price ground truth is additive with deliberately non-polynomial pieces
// in latitude, longitude, indoors and year (multi-period sinusoids and a log
// curve), linear effects elsewhere, and Gaussian noise; see truth_description()
// for the exact functions. Everything is a pure function of the seed.
struct FixtureConfig {
  int n = 2000;
  std::uint64_t seed = 42;
  int n_offenders = 50;
  double lat_min = 47.50, lat_max = 47.75;
  double lon_min = -122.45, lon_max = -122.25;
  double noise_sd = 0.14;
};

inline std::vector<std::string> truth_description() {
  return {
      "ln(price) = 12.05",
      " + 0.50*u_lat + 0.20*sin(4.4*pi*u_lat)   (u_lat = scaled latitude)",
      " + 0.40*u_lon + 0.11*sin(2.6*pi*u_lon)   (u_lon = scaled longitude)",
      " + 0.52*ln(indoors/1000)",
      " + 0.12*cos(2*pi*(year-1890)/60)",
      " + 0.018*beds + 0.045*baths",
      " + 0.012*ln(1 + lot/1000)",
      " - 0.0006*min(days, 300)",
      " - 0.00006*hoa",
      " + dwelling offset: SingleFamily 0, MultiFamily +0.06, Townhouse "
      "-0.04, Condo -0.10",
      " + 0.34*waterfront + 0.01*accessible + 0.09*green + 0.06*air_cond",
      " + 0.05*min(distance_km, 2.5)",
      " - Uniform(1.0, 1.8) with probability 0.01 (distressed sale)",
      " + Normal(0, noise_sd) noise"};
}

inline std::vector<geo::GeoPoint> make_offenders(const FixtureConfig& cfg) {
  Rng rng(cfg.seed + 1);
  std::vector<geo::GeoPoint> pts(cfg.n_offenders);
  for (auto& p : pts) {
    p.latitude = rng.uniform(cfg.lat_min, cfg.lat_max);
    p.longitude = rng.uniform(cfg.lon_min, cfg.lon_max);
  }
  return pts;
}

struct FixtureRow {
  std::string dwelling;
  int beds = 0;
  double baths = 0.0;
  int indoors = 0;
  int lot = 0;             // 0 = no lot (condo), written as empty cell
  int year = 0;
  int days = 0;
  int hoa = 0;
  bool hoa_missing = false;  // written as empty cell
  double latitude = 0.0, longitude = 0.0;
  bool waterfront = false, accessible = false, green = false, air_cond = false;
  long long price = 0;
};

inline std::vector<FixtureRow> make_rows(const FixtureConfig& cfg) {
  Rng rng(cfg.seed);
  const auto offenders = make_offenders(cfg);

  std::vector<FixtureRow> rows(cfg.n);
  for (auto& row : rows) {
    const double du = rng.uniform();
    row.dwelling = du < 0.45   ? "SingleFamily"
                   : du < 0.75 ? "Condo"
                   : du < 0.90 ? "Townhouse"
                               : "MultiFamily";
    const bool condo = row.dwelling == "Condo";

    row.beds = condo ? 1 + static_cast<int>(rng.uniform_int(0, 2))
                     : 2 + static_cast<int>(rng.uniform_int(0, 3));
    row.baths = 1.0 + 0.5 * static_cast<double>(rng.uniform_int(0, 5));
    const double ind_base = condo ? 700.0 : 1600.0;
    row.indoors = static_cast<int>(std::clamp(
        ind_base * std::exp(rng.normal(0.0, condo ? 0.45 : 0.42)), 320.0,
        9000.0));
    row.lot = condo ? 0
                    : static_cast<int>(std::clamp(
                          4000.0 * std::exp(rng.normal(0.0, 0.8)), 300.0,
                          90000.0));
    row.year = 1890 + static_cast<int>(rng.uniform_int(0, 132));
    row.days = static_cast<int>(
        std::clamp(40.0 * std::exp(rng.normal(0.0, 0.9)), 0.0, 500.0));
    if (condo) {
      row.hoa = 150 + static_cast<int>(rng.uniform_int(0, 900));
    } else if (rng.bernoulli(0.75)) {
      row.hoa = 0;
      row.hoa_missing = rng.bernoulli(0.5);
    } else {
      row.hoa = 20 + static_cast<int>(rng.uniform_int(0, 80));
    }
    row.latitude = rng.uniform(cfg.lat_min, cfg.lat_max);
    row.longitude = rng.uniform(cfg.lon_min, cfg.lon_max);
    row.waterfront = rng.bernoulli(0.04);
    row.accessible = rng.bernoulli(0.12);
    row.green = rng.bernoulli(0.18);
    row.air_cond = rng.bernoulli(0.55);

    const double u_lat =
        (row.latitude - cfg.lat_min) / (cfg.lat_max - cfg.lat_min);
    const double u_lon =
        (row.longitude - cfg.lon_min) / (cfg.lon_max - cfg.lon_min);
    const geo::GeoPoint here{row.latitude, row.longitude};
    double dist = geo::haversine_km(here, offenders[0]);
    for (const auto& o : offenders)
      dist = std::min(dist, geo::haversine_km(here, o));

    double lnp = 12.05;
    lnp += 0.50 * u_lat + 0.20 * std::sin(4.4 * M_PI * u_lat);
    lnp += 0.40 * u_lon + 0.11 * std::sin(2.6 * M_PI * u_lon);
    lnp += 0.52 * std::log(row.indoors / 1000.0);
    lnp += 0.12 * std::cos(2.0 * M_PI * (row.year - 1890) / 60.0);
    lnp += 0.018 * row.beds + 0.045 * row.baths;
    lnp += 0.012 * std::log(1.0 + row.lot / 1000.0);
    lnp -= 0.0006 * std::min(row.days, 300);
    lnp -= 0.00006 * row.hoa;
    if (row.dwelling == "MultiFamily") lnp += 0.06;
    if (row.dwelling == "Townhouse") lnp -= 0.04;
    if (row.dwelling == "Condo") lnp -= 0.10;
    if (row.waterfront) lnp += 0.34;
    if (row.accessible) lnp += 0.01;
    if (row.green) lnp += 0.09;
    if (row.air_cond) lnp += 0.06;
    lnp += 0.05 * std::min(dist, 2.5);
    if (rng.bernoulli(0.01)) lnp -= 1.0 + 0.8 * rng.uniform();  // distressed
    lnp += rng.normal(0.0, cfg.noise_sd);

    row.price = static_cast<long long>(std::llround(std::exp(lnp)));
  }
  return rows;
}

inline void write_city_csv(const std::string& path, const FixtureConfig& cfg) {
  const auto rows = make_rows(cfg);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write fixture " + path);
  out << "price,dwelling,beds,baths,indoors,lot,year,days,hoa,latitude,"
         "longitude,waterfront,accessible,green,air_cond\n";
  for (const auto& r : rows) {
    out << r.price << ',' << r.dwelling << ',' << r.beds << ',';
    out << std::fixed << std::setprecision(1) << r.baths << ',';
    out << r.indoors << ',';
    if (r.lot > 0) out << r.lot;
    out << ',' << r.year << ',' << r.days << ',';
    if (!r.hoa_missing) out << r.hoa;
    out << ',' << std::setprecision(10) << r.latitude << ','
        << r.longitude << ',';
    out << (r.waterfront ? 1 : 0) << ',' << (r.accessible ? 1 : 0) << ','
        << (r.green ? 1 : 0) << ',' << (r.air_cond ? 1 : 0) << "\n";
    out.unsetf(std::ios_base::floatfield);
  }
}

inline void write_offenders_csv(const std::string& path,
                                const FixtureConfig& cfg) {
  const auto pts = make_offenders(cfg);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write fixture " + path);
  out << "latitude,longitude\n";
  out << std::fixed << std::setprecision(10);
  for (const auto& p : pts) out << p.latitude << ',' << p.longitude << "\n";
}

}  // namespace hedonic::fixture
