#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ulrisk/csv.hpp"
#include "ulrisk/ensemble.hpp"
#include "ulrisk/geospatial.hpp"
#include "ulrisk/parallel.hpp"
#include "ulrisk/timeutil.hpp"

namespace ulrisk {

/// Median ensemble probability per cell for one hour (cells row-major).
struct ProbRaster {
  GridSpec spec;
  Hour time{};
  std::vector<double> median_prob;
  std::vector<std::uint8_t> no_turbine;  // empty unless masked

  bool operator==(const ProbRaster&) const = default;
};

/// Hours per cell whose median probability exceeds `threshold`.
struct RiskMap {
  GridSpec spec;
  double threshold = 0.5;
  std::uint64_t hours_total = 0;
  std::vector<std::uint32_t> exceedance_count;
  std::vector<double> relative_proportion;
  std::vector<std::uint8_t> no_turbine;  // empty unless masked

  void validate() const {
    require(hours_total > 0, ErrorKind::InvariantViolation, "risk map: hours_total must be positive");
    require(exceedance_count.size() == spec.cell_count() && relative_proportion.size() == spec.cell_count(),
            ErrorKind::InvariantViolation, "risk map: shape differs from spec");
    for (std::size_t c = 0; c < exceedance_count.size(); ++c) {
      require(exceedance_count[c] <= hours_total, ErrorKind::InvariantViolation, "risk map: count exceeds hours_total");
    }
  }

  bool operator==(const RiskMap&) const = default;
};

enum class CellPoint { Center, LowerLeftNode };

struct DiagnoseOptions {
  CellPoint point = CellPoint::Center;
  unsigned workers = 1;
};

/// Evaluates every ensemble member at each cell's representative point and
/// stores the median. Cells are independent work units.
inline ProbRaster diagnose_grid_hour(const EnsembleModel& ensemble, const GridFieldSet& fields, const GridSpec& spec,
                                     Hour t, const DiagnoseOptions& options = {}) {
  ensemble.validate();
  spec.validate();
  ProbRaster out{spec, t, std::vector<double>(spec.cell_count()), {}};
  // Fail early (and deterministically) on missing variables / hours.
  const double probe_lat = options.point == CellPoint::Center ? spec.cell_center_lat(0) : spec.node_lat(0);
  const double probe_lon = options.point == CellPoint::Center ? spec.cell_center_lon(0) : spec.node_lon(0);
  (void)interp_to_point(fields, ensemble.schema(), probe_lat, probe_lon, Minute(t));
  parallel_for(spec.cell_count(), options.workers, [&](std::size_t c) {
    const std::size_t row = c / spec.lon_cells(), col = c % spec.lon_cells();
    const double lat = options.point == CellPoint::Center ? spec.cell_center_lat(row) : spec.node_lat(row);
    const double lon = options.point == CellPoint::Center ? spec.cell_center_lon(col) : spec.node_lon(col);
    const auto x = interp_to_point(fields, ensemble.schema(), lat, lon, Minute(t));
    out.median_prob[c] = predict_median(ensemble, x);
  });
  return out;
}

/// Strict exceedance: a cell counts an hour when median_prob > threshold.
inline RiskMap exceedance_counts(std::span<const ProbRaster> rasters, double threshold) {
  require(threshold > 0.0 && threshold < 1.0, ErrorKind::ConfigInvalid, "exceedance: threshold must lie in (0,1)");
  require(!rasters.empty(), ErrorKind::InvariantViolation, "exceedance: no rasters");
  const auto& spec = rasters.front().spec;
  RiskMap map{spec, threshold, rasters.size(), std::vector<std::uint32_t>(spec.cell_count(), 0), {}, {}};
  for (const auto& r : rasters) {
    require(r.spec == spec && r.median_prob.size() == spec.cell_count(), ErrorKind::SpecMismatch,
            "exceedance: rasters on different grids");
    for (std::size_t c = 0; c < spec.cell_count(); ++c) map.exceedance_count[c] += r.median_prob[c] > threshold ? 1 : 0;
  }
  map.relative_proportion.resize(spec.cell_count());
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    map.relative_proportion[c] = static_cast<double>(map.exceedance_count[c]) / static_cast<double>(map.hours_total);
  }
  return map;
}

/// Flags cells holding no turbine; numeric content is left untouched.
template <typename Raster>
Raster mask_no_turbine_cells(Raster raster, const TurbineSet& turbines) {
  const auto counts = turbines_per_cell(turbines, raster.spec);
  raster.no_turbine.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) raster.no_turbine[c] = counts[c] == 0 ? 1 : 0;
  return raster;
}

/// Every UTC hour of the days in [first, last] whose month is in `months`.
inline std::vector<Hour> season_hours(Date first, Date last, const std::vector<unsigned>& months) {
  std::vector<Hour> out;
  for (Date d = first; d <= last; d += std::chrono::days(1)) {
    if (std::find(months.begin(), months.end(), month_of(d)) == months.end()) continue;
    for (int h = 0; h < 24; ++h) out.push_back(Hour(d) + std::chrono::hours(h));
  }
  return out;
}

/// Colder-season (October to April) hours from October 2018 through December 2020.
inline std::vector<Hour> canonical_cold_season_hours() {
  return season_hours(parse_date("2018-10-01"), parse_date("2020-12-31"), {10, 11, 12, 1, 2, 3, 4});
}

inline std::vector<Hour> parse_hour_list(const std::string& text) {
  std::vector<Hour> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find_first_of("\n,", pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    while (!item.empty() && (item.back() == '\r' || item.back() == ' ')) item.pop_back();
    while (!item.empty() && item.front() == ' ') item.erase(0, 1);
    if (!item.empty() && item.front() != '#' && item != "time") {
      const Minute m = parse_timestamp(item);
      require(m == Minute(hour_of(m)), ErrorKind::BadValue, "hour list: '" + item + "' is not a whole hour");
      out.push_back(hour_of(m));
    }
    pos = end + 1;
  }
  return out;
}

// ---- Exports ---------------------------------------------------------------

inline std::string rasters_to_csv(std::span<const ProbRaster> rasters) {
  std::string out = "time,row,col,cell_lat_min,cell_lon_min,median_prob\n";
  for (const auto& r : rasters) {
    const auto ts = format_hour(r.time);
    for (std::size_t c = 0; c < r.median_prob.size(); ++c) {
      const std::size_t row = c / r.spec.lon_cells(), col = c % r.spec.lon_cells();
      out += ts + "," + std::to_string(row) + "," + std::to_string(col) + "," + csv::format_double(r.spec.node_lat(row)) +
             "," + csv::format_double(r.spec.node_lon(col)) + "," + csv::format_double(r.median_prob[c]) + "\n";
    }
  }
  return out;
}

/// Inverse of rasters_to_csv for a known grid; every cell must be present per hour.
inline std::vector<ProbRaster> rasters_from_csv(const csv::Table& table, const GridSpec& spec, const std::string& source) {
  require(table.header == std::vector<std::string>{"time", "row", "col", "cell_lat_min", "cell_lon_min", "median_prob"},
          ErrorKind::SchemaMismatch, source + ": unexpected raster header");
  std::map<Hour, ProbRaster> by_hour;
  std::map<Hour, std::size_t> filled;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const std::string ctx = source + ":" + std::to_string(table.line_numbers[r]);
    const Hour h = hour_of(parse_timestamp(f[0]));
    const auto row = static_cast<std::size_t>(csv::parse_int(f[1], ctx));
    const auto col = static_cast<std::size_t>(csv::parse_int(f[2], ctx));
    require(row < spec.lat_cells() && col < spec.lon_cells(), ErrorKind::SpecMismatch, ctx + ": cell outside grid");
    const double p = csv::parse_finite(f[5], ctx);
    require(p >= 0.0 && p <= 1.0, ErrorKind::BadValue, ctx + ": probability outside [0,1]");
    auto& raster = by_hour[h];
    if (raster.median_prob.empty()) raster = ProbRaster{spec, h, std::vector<double>(spec.cell_count(), -1.0), {}};
    raster.median_prob[row * spec.lon_cells() + col] = p;
    ++filled[h];
  }
  std::vector<ProbRaster> out;
  for (auto& [h, raster] : by_hour) {
    require(filled[h] == spec.cell_count(), ErrorKind::BadValue, source + ": incomplete raster at " + format_hour(h));
    out.push_back(std::move(raster));
  }
  return out;
}

/// Header comment carries the grid and the map's scalars so the file
/// round-trips; rows are cell_lat_min,cell_lon_min,count,proportion.
inline std::string riskmap_to_csv(const RiskMap& map) {
  map.validate();
  std::string out = "# lat_min=" + csv::format_double(map.spec.lat_min) + " lat_max=" + csv::format_double(map.spec.lat_max) +
                    " lon_min=" + csv::format_double(map.spec.lon_min) + " lon_max=" + csv::format_double(map.spec.lon_max) +
                    " step=" + csv::format_double(map.spec.step) + " threshold=" + csv::format_double(map.threshold) +
                    " hours_total=" + std::to_string(map.hours_total) + "\n";
  const bool masked = !map.no_turbine.empty();
  out += masked ? "cell_lat_min,cell_lon_min,count,proportion,no_turbine\n" : "cell_lat_min,cell_lon_min,count,proportion\n";
  for (std::size_t c = 0; c < map.exceedance_count.size(); ++c) {
    const std::size_t row = c / map.spec.lon_cells(), col = c % map.spec.lon_cells();
    out += csv::format_double(map.spec.node_lat(row)) + "," + csv::format_double(map.spec.node_lon(col)) + "," +
           std::to_string(map.exceedance_count[c]) + "," + csv::format_double(map.relative_proportion[c]);
    if (masked) out += map.no_turbine[c] ? ",1" : ",0";
    out.push_back('\n');
  }
  return out;
}

inline RiskMap riskmap_from_csv(const std::string& text) {
  std::istringstream in(text);
  const auto table = csv::parse(in, "riskmap");
  require(!table.comments.empty(), ErrorKind::BadValue, "riskmap csv: missing metadata line");
  std::map<std::string, std::string> meta;
  std::istringstream ms(table.comments.front());
  for (std::string kv; ms >> kv;) {
    const auto eq = kv.find('=');
    if (eq != std::string::npos) meta[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  auto get = [&](const std::string& k) {
    require(meta.count(k) > 0, ErrorKind::BadValue, "riskmap csv: metadata lacks " + k);
    return meta[k];
  };
  RiskMap map;
  map.spec = {csv::parse_finite(get("lat_min"), "lat_min"), csv::parse_finite(get("lat_max"), "lat_max"),
              csv::parse_finite(get("lon_min"), "lon_min"), csv::parse_finite(get("lon_max"), "lon_max"),
              csv::parse_finite(get("step"), "step")};
  map.spec.validate();
  map.threshold = csv::parse_finite(get("threshold"), "threshold");
  map.hours_total = static_cast<std::uint64_t>(csv::parse_int(get("hours_total"), "hours_total"));
  const bool masked = table.header.size() == 5;
  require(table.rows.size() == map.spec.cell_count(), ErrorKind::SpecMismatch, "riskmap csv: row count differs from grid");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    map.exceedance_count.push_back(static_cast<std::uint32_t>(csv::parse_int(f[2], "count")));
    map.relative_proportion.push_back(csv::parse_finite(f[3], "proportion"));
    if (masked) map.no_turbine.push_back(f[4] == "1" ? 1 : 0);
  }
  map.validate();
  return map;
}

/// FeatureCollection of cell polygons (lon/lat order, counter-clockwise ring).
inline std::string riskmap_to_geojson(const RiskMap& map) {
  map.validate();
  using ojson = nlohmann::ordered_json;
  ojson features = ojson::array();
  const double s = map.spec.step;
  for (std::size_t c = 0; c < map.exceedance_count.size(); ++c) {
    const std::size_t row = c / map.spec.lon_cells(), col = c % map.spec.lon_cells();
    const double la = map.spec.node_lat(row), lo = map.spec.node_lon(col);
    ojson props = {{"row", row},
                   {"col", col},
                   {"cell_lat_min", la},
                   {"cell_lon_min", lo},
                   {"count", map.exceedance_count[c]},
                   {"proportion", map.relative_proportion[c]}};
    if (!map.no_turbine.empty()) props["no_turbine"] = map.no_turbine[c] != 0;
    ojson ring = ojson::array({ojson::array({lo, la}), ojson::array({lo + s, la}), ojson::array({lo + s, la + s}),
                               ojson::array({lo, la + s}), ojson::array({lo, la})});
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", ojson::array({ring})}}},
                        {"properties", props}});
  }
  const ojson doc = {{"type", "FeatureCollection"},
                     {"threshold", map.threshold},
                     {"hours_total", map.hours_total},
                     {"features", features}};
  return doc.dump() + "\n";
}

/// Plain-text digest: hours, threshold, busiest cell, domain mean proportion.
inline std::string riskmap_summary(const RiskMap& map) {
  map.validate();
  const auto max_it = std::max_element(map.exceedance_count.begin(), map.exceedance_count.end());
  const auto c = static_cast<std::size_t>(max_it - map.exceedance_count.begin());
  double mean = 0.0;
  for (double p : map.relative_proportion) mean += p;
  mean /= static_cast<double>(map.relative_proportion.size());
  std::size_t masked = 0;
  for (auto m : map.no_turbine) masked += m;
  std::string out = "threshold: " + csv::format_double(map.threshold) + "\n";
  out += "hours_total: " + std::to_string(map.hours_total) + "\n";
  out += "cells: " + std::to_string(map.spec.cell_count()) + " (" + std::to_string(map.spec.lat_cells()) + "x" +
         std::to_string(map.spec.lon_cells()) + ")\n";
  out += "max_cell: row=" + std::to_string(c / map.spec.lon_cells()) + " col=" + std::to_string(c % map.spec.lon_cells()) +
         " lat_min=" + csv::format_double(map.spec.node_lat(c / map.spec.lon_cells())) +
         " lon_min=" + csv::format_double(map.spec.node_lon(c % map.spec.lon_cells())) +
         " count=" + std::to_string(*max_it) + " proportion=" + csv::format_double(map.relative_proportion[c]) + "\n";
  out += "domain_mean_proportion: " + csv::format_double(mean) + "\n";
  if (!map.no_turbine.empty()) out += "cells_without_turbines: " + std::to_string(masked) + "\n";
  return out;
}

}  // namespace ulrisk
