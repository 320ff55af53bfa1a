#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "ulrisk/csv.hpp"
#include "ulrisk/error.hpp"
#include "ulrisk/schema.hpp"
#include "ulrisk/timeutil.hpp"

namespace ulrisk {

/// Regular lat/lon lattice. Nodes sit at lat_min + i*step; cells are the
/// squares between neighbouring nodes.
struct GridSpec {
  double lat_min = 50.0;
  double lat_max = 54.0;
  double lon_min = 6.0;
  double lon_max = 16.0;
  double step = 0.25;

  static GridSpec canonical() { return {}; }

  std::size_t lat_cells() const { return static_cast<std::size_t>(std::llround((lat_max - lat_min) / step)); }
  std::size_t lon_cells() const { return static_cast<std::size_t>(std::llround((lon_max - lon_min) / step)); }
  std::size_t lat_nodes() const { return lat_cells() + 1; }
  std::size_t lon_nodes() const { return lon_cells() + 1; }
  std::size_t cell_count() const { return lat_cells() * lon_cells(); }
  std::size_t node_count() const { return lat_nodes() * lon_nodes(); }

  double node_lat(std::size_t i) const { return lat_min + static_cast<double>(i) * step; }
  double node_lon(std::size_t j) const { return lon_min + static_cast<double>(j) * step; }
  double cell_center_lat(std::size_t row) const { return lat_min + (static_cast<double>(row) + 0.5) * step; }
  double cell_center_lon(std::size_t col) const { return lon_min + (static_cast<double>(col) + 0.5) * step; }

  void validate() const {
    auto multiple = [&](double span) {
      const double q = span / step;
      return q >= 1.0 - 1e-9 && std::fabs(q - std::round(q)) < 1e-9;
    };
    require(step > 0.0 && std::isfinite(step), ErrorKind::ConfigInvalid, "grid spec: step must be positive");
    require(multiple(lat_max - lat_min) && multiple(lon_max - lon_min), ErrorKind::ConfigInvalid,
            "grid spec: extents must be positive integer multiples of step");
  }

  bool operator==(const GridSpec&) const = default;
};

inline nlohmann::json to_json(const GridSpec& s) {
  return {{"lat_min", s.lat_min}, {"lat_max", s.lat_max}, {"lon_min", s.lon_min}, {"lon_max", s.lon_max}, {"step", s.step}};
}

inline GridSpec grid_spec_from_json(const nlohmann::json& j) {
  GridSpec s{j.at("lat_min").get<double>(), j.at("lat_max").get<double>(), j.at("lon_min").get<double>(),
             j.at("lon_max").get<double>(), j.at("step").get<double>()};
  s.validate();
  return s;
}

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const CellIndex&) const = default;
};

namespace detail {

/// Position in units of step, snapped to the nearest integer when within
/// rounding distance of a lattice line.
inline double lattice_coordinate(double value, double origin, double step) {
  const double q = (value - origin) / step;
  const double r = std::round(q);
  return std::fabs(q - r) < 1e-9 ? r : q;
}

}  // namespace detail

/// Cell containing (lat, lon). Interior cell edges belong to the higher-index
/// cell; the domain's upper edges belong to the last cell.
inline CellIndex cell_of(double lat, double lon, const GridSpec& spec) {
  const double qlat = detail::lattice_coordinate(lat, spec.lat_min, spec.step);
  const double qlon = detail::lattice_coordinate(lon, spec.lon_min, spec.step);
  const auto rows = static_cast<double>(spec.lat_cells());
  const auto cols = static_cast<double>(spec.lon_cells());
  if (!(qlat >= 0.0 && qlat <= rows && qlon >= 0.0 && qlon <= cols)) {
    fail(ErrorKind::OutOfDomain, "point (" + csv::format_double(lat) + ", " + csv::format_double(lon) + ") outside grid");
  }
  return {static_cast<std::size_t>(std::min(std::floor(qlat), rows - 1.0)),
          static_cast<std::size_t>(std::min(std::floor(qlon), cols - 1.0))};
}

inline bool in_domain(double lat, double lon, const GridSpec& spec) {
  const double qlat = detail::lattice_coordinate(lat, spec.lat_min, spec.step);
  const double qlon = detail::lattice_coordinate(lon, spec.lon_min, spec.step);
  return qlat >= 0.0 && qlat <= static_cast<double>(spec.lat_cells()) && qlon >= 0.0 &&
         qlon <= static_cast<double>(spec.lon_cells());
}

/// Bilinear interpolation of node values (lat-major, lat_nodes x lon_nodes).
inline double bilinear_interp(std::span<const double> nodes, const GridSpec& spec, double lat, double lon) {
  require(nodes.size() == spec.node_count(), ErrorKind::LengthMismatch, "bilinear_interp: slice size differs from spec");
  if (!in_domain(lat, lon, spec)) {
    fail(ErrorKind::OutOfDomain, "point (" + csv::format_double(lat) + ", " + csv::format_double(lon) + ") outside grid");
  }
  const double qlat = detail::lattice_coordinate(lat, spec.lat_min, spec.step);
  const double qlon = detail::lattice_coordinate(lon, spec.lon_min, spec.step);
  const auto i = static_cast<std::size_t>(std::min(std::floor(qlat), static_cast<double>(spec.lat_cells() - 1)));
  const auto j = static_cast<std::size_t>(std::min(std::floor(qlon), static_cast<double>(spec.lon_cells() - 1)));
  const double t = qlat - static_cast<double>(i);
  const double u = qlon - static_cast<double>(j);
  const std::size_t w = spec.lon_nodes();
  const double f00 = nodes[i * w + j], f01 = nodes[i * w + j + 1];
  const double f10 = nodes[(i + 1) * w + j], f11 = nodes[(i + 1) * w + j + 1];
  if (t == 0.0 && u == 0.0) return f00;
  return (1.0 - t) * ((1.0 - u) * f00 + u * f01) + t * ((1.0 - u) * f10 + u * f11);
}

/// Hourly node values of one variable.
struct GridField {
  GridSpec spec;
  std::string variable;
  std::vector<Hour> times;                  // strictly increasing
  std::vector<std::vector<double>> values;  // per time, lat-major nodes

  void validate() const {
    require(times.size() == values.size(), ErrorKind::LengthMismatch, "grid field " + variable + ": times/values mismatch");
    for (std::size_t k = 0; k < times.size(); ++k) {
      require(values[k].size() == spec.node_count(), ErrorKind::LengthMismatch,
              "grid field " + variable + ": slice shape differs from spec");
      require(k == 0 || times[k - 1] < times[k], ErrorKind::BadValue,
              "grid field " + variable + ": times not strictly increasing");
    }
  }

  bool operator==(const GridField&) const = default;
};

using GridFieldSet = std::map<std::string, GridField>;

/// Feature vector at (lat, lon, t) in schema order: bilinear in space at the
/// bracketing hours, then linear in time.
inline std::vector<double> interp_to_point(const GridFieldSet& fields, const FeatureSchema& schema, double lat,
                                           double lon, Minute t) {
  std::vector<double> out(schema.count());
  for (std::size_t v = 0; v < schema.count(); ++v) {
    const auto it = fields.find(schema[v].name);
    if (it == fields.end()) fail(ErrorKind::MissingVariable, "no grid field for '" + schema[v].name + "'");
    const auto& f = it->second;
    const Hour h = hour_of(t);
    const auto pos = std::lower_bound(f.times.begin(), f.times.end(), h);
    if (pos == f.times.end() || *pos != h) {
      fail(ErrorKind::OutOfTimeRange, schema[v].name + ": no data at " + format_hour(h));
    }
    const auto k = static_cast<std::size_t>(pos - f.times.begin());
    const double a = bilinear_interp(f.values[k], f.spec, lat, lon);
    const auto minutes = (t - Minute(h)).count();
    if (minutes == 0) {
      out[v] = a;
      continue;
    }
    if (k + 1 >= f.times.size() || f.times[k + 1] != h + std::chrono::hours(1)) {
      fail(ErrorKind::OutOfTimeRange, schema[v].name + ": no data at " + format_hour(h + std::chrono::hours(1)));
    }
    const double b = bilinear_interp(f.values[k + 1], f.spec, lat, lon);
    const double w = static_cast<double>(minutes) / 60.0;
    out[v] = (1.0 - w) * a + w * b;
  }
  return out;
}

struct Turbine {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const Turbine&) const = default;
};

struct TurbineSet {
  std::vector<Turbine> turbines;

  void validate() const {
    std::set<std::string> ids;
    for (const auto& t : turbines) {
      require(ids.insert(t.id).second, ErrorKind::BadValue, "turbines: duplicate id '" + t.id + "'");
      require(std::isfinite(t.lat) && std::isfinite(t.lon), ErrorKind::BadValue, "turbines: non-finite coordinate");
    }
  }
};

struct StrikeEvent {
  Minute timestamp{};
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const StrikeEvent&) const = default;
};

struct MatchedEvent {
  std::size_t strike_index = 0;
  StrikeEvent strike;
  std::string turbine_id;
  double distance_deg = 0.0;
  bool operator==(const MatchedEvent&) const = default;
};

enum class DistanceMode { Degrees, GreatCircle };

/// Degree-space Euclidean distance, or the great-circle central angle in degrees.
inline double distance_deg(double lat1, double lon1, double lat2, double lon2, DistanceMode mode) {
  if (mode == DistanceMode::Degrees) return std::hypot(lat1 - lat2, lon1 - lon2);
  constexpr double kRad = 3.14159265358979323846 / 180.0;
  const double s1 = std::sin((lat2 - lat1) * kRad / 2.0);
  const double s2 = std::sin((lon2 - lon1) * kRad / 2.0);
  const double a = s1 * s1 + std::cos(lat1 * kRad) * std::cos(lat2 * kRad) * s2 * s2;
  return 2.0 * std::asin(std::min(1.0, std::sqrt(a))) / kRad;
}

/// Relative slack on the inclusive radius test, so that points placed at the
/// radius in decimal degrees still match.
inline constexpr double kRadiusSlack = 1e-9;

/// Every (strike, turbine) pair within radius_deg, ordered by strike then
/// turbine id. Turbines are bucketed on a radius-sized lattice.
inline std::vector<MatchedEvent> match_strikes_to_turbines(std::span<const StrikeEvent> strikes,
                                                           const TurbineSet& turbines, double radius_deg = 0.003,
                                                           DistanceMode mode = DistanceMode::Degrees) {
  require(radius_deg > 0.0, ErrorKind::ConfigInvalid, "match: radius must be positive");
  const double limit = radius_deg * (1.0 + kRadiusSlack);
  auto key = [&](std::int64_t a, std::int64_t b) { return (a << 32) ^ (b & 0xffffffff); };
  auto bucket = [&](double v) { return static_cast<std::int64_t>(std::floor(v / radius_deg)); };
  std::unordered_map<std::int64_t, std::vector<std::size_t>> index;
  for (std::size_t t = 0; t < turbines.turbines.size(); ++t) {
    index[key(bucket(turbines.turbines[t].lat), bucket(turbines.turbines[t].lon))].push_back(t);
  }
  std::vector<MatchedEvent> out;
  std::vector<std::size_t> hits;
  for (std::size_t s = 0; s < strikes.size(); ++s) {
    const auto& st = strikes[s];
    std::int64_t lon_reach = 1;
    if (mode == DistanceMode::GreatCircle) {
      const double c = std::cos((std::fabs(st.lat) + limit) * 3.14159265358979323846 / 180.0);
      lon_reach = c > 1e-6 ? static_cast<std::int64_t>(std::ceil(1.0 / c)) + 1 : (std::int64_t{360} << 20);
    }
    const auto bl = bucket(st.lat), bo = bucket(st.lon);
    hits.clear();
    if (lon_reach > 1000) {
      for (std::size_t t = 0; t < turbines.turbines.size(); ++t) hits.push_back(t);
    } else {
      for (std::int64_t a = bl - 1; a <= bl + 1; ++a) {
        for (std::int64_t b = bo - lon_reach; b <= bo + lon_reach; ++b) {
          const auto it = index.find(key(a, b));
          if (it != index.end()) hits.insert(hits.end(), it->second.begin(), it->second.end());
        }
      }
    }
    std::vector<MatchedEvent> local;
    for (auto t : hits) {
      const auto& tb = turbines.turbines[t];
      const double d = distance_deg(st.lat, st.lon, tb.lat, tb.lon, mode);
      if (d <= limit) local.push_back({s, st, tb.id, d});
    }
    std::sort(local.begin(), local.end(),
              [](const MatchedEvent& a, const MatchedEvent& b) { return a.turbine_id < b.turbine_id; });
    out.insert(out.end(), local.begin(), local.end());
  }
  return out;
}

/// Per-cell integer raster, row-major (row = latitude band from the south).
struct CellCounts {
  GridSpec spec;
  std::vector<std::uint32_t> counts;

  std::uint32_t at(std::size_t row, std::size_t col) const { return counts[row * spec.lon_cells() + col]; }
  bool operator==(const CellCounts&) const = default;
};

/// Number of distinct UTC hours with at least one matched strike, per cell.
/// Strikes outside the domain are ignored.
inline CellCounts flash_hours_per_cell(std::span<const MatchedEvent> matches, const GridSpec& spec) {
  spec.validate();
  CellCounts out{spec, std::vector<std::uint32_t>(spec.cell_count(), 0)};
  std::set<std::pair<std::size_t, Hour>> seen;
  for (const auto& m : matches) {
    if (!in_domain(m.strike.lat, m.strike.lon, spec)) continue;
    const auto c = cell_of(m.strike.lat, m.strike.lon, spec);
    const std::size_t cell = c.row * spec.lon_cells() + c.col;
    if (seen.insert({cell, hour_of(m.strike.timestamp)}).second) ++out.counts[cell];
  }
  return out;
}

inline std::vector<std::uint32_t> turbines_per_cell(const TurbineSet& turbines, const GridSpec& spec) {
  std::vector<std::uint32_t> counts(spec.cell_count(), 0);
  for (const auto& t : turbines.turbines) {
    if (!in_domain(t.lat, t.lon, spec)) continue;
    const auto c = cell_of(t.lat, t.lon, spec);
    ++counts[c.row * spec.lon_cells() + c.col];
  }
  return counts;
}

// ---- CSV formats -----------------------------------------------------------

inline TurbineSet load_turbines(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  require(table.header == std::vector<std::string>{"id", "lat", "lon"}, ErrorKind::SchemaMismatch,
          path.string() + ": turbine header must be id,lat,lon");
  TurbineSet set;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string ctx = path.string() + ":" + std::to_string(table.line_numbers[r]);
    set.turbines.push_back({table.rows[r][0], csv::parse_finite(table.rows[r][1], ctx), csv::parse_finite(table.rows[r][2], ctx)});
  }
  set.validate();
  return set;
}

inline std::string turbines_to_csv(const TurbineSet& set) {
  std::string out = "id,lat,lon\n";
  for (const auto& t : set.turbines) {
    out += csv::quote(t.id) + "," + csv::format_double(t.lat) + "," + csv::format_double(t.lon) + "\n";
  }
  return out;
}

inline std::vector<StrikeEvent> load_strikes(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  require(table.header == std::vector<std::string>{"timestamp", "lat", "lon"}, ErrorKind::SchemaMismatch,
          path.string() + ": strike header must be timestamp,lat,lon");
  std::vector<StrikeEvent> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string ctx = path.string() + ":" + std::to_string(table.line_numbers[r]);
    out.push_back({parse_timestamp(table.rows[r][0]), csv::parse_finite(table.rows[r][1], ctx),
                   csv::parse_finite(table.rows[r][2], ctx)});
  }
  return out;
}

inline std::string strikes_to_csv(std::span<const StrikeEvent> strikes) {
  std::string out = "timestamp,lat,lon\n";
  for (const auto& s : strikes) {
    out += format_timestamp(s.timestamp) + "," + csv::format_double(s.lat) + "," + csv::format_double(s.lon) + "\n";
  }
  return out;
}

inline std::string matches_to_csv(std::span<const MatchedEvent> matches) {
  std::string out = "strike_index,timestamp,lat,lon,turbine_id,distance_deg\n";
  for (const auto& m : matches) {
    out += std::to_string(m.strike_index) + "," + format_timestamp(m.strike.timestamp) + "," +
           csv::format_double(m.strike.lat) + "," + csv::format_double(m.strike.lon) + "," + csv::quote(m.turbine_id) +
           "," + csv::format_double(m.distance_deg) + "\n";
  }
  return out;
}

inline std::string cell_counts_to_csv(const CellCounts& c, const std::string& column = "flash_hours") {
  std::string out = "row,col,cell_lat_min,cell_lon_min," + column + "\n";
  for (std::size_t r = 0; r < c.spec.lat_cells(); ++r) {
    for (std::size_t k = 0; k < c.spec.lon_cells(); ++k) {
      out += std::to_string(r) + "," + std::to_string(k) + "," + csv::format_double(c.spec.node_lat(r)) + "," +
             csv::format_double(c.spec.node_lon(k)) + "," + std::to_string(c.at(r, k)) + "\n";
    }
  }
  return out;
}

// ---- Gridded field directories ---------------------------------------------
//
// <dir>/grid.json holds the GridSpec. Each variable is either
//   <name>.csv   long format: time,lat,lon,value (every node at every time), or
//   <name>.bin + <name>.json   float64 little-endian, time-major then lat then
//                              lon, with the sidecar listing the hours.

enum class GridFormat { Csv, Binary };

namespace detail {

inline void put_f64_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

inline GridField load_field_csv(const std::filesystem::path& path, const GridSpec& spec, const std::string& name) {
  const auto table = csv::read_file(path);
  require(table.header == std::vector<std::string>{"time", "lat", "lon", "value"}, ErrorKind::SchemaMismatch,
          path.string() + ": header must be time,lat,lon,value");
  std::map<Hour, std::vector<double>> slices;
  std::map<Hour, std::size_t> filled;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const std::string ctx = path.string() + ":" + std::to_string(table.line_numbers[r]);
    const Minute t = parse_timestamp(f[0]);
    require(t == Minute(hour_of(t)), ErrorKind::BadValue, ctx + ": time is not on a whole hour");
    const double qi = lattice_coordinate(csv::parse_finite(f[1], ctx), spec.lat_min, spec.step);
    const double qj = lattice_coordinate(csv::parse_finite(f[2], ctx), spec.lon_min, spec.step);
    require(qi == std::round(qi) && qj == std::round(qj) && qi >= 0 && qj >= 0 &&
                qi < static_cast<double>(spec.lat_nodes()) && qj < static_cast<double>(spec.lon_nodes()),
            ErrorKind::OutOfDomain, ctx + ": point is not a grid node");
    auto& slice = slices[hour_of(t)];
    if (slice.empty()) slice.assign(spec.node_count(), std::numeric_limits<double>::quiet_NaN());
    auto& cell = slice[static_cast<std::size_t>(qi) * spec.lon_nodes() + static_cast<std::size_t>(qj)];
    require(std::isnan(cell), ErrorKind::BadValue, ctx + ": duplicate node");
    cell = csv::parse_finite(f[3], ctx);
    ++filled[hour_of(t)];
  }
  GridField field{spec, name, {}, {}};
  for (auto& [h, slice] : slices) {
    require(filled[h] == spec.node_count(), ErrorKind::BadValue,
            path.string() + ": incomplete grid at " + format_hour(h));
    field.times.push_back(h);
    field.values.push_back(std::move(slice));
  }
  return field;
}

inline GridField load_field_binary(const std::filesystem::path& dir, const GridSpec& spec, const std::string& name) {
  GridField field{spec, name, {}, {}};
  try {
    const auto side = nlohmann::json::parse(csv::read_text(dir / (name + ".json")));
    require(side.at("dtype") == "float64-le", ErrorKind::BadValue, name + ".json: unsupported dtype");
    require(grid_spec_from_json(side.at("spec")) == spec, ErrorKind::SpecMismatch, name + ".json: spec differs from grid.json");
    for (const auto& t : side.at("times")) field.times.push_back(hour_of(parse_timestamp(t.get<std::string>())));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadValue, name + ".json: " + e.what());
  }
  const std::string raw = csv::read_text(dir / (name + ".bin"));
  const std::size_t per = spec.node_count();
  require(raw.size() == field.times.size() * per * 8, ErrorKind::BadValue, name + ".bin: size does not match sidecar");
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    std::vector<double> slice(per);
    for (std::size_t i = 0; i < per; ++i) {
      slice[i] = get_f64_le(p + 8 * (k * per + i));
      require(std::isfinite(slice[i]), ErrorKind::BadValue, name + ".bin: non-finite value");
    }
    field.values.push_back(std::move(slice));
  }
  return field;
}

}  // namespace detail

inline GridSpec load_grid_spec(const std::filesystem::path& dir) {
  try {
    return grid_spec_from_json(nlohmann::json::parse(csv::read_text(dir / "grid.json")));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadValue, (dir / "grid.json").string() + ": " + e.what());
  }
}

/// Loads every schema variable present in `dir`; absent variables are simply
/// missing from the set (interp_to_point reports them).
inline GridFieldSet load_grid_fields(const std::filesystem::path& dir, const FeatureSchema& schema) {
  const auto spec = load_grid_spec(dir);
  GridFieldSet fields;
  for (const auto& v : schema.variables()) {
    GridField f;
    if (std::filesystem::exists(dir / (v.name + ".json"))) {
      f = detail::load_field_binary(dir, spec, v.name);
    } else if (std::filesystem::exists(dir / (v.name + ".csv"))) {
      f = detail::load_field_csv(dir / (v.name + ".csv"), spec, v.name);
    } else {
      continue;
    }
    f.validate();
    fields.emplace(v.name, std::move(f));
  }
  return fields;
}

inline void save_grid_fields(const std::filesystem::path& dir, const GridFieldSet& fields, GridFormat format) {
  require(!fields.empty(), ErrorKind::ConfigInvalid, "save_grid_fields: nothing to write");
  const auto& spec = fields.begin()->second.spec;
  std::filesystem::create_directories(dir);
  csv::write_file(dir / "grid.json", to_json(spec).dump(2) + "\n");
  for (const auto& [name, f] : fields) {
    require(f.spec == spec, ErrorKind::SpecMismatch, "save_grid_fields: fields on different grids");
    if (format == GridFormat::Csv) {
      std::string out = "time,lat,lon,value\n";
      for (std::size_t k = 0; k < f.times.size(); ++k) {
        const auto ts = format_hour(f.times[k]);
        for (std::size_t i = 0; i < spec.lat_nodes(); ++i) {
          for (std::size_t j = 0; j < spec.lon_nodes(); ++j) {
            out += ts + "," + csv::format_double(spec.node_lat(i)) + "," + csv::format_double(spec.node_lon(j)) + "," +
                   csv::format_double(f.values[k][i * spec.lon_nodes() + j]) + "\n";
          }
        }
      }
      csv::write_file(dir / (name + ".csv"), out);
    } else {
      std::string raw;
      raw.reserve(f.times.size() * spec.node_count() * 8);
      for (const auto& slice : f.values) {
        for (double v : slice) detail::put_f64_le(raw, v);
      }
      nlohmann::json times = nlohmann::json::array();
      for (auto h : f.times) times.push_back(format_hour(h));
      const nlohmann::json side = {{"variable", name}, {"dtype", "float64-le"}, {"layout", {"time", "lat", "lon"}},
                                   {"spec", to_json(spec)}, {"times", times}};
      csv::write_file(dir / (name + ".bin"), raw);
      csv::write_file(dir / (name + ".json"), side.dump(2) + "\n");
    }
  }
}

}  // namespace ulrisk
