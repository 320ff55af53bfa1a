#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ulrisk/csv.hpp"
#include "ulrisk/error.hpp"

namespace ulrisk {

struct VariableDescriptor {
  std::string name;
  std::string unit;
  bool derived = false;

  bool operator==(const VariableDescriptor&) const = default;
};

/// Ordered predictor list. Column order is part of the model contract: trees
/// refer to variables by index.
class FeatureSchema {
 public:
  FeatureSchema() = default;

  explicit FeatureSchema(std::vector<VariableDescriptor> variables) : variables_(std::move(variables)) {
    std::set<std::string> seen;
    for (const auto& v : variables_) {
      require(!v.name.empty(), ErrorKind::SchemaMismatch, "schema: empty variable name");
      require(seen.insert(v.name).second, ErrorKind::SchemaMismatch, "schema: duplicate variable '" + v.name + "'");
    }
  }

  std::size_t count() const { return variables_.size(); }
  const std::vector<VariableDescriptor>& variables() const { return variables_; }
  const VariableDescriptor& operator[](std::size_t i) const { return variables_.at(i); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(variables_.size());
    for (const auto& v : variables_) out.push_back(v.name);
    return out;
  }

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<VariableDescriptor> variables_;
};

inline constexpr std::string_view kCanonicalSchemaVersion = "era5-ul-35/v1";

/// The 35 ERA5 large-scale predictors (direct and derived) used for upward
/// lightning diagnosis. Indices are stable across versions of this resource.
inline const FeatureSchema& canonical_schema() {
  static const FeatureSchema schema({
      {"cloud_base_height", "m agl", false},
      {"convective_precipitation", "m", false},
      {"large_scale_precipitation", "m", false},
      {"cloud_size", "m", false},
      {"max_precipitation_rate", "kg m-2 s-1", false},
      {"ice_crystals_total_column", "kg m-2", false},
      {"solid_hydrometeors_total_column", "kg m-2", false},
      {"supercooled_liquid_water_total_column", "kg m-2", false},
      {"water_vapor_total_column", "kg m-2", false},
      {"frozen_water_flux_divergence", "kg m-2 s-1", false},
      {"liquid_transport_m10c", "kg Pa s-1", true},
      {"ice_crystals_m10_m20c", "kg m-2", true},
      {"ice_crystals_m20_m40c", "kg m-2", true},
      {"cloud_water_m10_m20c", "kg m-2", true},
      {"solid_hydrometeors_m10_m20c", "kg m-2", true},
      {"solid_hydrometeors_m20_m40c", "kg m-2", true},
      {"solids_m10c", "kg m-2", true},
      {"liquids_m10c", "kg m-2", true},
      {"dewpoint_2m", "K", false},
      {"moisture_convergence", "kg m-2 s-1", false},
      {"water_vapor_m10_m20c", "kg m-2", true},
      {"boundary_layer_height", "m", false},
      {"surface_latent_heat_flux", "J m-2", false},
      {"surface_sensible_heat_flux", "J m-2", false},
      {"surface_solar_radiation_downwards", "J m-2", false},
      {"cape", "J kg-1", false},
      {"cin_present", "binary", false},
      {"mean_sea_level_pressure", "Pa", false},
      {"isotherm_m10c_height", "m agl", true},
      {"boundary_layer_dissipation", "J m-2", false},
      {"max_updraft_velocity", "Pa s-1", true},
      {"total_cloud_shear", "m s-1", true},
      {"wind_speed_10m", "m s-1", true},
      {"wind_direction_10m", "deg", true},
      {"shear_10m_cloud_base", "m s-1", true},
  });
  return schema;
}

/// Schema CSV: header `name,unit,derived`, derived as 0/1.
inline std::string schema_to_csv(const FeatureSchema& schema) {
  std::string out = "name,unit,derived\n";
  for (const auto& v : schema.variables()) {
    out += csv::join({v.name, v.unit, v.derived ? "1" : "0"});
    out.push_back('\n');
  }
  return out;
}

inline FeatureSchema schema_from_table(const csv::Table& table, const std::string& source) {
  if (table.header != std::vector<std::string>{"name", "unit", "derived"}) {
    fail(ErrorKind::SchemaMismatch, source + ": schema header must be name,unit,derived");
  }
  std::vector<VariableDescriptor> vars;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row[2] != "0" && row[2] != "1") {
      fail(ErrorKind::BadValue, source + ":" + std::to_string(table.line_numbers[r]) + ": derived must be 0 or 1");
    }
    vars.push_back({row[0], row[1], row[2] == "1"});
  }
  if (vars.empty()) fail(ErrorKind::EmptyFile, source + ": schema has no variables");
  return FeatureSchema(std::move(vars));
}

inline FeatureSchema load_schema(const std::filesystem::path& path) {
  return schema_from_table(csv::read_file(path), path.string());
}

}  // namespace ulrisk
