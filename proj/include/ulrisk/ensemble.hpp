#pragma once

#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ulrisk/ciforest.hpp"
#include "ulrisk/stats.hpp"

namespace ulrisk {

/// Collection of forests sharing one schema, each trained on its own balanced
/// negative draw. Diagnoses are the median over members.
struct EnsembleModel {
  std::vector<ForestModel> models;

  const FeatureSchema& schema() const { return models.front().schema; }

  void validate() const {
    require(!models.empty(), ErrorKind::InvariantViolation, "ensemble: no models");
    for (const auto& m : models) {
      require(m.schema == models.front().schema, ErrorKind::SchemaMismatch, "ensemble: members disagree on schema");
    }
  }

  bool operator==(const EnsembleModel&) const = default;
};

inline double predict_median(const EnsembleModel& ensemble, std::span<const double> x) {
  std::vector<double> probs;
  probs.reserve(ensemble.models.size());
  for (const auto& m : ensemble.models) probs.push_back(predict_forest(m, x));
  return stats::median(std::move(probs));
}

inline std::string member_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "model_%03zu", i);
  return buf;
}

/// <dir>/ensemble.json plus one bundle directory per member.
inline void save_ensemble(const std::filesystem::path& dir, const EnsembleModel& ensemble) {
  ensemble.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t i = 0; i < ensemble.models.size(); ++i) {
    save_forest(dir / member_dir_name(i), ensemble.models[i]);
    members.push_back(member_dir_name(i));
  }
  const nlohmann::json index = {{"models", ensemble.models.size()}, {"members", members}};
  csv::write_file(dir / "ensemble.json", index.dump(2) + "\n");
}

/// Loads an ensemble directory, or a single model bundle as a one-member ensemble.
inline EnsembleModel load_ensemble(const std::filesystem::path& dir) {
  EnsembleModel ensemble;
  if (std::filesystem::exists(dir / "trees.jsonl")) {
    ensemble.models.push_back(load_forest(dir));
    return ensemble;
  }
  if (!std::filesystem::exists(dir / "ensemble.json")) {
    fail(ErrorKind::IoFailure, dir.string() + ": neither an ensemble nor a model bundle");
  }
  try {
    const auto index = nlohmann::json::parse(csv::read_text(dir / "ensemble.json"));
    for (const auto& member : index.at("members")) ensemble.models.push_back(load_forest(dir / member.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadValue, dir.string() + "/ensemble.json: " + e.what());
  }
  ensemble.validate();
  return ensemble;
}

}  // namespace ulrisk
