#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ulrisk/citree.hpp"
#include "ulrisk/csv.hpp"
#include "ulrisk/dataset.hpp"
#include "ulrisk/parallel.hpp"
#include "ulrisk/rng.hpp"
#include "ulrisk/stats.hpp"

namespace ulrisk {

struct ForestParams {
  std::size_t n_trees = 500;
  double subsample_fraction = 2.0 / 3.0;
  TreeParams tree_params{};
  std::uint64_t seed = 1;

  void validate(std::size_t n_variables) const {
    require(n_trees >= 1, ErrorKind::ConfigInvalid, "forest params: n_trees must be >= 1");
    require(subsample_fraction > 0.0 && subsample_fraction <= 1.0, ErrorKind::ConfigInvalid,
            "forest params: subsample_fraction must lie in (0,1]");
    tree_params.validate(n_variables);
  }

  /// Rows drawn (without replacement) for each tree from n training rows.
  std::size_t in_bag_size(std::size_t n) const {
    return static_cast<std::size_t>(std::floor(subsample_fraction * static_cast<double>(n) + 1e-9));
  }

  bool operator==(const ForestParams&) const = default;
};

struct ForestTree {
  Tree tree;
  std::vector<std::uint32_t> in_bag;  // ascending training-row indices

  bool operator==(const ForestTree&) const = default;
};

struct ForestModel {
  FeatureSchema schema;
  ForestParams params;
  std::size_t n_training_rows = 0;
  std::vector<ForestTree> trees;

  /// Training rows not drawn for tree t.
  std::vector<std::uint32_t> out_of_bag(std::size_t t) const {
    std::vector<std::uint32_t> out;
    const auto& bag = trees.at(t).in_bag;
    std::size_t k = 0;
    for (std::uint32_t i = 0; i < n_training_rows; ++i) {
      if (k < bag.size() && bag[k] == i) {
        ++k;
      } else {
        out.push_back(i);
      }
    }
    return out;
  }

  bool operator==(const ForestModel&) const = default;
};

/// Each tree t is grown on its own without-replacement subsample, drawing from
/// Rng(seed).substream(t); the model is therefore identical for any `workers`.
inline ForestModel fit_forest(const Dataset& data, const ForestParams& params, unsigned workers = 1) {
  params.validate(data.schema().count());
  require(data.size() >= params.tree_params.min_split, ErrorKind::TooFewRows,
          "fit_forest: " + std::to_string(data.size()) + " rows, min_split is " +
              std::to_string(params.tree_params.min_split));
  const std::size_t bag = params.in_bag_size(data.size());
  require(bag >= 1, ErrorKind::TooFewRows, "fit_forest: subsample is empty");

  const TrainingData td(data);
  ForestModel model{data.schema(), params, data.size(), std::vector<ForestTree>(params.n_trees)};
  const Rng root(params.seed);
  parallel_for(params.n_trees, workers, [&](std::size_t t) {
    Rng rng = root.substream(t);
    const auto rows = rng.sample_without_replacement(data.size(), bag);
    auto& out = model.trees[t];
    out.tree = grow_tree(td, rows, params.tree_params, rng);
    out.in_bag.assign(rows.begin(), rows.end());
  });
  return model;
}

namespace detail {

/// Mean of per-tree predictions, summed in ascending order so the result does
/// not depend on tree order.
inline double mean_sorted(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace detail

inline double predict_forest(const ForestModel& model, std::span<const double> x) {
  require(x.size() == model.schema.count(), ErrorKind::LengthMismatch,
          "predict_forest: got " + std::to_string(x.size()) + " features, schema has " +
              std::to_string(model.schema.count()));
  std::vector<double> leaf(model.trees.size());
  for (std::size_t t = 0; t < model.trees.size(); ++t) leaf[t] = predict_tree(model.trees[t].tree, x);
  return detail::mean_sorted(leaf);
}

inline std::vector<double> predict_forest(const ForestModel& model, const Dataset& data) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict_forest(model, data[i].features);
  return out;
}

enum class ImportanceMetric { Accuracy, Auc };

constexpr std::string_view to_string(ImportanceMetric m) {
  return m == ImportanceMetric::Accuracy ? "accuracy" : "auc";
}

inline stats::Score score(ImportanceMetric metric, std::span<const double> probs, std::span<const std::uint8_t> labels) {
  return metric == ImportanceMetric::Accuracy ? stats::accuracy(probs, labels, 0.5) : stats::auc(probs, labels);
}

/// Drop in forest-level metric when one column of `eval` is shuffled, averaged
/// over n_repeats fresh shuffles. Variable j draws from rng.substream(j).
inline std::vector<double> permutation_importance(const ForestModel& model, const Dataset& eval,
                                                  ImportanceMetric metric, std::size_t n_repeats, const Rng& rng,
                                                  unsigned workers = 1) {
  require(eval.schema() == model.schema, ErrorKind::SchemaMismatch, "permutation_importance: schema mismatch");
  const std::size_t pos = eval.positives();
  require(pos > 0 && pos < eval.size(), ErrorKind::SingleClassEval,
          "permutation_importance: evaluation set must contain both classes");
  require(n_repeats >= 1, ErrorKind::ConfigInvalid, "permutation_importance: n_repeats must be >= 1");

  const std::size_t n = eval.size();
  const std::size_t p = model.schema.count();
  const std::size_t n_trees = model.trees.size();
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = eval[i].ul ? 1 : 0;

  // Baseline leaf values per (row, tree); a shuffled column only changes trees
  // that split on it.
  std::vector<double> leaf(n * n_trees);
  std::vector<double> base_probs(n);
  std::vector<double> scratch(n_trees);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < n_trees; ++t) {
      leaf[i * n_trees + t] = predict_tree(model.trees[t].tree, eval[i].features);
      scratch[t] = leaf[i * n_trees + t];
    }
    base_probs[i] = detail::mean_sorted(scratch);
  }
  const auto baseline = score(metric, base_probs, labels);

  std::vector<std::vector<std::size_t>> trees_using(p);
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::vector<bool> used(p, false);
    for (const auto& node : model.trees[t].tree.nodes) {
      if (!node.is_leaf()) used[static_cast<std::size_t>(node.variable)] = true;
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (used[j]) trees_using[j].push_back(t);
    }
  }

  std::vector<double> importance(p, 0.0);
  parallel_for(p, workers, [&](std::size_t j) {
    if (trees_using[j].empty()) return;
    Rng local = rng.substream(j);
    std::vector<std::size_t> perm(n);
    std::vector<double> probs(n), values(n_trees), x;
    std::int64_t permuted_total = 0;
    for (std::size_t r = 0; r < n_repeats; ++r) {
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      local.shuffle(perm);
      for (std::size_t i = 0; i < n; ++i) {
        x = eval[i].features;
        x[j] = eval[perm[i]].features[j];
        std::copy_n(leaf.begin() + static_cast<std::ptrdiff_t>(i * n_trees), n_trees, values.begin());
        for (auto t : trees_using[j]) values[t] = predict_tree(model.trees[t].tree, x);
        probs[i] = detail::mean_sorted(values);
      }
      permuted_total += score(metric, probs, labels).numerator;
    }
    const auto repeats = static_cast<std::int64_t>(n_repeats);
    importance[j] = static_cast<double>(repeats * baseline.numerator - permuted_total) /
                    static_cast<double>(repeats * baseline.denominator);
  });
  return importance;
}

struct ImportanceEntry {
  std::string name;
  double median_importance = 0.0;
  std::vector<double> per_model;
};

struct ImportanceReport {
  std::vector<ImportanceEntry> entries;  // schema order
};

/// Per-variable median across models; model m evaluates on evals[m] with
/// rng.substream(m).
inline ImportanceReport median_importance(std::span<const ForestModel> models, std::span<const Dataset> evals,
                                          ImportanceMetric metric, std::size_t n_repeats, const Rng& rng,
                                          unsigned workers = 1) {
  require(!models.empty(), ErrorKind::ConfigInvalid, "median_importance: no models");
  require(evals.size() == models.size() || evals.size() == 1, ErrorKind::LengthMismatch,
          "median_importance: need one evaluation set per model (or a shared one)");
  const auto& schema = models.front().schema;
  std::vector<std::vector<double>> per_model(models.size());
  parallel_for(models.size(), workers, [&](std::size_t m) {
    per_model[m] = permutation_importance(models[m], evals[evals.size() == 1 ? 0 : m], metric, n_repeats,
                                          rng.substream(m), 1);
  });
  ImportanceReport report;
  for (std::size_t j = 0; j < schema.count(); ++j) {
    ImportanceEntry e{schema[j].name, 0.0, {}};
    for (const auto& v : per_model) e.per_model.push_back(v[j]);
    e.median_importance = stats::median(e.per_model);
    report.entries.push_back(std::move(e));
  }
  return report;
}

inline std::string importance_to_csv(const ImportanceReport& report) {
  std::string out = "variable,median";
  const std::size_t models = report.entries.empty() ? 0 : report.entries.front().per_model.size();
  for (std::size_t m = 0; m < models; ++m) out += ",model_" + std::to_string(m);
  out.push_back('\n');
  for (const auto& e : report.entries) {
    out += csv::quote(e.name) + "," + csv::format_double(e.median_importance);
    for (double v : e.per_model) out += "," + csv::format_double(v);
    out.push_back('\n');
  }
  return out;
}

// Model bundle: <dir>/params.json, <dir>/schema.csv, <dir>/trees.jsonl.

inline nlohmann::json params_to_json(const ForestParams& p, std::size_t n_training_rows) {
  return {{"n_trees", p.n_trees},
          {"subsample_fraction", p.subsample_fraction},
          {"seed", p.seed},
          {"alpha", p.tree_params.alpha},
          {"min_split", p.tree_params.min_split},
          {"min_bucket", p.tree_params.min_bucket},
          {"mtry", p.tree_params.mtry},
          {"max_permutation_n", p.tree_params.max_permutation_n},
          {"n_training_rows", n_training_rows}};
}

inline std::string trees_to_jsonl(const ForestModel& model) {
  std::string out;
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const nlohmann::json line = {{"index", t},
                                 {"in_bag", model.trees[t].in_bag},
                                 {"tree", tree_to_json(model.trees[t].tree, model.schema)}};
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

inline void save_forest(const std::filesystem::path& dir, const ForestModel& model) {
  std::filesystem::create_directories(dir);
  csv::write_file(dir / "params.json", params_to_json(model.params, model.n_training_rows).dump(2) + "\n");
  csv::write_file(dir / "schema.csv", schema_to_csv(model.schema));
  csv::write_file(dir / "trees.jsonl", trees_to_jsonl(model));
}

inline ForestModel load_forest(const std::filesystem::path& dir) {
  ForestModel model;
  model.schema = load_schema(dir / "schema.csv");
  try {
    const auto j = nlohmann::json::parse(csv::read_text(dir / "params.json"));
    model.params.n_trees = j.at("n_trees").get<std::size_t>();
    model.params.subsample_fraction = j.at("subsample_fraction").get<double>();
    model.params.seed = j.at("seed").get<std::uint64_t>();
    model.params.tree_params.alpha = j.at("alpha").get<double>();
    model.params.tree_params.min_split = j.at("min_split").get<std::size_t>();
    model.params.tree_params.min_bucket = j.at("min_bucket").get<std::size_t>();
    model.params.tree_params.mtry = j.at("mtry").get<std::size_t>();
    model.params.tree_params.max_permutation_n = j.at("max_permutation_n").get<std::size_t>();
    model.n_training_rows = j.at("n_training_rows").get<std::size_t>();

    std::ifstream in(dir / "trees.jsonl", std::ios::binary);
    if (!in) fail(ErrorKind::IoFailure, "cannot open " + (dir / "trees.jsonl").string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto jl = nlohmann::json::parse(line);
      ForestTree ft;
      ft.in_bag = jl.at("in_bag").get<std::vector<std::uint32_t>>();
      ft.tree = tree_from_json(jl.at("tree"), model.schema);
      model.trees.push_back(std::move(ft));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadValue, "model bundle " + dir.string() + ": " + e.what());
  }
  require(model.trees.size() == model.params.n_trees, ErrorKind::BadValue,
          "model bundle " + dir.string() + ": tree count differs from params");
  return model;
}

}  // namespace ulrisk
