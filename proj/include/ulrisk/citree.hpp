#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ulrisk/dataset.hpp"
#include "ulrisk/error.hpp"
#include "ulrisk/parallel.hpp"
#include "ulrisk/rng.hpp"
#include "ulrisk/stats.hpp"
#include "json.hpp"

namespace ulrisk {

struct TreeParams {
  double alpha = 0.05;
  std::size_t min_split = 20;
  std::size_t min_bucket = 7;
  std::size_t mtry = 6;
  std::size_t max_permutation_n = 8;

  void validate(std::size_t n_variables) const {
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::ConfigInvalid, "tree params: alpha must lie in (0,1)");
    require(min_bucket >= 1, ErrorKind::ConfigInvalid, "tree params: min_bucket must be >= 1");
    require(min_split >= 2 * min_bucket, ErrorKind::ConfigInvalid, "tree params: min_split must be >= 2*min_bucket");
    require(mtry >= 1 && mtry <= n_variables, ErrorKind::ConfigInvalid,
            "tree params: mtry must lie in [1, " + std::to_string(n_variables) + "]");
  }

  bool operator==(const TreeParams&) const = default;
};

/// Column-major copy of a Dataset's features plus 0/1 labels; the layout tree
/// growth and prediction sweeps work on.
class TrainingData {
 public:
  TrainingData() = default;

  explicit TrainingData(const Dataset& data) : n_(data.size()), p_(data.schema().count()) {
    columns_.resize(n_ * p_);
    labels_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& row = data[i];
      for (std::size_t j = 0; j < p_; ++j) columns_[j * n_ + i] = row.features[j];
      labels_[i] = row.ul ? 1 : 0;
    }
  }

  TrainingData(std::size_t n_rows, std::size_t n_vars, std::vector<double> column_major, std::vector<std::uint8_t> labels)
      : n_(n_rows), p_(n_vars), columns_(std::move(column_major)), labels_(std::move(labels)) {
    require(columns_.size() == n_ * p_ && labels_.size() == n_, ErrorKind::LengthMismatch,
            "training data: inconsistent shape");
  }

  std::size_t rows() const { return n_; }
  std::size_t variables() const { return p_; }
  std::span<const double> column(std::size_t j) const { return {columns_.data() + j * n_, n_}; }
  std::span<const std::uint8_t> labels() const { return labels_; }

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> columns_;
  std::vector<std::uint8_t> labels_;
};

struct AssociationResult {
  double statistic = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

namespace detail {

struct CenteredInput {
  std::vector<double> centered;  // g_i - mean(g)
  double deviation = 0.0;        // T - mu, summed in index order
  double tolerance = 0.0;        // absolute slack for |T_perm - mu| >= |T - mu|
  std::size_t positives = 0;
  bool constant_g = false;
};

inline CenteredInput center(std::span<const double> g, std::span<const std::uint8_t> h) {
  require(g.size() == h.size(), ErrorKind::LengthMismatch,
          "association: g has " + std::to_string(g.size()) + " values, h has " + std::to_string(h.size()));
  require(g.size() >= 2, ErrorKind::LengthMismatch, "association: need n >= 2");
  CenteredInput c;
  const auto n = static_cast<double>(g.size());
  double sum = 0.0;
  for (double v : g) sum += v;
  const double mean = sum / n;
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  c.constant_g = *lo == *hi;
  c.centered.resize(g.size());
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    c.centered[i] = c.constant_g ? 0.0 : g[i] - mean;
    abs_sum += std::fabs(c.centered[i]);
    require(h[i] <= 1, ErrorKind::BadValue, "association: h must be binary");
    if (h[i]) {
      c.deviation += c.centered[i];
      ++c.positives;
    }
  }
  c.tolerance = 1e-9 * abs_sum + 1e-300;
  return c;
}

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

}  // namespace detail

/// Permutation-conditional moments of T = sum g_i h_i with a numeric predictor
/// g and a 0/1 response h, and the two-sided normal approximation.
inline AssociationResult linear_association(std::span<const double> g, std::span<const std::uint8_t> h) {
  const auto c = detail::center(g, h);
  const auto n = static_cast<double>(g.size());
  const auto k = static_cast<double>(c.positives);
  AssociationResult r;
  double sum_g = 0.0, sum_gg = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sum_g += g[i];
    if (h[i]) r.statistic += g[i];
    sum_gg += c.centered[i] * c.centered[i];
  }
  r.mean = sum_g * k / n;
  r.variance = sum_gg * (k * (n - k) / n) / (n - 1.0);
  if (r.variance > 0.0) {
    r.z = c.deviation / std::sqrt(r.variance);
    r.p_value = stats::normal_two_sided_p(r.z);
  }
  return r;
}

/// Exact two-sided permutation p-value. Because h is binary, the n!
/// permutations collapse onto the C(n,k) placements of the k ones, each with
/// multiplicity k!(n-k)!; the p-value is the fraction of placements whose
/// statistic is at least as extreme as the observed one.
inline double p_value_exact(std::span<const double> g, std::span<const std::uint8_t> h,
                            std::size_t max_permutation_n = 8) {
  require(g.size() <= max_permutation_n, ErrorKind::TooLarge,
          "exact p-value: n = " + std::to_string(g.size()) + " exceeds limit " + std::to_string(max_permutation_n));
  const auto c = detail::center(g, h);
  const std::size_t n = g.size();
  const std::size_t k = c.positives;
  const double observed = std::fabs(c.deviation);

  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  std::uint64_t extreme = 0;
  while (true) {
    double dev = 0.0;
    for (auto i : pick) dev += c.centered[i];
    if (std::fabs(dev) >= observed - c.tolerance) ++extreme;
    // next k-combination in lexicographic order
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return static_cast<double>(extreme) / detail::binomial(n, k);
}

/// Monte-Carlo permutation p-value, (1 + #extreme) / (B + 1). Permutations are
/// drawn in fixed blocks, each from its own substream, so the result does not
/// depend on `workers`.
inline double p_value_montecarlo(std::span<const double> g, std::span<const std::uint8_t> h, std::size_t permutations,
                                 std::uint64_t seed, unsigned workers = 1) {
  require(permutations >= 1000, ErrorKind::ConfigInvalid, "monte-carlo p-value: need B >= 1000");
  const auto c = detail::center(g, h);
  const double observed = std::fabs(c.deviation);
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (permutations + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> counts(blocks, 0);
  const Rng root(seed);
  std::vector<std::uint8_t> base(h.begin(), h.end());
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng = root.substream(b);
    std::vector<std::uint8_t> perm = base;
    const std::size_t todo = std::min(kBlock, permutations - b * kBlock);
    std::uint64_t hits = 0;
    for (std::size_t r = 0; r < todo; ++r) {
      rng.shuffle(perm);
      double dev = 0.0;
      for (std::size_t i = 0; i < perm.size(); ++i) {
        if (perm[i]) dev += c.centered[i];
      }
      if (std::fabs(dev) >= observed - c.tolerance) ++hits;
    }
    counts[b] = hits;
  });
  std::uint64_t total = 0;
  for (auto v : counts) total += v;
  return (1.0 + static_cast<double>(total)) / (static_cast<double>(permutations) + 1.0);
}

struct SplitVariable {
  std::size_t variable = 0;
  double p_adjusted = 1.0;
  double z = 0.0;
};

/// Bonferroni-adjusted variable selection over `candidates`. Candidates are
/// ranked by |z| (equivalent to ranking by p, but immune to underflow of p at
/// strong associations); ties go to the smaller schema index. Returns nullopt
/// when the best adjusted p-value exceeds alpha.
inline std::optional<SplitVariable> select_split_variable(const TrainingData& data, std::span<const std::size_t> rows,
                                                          std::span<const std::size_t> candidates, double alpha) {
  require(!candidates.empty(), ErrorKind::ConfigInvalid, "select_split_variable: no candidates");
  std::vector<double> g(rows.size());
  std::vector<std::uint8_t> h(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) h[i] = data.labels()[rows[i]];
  std::optional<SplitVariable> best;
  double best_abs_z = -1.0;
  double best_p = 1.0;
  for (auto j : candidates) {
    const auto col = data.column(j);
    for (std::size_t i = 0; i < rows.size(); ++i) g[i] = col[rows[i]];
    const auto assoc = linear_association(g, h);
    const double abs_z = std::fabs(assoc.z);
    if (abs_z > best_abs_z || (abs_z == best_abs_z && best && j < best->variable)) {
      best_abs_z = abs_z;
      best_p = assoc.p_value;
      best = SplitVariable{j, 1.0, assoc.z};
    }
  }
  best->p_adjusted = std::min(1.0, static_cast<double>(candidates.size()) * best_p);
  if (best->p_adjusted > alpha) return std::nullopt;
  return best;
}

namespace detail {

/// Cut maximizing the standardized two-sample statistic; nullopt if no cut
/// leaves min_bucket rows on each side.
inline std::optional<double> best_cut(std::span<const double> x, std::span<const std::uint8_t> y, std::size_t min_bucket) {
  require(x.size() == y.size(), ErrorKind::LengthMismatch, "best_split_point: length mismatch");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::int64_t k = 0;
  for (auto v : y) k += v;
  const auto nn = static_cast<std::int64_t>(n);
  // z^2 = (n T - n_L k)^2 (n-1) / (n_L (n-n_L) k (n-k)); evaluated from integer
  // parts so that swapping the classes yields bit-identical scores.
  std::optional<double> cut;
  double best = -1.0;
  std::int64_t left_pos = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    left_pos += y[order[i]];
    const double a = x[order[i]];
    const double b = x[order[i + 1]];
    const auto n_left = static_cast<std::int64_t>(i + 1);
    if (!(a < b) || static_cast<std::size_t>(n_left) < min_bucket || n - (i + 1) < min_bucket) continue;
    double score = 0.0;
    if (k > 0 && k < nn) {
      const auto num = static_cast<double>(nn * left_pos - n_left * k);
      score = num * num * static_cast<double>(nn - 1) /
              (static_cast<double>(n_left * (nn - n_left)) * static_cast<double>(k * (nn - k)));
    }
    if (score > best) {
      best = score;
      double mid = a + (b - a) / 2.0;
      if (!(mid < b)) mid = a;
      cut = mid;
    }
  }
  return cut;
}

}  // namespace detail

/// Split point for a chosen predictor: midpoints between consecutive distinct
/// values, restricted to cuts with at least min_bucket rows per side; maximizes
/// |z| of the indicator(x <= cut) statistic, smallest cut on ties.
inline double best_split_point(std::span<const double> x, std::span<const std::uint8_t> y, std::size_t min_bucket) {
  auto cut = detail::best_cut(x, y, min_bucket);
  if (!cut) fail(ErrorKind::NoFeasibleSplit, "best_split_point: no cut satisfies min_bucket on both sides");
  return *cut;
}

struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t variable = kLeaf;
  double cut = 0.0;
  double p_adjusted = 1.0;
  std::uint32_t candidates = 0;  // predictors tested at this split
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint64_t n = 0;
  std::uint64_t positives = 0;
  double positive_fraction = 0.0;

  bool is_leaf() const { return variable == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

/// Flat pre-order node array; nodes[0] is the root.
struct Tree {
  std::size_t n_features = 0;
  std::vector<TreeNode> nodes;

  bool operator==(const Tree&) const = default;
};

namespace detail {

struct TreeGrower {
  const TrainingData& data;
  const TreeParams& params;
  Rng& rng;
  Tree& tree;

  std::int32_t grow(std::vector<std::size_t>& rows) {
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode node;
    node.n = rows.size();
    for (auto r : rows) node.positives += data.labels()[r];
    node.positive_fraction = node.n ? static_cast<double>(node.positives) / static_cast<double>(node.n) : 0.0;

    const bool pure = node.positives == 0 || node.positives == node.n;
    if (rows.size() < params.min_split || pure) {
      tree.nodes[index] = node;
      return index;
    }
    const auto candidates = rng.sample_without_replacement(data.variables(), params.mtry);
    const auto choice = select_split_variable(data, rows, candidates, params.alpha);
    if (!choice) {
      tree.nodes[index] = node;
      return index;
    }
    const auto col = data.column(choice->variable);
    std::vector<double> x(rows.size());
    std::vector<std::uint8_t> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x[i] = col[rows[i]];
      y[i] = data.labels()[rows[i]];
    }
    const auto cut = best_cut(x, y, params.min_bucket);
    if (!cut) {
      tree.nodes[index] = node;
      return index;
    }
    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : rows) (col[r] <= *cut ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    node.variable = static_cast<std::int32_t>(choice->variable);
    node.cut = *cut;
    node.p_adjusted = choice->p_adjusted;
    node.candidates = static_cast<std::uint32_t>(candidates.size());
    node.left = grow(left_rows);
    node.right = grow(right_rows);
    tree.nodes[index] = node;
    return index;
  }
};

}  // namespace detail

/// Grows a conditional-inference tree on `rows` of `data`. Stops at nodes
/// smaller than min_split, pure nodes, and nodes where no candidate reaches
/// adjusted significance alpha. A fresh mtry-subset is drawn per split.
inline Tree grow_tree(const TrainingData& data, std::span<const std::size_t> rows, const TreeParams& params, Rng& rng) {
  require(!rows.empty(), ErrorKind::TooFewRows, "grow_tree: no rows");
  params.validate(data.variables());
  Tree tree;
  tree.n_features = data.variables();
  std::vector<std::size_t> root(rows.begin(), rows.end());
  detail::TreeGrower{data, params, rng, tree}.grow(root);
  return tree;
}

inline Tree grow_tree(const Dataset& data, const TreeParams& params, Rng& rng) {
  const TrainingData td(data);
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return grow_tree(td, rows, params, rng);
}

/// Index of the leaf reached by x; left iff x[variable] <= cut.
inline std::size_t route(const Tree& tree, std::span<const double> x) {
  std::size_t i = 0;
  while (!tree.nodes[i].is_leaf()) {
    const auto& node = tree.nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.variable)] <= node.cut ? node.left : node.right);
  }
  return i;
}

inline double predict_tree(const Tree& tree, std::span<const double> x) {
  require(x.size() == tree.n_features, ErrorKind::LengthMismatch,
          "predict_tree: got " + std::to_string(x.size()) + " features, tree expects " + std::to_string(tree.n_features));
  return tree.nodes[route(tree, x)].positive_fraction;
}

// JSON form: {"n_features", "nodes": [...]}, nodes in pre-order; internal nodes
// carry the variable name alongside the index.
inline nlohmann::json tree_to_json(const Tree& tree, const FeatureSchema& schema) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::json j;
    if (n.is_leaf()) {
      j = {{"kind", "leaf"}, {"n", n.n}, {"positives", n.positives}, {"positive_fraction", n.positive_fraction}};
    } else {
      j = {{"kind", "internal"},
           {"variable", n.variable},
           {"name", schema[static_cast<std::size_t>(n.variable)].name},
           {"cut", n.cut},
           {"p_adjusted", n.p_adjusted},
           {"candidates", n.candidates},
           {"n", n.n},
           {"positives", n.positives},
           {"left", n.left},
           {"right", n.right}};
    }
    nodes.push_back(std::move(j));
  }
  return {{"n_features", tree.n_features}, {"nodes", std::move(nodes)}};
}

inline Tree tree_from_json(const nlohmann::json& j, const FeatureSchema& schema) {
  try {
    Tree tree;
    tree.n_features = j.at("n_features").get<std::size_t>();
    require(tree.n_features == schema.count(), ErrorKind::SchemaMismatch, "tree: feature count differs from schema");
    const auto& nodes = j.at("nodes");
    require(!nodes.empty(), ErrorKind::BadValue, "tree: no nodes");
    for (const auto& jn : nodes) {
      TreeNode n;
      n.n = jn.at("n").get<std::uint64_t>();
      n.positives = jn.at("positives").get<std::uint64_t>();
      if (jn.at("kind") == "leaf") {
        n.positive_fraction = jn.at("positive_fraction").get<double>();
      } else {
        n.variable = jn.at("variable").get<std::int32_t>();
        require(n.variable >= 0 && static_cast<std::size_t>(n.variable) < schema.count() &&
                    schema[static_cast<std::size_t>(n.variable)].name == jn.at("name").get<std::string>(),
                ErrorKind::SchemaMismatch, "tree: split variable does not match schema");
        n.cut = jn.at("cut").get<double>();
        n.p_adjusted = jn.at("p_adjusted").get<double>();
        n.candidates = jn.at("candidates").get<std::uint32_t>();
        n.left = jn.at("left").get<std::int32_t>();
        n.right = jn.at("right").get<std::int32_t>();
        n.positive_fraction = n.n ? static_cast<double>(n.positives) / static_cast<double>(n.n) : 0.0;
      }
      tree.nodes.push_back(n);
    }
    const auto count = static_cast<std::int32_t>(tree.nodes.size());
    for (std::int32_t i = 0; i < count; ++i) {
      const auto& n = tree.nodes[static_cast<std::size_t>(i)];
      if (!n.is_leaf()) {
        require(n.left > i && n.left < count && n.right > i && n.right < count, ErrorKind::BadValue,
                "tree: child index out of range");
      }
    }
    return tree;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadValue, std::string("tree: malformed JSON: ") + e.what());
  }
}

}  // namespace ulrisk
