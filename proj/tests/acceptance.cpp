// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "ulrisk/ulrisk.hpp"

using namespace ulrisk;
namespace chr = std::chrono;

namespace {

struct Check {
  bool pass = true;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "!") + what);
  }
};

class Stopwatch {
 public:
  double seconds() const { return chr::duration<double>(chr::steady_clock::now() - start_).count(); }

 private:
  chr::steady_clock::time_point start_ = chr::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

int failures = 0;

void report(int id, const std::string& title, const Check& c) {
  std::string joined;
  for (const auto& n : c.notes) joined += (joined.empty() ? "" : "; ") + n;
  std::printf("%s %d %s: %s\n", c.pass ? "PASS" : "FAIL", id, title.c_str(), joined.c_str());
  std::fflush(stdout);
  failures += c.pass ? 0 : 1;
}

template <typename F>
void run_criterion(int id, const std::string& title, F&& body) {
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  report(id, title, c);
}

SynthConfig logistic_config(std::size_t rows, std::uint64_t seed) {
  SynthConfig cfg = SynthConfig::with_signal(3, 2.0);
  cfg.n_rows = rows;
  cfg.seed = seed;
  return cfg;
}

Dataset no_ul_rows(const Dataset& d) {
  return d.filter([](const Sample& s) { return !s.ul; });
}

Dataset ul_rows(const Dataset& d) {
  return d.filter([](const Sample& s) { return s.ul; });
}

void exact_permutation_oracle(Check& c) {
  const Stopwatch clock;
  const Rng root(101);
  std::size_t exact_mismatch = 0;
  double worst_mc = 0.0;
  for (std::uint64_t pair = 0; pair < 200; ++pair) {
    Rng rng = root.substream(pair);
    const std::size_t n = 3 + rng.uniform_index(5);
    std::vector<double> g(n);
    std::vector<std::uint8_t> h(n);
    for (auto& v : g) v = pair % 2 == 0 ? rng.normal() : std::round(2.0 * rng.normal()) / 2.0;
    for (auto& v : h) v = rng.bernoulli(0.5) ? 1 : 0;
    const double exact = p_value_exact(g, h);
    if (exact != testing::brute_force_exact_p(g, h)) ++exact_mismatch;
    const double mc = p_value_montecarlo(g, h, 100000, 7000 + pair);
    worst_mc = std::max(worst_mc, std::fabs(mc - exact));
  }
  const double secs = clock.seconds();
  c.expect(exact_mismatch == 0, "exact vs n! enumeration mismatches=" + std::to_string(exact_mismatch) + "/200");
  c.expect(worst_mc <= 0.02, "max |MC(B=1e5) - exact|=" + fmt(worst_mc));
  c.expect(secs < 60.0, "runtime=" + fmt(secs, 3) + "s");
}

void asymptotic_calibration(Check& c) {
  const Rng root(202);
  const std::size_t n = 200;
  std::vector<double> p(1000);
  std::vector<double> g(n);
  std::vector<std::uint8_t> h(n);
  for (std::size_t r = 0; r < p.size(); ++r) {
    Rng rng = root.substream(r);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = rng.normal();
      h[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    p[r] = linear_association(g, h).p_value;
  }
  const double ks = stats::ks_uniform_statistic(p);
  c.expect(ks < 0.05, "KS(n=200, 1000 reps)=" + fmt(ks));

  const std::size_t reps = 2000, k = 10;
  std::vector<std::size_t> candidates(k);
  std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  const auto rows = testing::all_rows(n);
  const Rng fw_root(203);
  std::size_t splits = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = fw_root.substream(r);
    std::vector<double> cols(n * k);
    std::vector<std::uint8_t> labels(n);
    for (auto& v : cols) v = rng.normal();
    for (auto& l : labels) l = rng.bernoulli(0.5) ? 1 : 0;
    const TrainingData data(n, k, cols, labels);
    splits += select_split_variable(data, rows, candidates, 0.05).has_value() ? 1 : 0;
  }
  const double rate = static_cast<double>(splits) / static_cast<double>(reps);
  c.expect(rate <= 0.07, "family-wise false-split rate (10 noise, alpha 0.05)=" + fmt(rate));
}

void structural_constants(Check& c) {
  const ForestParams canonical;
  c.expect(canonical.n_trees == 500 && canonical.tree_params.mtry == 6 && canonical.tree_params.alpha == 0.05 &&
               canonical.tree_params.min_split == 20 && canonical.tree_params.min_bucket == 7,
           "default params 500 trees, mtry 6, alpha 0.05, min_split 20, min_bucket 7");
  const auto data = generate_tower_dataset(logistic_config(301, 31)).data;
  const auto model = fit_forest(data, canonical);
  bool bags_ok = true, candidates_ok = true;
  for (const auto& t : model.trees) {
    bags_ok = bags_ok && t.in_bag.size() == 200;
    for (const auto& node : t.tree.nodes) candidates_ok = candidates_ok && (node.is_leaf() || node.candidates <= 6);
  }
  c.expect(model.trees.size() == 500, "trees=" + std::to_string(model.trees.size()));
  c.expect(bags_ok, "in-bag size floor(2*301/3)=200 for every tree");
  c.expect(candidates_ok, "<= 6 candidates per split");

  SynthConfig cfg = logistic_config(1200, 32);
  cfg.n_event_days = 406;
  cfg.intercept = -1.0;
  const auto days = generate_tower_dataset(cfg).data;
  ForestParams quick;
  quick.n_trees = 3;
  const auto folds = loocv_by_day(days, no_ul_rows(days), quick, Rng(33));
  std::size_t models = 0;
  for (const auto& f : folds) models += f.model.trees.size() == 3 ? 1 : 0;
  c.expect(days.event_days().size() == 406 && folds.size() == 406 && models == 406,
           "406-event-day LOOCV models=" + std::to_string(models));

  const Date start = parse_date("2000-05-01");
  DateSet gaisberg, saentis;
  for (int i = 0; i < 247; ++i) gaisberg.insert(start + chr::days(i * 3));
  for (int i = 0; i < 27; ++i) saentis.insert(start + chr::days(i * 3));
  for (int i = 0; saentis.size() < 186; ++i) saentis.insert(start + chr::days(1 + i * 3));
  const auto merged = merge_event_days(gaisberg, saentis);
  c.expect(merged.size() == 406, "merge 247 + 186 with 27 shared days=" + std::to_string(merged.size()));
}

void signal_recovery(Check& c) {
  const Stopwatch clock;
  const int runs = 100;
  int top3 = 0;
  std::vector<double> aucs, gaps;
  for (int run = 0; run < runs; ++run) {
    const auto s = static_cast<std::uint64_t>(run);
    const auto train = generate_tower_dataset(logistic_config(2000, 1000 + s)).data;
    const auto test = generate_tower_dataset(logistic_config(2000, 5000 + s)).data;
    ForestParams fp;
    fp.n_trees = 50;
    fp.seed = 9000 + s;
    const auto model = fit_forest(train, fp);
    const auto probs = predict_forest(model, test);
    std::vector<std::uint8_t> labels;
    std::vector<double> tp, fp_probs;
    for (std::size_t i = 0; i < test.size(); ++i) {
      labels.push_back(test[i].ul ? 1 : 0);
      (test[i].ul ? tp : fp_probs).push_back(probs[i]);
    }
    aucs.push_back(stats::auc(probs, labels).value());
    gaps.push_back(stats::median(tp) - stats::median(fp_probs));
    const auto imp = permutation_importance(model, test, ImportanceMetric::Auc, 1, Rng(s));
    const double weakest_signal = std::min({imp[0], imp[1], imp[2]});
    const double strongest_noise = *std::max_element(imp.begin() + 3, imp.end());
    top3 += weakest_signal > strongest_noise ? 1 : 0;
  }
  const double secs = clock.seconds();
  const double min_auc = *std::min_element(aucs.begin(), aucs.end());
  const double max_gap = *std::max_element(gaps.begin(), gaps.end());
  const auto below = std::count_if(aucs.begin(), aucs.end(), [](double a) { return a < 0.85; });
  c.expect(stats::median(aucs) >= 0.85, "held-out AUC median over 100 runs=" + fmt(stats::median(aucs)) +
                                            " min=" + fmt(min_auc) + " runs below 0.85=" + std::to_string(below));
  c.expect(stats::median(gaps) >= 0.5,
           "median tp - median fp: median over runs=" + fmt(stats::median(gaps)) + " max=" + fmt(max_gap));
  c.expect(top3 >= 95, "signal variables ranked top-3 in " + std::to_string(top3) + "/100 runs");
  c.expect(secs < 600.0, "runtime=" + fmt(secs, 3) + "s");
}

void geospatial_exactness(Check& c) {
  const GridSpec spec;
  auto affine = [](double lat, double lon) { return 3.0 + 0.7 * lat - 1.3 * lon; };
  std::vector<double> nodes(spec.node_count());
  for (std::size_t i = 0; i < spec.lat_nodes(); ++i) {
    for (std::size_t j = 0; j < spec.lon_nodes(); ++j) nodes[i * spec.lon_nodes() + j] = affine(spec.node_lat(i), spec.node_lon(j));
  }
  Rng rng(505);
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double lat = spec.lat_min + (spec.lat_max - spec.lat_min) * rng.uniform();
    const double lon = spec.lon_min + (spec.lon_max - spec.lon_min) * rng.uniform();
    worst = std::max(worst, std::fabs(bilinear_interp(nodes, spec, lat, lon) - affine(lat, lon)) / std::fabs(affine(lat, lon)));
  }
  c.expect(worst <= 1e-12, "affine bilinear max relative error=" + fmt(worst));

  const Hour h0 = hour_of(parse_timestamp("2019-12-01T05:00Z"));
  GridFieldSet fields;
  for (const auto& v : canonical_schema().variables()) {
    fields[v.name] = GridField{spec, v.name, {h0, h0 + chr::hours(1)},
                               {std::vector<double>(spec.node_count(), 1.25), std::vector<double>(spec.node_count(), 2.5)}};
  }
  const auto mid = interp_to_point(fields, canonical_schema(), 51.3, 8.8, Minute(h0) + chr::minutes(30));
  c.expect(std::all_of(mid.begin(), mid.end(), [](double v) { return v == 1.875; }), "temporal midpoint exact");

  TurbineSet turbines;
  std::vector<StrikeEvent> strikes;
  const Minute t0 = parse_timestamp("2019-01-01T00:00Z");
  for (int i = 0; i < 1000; ++i) {
    turbines.turbines.push_back({"T" + std::to_string(i), 52.0 + 0.1 * rng.uniform(), 10.0 + 0.1 * rng.uniform()});
    strikes.push_back({t0 + chr::minutes(i), 52.0 + 0.1 * rng.uniform(), 10.0 + 0.1 * rng.uniform()});
  }
  std::vector<std::tuple<std::size_t, std::string>> brute;
  for (std::size_t s = 0; s < strikes.size(); ++s) {
    std::vector<std::string> ids;
    for (const auto& t : turbines.turbines) {
      if (std::hypot(strikes[s].lat - t.lat, strikes[s].lon - t.lon) <= 0.003 * (1.0 + kRadiusSlack)) ids.push_back(t.id);
    }
    std::sort(ids.begin(), ids.end());
    for (auto& id : ids) brute.emplace_back(s, id);
  }
  std::vector<std::tuple<std::size_t, std::string>> fast;
  for (const auto& m : match_strikes_to_turbines(strikes, turbines)) fast.emplace_back(m.strike_index, m.turbine_id);
  c.expect(fast == brute, "radius matching on 1000x1000 equals brute force (" + std::to_string(brute.size()) + " pairs)");
  c.expect(spec.lat_cells() == 16 && spec.lon_cells() == 40 && spec.cell_count() == 640,
           "canonical grid " + std::to_string(spec.lat_cells()) + "x" + std::to_string(spec.lon_cells()));
}

EnsembleModel logistic_ensemble(std::uint64_t seed, unsigned workers = 1) {
  SynthConfig cfg = logistic_config(2000, seed);
  cfg.intercept = -0.5;
  const auto data = generate_tower_dataset(cfg).data;
  ForestParams fp;
  fp.n_trees = 50;
  return train_ensemble(ul_rows(data), no_ul_rows(data), fp, 5, Rng(seed), workers);
}

std::vector<Hour> consecutive_hours(const std::string& start, std::size_t n) {
  std::vector<Hour> out;
  const Hour h0 = hour_of(parse_timestamp(start));
  for (std::size_t k = 0; k < n; ++k) out.push_back(h0 + chr::hours(static_cast<long>(k)));
  return out;
}

bool monotone(std::span<const ProbRaster> rasters) {
  const auto low = exceedance_counts(rasters, 0.5);
  const auto high = exceedance_counts(rasters, 0.8);
  for (std::size_t c = 0; c < low.exceedance_count.size(); ++c) {
    if (high.exceedance_count[c] > low.exceedance_count[c]) return false;
  }
  return true;
}

void riskmap_properties(Check& c) {
  const GridSpec spec;
  SynthConfig cfg = logistic_config(2000, 606);
  cfg.spatial_pattern = SpatialPattern::WestGradient;
  const auto hours = consecutive_hours("2019-11-01T00:00Z", 24);
  const auto grid = generate_grid_fields(cfg, spec, hours);
  const auto ensemble = logistic_ensemble(607);
  std::vector<ProbRaster> diagnosed;
  for (auto h : hours) diagnosed.push_back(diagnose_grid_hour(ensemble, grid.fields, spec, h));

  std::vector<ProbRaster> uniform_random;
  Rng rng(608);
  for (auto h : hours) {
    ProbRaster r{spec, h, std::vector<double>(spec.cell_count()), {}};
    for (auto& p : r.median_prob) p = rng.uniform();
    uniform_random.push_back(std::move(r));
  }
  c.expect(monotone(diagnosed) && monotone(grid.truth) && monotone(uniform_random),
           "counts at 0.8 <= counts at 0.5 per cell on 3 raster sets");

  const auto canonical = canonical_cold_season_hours();
  std::vector<ProbRaster> season;
  season.reserve(canonical.size());
  for (auto h : canonical) season.push_back(ProbRaster{spec, h, std::vector<double>(spec.cell_count(), 0.6), {}});
  const auto season_map = exceedance_counts(season, 0.5);
  c.expect(season_map.hours_total == 12480, "canonical cold-season hours_total=" + std::to_string(season_map.hours_total) +
                                                " (expected 12480)");

  const auto map = exceedance_counts(diagnosed, 0.5);
  double west = 0.0, east = 0.0;
  for (std::size_t row = 0; row < spec.lat_cells(); ++row) {
    for (std::size_t k = 0; k < 5; ++k) {
      west += map.exceedance_count[row * spec.lon_cells() + k];
      east += map.exceedance_count[row * spec.lon_cells() + spec.lon_cells() - 1 - k];
    }
  }
  west /= 5.0 * static_cast<double>(spec.lat_cells());
  east /= 5.0 * static_cast<double>(spec.lat_cells());
  c.expect(west > east, "west-gradient mean count west 5 cols=" + fmt(west) + " east 5 cols=" + fmt(east));
}

std::string stage_bytes(unsigned workers) {
  std::string out;
  SynthConfig tower_cfg = logistic_config(600, 707);
  tower_cfg.intercept = -1.0;
  const auto tower = generate_tower_dataset(tower_cfg);
  out += feature_table_to_csv(tower.data);

  const std::vector<double> g{0.3, -1.2, 2.2, 0.1, 0.9, -0.4, 1.7, 0.0, -2.0};
  const std::vector<std::uint8_t> h{1, 0, 1, 0, 1, 0, 1, 0, 0};
  out += csv::format_double(p_value_montecarlo(g, h, 20000, 5, workers)) + "\n";

  ForestParams fp;
  fp.n_trees = 40;
  fp.seed = 708;
  const auto model = fit_forest(tower.data, fp, workers);
  out += trees_to_jsonl(model);
  for (double v : permutation_importance(model, generate_tower_dataset(logistic_config(300, 709)).data,
                                         ImportanceMetric::Accuracy, 2, Rng(710), workers)) {
    out += csv::format_double(v) + ",";
  }

  ForestParams quick;
  quick.n_trees = 10;
  const auto folds = loocv_by_day(tower.data, no_ul_rows(tower.data), quick, Rng(711), {workers, false, true});
  out += cv_results_to_csv(folds);
  Rng sampler(712);
  const auto no_ul = sample_no_ul_days(no_ul_rows(tower.data), tower.data.event_days(), 4, sampler);
  out += summary_to_csv(diagnostic_summary(folds, no_ul, fold_ensemble(folds), workers));

  const auto ensemble = train_ensemble(ul_rows(tower.data), no_ul_rows(tower.data), quick, 3, Rng(713), workers);
  for (const auto& m : ensemble.models) out += trees_to_jsonl(m);

  const GridSpec spec;
  SynthConfig cfg = logistic_config(100, 714);
  cfg.spatial_pattern = SpatialPattern::FrontalBand;
  const auto hours = consecutive_hours("2020-01-10T00:00Z", 3);
  const auto grid = generate_grid_fields(cfg, spec, hours);
  out += rasters_to_csv(grid.truth);
  std::vector<ProbRaster> rasters;
  for (auto hr : hours) rasters.push_back(diagnose_grid_hour(ensemble, grid.fields, spec, hr, {CellPoint::Center, workers}));
  out += rasters_to_csv(rasters);
  const auto map = exceedance_counts(rasters, 0.5);
  out += riskmap_to_csv(map) + riskmap_to_geojson(map) + riskmap_summary(map);

  Rng geo(715);
  const auto turbines = generate_turbines(spec, 200, geo);
  const auto strikes = generate_strikes(turbines, hours, 300, 0.002, geo);
  const auto matches = match_strikes_to_turbines(strikes, turbines);
  out += turbines_to_csv(turbines) + strikes_to_csv(strikes) + matches_to_csv(matches);
  out += cell_counts_to_csv(flash_hours_per_cell(matches, spec));
  return out;
}

void determinism(Check& c) {
  const auto first = stage_bytes(1);
  const auto second = stage_bytes(1);
  const auto parallel = stage_bytes(8);
  c.expect(first == second, "two runs byte-identical (" + std::to_string(first.size()) + " bytes)");
  c.expect(first == parallel, "workers 1 vs 8 byte-identical");
}

void leakage(Check& c) {
  SynthConfig cfg = logistic_config(600, 808);
  cfg.n_event_days = 50;
  const auto data = generate_tower_dataset(cfg).data;
  ForestParams quick;
  quick.n_trees = 5;
  const auto folds = loocv_by_day(data, no_ul_rows(data), quick, Rng(809), {1, true, false});
  std::size_t leaks = 0;
  for (const auto& f : folds) {
    const auto train_dates = dates_of(f.fold.train);
    for (const auto& d : dates_of(f.fold.test)) leaks += train_dates.count(d);
  }
  c.expect(folds.size() == 50, "folds=" + std::to_string(folds.size()));
  c.expect(leaks == 0, "train/test shared dates over all folds=" + std::to_string(leaks));
}

}  // namespace

int main() {
  run_criterion(1, "exact permutation oracle", exact_permutation_oracle);
  run_criterion(2, "asymptotic calibration", asymptotic_calibration);
  run_criterion(3, "structural constants", structural_constants);
  run_criterion(4, "signal recovery", signal_recovery);
  run_criterion(5, "geospatial exactness", geospatial_exactness);
  run_criterion(6, "risk-map properties", riskmap_properties);
  run_criterion(7, "determinism", determinism);
  run_criterion(8, "no leakage", leakage);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
