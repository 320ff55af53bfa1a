#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ulrisk/ciforest.hpp"
#include "ulrisk/csv.hpp"
#include "ulrisk/dataset.hpp"
#include "ulrisk/ensemble.hpp"
#include "ulrisk/parallel.hpp"
#include "ulrisk/rng.hpp"
#include "ulrisk/stats.hpp"
#include "ulrisk/timeutil.hpp"

namespace ulrisk {

/// All positives plus an equal number of negatives drawn without replacement.
/// Negatives are stratified by meteorological season to match the positives'
/// season counts; if a season of the pool runs short, the remainder is drawn
/// uniformly from the rest of the pool. The result is shuffled.
inline Dataset balanced_sample(const Dataset& positives, const Dataset& negative_pool, Rng& rng) {
  require(positives.positives() == positives.size(), ErrorKind::BadValue, "balanced_sample: positives contain no-UL rows");
  require(negative_pool.positives() == 0, ErrorKind::BadValue, "balanced_sample: negative pool contains UL rows");
  require(negative_pool.size() >= positives.size(), ErrorKind::PoolTooSmall,
          "balanced_sample: pool has " + std::to_string(negative_pool.size()) + " rows, need " +
              std::to_string(positives.size()));
  require(positives.schema() == negative_pool.schema(), ErrorKind::SchemaMismatch, "balanced_sample: schema mismatch");

  std::array<std::size_t, 4> wanted{};
  for (const auto& r : positives.rows()) ++wanted[static_cast<std::size_t>(season_of(r.date()))];
  std::array<std::vector<std::size_t>, 4> by_season;
  for (std::size_t i = 0; i < negative_pool.size(); ++i) {
    by_season[static_cast<std::size_t>(season_of(negative_pool[i].date()))].push_back(i);
  }

  std::vector<std::uint8_t> taken(negative_pool.size(), 0);
  std::vector<std::size_t> chosen;
  std::size_t shortfall = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    const auto& idx = by_season[s];
    const std::size_t k = std::min(wanted[s], idx.size());
    shortfall += wanted[s] - k;
    for (auto pick : rng.sample_without_replacement(idx.size(), k)) {
      chosen.push_back(idx[pick]);
      taken[idx[pick]] = 1;
    }
  }
  if (shortfall > 0) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < negative_pool.size(); ++i) {
      if (!taken[i]) rest.push_back(i);
    }
    for (auto pick : rng.sample_without_replacement(rest.size(), shortfall)) chosen.push_back(rest[pick]);
  }

  std::vector<Sample> rows = positives.rows();
  for (auto i : chosen) rows.push_back(negative_pool[i]);
  rng.shuffle(rows);
  return Dataset(positives.schema(), std::move(rows));
}

struct CvFold {
  Date held_out_day{};
  Dataset train;  // empty unless LoocvOptions::keep_train
  Dataset test;
};

struct FoldResult {
  CvFold fold;
  std::vector<double> probabilities;  // one per test row
  ForestModel model;                  // empty unless LoocvOptions::keep_models
};

struct LoocvOptions {
  unsigned workers = 1;
  bool keep_train = false;
  bool keep_models = true;
};

inline DateSet dates_of(const Dataset& d) {
  DateSet out;
  for (const auto& r : d.rows()) out.insert(r.date());
  return out;
}

/// Leave-one-event-day-out cross-validation. One fold per UL day of `data`:
/// a forest trained on a balanced sample built from UL rows of all other days
/// and pool rows of all other days diagnoses every `data` row of the held-out
/// day. Fold d draws from rng.substream(d).
inline std::vector<FoldResult> loocv_by_day(const Dataset& data, const Dataset& negative_pool,
                                            const ForestParams& params, const Rng& rng,
                                            const LoocvOptions& options = {}) {
  const auto days = data.event_days();
  require(days.size() >= 2, ErrorKind::TooFewDays,
          "loocv_by_day: need >= 2 event days, got " + std::to_string(days.size()));
  const std::vector<Date> day_list(days.begin(), days.end());
  std::vector<FoldResult> results(day_list.size());
  parallel_for(day_list.size(), options.workers, [&](std::size_t f) {
    const Date day = day_list[f];
    const auto positives = data.filter([&](const Sample& s) { return s.ul && s.date() != day; });
    const auto pool = negative_pool.filter([&](const Sample& s) { return s.date() != day; });
    Rng fold_rng = rng.substream(f);
    auto train = balanced_sample(positives, pool, fold_rng);
    ForestParams fp = params;
    fp.seed = fold_rng.next_u64();

    FoldResult& out = results[f];
    out.fold.held_out_day = day;
    out.fold.test = data.filter([&](const Sample& s) { return s.date() == day; });
    const auto train_dates = dates_of(train);
    require(train_dates.count(day) == 0, ErrorKind::InvariantViolation, "loocv_by_day: held-out day leaked into training");
    auto model = fit_forest(train, fp, 1);
    out.probabilities = predict_forest(model, out.fold.test);
    if (options.keep_models) out.model = std::move(model);
    if (options.keep_train) out.fold.train = std::move(train);
  });
  return results;
}

/// Rows of `pool` on randomly drawn days without UL: `days_per_season` dates
/// per (season year, season), excluding `event_days`.
inline Dataset sample_no_ul_days(const Dataset& pool, const DateSet& event_days, std::size_t days_per_season, Rng& rng) {
  std::map<std::pair<int, int>, std::vector<Date>> groups;
  for (const auto& d : dates_of(pool)) {
    if (event_days.count(d)) continue;
    groups[{season_year(d), static_cast<int>(season_of(d))}].push_back(d);
  }
  DateSet chosen;
  for (const auto& [key, dates] : groups) {
    for (auto i : rng.sample_without_replacement(dates.size(), days_per_season)) chosen.insert(dates[i]);
  }
  return pool.filter([&](const Sample& s) { return !s.ul && chosen.count(s.date()) > 0; });
}

struct Quartiles {
  double q25 = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double q75 = std::numeric_limits<double>::quiet_NaN();
};

inline Quartiles quartiles(const std::vector<double>& v) {
  if (v.empty()) return {};
  return {stats::quantile(v, 0.25), stats::quantile(v, 0.5), stats::quantile(v, 0.75)};
}

struct DiagnosticSummary {
  std::vector<double> tp_probs;  // held-out probabilities at observed-UL rows
  std::vector<double> fp_probs;  // ensemble probabilities at sampled no-UL rows
  Quartiles tp;
  Quartiles fp;
};

/// fp probabilities are the ensemble median for each sampled no-UL row.
inline DiagnosticSummary diagnostic_summary(const std::vector<FoldResult>& folds, const Dataset& no_ul_sample,
                                            const EnsembleModel& ensemble, unsigned workers = 1) {
  require(!folds.empty(), ErrorKind::ConfigInvalid, "diagnostic_summary: no folds");
  DiagnosticSummary s;
  for (const auto& f : folds) {
    for (std::size_t i = 0; i < f.fold.test.size(); ++i) {
      if (f.fold.test[i].ul) s.tp_probs.push_back(f.probabilities[i]);
    }
  }
  if (!no_ul_sample.empty()) {
    ensemble.validate();
    s.fp_probs.resize(no_ul_sample.size());
    parallel_for(no_ul_sample.size(), workers,
                 [&](std::size_t i) { s.fp_probs[i] = predict_median(ensemble, no_ul_sample[i].features); });
  }
  s.tp = quartiles(s.tp_probs);
  s.fp = quartiles(s.fp_probs);
  return s;
}

/// Models of the folds, for diagnosing the no-UL sample.
inline EnsembleModel fold_ensemble(const std::vector<FoldResult>& folds) {
  EnsembleModel e;
  for (const auto& f : folds) {
    require(!f.model.trees.empty(), ErrorKind::InvariantViolation, "fold_ensemble: folds were run without keep_models");
    e.models.push_back(f.model);
  }
  return e;
}

/// Production ensemble: n_models forests on all positives, each with its own
/// balanced negative draw from rng.substream(m).
inline EnsembleModel train_ensemble(const Dataset& positives, const Dataset& negative_pool, const ForestParams& params,
                                    std::size_t n_models, const Rng& rng, unsigned workers = 1) {
  require(n_models >= 1, ErrorKind::ConfigInvalid, "train_ensemble: need at least one model");
  EnsembleModel e;
  e.models.resize(n_models);
  const unsigned outer = n_models >= workers ? workers : 1;
  const unsigned inner = outer == 1 ? workers : 1;
  parallel_for(n_models, outer, [&](std::size_t m) {
    Rng local = rng.substream(m);
    const auto train = balanced_sample(positives, negative_pool, local);
    ForestParams fp = params;
    fp.seed = local.next_u64();
    e.models[m] = fit_forest(train, fp, inner);
  });
  return e;
}

inline std::string cv_results_to_csv(const std::vector<FoldResult>& folds) {
  std::string out = "fold_day,row_timestamp,label,diagnosed_probability\n";
  for (const auto& f : folds) {
    const auto day = format_date(f.fold.held_out_day);
    for (std::size_t i = 0; i < f.fold.test.size(); ++i) {
      out += day + "," + format_timestamp(f.fold.test[i].timestamp) + "," + (f.fold.test[i].ul ? "1" : "0") + "," +
             csv::format_double(f.probabilities[i]) + "\n";
    }
  }
  return out;
}

inline std::string summary_to_csv(const DiagnosticSummary& s) {
  auto line = [](const char* name, const std::vector<double>& v, const Quartiles& q) {
    if (v.empty()) return std::string(name) + ",0,,,,,\n";
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return std::string(name) + "," + std::to_string(v.size()) + "," + csv::format_double(*lo) + "," +
           csv::format_double(q.q25) + "," + csv::format_double(q.median) + "," + csv::format_double(q.q75) + "," +
           csv::format_double(*hi) + "\n";
  };
  return "class,count,min,q25,median,q75,max\n" + line("true_positive", s.tp_probs, s.tp) +
         line("false_positive", s.fp_probs, s.fp);
}

}  // namespace ulrisk
