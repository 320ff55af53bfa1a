#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ulrisk/dataset.hpp"
#include "ulrisk/geospatial.hpp"
#include "ulrisk/riskmap.hpp"
#include "ulrisk/rng.hpp"
#include "ulrisk/stats.hpp"

namespace ulrisk {

enum class SpatialPattern { Uniform, WestGradient, FrontalBand };

constexpr std::string_view to_string(SpatialPattern p) {
  switch (p) {
    case SpatialPattern::Uniform: return "uniform";
    case SpatialPattern::WestGradient: return "west-gradient";
    case SpatialPattern::FrontalBand: return "frontal-band";
  }
  return "";
}

/// Logistic ground truth P(UL | x) = sigmoid(coefficients . x + intercept)
/// over standardized features (cin_present is 0/1).
struct SynthConfig {
  std::vector<double> coefficients;
  double intercept = 0.0;
  std::size_t n_event_days = 40;
  std::size_t n_rows = 2000;
  std::uint64_t seed = 1;
  SpatialPattern spatial_pattern = SpatialPattern::Uniform;
  int first_year = 2000;
  int last_year = 2017;
  double tower_lat = 47.785;
  double tower_lon = 13.111;
  double pattern_strength = 8.0;  // logit units added/removed by the pattern
  double pattern_width_deg = 0.1;
  double band_half_width_deg = 1.0;

  /// Coefficients of magnitude `weight` with alternating signs on the first
  /// `n_signal` variables, zero elsewhere.
  static SynthConfig with_signal(std::size_t n_signal, double weight, std::size_t n_vars = 35) {
    SynthConfig c;
    c.coefficients.assign(n_vars, 0.0);
    for (std::size_t j = 0; j < n_signal && j < n_vars; ++j) c.coefficients[j] = (j % 2 == 0 ? 1.0 : -1.0) * weight;
    return c;
  }

  void validate(const FeatureSchema& schema) const {
    require(coefficients.size() == schema.count(), ErrorKind::ConfigInvalid, "synth: one coefficient per variable required");
    require(std::any_of(coefficients.begin(), coefficients.end(), [](double w) { return w != 0.0; }),
            ErrorKind::ConfigInvalid, "synth: all coefficients are zero");
    require(n_event_days >= 2, ErrorKind::ConfigInvalid, "synth: need n_event_days >= 2");
    require(first_year <= last_year, ErrorKind::ConfigInvalid, "synth: empty year range");
  }
};

struct SynthDataset {
  Dataset data;                   // UL and no-UL rows, time-ordered
  std::vector<double> true_prob;  // sigmoid(w.x + b) per row
};

namespace detail {

inline std::vector<double> draw_features(const FeatureSchema& schema, Rng& rng) {
  static const auto binary = canonical_schema().index_of("cin_present");
  std::vector<double> x(schema.count());
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = (binary && j == *binary && schema == canonical_schema()) ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.normal();
  }
  return x;
}

inline double logit(const SynthConfig& c, std::span<const double> x) {
  double s = c.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) s += c.coefficients[j] * x[j];
  return s;
}

}  // namespace detail

/// Tower-style sample. Feature vectors are iid; labels are Bernoulli draws from
/// the logistic truth. UL rows are spread over exactly n_event_days dates (each
/// gets at least one) at random minutes; no-UL rows fall on whole hours of
/// other dates. Rows are drawn until n_rows is reached and there are enough UL
/// rows to cover every event day.
inline SynthDataset generate_tower_dataset(const SynthConfig& config, const FeatureSchema& schema = canonical_schema()) {
  config.validate(schema);
  const Rng root(config.seed);
  Rng feat = root.substream(1);
  Rng when = root.substream(2);

  std::vector<std::vector<double>> xs;
  std::vector<double> probs;
  std::vector<std::uint8_t> labels;
  std::size_t positives = 0;
  while (xs.size() < config.n_rows || positives < config.n_event_days) {
    auto x = detail::draw_features(schema, feat);
    const double p = stats::sigmoid(detail::logit(config, x));
    const bool ul = feat.uniform() < p;
    positives += ul ? 1 : 0;
    xs.push_back(std::move(x));
    probs.push_back(p);
    labels.push_back(ul ? 1 : 0);
    require(xs.size() < 100 * (config.n_rows + config.n_event_days) + 100000, ErrorKind::ConfigInvalid,
            "synth: ground truth yields too few UL rows for the requested event days");
  }

  const Date first = Date(std::chrono::year(config.first_year) / 1 / 1);
  const Date last = Date(std::chrono::year(config.last_year) / 12 / 31);
  const auto n_days = static_cast<std::size_t>((last - first).count() + 1);
  require(n_days > config.n_event_days, ErrorKind::ConfigInvalid, "synth: year range too short for event days");
  auto picks = when.sample_without_replacement(n_days, config.n_event_days);
  when.shuffle(picks);
  std::vector<Date> event_days;
  for (auto i : picks) event_days.push_back(first + std::chrono::days(static_cast<long>(i)));
  std::vector<std::uint8_t> is_event(n_days, 0);
  for (auto i : picks) is_event[i] = 1;

  std::vector<Sample> rows;
  std::size_t next_event = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Sample s;
    s.features = std::move(xs[i]);
    s.ul = labels[i] != 0;
    s.source = Source::Synthetic;
    s.lat = config.tower_lat;
    s.lon = config.tower_lon;
    if (s.ul) {
      const Date d = next_event < event_days.size() ? event_days[next_event++]
                                                    : event_days[when.uniform_index(event_days.size())];
      s.timestamp = Minute(d) + std::chrono::minutes(static_cast<long>(when.uniform_index(24 * 60)));
      s.ul_subtype = when.bernoulli(0.5) ? UlSubtype::LlsDetectable : UlSubtype::LlsNonDetectable;
    } else {
      std::size_t day;
      do {
        day = when.uniform_index(n_days);
      } while (is_event[day]);
      s.timestamp = Minute(first + std::chrono::days(static_cast<long>(day))) +
                    std::chrono::hours(static_cast<long>(when.uniform_index(24)));
    }
    rows.push_back(std::move(s));
  }
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].timestamp < rows[b].timestamp; });
  SynthDataset out;
  std::vector<Sample> sorted;
  for (auto i : order) {
    sorted.push_back(std::move(rows[i]));
    out.true_prob.push_back(probs[i]);
  }
  out.data = Dataset(schema, std::move(sorted));
  return out;
}

struct SynthGrid {
  GridFieldSet fields;
  std::vector<ProbRaster> truth;  // true probability at cell centres, per hour
};

/// Longitude of the band axis, running SW to NE across the domain.
inline double frontal_band_center(const GridSpec& spec, double lat) {
  const double f = (lat - spec.lat_min) / (spec.lat_max - spec.lat_min);
  return spec.lon_min + (spec.lon_max - spec.lon_min) * (0.3 + 0.4 * f);
}

/// Pattern value in [-1, 1] at a point; scaled into the signal variables so
/// that it adds pattern_strength * value to the logit.
inline double pattern_value(const SynthConfig& c, const GridSpec& spec, double lat, double lon) {
  switch (c.spatial_pattern) {
    case SpatialPattern::Uniform:
      return 0.0;
    case SpatialPattern::WestGradient: {
      const double mid = (spec.lon_min + spec.lon_max) / 2.0;
      const double half = (spec.lon_max - spec.lon_min) / 2.0;
      // tanh gives a sharp transition; the linear term keeps it strictly monotone.
      return 0.9 * std::tanh((mid - lon) / c.pattern_width_deg) + 0.1 * (mid - lon) / half;
    }
    case SpatialPattern::FrontalBand:
      return std::fabs(lon - frontal_band_center(spec, lat)) <= c.band_half_width_deg ? 1.0 : -1.0;
  }
  return 0.0;
}

/// Smooth synthetic fields for every schema variable. Signal variables
/// (nonzero coefficient) vary in time only, plus the spatial pattern; the
/// remaining variables also get a random smooth spatial component.
inline SynthGrid generate_grid_fields(const SynthConfig& config, const GridSpec& spec, const std::vector<Hour>& hours,
                                      const FeatureSchema& schema = canonical_schema()) {
  config.validate(schema);
  spec.validate();
  require(!hours.empty(), ErrorKind::ConfigInvalid, "synth grid: no hours");
  const Rng root(config.seed);
  double weight_sum = 0.0;
  for (double w : config.coefficients) weight_sum += std::fabs(w);
  const double amplitude = config.pattern_strength / weight_sum;

  std::vector<double> pattern(spec.node_count());
  for (std::size_t i = 0; i < spec.lat_nodes(); ++i) {
    for (std::size_t j = 0; j < spec.lon_nodes(); ++j) {
      pattern[i * spec.lon_nodes() + j] = pattern_value(config, spec, spec.node_lat(i), spec.node_lon(j));
    }
  }

  SynthGrid out;
  for (std::size_t v = 0; v < schema.count(); ++v) {
    Rng rng = root.substream(100 + v);
    const double w = config.coefficients[v];
    const double period = 12.0 + 36.0 * rng.uniform();
    const double phase = 6.283185307179586 * rng.uniform();
    const double ka = 0.3 + 0.9 * rng.uniform(), kb = 0.3 + 0.9 * rng.uniform();
    const double pa = 6.283185307179586 * rng.uniform(), pb = 6.283185307179586 * rng.uniform();
    GridField f{spec, schema[v].name, hours, {}};
    for (std::size_t k = 0; k < hours.size(); ++k) {
      const double hours_since_epoch = static_cast<double>(hours[k].time_since_epoch().count());
      const double base = 0.3 * std::sin(6.283185307179586 * hours_since_epoch / period + phase);
      std::vector<double> slice(spec.node_count());
      for (std::size_t i = 0; i < spec.lat_nodes(); ++i) {
        for (std::size_t j = 0; j < spec.lon_nodes(); ++j) {
          const std::size_t n = i * spec.lon_nodes() + j;
          if (w != 0.0) {
            slice[n] = base + (w > 0 ? 1.0 : -1.0) * amplitude * pattern[n];
          } else {
            slice[n] = base + 0.8 * std::sin(ka * spec.node_lat(i) + pa) * std::cos(kb * spec.node_lon(j) + pb);
          }
        }
      }
      f.values.push_back(std::move(slice));
    }
    out.fields.emplace(schema[v].name, std::move(f));
  }

  for (auto h : hours) {
    ProbRaster truth{spec, h, std::vector<double>(spec.cell_count()), {}};
    for (std::size_t c = 0; c < spec.cell_count(); ++c) {
      const std::size_t row = c / spec.lon_cells(), col = c % spec.lon_cells();
      const auto x = interp_to_point(out.fields, schema, spec.cell_center_lat(row), spec.cell_center_lon(col), Minute(h));
      truth.median_prob[c] = stats::sigmoid(detail::logit(config, x));
    }
    out.truth.push_back(std::move(truth));
  }
  return out;
}

/// Turbines scattered uniformly over the grid, ids T000001...
inline TurbineSet generate_turbines(const GridSpec& spec, std::size_t count, Rng& rng) {
  TurbineSet set;
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "T%06zu", i + 1);
    set.turbines.push_back({id, spec.lat_min + (spec.lat_max - spec.lat_min) * rng.uniform(),
                            spec.lon_min + (spec.lon_max - spec.lon_min) * rng.uniform()});
  }
  return set;
}

/// Strikes near random turbines (within max_offset_deg in each coordinate) at
/// random minutes of the given hours.
inline std::vector<StrikeEvent> generate_strikes(const TurbineSet& turbines, const std::vector<Hour>& hours,
                                                 std::size_t count, double max_offset_deg, Rng& rng) {
  std::vector<StrikeEvent> out;
  if (turbines.turbines.empty() || hours.empty()) return out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& t = turbines.turbines[rng.uniform_index(turbines.turbines.size())];
    const Hour h = hours[rng.uniform_index(hours.size())];
    out.push_back({Minute(h) + std::chrono::minutes(static_cast<long>(rng.uniform_index(60))),
                   t.lat + max_offset_deg * (2.0 * rng.uniform() - 1.0), t.lon + max_offset_deg * (2.0 * rng.uniform() - 1.0)});
  }
  return out;
}

}  // namespace ulrisk
