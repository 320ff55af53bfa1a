#include <gtest/gtest.h>

#include "test_support.hpp"

namespace ulrisk {
namespace {

TEST(TowerDataset, ShapeAndEventDays) {
  SynthConfig cfg = SynthConfig::with_signal(3, 2.0);
  cfg.n_rows = 1500;
  cfg.n_event_days = 25;
  const auto s = generate_tower_dataset(cfg);
  EXPECT_EQ(s.data.size(), 1500u);
  EXPECT_EQ(s.true_prob.size(), 1500u);
  EXPECT_EQ(s.data.event_days().size(), 25u);
  for (std::size_t i = 1; i < s.data.size(); ++i) EXPECT_LE(s.data[i - 1].timestamp, s.data[i].timestamp);
  const auto event_days = s.data.event_days();
  const auto cin = *canonical_schema().index_of("cin_present");
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    const auto& r = s.data[i];
    if (!r.ul) {
      EXPECT_EQ(event_days.count(r.date()), 0u);
      EXPECT_EQ(r.timestamp, Minute(hour_of(r.timestamp)));
    }
    EXPECT_TRUE(r.features[cin] == 0.0 || r.features[cin] == 1.0);
    EXPECT_DOUBLE_EQ(s.true_prob[i], stats::sigmoid(2.0 * r.features[0] - 2.0 * r.features[1] + 2.0 * r.features[2]));
    EXPECT_GE(r.date(), parse_date("2000-01-01"));
    EXPECT_LE(r.date(), parse_date("2017-12-31"));
  }
}

TEST(TowerDataset, MinimalEventDays) {
  SynthConfig cfg = SynthConfig::with_signal(3, 1.0);
  cfg.n_rows = 50;
  cfg.n_event_days = 2;
  const auto s = generate_tower_dataset(cfg);
  EXPECT_EQ(s.data.event_days().size(), 2u);
  const auto pool = s.data.filter([](const Sample& r) { return !r.ul; });
  ForestParams fp;
  fp.n_trees = 5;
  fp.tree_params.min_split = 2;
  fp.tree_params.min_bucket = 1;
  EXPECT_EQ(loocv_by_day(s.data, pool, fp, Rng(1)).size(), 2u);
}

TEST(TowerDataset, DeterministicBytes) {
  SynthConfig cfg = SynthConfig::with_signal(3, 1.0);
  cfg.n_rows = 300;
  const auto a = feature_table_to_csv(generate_tower_dataset(cfg).data);
  EXPECT_EQ(a, feature_table_to_csv(generate_tower_dataset(cfg).data));
  cfg.seed = 2;
  EXPECT_NE(a, feature_table_to_csv(generate_tower_dataset(cfg).data));
}

TEST(TowerDataset, LabelFrequencyMatchesTruth) {
  SynthConfig cfg = SynthConfig::with_signal(3, 1.0);
  cfg.intercept = -1.0;
  cfg.n_rows = 100000;
  cfg.n_event_days = 400;
  const auto s = generate_tower_dataset(cfg);
  double mean_p = 0.0;
  for (double p : s.true_prob) mean_p += p;
  mean_p /= static_cast<double>(s.true_prob.size());
  const double freq = static_cast<double>(s.data.positives()) / static_cast<double>(s.data.size());
  EXPECT_NEAR(freq, mean_p, 0.01);
}

TEST(TowerDataset, ConfigValidation) {
  SynthConfig cfg;
  cfg.coefficients.assign(35, 0.0);
  try {
    generate_tower_dataset(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid);
  }
  cfg = SynthConfig::with_signal(3, 1.0);
  cfg.n_event_days = 1;
  EXPECT_THROW(generate_tower_dataset(cfg), Error);
  cfg = SynthConfig::with_signal(3, 1.0);
  cfg.coefficients.pop_back();
  EXPECT_THROW(generate_tower_dataset(cfg), Error);
}

std::vector<Hour> some_hours(std::size_t n) {
  const Hour h0 = hour_of(parse_timestamp("2019-10-01T00:00Z"));
  std::vector<Hour> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(h0 + std::chrono::hours(static_cast<long>(7 * k)));
  return out;
}

TEST(GridFields, WestGradientStrictlyDecreasesEastward) {
  SynthConfig cfg = SynthConfig::with_signal(3, 2.0);
  cfg.spatial_pattern = SpatialPattern::WestGradient;
  const GridSpec spec;
  const auto grid = generate_grid_fields(cfg, spec, some_hours(4));
  ASSERT_EQ(grid.truth.size(), 4u);
  for (const auto& t : grid.truth) {
    for (std::size_t row = 0; row < spec.lat_cells(); ++row) {
      for (std::size_t col = 1; col < spec.lon_cells(); ++col) {
        EXPECT_LT(t.median_prob[row * spec.lon_cells() + col], t.median_prob[row * spec.lon_cells() + col - 1]);
      }
    }
  }
}

TEST(GridFields, FrontalBandMargin) {
  SynthConfig cfg = SynthConfig::with_signal(3, 2.0);
  cfg.spatial_pattern = SpatialPattern::FrontalBand;
  const GridSpec spec;
  const auto grid = generate_grid_fields(cfg, spec, some_hours(3));
  for (const auto& t : grid.truth) {
    double min_band = 1.0, max_off = 0.0;
    for (std::size_t c = 0; c < spec.cell_count(); ++c) {
      const double lat = spec.cell_center_lat(c / spec.lon_cells());
      const double lon = spec.cell_center_lon(c % spec.lon_cells());
      const double offset = std::fabs(lon - frontal_band_center(spec, lat));
      // Cells whose corner nodes are all on one side of the band edge.
      if (offset + spec.step <= cfg.band_half_width_deg) min_band = std::min(min_band, t.median_prob[c]);
      if (offset - spec.step > cfg.band_half_width_deg) max_off = std::max(max_off, t.median_prob[c]);
    }
    EXPECT_GT(min_band - max_off, 0.9);
  }
}

TEST(GridFields, UniformPatternHasNoSpatialSignal) {
  SynthConfig cfg = SynthConfig::with_signal(3, 2.0);
  const GridSpec spec;
  const auto grid = generate_grid_fields(cfg, spec, some_hours(3));
  for (const auto& t : grid.truth) {
    double mean = 0.0;
    for (double p : t.median_prob) mean += p;
    mean /= static_cast<double>(t.median_prob.size());
    double var = 0.0;
    for (double p : t.median_prob) var += (p - mean) * (p - mean);
    EXPECT_LT(var / static_cast<double>(t.median_prob.size()), 1e-20);
  }
}

TEST(GridFields, TruthIsSigmoidOfInterpolatedFeatures) {
  SynthConfig cfg = SynthConfig::with_signal(5, 0.7);
  cfg.spatial_pattern = SpatialPattern::FrontalBand;
  const GridSpec spec{50.0, 51.0, 6.0, 9.0, 0.25};
  const auto hours = some_hours(2);
  const auto grid = generate_grid_fields(cfg, spec, hours);
  const auto x = interp_to_point(grid.fields, canonical_schema(), 50.625, 7.375, Minute(hours[1]));
  double logit = 0.0;
  for (std::size_t j = 0; j < 35; ++j) logit += cfg.coefficients[j] * x[j];
  EXPECT_DOUBLE_EQ(grid.truth[1].median_prob[2 * spec.lon_cells() + 5], stats::sigmoid(logit));
}

TEST(TurbinesAndStrikes, InsideDomainAndNearTurbines) {
  const GridSpec spec;
  Rng rng(3);
  const auto turbines = generate_turbines(spec, 200, rng);
  turbines.validate();
  for (const auto& t : turbines.turbines) EXPECT_TRUE(in_domain(t.lat, t.lon, spec));
  const auto strikes = generate_strikes(turbines, some_hours(5), 300, 0.002, rng);
  ASSERT_EQ(strikes.size(), 300u);
  // offset <= 0.002 per axis means distance <= 0.00283 < 0.003
  const auto matches = match_strikes_to_turbines(strikes, turbines);
  std::set<std::size_t> matched;
  for (const auto& m : matches) matched.insert(m.strike_index);
  EXPECT_EQ(matched.size(), strikes.size());
}

}  // namespace
}  // namespace ulrisk
