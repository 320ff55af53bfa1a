// ulrisk command-line driver.
//
// Every subcommand reads its inputs, writes artifacts under --out and prints
// one line per artifact. Failures print a single machine-readable line on
// stderr:  error: code=<Kind> exit=<n> message="..."

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ulrisk/ulrisk.hpp"

namespace fs = std::filesystem;
using namespace ulrisk;

namespace {

struct Common {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out = "ulrisk_out";
  std::string config;
};

struct ForestFlags {
  std::size_t trees = 500;
  std::size_t mtry = 6;
  double alpha = 0.05;
  std::size_t min_split = 20;
  std::size_t min_bucket = 7;
  double subsample = 2.0 / 3.0;

  ForestParams params(std::uint64_t seed) const {
    ForestParams p;
    p.n_trees = trees;
    p.subsample_fraction = subsample;
    p.tree_params.alpha = alpha;
    p.tree_params.mtry = mtry;
    p.tree_params.min_split = min_split;
    p.tree_params.min_bucket = min_bucket;
    p.seed = seed;
    return p;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Flat key=value file; keys are flag names without dashes, flags win")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Random seed; fixes every stochastic step")->capture_default_str();
  app->add_option("--workers", c.workers, "Worker threads; results do not depend on it")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
}

void add_forest(CLI::App* app, ForestFlags& f) {
  app->add_option("--trees", f.trees, "Trees per forest")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--mtry", f.mtry, "Predictors sampled per split")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--alpha", f.alpha, "Significance level for splitting (Bonferroni-adjusted)")->capture_default_str();
  app->add_option("--min-split", f.min_split, "Smallest node eligible for splitting")->capture_default_str();
  app->add_option("--min-bucket", f.min_bucket, "Smallest allowed child node")->capture_default_str();
  app->add_option("--subsample", f.subsample, "Fraction of rows drawn without replacement per tree")
      ->capture_default_str();
}

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    double v = 0.0;
    require(csv::try_parse_double(item, v) && v > 0.0 && v < 1.0, ErrorKind::ConfigInvalid,
            "thresholds: '" + item + "' is not a number in (0,1)");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

void emit(const fs::path& path, const std::string& contents) {
  csv::write_file(path, contents);
  std::cout << "wrote " << path.string() << "\n";
}

GridSpec grid_spec_option(const std::string& grid_spec, const std::string& grids) {
  if (!grid_spec.empty()) {
    try {
      return grid_spec_from_json(nlohmann::json::parse(csv::read_text(grid_spec)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::BadValue, grid_spec + ": " + e.what());
    }
  }
  if (!grids.empty()) return load_grid_spec(grids);
  return GridSpec{};
}

std::vector<Hour> hours_option(const std::string& hours_file, const std::string& hour_list, bool canonical) {
  const int given = (hours_file.empty() ? 0 : 1) + (hour_list.empty() ? 0 : 1) + (canonical ? 1 : 0);
  require(given == 1, ErrorKind::ConfigInvalid, "give exactly one of --hours-file, --hours, --canonical-hours");
  if (canonical) return canonical_cold_season_hours();
  const auto hours = parse_hour_list(hours_file.empty() ? hour_list : csv::read_text(hours_file));
  require(!hours.empty(), ErrorKind::ConfigInvalid, "hour list is empty");
  return hours;
}

Dataset negative_pool(const Dataset& data, const std::string& pool_path, const FeatureSchema& schema) {
  const Dataset source = pool_path.empty() ? data : load_feature_table(pool_path, schema);
  return source.filter([](const Sample& s) { return !s.ul; });
}

FeatureSchema schema_option(const std::string& path) {
  return path.empty() ? canonical_schema() : load_schema(path);
}

// ---- subcommands -----------------------------------------------------------

struct IngestFlags {
  std::string features, schema;
};

void run_ingest(const Common& c, const IngestFlags& f) {
  const auto schema = schema_option(f.schema);
  const auto data = load_feature_table(f.features, schema);
  const fs::path out = c.out;
  emit(out / "features.csv", feature_table_to_csv(data));
  emit(out / "schema.csv", schema_to_csv(schema));
  std::map<std::string, std::size_t> sources;
  std::size_t detectable = 0, non_detectable = 0;
  for (const auto& r : data.rows()) {
    ++sources[std::string(to_string(r.source))];
    if (r.ul_subtype == UlSubtype::LlsDetectable) ++detectable;
    if (r.ul_subtype == UlSubtype::LlsNonDetectable) ++non_detectable;
  }
  std::string summary = "rows: " + std::to_string(data.size()) + "\n";
  summary += "ul_rows: " + std::to_string(data.positives()) + "\n";
  summary += "ul_event_days: " + std::to_string(data.event_days().size()) + "\n";
  summary += "ul_lls_detectable: " + std::to_string(detectable) + "\n";
  summary += "ul_lls_non_detectable: " + std::to_string(non_detectable) + "\n";
  for (const auto& [name, n] : sources) summary += "source_" + name + ": " + std::to_string(n) + "\n";
  emit(out / "ingest_summary.txt", summary);
}

struct SynthFlags {
  std::size_t rows = 2000, event_days = 40, signal = 3;
  double weight = 2.0, intercept = 0.0, pattern_strength = 8.0;
  int first_year = 2000, last_year = 2017;
  std::string pattern = "uniform";
  std::size_t grid_hours = 0;
  std::string grid_start = "2019-10-01T00:00Z";
  std::string grid_format = "csv";
  std::string grid_spec;
  std::size_t turbines = 0, strikes = 0;
};

void run_synth(const Common& c, const SynthFlags& f) {
  require(f.signal >= 1 && f.signal <= canonical_schema().count(), ErrorKind::ConfigInvalid,
          "--signal must lie in [1, 35]");
  SynthConfig cfg = SynthConfig::with_signal(f.signal, f.weight);
  cfg.intercept = f.intercept;
  cfg.n_rows = f.rows;
  cfg.n_event_days = f.event_days;
  cfg.seed = c.seed;
  cfg.first_year = f.first_year;
  cfg.last_year = f.last_year;
  cfg.pattern_strength = f.pattern_strength;
  cfg.spatial_pattern = f.pattern == "west-gradient"  ? SpatialPattern::WestGradient
                        : f.pattern == "frontal-band" ? SpatialPattern::FrontalBand
                                                      : SpatialPattern::Uniform;
  const fs::path out = c.out;
  const auto tower = generate_tower_dataset(cfg);
  emit(out / "features.csv", feature_table_to_csv(tower.data));
  std::string truth = "row,true_prob\n";
  for (std::size_t i = 0; i < tower.true_prob.size(); ++i) {
    truth += std::to_string(i) + "," + csv::format_double(tower.true_prob[i]) + "\n";
  }
  emit(out / "truth.csv", truth);

  const GridSpec spec = grid_spec_option(f.grid_spec, "");
  std::vector<Hour> hours;
  const Hour start = hour_of(parse_timestamp(f.grid_start));
  for (std::size_t k = 0; k < f.grid_hours; ++k) hours.push_back(start + std::chrono::hours(static_cast<long>(k)));
  if (!hours.empty()) {
    const auto grid = generate_grid_fields(cfg, spec, hours);
    save_grid_fields(out / "grid", grid.fields, f.grid_format == "binary" ? GridFormat::Binary : GridFormat::Csv);
    std::cout << "wrote " << (out / "grid").string() << "/\n";
    emit(out / "grid_truth.csv", rasters_to_csv(grid.truth));
    std::string list;
    for (auto h : hours) list += format_hour(h) + "\n";
    emit(out / "hours.txt", list);
  }
  if (f.turbines > 0) {
    Rng rng = Rng(c.seed).substream(10);
    const auto turbines = generate_turbines(spec, f.turbines, rng);
    emit(out / "turbines.csv", turbines_to_csv(turbines));
    if (f.strikes > 0) {
      require(!hours.empty(), ErrorKind::ConfigInvalid, "--strikes needs --grid-hours > 0");
      const auto strikes = generate_strikes(turbines, hours, f.strikes, 0.002, rng);
      emit(out / "strikes.csv", strikes_to_csv(strikes));
    }
  }
}

struct TrainFlags {
  std::string data, pool, schema;
  std::size_t models = 100;
  ForestFlags forest;
};

void run_train(const Common& c, const TrainFlags& f) {
  const auto schema = schema_option(f.schema);
  const auto data = load_feature_table(f.data, schema);
  const auto positives = data.filter([](const Sample& s) { return s.ul; });
  require(!positives.empty(), ErrorKind::BadValue, f.data + ": no UL rows to train on");
  const auto pool = negative_pool(data, f.pool, schema);
  const auto ensemble = train_ensemble(positives, pool, f.forest.params(c.seed), f.models, Rng(c.seed), c.workers);
  save_ensemble(fs::path(c.out) / "model", ensemble);
  std::cout << "wrote " << (fs::path(c.out) / "model").string() << "/ (" << ensemble.models.size() << " models)\n";
}

struct CvFlags {
  std::string data, pool, schema;
  std::size_t no_ul_days_per_season = 4;
  ForestFlags forest;
};

void run_cv(const Common& c, const CvFlags& f) {
  const auto schema = schema_option(f.schema);
  const auto data = load_feature_table(f.data, schema);
  const auto pool = negative_pool(data, f.pool, schema);
  const Rng root(c.seed);
  const auto folds = loocv_by_day(data, pool, f.forest.params(c.seed), root.substream(0), {c.workers, false, true});
  Rng sampler = root.substream(1);
  const auto no_ul = sample_no_ul_days(pool, data.event_days(), f.no_ul_days_per_season, sampler);
  const auto summary = diagnostic_summary(folds, no_ul, fold_ensemble(folds), c.workers);
  const fs::path out = c.out;
  emit(out / "cv_results.csv", cv_results_to_csv(folds));
  emit(out / "cv_summary.csv", summary_to_csv(summary));
  std::cout << "folds: " << folds.size() << "\n";
}

struct ImportanceFlags {
  std::string model, eval;
  std::string metric = "accuracy";
  std::size_t repeats = 5;
};

void run_importance(const Common& c, const ImportanceFlags& f) {
  const auto ensemble = load_ensemble(f.model);
  ensemble.validate();
  const std::vector<Dataset> evals{load_feature_table(f.eval, ensemble.schema())};
  const auto metric = f.metric == "auc" ? ImportanceMetric::Auc : ImportanceMetric::Accuracy;
  const auto report = median_importance(ensemble.models, evals, metric, f.repeats, Rng(c.seed), c.workers);
  emit(fs::path(c.out) / "importance.csv", importance_to_csv(report));
}

struct MatchFlags {
  std::string strikes, turbines, grid_spec;
  double radius = 0.003;
  std::string distance = "degrees";
};

void run_match(const Common& c, const MatchFlags& f) {
  const auto strikes = load_strikes(f.strikes);
  const auto turbines = load_turbines(f.turbines);
  const auto mode = f.distance == "great-circle" ? DistanceMode::GreatCircle : DistanceMode::Degrees;
  const auto matches = match_strikes_to_turbines(strikes, turbines, f.radius, mode);
  const auto spec = grid_spec_option(f.grid_spec, "");
  const fs::path out = c.out;
  emit(out / "matches.csv", matches_to_csv(matches));
  emit(out / "flash_hours.csv", cell_counts_to_csv(flash_hours_per_cell(matches, spec)));
  emit(out / "turbines_per_cell.csv", cell_counts_to_csv(CellCounts{spec, turbines_per_cell(turbines, spec)}, "turbines"));
  std::cout << "matches: " << matches.size() << "\n";
}

struct DiagnoseFlags {
  std::string model, grids, hours_file, hours, turbines;
  std::string cell_point = "center";
  bool canonical_hours = false;
};

std::vector<ProbRaster> diagnose_hours(const Common& c, const std::string& model_dir, const std::string& grids,
                                       const std::vector<Hour>& hours, CellPoint point) {
  const auto ensemble = load_ensemble(model_dir);
  ensemble.validate();
  const auto fields = load_grid_fields(grids, ensemble.schema());
  const auto spec = load_grid_spec(grids);
  std::vector<ProbRaster> rasters;
  rasters.reserve(hours.size());
  for (auto h : hours) rasters.push_back(diagnose_grid_hour(ensemble, fields, spec, h, {point, c.workers}));
  return rasters;
}

void run_diagnose(const Common& c, const DiagnoseFlags& f) {
  const auto hours = hours_option(f.hours_file, f.hours, f.canonical_hours);
  const auto point = f.cell_point == "lower-left" ? CellPoint::LowerLeftNode : CellPoint::Center;
  const auto rasters = diagnose_hours(c, f.model, f.grids, hours, point);
  emit(fs::path(c.out) / "rasters.csv", rasters_to_csv(rasters));
  if (!f.turbines.empty()) {
    const auto masked = mask_no_turbine_cells(rasters.front(), load_turbines(f.turbines));
    std::string mask = "row,col,no_turbine\n";
    for (std::size_t cell = 0; cell < masked.no_turbine.size(); ++cell) {
      mask += std::to_string(cell / masked.spec.lon_cells()) + "," + std::to_string(cell % masked.spec.lon_cells()) +
              "," + (masked.no_turbine[cell] ? "1" : "0") + "\n";
    }
    emit(fs::path(c.out) / "turbine_mask.csv", mask);
  }
}

struct RiskmapFlags {
  std::string rasters, grid_spec, model, grids, hours_file, hours, turbines;
  std::string thresholds = "0.5";
  std::string cell_point = "center";
  bool canonical_hours = false;
};

void run_riskmap(const Common& c, const RiskmapFlags& f) {
  const auto thresholds = parse_thresholds(f.thresholds);
  std::vector<ProbRaster> rasters;
  if (!f.rasters.empty()) {
    require(f.model.empty(), ErrorKind::ConfigInvalid, "give either --rasters or --model/--grids, not both");
    const auto spec = grid_spec_option(f.grid_spec, f.grids);
    rasters = rasters_from_csv(csv::read_file(f.rasters), spec, f.rasters);
  } else {
    require(!f.model.empty() && !f.grids.empty(), ErrorKind::ConfigInvalid, "need --rasters, or --model with --grids");
    const auto hours = hours_option(f.hours_file, f.hours, f.canonical_hours);
    const auto point = f.cell_point == "lower-left" ? CellPoint::LowerLeftNode : CellPoint::Center;
    rasters = diagnose_hours(c, f.model, f.grids, hours, point);
  }
  require(!rasters.empty(), ErrorKind::BadValue, "no rasters to aggregate");
  std::optional<TurbineSet> turbines;
  if (!f.turbines.empty()) turbines = load_turbines(f.turbines);
  const fs::path out = c.out;
  for (double t : thresholds) {
    auto map = exceedance_counts(rasters, t);
    if (turbines) map = mask_no_turbine_cells(map, *turbines);
    const std::string tag = csv::format_double(t);
    emit(out / ("riskmap_" + tag + ".csv"), riskmap_to_csv(map));
    emit(out / ("riskmap_" + tag + ".geojson"), riskmap_to_geojson(map));
    const auto summary = riskmap_summary(map);
    emit(out / ("riskmap_" + tag + "_summary.txt"), summary);
    std::cout << summary;
  }
}

// ---- config file -----------------------------------------------------------

/// Reads `key=value` lines (# comments, blank lines ignored).
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::ConfigInvalid, "cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::ConfigInvalid,
            path + ":" + std::to_string(n) + ": expected key=value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    require(!key.empty(), ErrorKind::ConfigInvalid, path + ":" + std::to_string(n) + ": empty key");
    out.emplace_back(key, value);
  }
  return out;
}

/// Splices config-file values into argv right after the subcommand name,
/// skipping keys already given as flags so that flags win.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app) {
  std::size_t sub_pos = args.size();
  CLI::App* sub = nullptr;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (auto* s = app.get_subcommand_no_throw(args[i])) {
      sub_pos = i;
      sub = s;
      break;
    }
  }
  if (!sub) return args;
  std::string config_path;
  std::set<std::string> given;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(name);
    if (name == "config") {
      if (eq != std::string::npos) {
        config_path = a.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        config_path = args[i + 1];
      }
    }
  }
  if (config_path.empty() || !fs::exists(config_path)) return args;  // CLI11 reports a missing file
  std::vector<std::string> extra;
  for (const auto& [key, value] : read_config(config_path)) {
    require(key != "config", ErrorKind::ConfigInvalid, config_path + ": nested config is not supported");
    const auto* opt = sub->get_option_no_throw("--" + key);
    require(opt != nullptr, ErrorKind::ConfigInvalid,
            config_path + ": unknown key '" + key + "' for subcommand " + sub->get_name());
    if (given.count(key)) continue;
    if (opt->get_type_size() == 0) {
      require(value == "true" || value == "false", ErrorKind::ConfigInvalid,
              config_path + ": flag '" + key + "' takes true or false");
      if (value == "true") extra.push_back("--" + key);
    } else {
      extra.push_back("--" + key + "=" + value);
    }
  }
  std::vector<std::string> merged(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1));
  merged.insert(merged.end(), extra.begin(), extra.end());
  merged.insert(merged.end(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1), args.end());
  return merged;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch == '\n' ? ' ' : ch);
  }
  return out;
}

int report(std::string_view kind, int code, const std::string& message) {
  std::cerr << "error: code=" << kind << " exit=" << code << " message=\"" << escape(message) << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Upward-lightning risk pipeline: conditional-inference forests, validation and grid risk maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ulrisk 1.0.0");

  Common common;

  IngestFlags ingest;
  auto* cmd_ingest = app.add_subcommand("ingest", "Validate a feature table and write its canonical form");
  add_common(cmd_ingest, common);
  cmd_ingest->add_option("--features", ingest.features, "Feature table CSV")->required()->check(CLI::ExistingFile);
  cmd_ingest->add_option("--schema", ingest.schema, "Schema CSV (name,unit,derived); default: built-in 35 variables")
      ->check(CLI::ExistingFile);

  SynthFlags synth;
  auto* cmd_synth = app.add_subcommand("synth", "Generate synthetic tower data, grids, turbines and strikes");
  add_common(cmd_synth, common);
  cmd_synth->add_option("--rows", synth.rows, "Tower rows")->capture_default_str();
  cmd_synth->add_option("--event-days", synth.event_days, "Distinct UL event days")->capture_default_str();
  cmd_synth->add_option("--signal", synth.signal, "Number of leading variables with nonzero weight")
      ->capture_default_str();
  cmd_synth->add_option("--weight", synth.weight, "Magnitude of each signal weight (signs alternate)")
      ->capture_default_str();
  cmd_synth->add_option("--intercept", synth.intercept, "Logistic intercept")->capture_default_str();
  cmd_synth->add_option("--first-year", synth.first_year, "First calendar year of tower rows")->capture_default_str();
  cmd_synth->add_option("--last-year", synth.last_year, "Last calendar year of tower rows")->capture_default_str();
  cmd_synth->add_option("--pattern", synth.pattern, "Spatial pattern of the grid fields")
      ->check(CLI::IsMember({"uniform", "west-gradient", "frontal-band"}))
      ->capture_default_str();
  cmd_synth->add_option("--pattern-strength", synth.pattern_strength, "Logit units the pattern adds or removes")
      ->capture_default_str();
  cmd_synth->add_option("--grid-hours", synth.grid_hours, "Consecutive grid hours to generate (0: no grid)")
      ->capture_default_str();
  cmd_synth->add_option("--grid-start", synth.grid_start, "First grid hour (UTC)")->capture_default_str();
  cmd_synth->add_option("--grid-format", synth.grid_format, "Grid file format")
      ->check(CLI::IsMember({"csv", "binary"}))
      ->capture_default_str();
  cmd_synth->add_option("--grid-spec", synth.grid_spec, "Grid spec JSON; default: 50-54N, 6-16E, 0.25 deg")
      ->check(CLI::ExistingFile);
  cmd_synth->add_option("--turbines", synth.turbines, "Number of turbines to scatter")->capture_default_str();
  cmd_synth->add_option("--strikes", synth.strikes, "Number of strikes near turbines")->capture_default_str();

  TrainFlags train;
  auto* cmd_train = app.add_subcommand("train", "Train an ensemble of forests on balanced samples");
  add_common(cmd_train, common);
  cmd_train->add_option("--data", train.data, "Feature table with UL rows")->required()->check(CLI::ExistingFile);
  cmd_train->add_option("--pool", train.pool, "Feature table of no-UL candidates; default: no-UL rows of --data")
      ->check(CLI::ExistingFile);
  cmd_train->add_option("--schema", train.schema, "Schema CSV; default: built-in")->check(CLI::ExistingFile);
  cmd_train->add_option("--models", train.models, "Forests in the ensemble")->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_forest(cmd_train, train.forest);

  CvFlags cv;
  auto* cmd_cv = app.add_subcommand("cv", "Leave-one-event-day-out cross-validation");
  add_common(cmd_cv, common);
  cmd_cv->add_option("--data", cv.data, "Feature table with UL rows")->required()->check(CLI::ExistingFile);
  cmd_cv->add_option("--pool", cv.pool, "Feature table of no-UL candidates; default: no-UL rows of --data")
      ->check(CLI::ExistingFile);
  cmd_cv->add_option("--schema", cv.schema, "Schema CSV; default: built-in")->check(CLI::ExistingFile);
  cmd_cv->add_option("--no-ul-days-per-season", cv.no_ul_days_per_season,
                     "No-UL days sampled per season and year for the false-positive panel")
      ->capture_default_str();
  add_forest(cmd_cv, cv.forest);

  ImportanceFlags imp;
  auto* cmd_imp = app.add_subcommand("importance", "Median permutation importance over an ensemble");
  add_common(cmd_imp, common);
  cmd_imp->add_option("--model", imp.model, "Ensemble or model bundle directory")->required()->check(CLI::ExistingDirectory);
  cmd_imp->add_option("--eval", imp.eval, "Evaluation feature table with both classes")->required()
      ->check(CLI::ExistingFile);
  cmd_imp->add_option("--metric", imp.metric, "Performance metric")
      ->check(CLI::IsMember({"accuracy", "auc"}))
      ->capture_default_str();
  cmd_imp->add_option("--repeats", imp.repeats, "Shuffles per variable")->check(CLI::PositiveNumber)
      ->capture_default_str();

  MatchFlags match;
  auto* cmd_match = app.add_subcommand("match", "Match strikes to turbines and count flash hours per cell");
  add_common(cmd_match, common);
  cmd_match->add_option("--strikes", match.strikes, "Strikes CSV (timestamp,lat,lon)")->required()
      ->check(CLI::ExistingFile);
  cmd_match->add_option("--turbines", match.turbines, "Turbines CSV (id,lat,lon)")->required()
      ->check(CLI::ExistingFile);
  cmd_match->add_option("--radius", match.radius, "Match radius in degrees (inclusive)")->capture_default_str();
  cmd_match->add_option("--distance", match.distance, "Distance measure")
      ->check(CLI::IsMember({"degrees", "great-circle"}))
      ->capture_default_str();
  cmd_match->add_option("--grid-spec", match.grid_spec, "Grid spec JSON for the cell counts; default: canonical")
      ->check(CLI::ExistingFile);

  DiagnoseFlags diag;
  auto* cmd_diag = app.add_subcommand("diagnose-grid", "Median ensemble probability per grid cell and hour");
  add_common(cmd_diag, common);
  cmd_diag->add_option("--model", diag.model, "Ensemble or model bundle directory")->required()
      ->check(CLI::ExistingDirectory);
  cmd_diag->add_option("--grids", diag.grids, "Grid field directory (grid.json plus one file per variable)")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd_diag->add_option("--hours-file", diag.hours_file, "File with one UTC hour per line")->check(CLI::ExistingFile);
  cmd_diag->add_option("--hours", diag.hours, "Comma-separated UTC hours");
  cmd_diag->add_flag("--canonical-hours", diag.canonical_hours, "Use Oct-Apr hours from 2018-10 through 2020-12");
  cmd_diag->add_option("--cell-point", diag.cell_point, "Representative point of a cell")
      ->check(CLI::IsMember({"center", "lower-left"}))
      ->capture_default_str();
  cmd_diag->add_option("--turbines", diag.turbines, "Turbines CSV; writes a mask of cells without turbines")
      ->check(CLI::ExistingFile);

  RiskmapFlags risk;
  auto* cmd_risk = app.add_subcommand("riskmap", "Per-cell threshold exceedance counts over many hours");
  add_common(cmd_risk, common);
  cmd_risk->add_option("--rasters", risk.rasters, "Rasters CSV written by diagnose-grid")->check(CLI::ExistingFile);
  cmd_risk->add_option("--grid-spec", risk.grid_spec, "Grid spec JSON for --rasters; default: canonical")
      ->check(CLI::ExistingFile);
  cmd_risk->add_option("--model", risk.model, "Ensemble directory, to diagnose hours directly")
      ->check(CLI::ExistingDirectory);
  cmd_risk->add_option("--grids", risk.grids, "Grid field directory, with --model")->check(CLI::ExistingDirectory);
  cmd_risk->add_option("--hours-file", risk.hours_file, "File with one UTC hour per line, with --model")
      ->check(CLI::ExistingFile);
  cmd_risk->add_option("--hours", risk.hours, "Comma-separated UTC hours, with --model");
  cmd_risk->add_flag("--canonical-hours", risk.canonical_hours, "Use Oct-Apr hours from 2018-10 through 2020-12");
  cmd_risk->add_option("--cell-point", risk.cell_point, "Representative point of a cell, with --model")
      ->check(CLI::IsMember({"center", "lower-left"}))
      ->capture_default_str();
  cmd_risk->add_option("--thresholds", risk.thresholds, "Comma-separated probability thresholds in (0,1)")
      ->capture_default_str();
  cmd_risk->add_option("--turbines", risk.turbines, "Turbines CSV; flags cells without turbines")
      ->check(CLI::ExistingFile);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = merge_config(args, app);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      return report(to_string(ErrorKind::ConfigInvalid), exit_code(ErrorKind::ConfigInvalid), e.what());
    }

    if (*cmd_ingest) run_ingest(common, ingest);
    if (*cmd_synth) run_synth(common, synth);
    if (*cmd_train) run_train(common, train);
    if (*cmd_cv) run_cv(common, cv);
    if (*cmd_imp) run_importance(common, imp);
    if (*cmd_match) run_match(common, match);
    if (*cmd_diag) run_diagnose(common, diag);
    if (*cmd_risk) run_riskmap(common, risk);
    return 0;
  } catch (const Error& e) {
    return report(to_string(e.kind()), exit_code(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report(to_string(ErrorKind::InvariantViolation), exit_code(ErrorKind::InvariantViolation), e.what());
  }
}
