#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "test_support.hpp"
#include "ulrisk/ulrisk.hpp"

namespace fs = std::filesystem;
using namespace ulrisk;

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(ULRISK_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = ulrisk::testing::scratch_dir("cli");
    const auto r = run("synth --rows 300 --event-days 10 --grid-hours 4 --pattern west-gradient --turbines 40 "
                       "--strikes 20 --intercept -1 --seed 5 --out " + (dir_ / "s").string());
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto t = run("train --data " + (dir_ / "s/features.csv").string() +
                       " --models 3 --trees 15 --seed 5 --out " + (dir_ / "t").string());
    ASSERT_EQ(t.exit_code, 0) << t.output;
  }
  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, HelpExitsZero) {
  EXPECT_EQ(run("--help").exit_code, 0);
  const auto r = run("riskmap --help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("--thresholds"), std::string::npos);
}

TEST_F(Cli, CvIsByteIdenticalAcrossRunsAndWorkers) {
  const std::string data = " --data " + (dir_ / "s/features.csv").string() + " --trees 10 --seed 9";
  ASSERT_EQ(run("cv" + data + " --workers 1 --out " + (dir_ / "cv1").string()).exit_code, 0);
  ASSERT_EQ(run("cv" + data + " --workers 1 --out " + (dir_ / "cv2").string()).exit_code, 0);
  ASSERT_EQ(run("cv" + data + " --workers 4 --out " + (dir_ / "cv3").string()).exit_code, 0);
  for (const char* f : {"cv_results.csv", "cv_summary.csv"}) {
    const auto a = csv::read_text(dir_ / "cv1" / f);
    EXPECT_EQ(a, csv::read_text(dir_ / "cv2" / f)) << f;
    EXPECT_EQ(a, csv::read_text(dir_ / "cv3" / f)) << f;
  }
}

TEST_F(Cli, RiskmapCountsShrinkWithThreshold) {
  ASSERT_EQ(run("diagnose-grid --model " + (dir_ / "t/model").string() + " --grids " + (dir_ / "s/grid").string() +
                " --hours-file " + (dir_ / "s/hours.txt").string() + " --out " + (dir_ / "d").string())
                .exit_code,
            0);
  const auto r = run("riskmap --rasters " + (dir_ / "d/rasters.csv").string() + " --thresholds 0.3,0.5,0.7 --out " +
                     (dir_ / "r").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto low = riskmap_from_csv(csv::read_text(dir_ / "r/riskmap_0.3.csv"));
  const auto mid = riskmap_from_csv(csv::read_text(dir_ / "r/riskmap_0.5.csv"));
  const auto high = riskmap_from_csv(csv::read_text(dir_ / "r/riskmap_0.7.csv"));
  ASSERT_EQ(low.exceedance_count.size(), 640u);
  for (std::size_t c = 0; c < low.exceedance_count.size(); ++c) {
    EXPECT_GE(low.exceedance_count[c], mid.exceedance_count[c]);
    EXPECT_GE(mid.exceedance_count[c], high.exceedance_count[c]);
  }
  EXPECT_EQ(low.hours_total, 4u);
}

TEST_F(Cli, RiskmapFromModelMatchesRasterRoute) {
  const auto direct = run("riskmap --model " + (dir_ / "t/model").string() + " --grids " +
                          (dir_ / "s/grid").string() + " --hours-file " + (dir_ / "s/hours.txt").string() +
                          " --out " + (dir_ / "direct").string());
  ASSERT_EQ(direct.exit_code, 0) << direct.output;
  ASSERT_EQ(run("diagnose-grid --model " + (dir_ / "t/model").string() + " --grids " + (dir_ / "s/grid").string() +
                " --hours-file " + (dir_ / "s/hours.txt").string() + " --out " + (dir_ / "d2").string())
                .exit_code,
            0);
  ASSERT_EQ(run("riskmap --rasters " + (dir_ / "d2/rasters.csv").string() + " --out " + (dir_ / "via").string())
                .exit_code,
            0);
  EXPECT_EQ(csv::read_text(dir_ / "direct/riskmap_0.5.csv"), csv::read_text(dir_ / "via/riskmap_0.5.csv"));
}

TEST_F(Cli, MatchCountsEveryPlantedStrike) {
  const auto r = run("match --strikes " + (dir_ / "s/strikes.csv").string() + " --turbines " +
                     (dir_ / "s/turbines.csv").string() + " --out " + (dir_ / "m").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("matches: "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "m/flash_hours.csv"));
}

TEST_F(Cli, ConfigFileSuppliesValuesAndFlagsWin) {
  const auto cfg = dir_ / "run.cfg";
  csv::write_file(cfg, "# forest size\ntrees = 7\nseed=3\n");
  const std::string data = " --data " + (dir_ / "s/features.csv").string();
  ASSERT_EQ(run("cv" + data + " --config " + cfg.string() + " --out " + (dir_ / "c1").string()).exit_code, 0);
  ASSERT_EQ(run("cv" + data + " --trees 7 --seed 3 --out " + (dir_ / "c2").string()).exit_code, 0);
  EXPECT_EQ(csv::read_text(dir_ / "c1/cv_results.csv"), csv::read_text(dir_ / "c2/cv_results.csv"));
  ASSERT_EQ(
      run("cv" + data + " --config " + cfg.string() + " --seed 4 --out " + (dir_ / "c3").string()).exit_code, 0);
  ASSERT_EQ(run("cv" + data + " --trees 7 --seed 4 --out " + (dir_ / "c4").string()).exit_code, 0);
  EXPECT_EQ(csv::read_text(dir_ / "c3/cv_results.csv"), csv::read_text(dir_ / "c4/cv_results.csv"));
}

TEST_F(Cli, UnknownConfigKeyIsConfigError) {
  const auto cfg = dir_ / "bad.cfg";
  csv::write_file(cfg, "treez=7\n");
  const auto r = run("cv --data " + (dir_ / "s/features.csv").string() + " --config " + cfg.string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("error: code=ConfigInvalid exit=2"), std::string::npos) << r.output;
}

TEST_F(Cli, ParseErrorsExitTwo) {
  EXPECT_EQ(run("cv --data /does/not/exist.csv").exit_code, 2);
  EXPECT_EQ(run("cv --bogus").exit_code, 2);
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("riskmap --rasters " + (dir_ / "s/features.csv").string() + " --thresholds 0,5").exit_code, 2);
}

TEST_F(Cli, BadDataExitsThree) {
  const auto bad = dir_ / "bad.csv";
  csv::write_file(bad, "a,b\n1,2\n");
  const auto r = run("ingest --features " + bad.string() + " --out " + (dir_ / "x").string());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("error: code=SchemaMismatch"), std::string::npos) << r.output;
}

TEST_F(Cli, IngestRoundTripsCanonicalTable) {
  const auto r = run("ingest --features " + (dir_ / "s/features.csv").string() + " --out " + (dir_ / "i").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(csv::read_text(dir_ / "i/features.csv"), csv::read_text(dir_ / "s/features.csv"));
  EXPECT_NE(csv::read_text(dir_ / "i/ingest_summary.txt").find("rows: 300"), std::string::npos);
}
