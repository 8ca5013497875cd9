#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rrw/cli.hpp"
#include "rrw/csv.hpp"
#include "rrw/feature_table.hpp"
#include "rrw/repro.hpp"
#include "rrw/synth.hpp"
#include "testutil.hpp"

using namespace rrw;
namespace fs = std::filesystem;

namespace {

// a fast cohort: 4 subjects, 2 thicknesses, 2 ASiR levels
void write_mini_spec(const std::string& path, int n_subjects, bool survival, int seed = 11) {
  std::ofstream out(path);
  out << R"({"n_subjects": )" << n_subjects << R"(, "rng_seed": )" << seed << R"(,
    "in_plane_dim": 24, "fine_slices": 32,
    "thickness_levels_mm": [2.5, 5.0], "asir_levels_percent": [0, 20],
    "reference_thickness_mm": 5.0, "reference_asir_percent": 20,
    "tumor": {"radius_mm": [4.0, 6.5]})";
  if (survival)
    out << R"(, "reference_only": true,
    "survival": {"enabled": true, "hazard": {"tumor_contrast": 2.0}})";
  out << "}";
}

int run_binary(const std::string& args) {
  std::string cmd = std::string(RRW_BINARY) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("synth + extract + repro round trip on a miniature cohort") {
  auto dir = test::temp_dir("cli_pipeline");
  write_mini_spec(dir + "/spec.json", 4, false);

  SynthOptions synth;
  synth.spec_path = dir + "/spec.json";
  synth.out_dir = dir + "/cohort";
  synth.workers = 2;
  cmd_synth(synth);
  CHECK(fs::exists(dir + "/cohort/manifest.csv"));

  ExtractOptions ex;
  ex.manifest_path = dir + "/cohort/manifest.csv";
  ex.settings = "A3,L2i";
  ex.out_csv = dir + "/features.csv";
  ex.workers = 2;
  cmd_extract(ex);

  FeatureTable t = read_feature_table(ex.out_csv);
  // 4 subjects x 2 ROIs x (2 thickness x 2 asir) x 2 extractors x 93 features
  CHECK(t.rows.size() == 4 * 2 * 4 * 2 * 93);

  ReproOptions rp;
  rp.feature_csv = ex.out_csv;
  rp.out_csv = dir + "/repro.csv";
  rp.wilcoxon_csv = dir + "/wilcoxon.csv";
  rp.reference_asir = 20.0;
  cmd_repro(rp);
  auto ccc = read_generalized_ccc_csv(rp.out_csv);
  CHECK(ccc.size() > 0);
  CHECK(fs::exists(rp.wilcoxon_csv));

  SUBCASE("extraction is resumable: a partial run completes to the same bytes") {
    ExtractOptions part = ex;
    part.out_csv = dir + "/features_resumed.csv";
    part.settings = "A3";  // first half
    cmd_extract(part);
    part.settings = "A3,L2i";  // resume adds the rest
    cmd_extract(part);
    CHECK(test::read_file(part.out_csv) == test::read_file(ex.out_csv));
  }

  SUBCASE("an interrupted journal resumes to the same bytes") {
    // simulate a crash by keeping only a prefix of complete ROI row groups
    FeatureTable full = read_feature_table(ex.out_csv);
    FeatureTable partial;
    partial.rows.assign(full.rows.begin(), full.rows.begin() + 93 * 5);
    std::string resumed = dir + "/features_interrupted.csv";
    write_feature_table(partial, resumed);
    ExtractOptions cont = ex;
    cont.out_csv = resumed;
    cmd_extract(cont);
    CHECK(test::read_file(resumed) == test::read_file(ex.out_csv));
  }

  SUBCASE("extraction output is worker-count independent") {
    ExtractOptions one = ex;
    one.out_csv = dir + "/features_w1.csv";
    one.workers = 1;
    cmd_extract(one);
    CHECK(test::read_file(one.out_csv) == test::read_file(ex.out_csv));
  }
}

TEST_CASE("survival command: univariate table, grid summary, determinism") {
  auto dir = test::temp_dir("cli_survival");
  write_mini_spec(dir + "/spec.json", 30, true);

  SynthOptions synth;
  synth.spec_path = dir + "/spec.json";
  synth.out_dir = dir + "/cohort";
  synth.workers = 2;
  cmd_synth(synth);

  ExtractOptions ex;
  ex.manifest_path = dir + "/cohort/manifest.csv";
  ex.settings = "A3";
  ex.out_csv = dir + "/features.csv";
  ex.workers = 2;
  cmd_extract(ex);

  SurvivalOptions sv;
  sv.feature_csv = ex.out_csv;
  sv.manifest_path = dir + "/cohort/manifest.csv";
  sv.out_csv = dir + "/summary.csv";
  sv.univariate_csv = dir + "/univariate.csv";
  sv.extractor_set = "A3";
  sv.ccc_threshold = 0.0;
  sv.feature_count = 2;
  sv.repetitions = 4;
  sv.folds = 5;
  sv.seed = 7;
  sv.workers = 2;
  cmd_survival(sv);

  CsvTable summary = read_csv(sv.out_csv);
  REQUIRE(summary.rows.size() == 1);
  CHECK(summary.header == std::vector<std::string>{"extractor", "ccc_threshold", "n_features",
                                                   "mean_test_cindex", "ci_lo", "ci_hi",
                                                   "mean_train_cindex", "liver_fraction"});
  double mean_test = parse_double(summary.rows[0][3], "mean_test_cindex");
  CHECK(mean_test >= 0.0);
  CHECK(mean_test <= 1.0);
  CHECK(fs::exists(sv.univariate_csv));

  SUBCASE("a multi-cell run matrix emits one summary row per cell in grid order") {
    std::ofstream grid(dir + "/grid.json");
    grid << R"({"extractor_sets": ["A3", "all"], "ccc_thresholds": [0, 0.8],
                "feature_counts": [1, 2]})";
    grid.close();
    SurvivalOptions gv = sv;
    gv.extractor_set.reset();
    gv.ccc_threshold.reset();
    gv.feature_count.reset();
    gv.grid_file = dir + "/grid.json";
    gv.repro_csv = dir + "/repro_stub.csv";
    gv.out_csv = dir + "/grid_summary.csv";
    gv.univariate_csv.clear();

    // CCC stub so the 0.8 threshold has something to read
    auto uni = read_univariate_csv(sv.univariate_csv);
    SpectrumResult stub;
    Rng rng(9);
    for (const auto& u : uni) {
      GeneralizedRow g;
      g.key = u.key;
      g.result.ccc = rng.uniform01();
      stub.generalized.push_back(g);
    }
    write_repro_csv(stub, gv.repro_csv);

    cmd_survival(gv);
    CsvTable t = read_csv(gv.out_csv);
    REQUIRE(t.rows.size() == 8);
    CHECK(t.rows[0][0] == "A3");
    CHECK(t.rows[4][0] == "all");
    CHECK(t.rows[0][1] == "0");
    CHECK(t.rows[2][1] == "0.8");
    CHECK(t.rows[0][2] == "1");
    CHECK(t.rows[1][2] == "2");
  }

  SUBCASE("same seed and different workers reproduce the summary byte for byte") {
    SurvivalOptions sv1 = sv;
    sv1.out_csv = dir + "/summary_w1.csv";
    sv1.univariate_csv.clear();
    sv1.workers = 1;
    cmd_survival(sv1);
    CHECK(test::read_file(sv1.out_csv) == test::read_file(sv.out_csv));
  }

  SUBCASE("analyze renders reports from the two spectra") {
    ReproOptions rp;
    rp.feature_csv = ex.out_csv;  // single-recon cohort: no thickness pairs
    rp.out_csv = dir + "/repro.csv";
    // survival cohorts have one thickness; repro needs the grid, so reuse the
    // univariate file against a synthetic repro run instead
    AnalyzeOptions an;
    an.univariate_csv = sv.univariate_csv;
    an.out_dir = dir + "/reports";

    // make a small repro CSV matching the same features
    auto uni = read_univariate_csv(sv.univariate_csv);
    SpectrumResult fake;
    Rng rng(4);
    for (const auto& u : uni) {
      GeneralizedRow g;
      g.key = u.key;
      g.result.ccc = rng.uniform01();
      fake.generalized.push_back(g);
    }
    write_repro_csv(fake, rp.out_csv);
    an.repro_csv = rp.out_csv;
    cmd_analyze(an);
    CHECK(fs::exists(dir + "/reports/pareto_front.csv"));
    CHECK(fs::exists(dir + "/reports/ccc_heatmap.svg"));
    CHECK(fs::exists(dir + "/reports/cluster_assignments.csv"));
  }
}

TEST_CASE("the default run matrix enumerates 9 x 5 x 7 = 315 cells") {
  std::vector<std::string> eight = {"A2", "A3", "L2", "L2i", "L3", "S2", "S2i", "S3"};
  SurvivalGrid grid = default_survival_grid(eight);
  CHECK(grid.extractor_sets.size() == 9);  // the eight settings plus pooled "all"
  CHECK(grid.ccc_thresholds == std::vector<double>{0.0, 0.8, 0.85, 0.9, 0.95});
  CHECK(grid.feature_counts == std::vector<int>{1, 2, 4, 8, 16, 32, 64});
  CHECK(grid.cell_count() == 315);

  SUBCASE("a JSON run matrix overrides the defaults") {
    auto dir = test::temp_dir("cli_grid");
    std::ofstream out(dir + "/grid.json");
    out << R"({"extractor_sets": ["all", "L2i"], "ccc_thresholds": [0, 0.85],
               "feature_counts": [4]})";
    out.close();
    SurvivalGrid g = load_survival_grid(dir + "/grid.json", eight);
    CHECK(g.cell_count() == 4);
    CHECK(g.extractor_sets == std::vector<std::string>{"all", "L2i"});
  }
}

TEST_CASE("a positive CCC threshold without repro input is a usage error") {
  auto dir = test::temp_dir("cli_thr");
  write_mini_spec(dir + "/spec.json", 12, true);
  SynthOptions synth;
  synth.spec_path = dir + "/spec.json";
  synth.out_dir = dir + "/cohort";
  cmd_synth(synth);
  ExtractOptions ex;
  ex.manifest_path = dir + "/cohort/manifest.csv";
  ex.settings = "A3";
  ex.out_csv = dir + "/features.csv";
  cmd_extract(ex);

  SurvivalOptions sv;
  sv.feature_csv = ex.out_csv;
  sv.manifest_path = ex.manifest_path;
  sv.out_csv = dir + "/summary.csv";
  sv.extractor_set = "A3";
  sv.ccc_threshold = 0.85;  // no --repro given
  sv.feature_count = 2;
  sv.repetitions = 2;
  sv.folds = 3;
  try {
    cmd_survival(sv);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::argument);
  }
}

TEST_CASE("unknown setting name lists the valid ones") {
  ExtractOptions ex;
  ex.manifest_path = "/nonexistent/manifest.csv";
  ex.settings = "banana";
  ex.out_csv = "/tmp/never.csv";
  CHECK_THROWS_WITH_AS(cmd_extract(ex), doctest::Contains("valid"), Error);
}

TEST_CASE("binary exit codes: 0 success, 1 usage, 2 data") {
  auto dir = test::temp_dir("cli_exit");
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("") == 1);                       // missing subcommand
  CHECK(run_binary("extract --settings A3") == 1);  // missing required options
  CHECK(run_binary("extract --manifest /nope.csv --out " + dir + "/o.csv") == 2);
  write_mini_spec(dir + "/bad_spec.json", 1, false);  // n_subjects < 2
  CHECK(run_binary("synth --spec " + dir + "/bad_spec.json --out " + dir + "/c") == 2);

  write_mini_spec(dir + "/spec.json", 2, false);
  CHECK(run_binary("synth --spec " + dir + "/spec.json --out " + dir + "/cohort --workers 2") == 0);

  SUBCASE("rerun with the same seed produces an identical manifest") {
    std::string before = test::read_file(dir + "/cohort/manifest.csv");
    CHECK(run_binary("synth --spec " + dir + "/spec.json --out " + dir + "/cohort2 --workers 1") ==
          0);
    std::string after = test::read_file(dir + "/cohort2/manifest.csv");
    // paths inside are relative, so the two manifests match byte for byte
    CHECK(before == after);
  }
}
