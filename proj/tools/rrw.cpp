#include <CLI11.hpp>
#include <iostream>

#include "rrw/cli.hpp"
#include "rrw/error.hpp"

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

int main(int argc, char** argv) {
  CLI::App app{"radiomics reproducibility workbench"};
  app.require_subcommand(1);

  rrw::SynthOptions synth;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic cohort");
  s_synth->add_option("--spec", synth.spec_path, "synth spec JSON (defaults when omitted)");
  s_synth->add_option("--out", synth.out_dir, "output cohort directory")->required();
  std::uint64_t seed_val = 0;
  auto* seed_opt = s_synth->add_option("--seed", seed_val, "override the spec RNG seed");
  int n_subj = 0;
  auto* n_opt = s_synth->add_option("--subjects", n_subj, "override the subject count");
  s_synth->add_flag("--survival", synth.survival, "generate survival outcomes");
  s_synth->add_flag("--reference-only", synth.reference_only,
                    "single reference reconstruction per subject");
  s_synth->add_option("--workers", synth.workers, "worker threads (0 = all cores)");

  rrw::ExtractOptions extract;
  auto* s_extract = app.add_subcommand("extract", "extract features for a cohort");
  s_extract->add_option("--manifest", extract.manifest_path, "cohort manifest CSV")->required();
  s_extract->add_option("--settings", extract.settings,
                        "comma-separated setting names or 'all'");
  s_extract->add_option("--config", extract.config_file, "custom settings JSON");
  s_extract->add_option("--out", extract.out_csv, "output feature CSV (resumable)")->required();
  s_extract->add_option("--workers", extract.workers, "worker threads (0 = all cores)");

  rrw::ReproOptions repro;
  auto* s_repro = app.add_subcommand("repro", "reproducibility (CCC) analysis");
  s_repro->add_option("--features", repro.feature_csv, "feature CSV from extract")->required();
  s_repro->add_option("--out", repro.out_csv, "output repro CSV")->required();
  s_repro->add_option("--wilcoxon", repro.wilcoxon_csv, "output Wilcoxon comparison CSV");
  double ref_asir = 20.0;
  s_repro->add_option("--reference-asir", ref_asir, "reference ASiR percent for pairwise CCC");

  rrw::SurvivalOptions survival;
  auto* s_surv = app.add_subcommand("survival", "univariate + cross-validated survival models");
  s_surv->add_option("--features", survival.feature_csv, "feature CSV (survival cohort)")
      ->required();
  s_surv->add_option("--manifest", survival.manifest_path, "manifest with outcomes")->required();
  s_surv->add_option("--repro", survival.repro_csv, "repro CSV with generalized CCCs");
  s_surv->add_option("--out", survival.out_csv, "output summary CSV")->required();
  s_surv->add_option("--univariate", survival.univariate_csv, "output univariate C-index CSV");
  s_surv->add_option("--grid", survival.grid_file, "run-matrix JSON (default: the full grid)");
  std::string cell_extractor;
  double cell_threshold = 0.0;
  int cell_features = 0;
  auto* o_ext = s_surv->add_option("--extractor-set", cell_extractor,
                                   "single-cell mode: extractor name or 'all'");
  auto* o_thr = s_surv->add_option("--ccc-threshold", cell_threshold, "single-cell mode");
  auto* o_k = s_surv->add_option("--n-features", cell_features, "single-cell mode");
  s_surv->add_option("--repetitions", survival.repetitions, "CV repetitions");
  s_surv->add_option("--folds", survival.folds, "CV folds");
  s_surv->add_option("--seed", survival.seed, "master RNG seed");
  s_surv->add_option("--workers", survival.workers, "worker threads (0 = all cores)");
  s_surv->add_option("--top", survival.top, "rows echoed to stdout");

  rrw::AnalyzeOptions analyze;
  auto* s_analyze = app.add_subcommand("analyze", "clustering, Pareto fronts and reports");
  s_analyze->add_option("--repro", analyze.repro_csv, "repro CSV")->required();
  s_analyze->add_option("--univariate", analyze.univariate_csv, "univariate C-index CSV")
      ->required();
  s_analyze->add_option("--out", analyze.out_dir, "output report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*s_synth) {
      if (*seed_opt) synth.seed = seed_val;
      if (*n_opt) synth.n_subjects = n_subj;
      rrw::cmd_synth(synth);
    } else if (*s_extract) {
      rrw::cmd_extract(extract);
    } else if (*s_repro) {
      repro.reference_asir = ref_asir;
      rrw::cmd_repro(repro);
    } else if (*s_surv) {
      if (*o_ext) survival.extractor_set = cell_extractor;
      if (*o_thr) survival.ccc_threshold = cell_threshold;
      if (*o_k) survival.feature_count = cell_features;
      rrw::cmd_survival(survival);
    } else if (*s_analyze) {
      rrw::cmd_analyze(analyze);
    }
  } catch (const rrw::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.numeric() ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
