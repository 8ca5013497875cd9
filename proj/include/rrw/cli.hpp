#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rrw {

// Command entry points used by the rrw binary and by the tests (exit-code
// mapping lives in the binary).

struct SynthOptions {
  std::string spec_path;  // empty = built-in defaults
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_subjects;
  bool survival = false;       // enable outcome generation
  bool reference_only = false; // single reconstruction per subject
  int workers = 0;
};
void cmd_synth(const SynthOptions& opt);

struct ExtractOptions {
  std::string manifest_path;
  std::string settings = "all";  // comma-separated names or "all"
  std::string config_file;       // optional JSON with custom settings
  std::string out_csv;
  int workers = 0;
};
void cmd_extract(const ExtractOptions& opt);

struct ReproOptions {
  std::string feature_csv;
  std::string out_csv;
  std::string wilcoxon_csv;  // optional; empty skips the CCC-comparison table
  std::optional<double> reference_asir = 20.0;
};
void cmd_repro(const ReproOptions& opt);

struct SurvivalOptions {
  std::string feature_csv;
  std::string manifest_path;     // provides the outcomes
  std::string repro_csv;         // optional; required when a threshold > 0 is used
  std::string out_csv;           // grid summary
  std::string univariate_csv;    // optional output of the univariate spectrum
  std::string grid_file;         // optional JSON run-matrix; empty = the default grid
  // single-cell override (all three must be set)
  std::optional<std::string> extractor_set;
  std::optional<double> ccc_threshold;
  std::optional<int> feature_count;
  int repetitions = 100;
  int folds = 10;
  std::uint64_t seed = 17;
  int workers = 0;
  int top = 10;  // rows echoed to stdout
};
void cmd_survival(const SurvivalOptions& opt);

struct AnalyzeOptions {
  std::string repro_csv;
  std::string univariate_csv;
  std::string out_dir;
};
void cmd_analyze(const AnalyzeOptions& opt);

// The survival run matrix. The default grid is every extractor in the feature
// table plus the pooled "all" set, CCC thresholds {0, .8, .85, .9, .95} and
// feature counts {1, 2, 4, 8, 16, 32, 64}.
struct SurvivalGrid {
  std::vector<std::string> extractor_sets;
  std::vector<double> ccc_thresholds{0.0, 0.8, 0.85, 0.9, 0.95};
  std::vector<int> feature_counts{1, 2, 4, 8, 16, 32, 64};

  std::size_t cell_count() const {
    return extractor_sets.size() * ccc_thresholds.size() * feature_counts.size();
  }
};

SurvivalGrid default_survival_grid(const std::vector<std::string>& table_extractors);
SurvivalGrid load_survival_grid(const std::string& path,
                                const std::vector<std::string>& table_extractors);

}  // namespace rrw
