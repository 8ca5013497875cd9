#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrw/feature_table.hpp"

namespace rrw {

// Lin's concordance correlation coefficient with population (1/n) moments:
//   CCC = 2 cov(x,y) / (var x + var y + (mean x - mean y)^2).
// Both series constant and equal -> 1; constant and unequal -> 0.
// sample_moments switches to (1/(n-1)) moments for cross-checking other tools.
double pairwise_ccc(std::span<const double> x, std::span<const double> y,
                    bool sample_moments = false);

struct VarianceComponents {
  double subject = 0.0;
  double thickness = 0.0;
  double asir = 0.0;
  double error = 0.0;
};

struct GeneralizedCcc {
  double ccc = 0.0;
  VarianceComponents components;
  std::vector<std::string> flags;  // e.g. clamped negative estimates
};

struct GridObservation {
  std::string subject;
  double thickness = 0.0;
  std::optional<double> asir;
  double value = 0.0;
};

// Generalized CCC from a balanced (subject x thickness x ASiR) table: random
// subject effect, fixed thickness and ASiR effects, balanced-ANOVA method of
// moments. sigma2_a is estimated and reported but excluded from the
// denominator: CCC = sigma2_s / (sigma2_s + sigma2_t + sigma2_e).
GeneralizedCcc generalized_ccc(const std::vector<GridObservation>& records);

struct WilcoxonResult {
  double statistic = 0.0;  // W+ (sum of ranks of positive differences)
  double p_value = 1.0;
  int n_nonzero = 0;
  bool all_zero = false;
  bool exact = false;  // exact null enumeration (n <= 25) vs normal approximation
};

// Paired two-sided Wilcoxon signed-rank test; zero differences dropped, ties
// mid-ranked. force_* pins the method for cross-validation tests.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    std::optional<bool> force_exact = std::nullopt);

struct ReproKey {
  RoiName roi = RoiName::tumor;
  std::string extractor;
  int feature = 0;

  auto tie() const { return std::make_tuple(static_cast<int>(roi), extractor, feature); }
  bool operator<(const ReproKey& o) const { return tie() < o.tie(); }
};

struct GeneralizedRow {
  ReproKey key;
  GeneralizedCcc result;
};

struct PairwiseRow {
  ReproKey key;
  double thickness_a = 0.0, thickness_b = 0.0;
  double ccc = 0.0;
};

struct SpectrumResult {
  std::vector<GeneralizedRow> generalized;
  std::vector<PairwiseRow> pairwise;  // at the reference ASiR level
  std::vector<ReproKey> excluded;     // cells with missing values in the grid
  double reference_asir = 0.0;
};

// One generalized CCC per (feature, ROI, extractor) over the full
// reconstruction grid, plus pairwise CCCs per slice-thickness pair restricted
// to the reference ASiR level.
SpectrumResult ccc_spectrum(const FeatureTable& table, std::optional<double> reference_asir);

void write_repro_csv(const SpectrumResult& s, const std::string& path);

// Generalized rows only (what the survival CV consumes).
std::map<ReproKey, double> read_generalized_ccc_csv(const std::string& path);

// Full generalized rows with variance components (what the analysis consumes).
std::vector<GeneralizedRow> read_generalized_rows_csv(const std::string& path);

}  // namespace rrw
