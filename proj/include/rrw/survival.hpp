#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrw/repro.hpp"

namespace rrw {

struct SurvivalRecord {
  std::string subject_id;
  double time = 0.0;  // days, > 0
  bool event = false; // true = death observed
};

// Harrell's concordance over comparable pairs: the pair is usable when the
// subject with the strictly smaller observed time had an event; risk ties
// count 0.5.
double harrell_cindex(std::span<const double> risk, std::span<const SurvivalRecord> outcomes);

// Folding rule for univariate discrimination: (max(c, 1-c), negated?).
std::pair<double, bool> fold_cindex(double c);

struct CoxModel {
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  std::vector<double> wald_p;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Cox proportional hazards with the Efron tie correction, fitted by damped
// Newton iterations. Columns must be non-constant; a singular information
// matrix raises a collinearity error naming the offending column.
CoxModel cox_fit(const Eigen::MatrixXd& X, std::span<const SurvivalRecord> outcomes,
                 int max_iterations = 100);

// Efron partial log-likelihood and its analytic gradient at beta (exposed for
// the finite-difference checks).
double cox_log_likelihood(const Eigen::MatrixXd& X, std::span<const SurvivalRecord> outcomes,
                          const Eigen::VectorXd& beta);
Eigen::VectorXd cox_score(const Eigen::MatrixXd& X, std::span<const SurvivalRecord> outcomes,
                          const Eigen::VectorXd& beta);

// Greedy MRMR: first pick is the max-relevance feature; later picks maximize
// relevance(f) - mean |pearson(f, s)| over the selected set. Ties break on
// higher relevance, then lexicographic id. Returns min(k, #candidates) column
// indices in selection order.
std::vector<int> mrmr_select(const Eigen::MatrixXd& X, const std::vector<double>& relevance,
                             int k, const std::vector<std::string>& ids);

struct CVConfig {
  double ccc_threshold = 0.0;           // 0 disables the reproducibility filter
  int feature_count = 4;
  int folds = 10;
  int repetitions = 100;
  double univariate_cindex_min = 0.55;
  double univariate_p_max = 0.1;
  std::uint64_t rng_seed = 17;
  bool record_fold_selections = false;
};

struct CvFeature {
  std::string id;  // "roi:extractor:family.name" (lexicographic tie-break key)
  RoiName roi = RoiName::tumor;
  std::string extractor;
  int feature = 0;  // registry index
  std::optional<double> ccc;
  std::vector<std::optional<double>> values;  // aligned with CvDataset::outcomes
};

struct CvDataset {
  std::vector<SurvivalRecord> outcomes;
  std::vector<CvFeature> features;
};

struct PerformanceSummary {
  std::vector<double> test_cindex;   // one per repetition (pooled out-of-fold risks)
  std::vector<double> train_cindex;  // one per repetition (mean over folds)
  double mean_test = 0.0, ci_lo = 0.0, ci_hi = 0.0, mean_train = 0.0;
  double liver_fraction = 0.0;  // of all selected features across folds and repetitions
  long long folds_total = 0;
  long long null_folds = 0;  // folds where no feature survived the filters
  std::map<std::string, long long> selection_counts;  // feature id -> folds selected
  // per-fold selected feature indices, repetition-major (only when
  // CVConfig::record_fold_selections is set)
  std::vector<std::vector<int>> fold_selections;
};

// The repeated, stratified 10-fold CV protocol: per training fold,
// CCC threshold -> univariate C-index filter -> univariate Cox p filter ->
// MRMR -> multivariable Cox (features z-scored by training statistics);
// per-repetition test C-index from pooled out-of-fold risks.
PerformanceSummary run_cv(const CvDataset& data, const CVConfig& config);

struct UnivariateRow {
  ReproKey key;
  double cindex = 0.0;  // folded
  bool negated = false;
  long n_used = 0;
};

// Whole-cohort univariate spectrum (per feature, ROI, extractor); subjects
// with a missing value are skipped per feature.
std::vector<UnivariateRow> univariate_spectrum(const CvDataset& data);

void write_univariate_csv(const std::vector<UnivariateRow>& rows, const std::string& path);
std::vector<UnivariateRow> read_univariate_csv(const std::string& path);

// Builds the CV dataset from a long feature table, the generalized CCC map
// and per-subject outcomes. extractor_set: one setting name or "all" (pooled).
CvDataset build_cv_dataset(const FeatureTable& table, const std::map<ReproKey, double>& ccc,
                           const std::vector<SurvivalRecord>& outcomes,
                           const std::string& extractor_set);

}  // namespace rrw
