#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "rrw/repro.hpp"
#include "rrw/survival.hpp"

namespace rrw {

// Agglomerative dendrogram (scipy-style node ids: leaves 0..n-1, merge i
// creates node n+i). Heights are Ward distances and are non-decreasing.
struct Dendrogram {
  struct Merge {
    int a = 0, b = 0;
    double height = 0.0;
    int size = 0;
  };
  int n_leaves = 0;
  std::vector<Merge> merges;
  std::vector<int> leaf_order;  // after optimal leaf ordering
  bool leaf_order_exact = true; // false above the exact-DP size cutoff
};

// Ward linkage over Euclidean distances (Lance-Williams update), with exact
// optimal leaf ordering for n <= 2000 leaves (dendrogram order above that).
Dendrogram ward_cluster(const Eigen::MatrixXd& rows);

struct ParetoPoint {
  int feature = 0;  // registry index
  RoiName roi = RoiName::tumor;
  std::string extractor;
  double ccc = 0.0;
  double cindex = 0.0;
};

// Indices of the Pareto-efficient points (maximizing both coordinates).
// Equal points do not dominate each other; duplicates of an efficient point
// are all retained. Output sorted by descending ccc.
std::vector<std::size_t> pareto_front(const std::vector<ParetoPoint>& points);

struct JoinedCell {
  double ccc = 0.0;
  double cindex = 0.0;
};

// (feature, roi) -> extractor -> (ccc, cindex), the join of the two spectra.
using JoinedResults = std::map<std::pair<int, RoiName>, std::map<std::string, JoinedCell>>;

JoinedResults join_results(const std::vector<GeneralizedRow>& repro,
                           const std::vector<UnivariateRow>& univariate);

struct ExtractorCounts {
  // per (extractor, roi): number of features where the extractor attains the
  // best CCC / best C-index / lies on the per-feature Pareto front, plus the
  // same counts with exact-duplicate (ccc, cindex) groups counted once.
  std::map<std::pair<std::string, RoiName>, long> best_ccc, best_cindex, pareto;
  std::map<std::pair<std::string, RoiName>, long> best_ccc_dedup, best_cindex_dedup, pareto_dedup;
};

// Per-feature fronts across extractors and the global count table behind the
// bar plots.
struct FrontAnalysis {
  std::map<std::pair<int, RoiName>, std::vector<std::string>> per_feature_front;
  ExtractorCounts counts;
  // global front over all (feature, roi, extractor) points
  std::vector<ParetoPoint> global_front;
  std::map<std::pair<std::string, RoiName>, long> global_front_counts;
};

FrontAnalysis per_feature_extractor_fronts(const JoinedResults& joined);

struct ReportPaths {
  std::string ccc_heatmap_svg;        // both ROIs joined as columns
  std::string cindex_tumor_svg;
  std::string cindex_liver_svg;
  std::string cluster_csv;            // leaf orders for every heatmap
  std::string pareto_csv;
  std::string pareto_svg;
  std::string front_counts_csv;
};

// Renders the analysis artifacts (CSV + SVG); outputs are deterministic for
// identical inputs.
ReportPaths emit_reports(const std::vector<GeneralizedRow>& repro,
                         const std::vector<UnivariateRow>& univariate,
                         const std::string& out_dir);

}  // namespace rrw
