#pragma once

// Serial reference implementation of the texture engine: naive enumeration,
// clarity over speed. Kept as the independent oracle for the production
// kernels (tests) and as the baseline of the benchmark target. Must not call
// into the production kernel or formula code.

#include "../texture_internal.hpp"

namespace rrw::ref {

using detail::CountMatrix;
using detail::NgtdmAccumulator;

// Full O(N^2) voxel-pair scan per direction, symmetric accumulation.
CountMatrix glcm(const DiscretizedROI& roi, const Offset& dir);

// Maximal runs found by walking each voxel back to its run start and
// deduplicating starts.
CountMatrix glrlm(const DiscretizedROI& roi, const Offset& dir);

// Zones by iterative min-label propagation until fixpoint.
CountMatrix glszm(const DiscretizedROI& roi, bool three_d);

// Per-voxel dependence counted by scanning all voxels for Chebyshev-1 equals.
CountMatrix gldm(const DiscretizedROI& roi, bool three_d);

// Neighborhood means by scanning all voxels for Chebyshev-1 membership.
NgtdmAccumulator ngtdm(const DiscretizedROI& roi, bool three_d);

// Literal transcriptions of the feature definitions (independent of the
// production formula code).
std::vector<std::optional<double>> glcm_features(const CountMatrix& m, int n_levels);
std::vector<std::optional<double>> glrlm_features(const CountMatrix& m, long n_voxels);
std::vector<std::optional<double>> glszm_features(const CountMatrix& m, long n_voxels);
std::vector<std::optional<double>> gldm_features(const CountMatrix& m);
std::vector<std::optional<double>> ngtdm_features(const NgtdmAccumulator& a);
std::vector<std::optional<double>> first_order(const DiscretizedROI& roi);

// Family aggregation via the reference matrices and formulas.
std::vector<std::optional<double>> aggregate(const DiscretizedROI& roi, FeatureFamily family,
                                             Aggregation agg);
// All 93 features through the reference path.
std::array<std::optional<double>, kFeatureCount> all_features(const DiscretizedROI& roi,
                                                              Aggregation agg);

}  // namespace rrw::ref
