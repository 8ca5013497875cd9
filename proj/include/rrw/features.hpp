#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rrw/preprocess.hpp"

namespace rrw {

enum class FeatureFamily { firstorder, glcm, glrlm, glszm, gldm, ngtdm };

constexpr int kFirstOrderCount = 18;
constexpr int kGlcmCount = 24;
constexpr int kGlrlmCount = 16;
constexpr int kGlszmCount = 16;
constexpr int kGldmCount = 14;
constexpr int kNgtdmCount = 5;
constexpr int kFeatureCount = 93;

struct FeatureDef {
  FeatureFamily family;
  const char* name;
};

// The fixed 93-feature registry; index order is the canonical output order.
const std::array<FeatureDef, kFeatureCount>& feature_registry();
std::string family_str(FeatureFamily f);
FeatureFamily parse_family(const std::string& s);
// Returns -1 when unknown.
int feature_index(const std::string& family, const std::string& name);
// [first, last) registry index range of a family.
std::pair<int, int> family_range(FeatureFamily f);

using Offset = std::array<int, 3>;  // (dx, dy, dz) voxel offset

// Unique 3D directions at Chebyshev distance 1 (13 of 26, up to sign).
const std::vector<Offset>& directions_3d();
// Unique in-plane directions (4).
const std::vector<Offset>& directions_in_plane();

enum class Scope { single_slice, merged_slices, volume };

// A gray-level texture matrix. Counts are integral for GLCM/GLRLM/GLSZM/GLDM;
// the NGTDM is stored as an n_levels x 2 matrix of (n_i, s_i).
struct TextureMatrix {
  FeatureFamily family = FeatureFamily::glcm;
  Scope scope = Scope::volume;
  std::optional<Offset> direction;
  int rows = 0, cols = 0;
  std::vector<double> data;  // row-major

  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double total() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
  }
};

// Builds one texture matrix. direction is required for GLCM/GLRLM and rejected
// otherwise; non-volume scopes accept in-plane directions only. slice_index
// selects the axial slice (box-relative) for single_slice scope.
TextureMatrix build_texture_matrix(const DiscretizedROI& roi, FeatureFamily family,
                                   std::optional<Offset> direction, Scope scope,
                                   int slice_index = -1);

// Feature values for one texture family under the requested aggregation,
// ordered like the registry block of the family. Directional families average
// per-direction feature values (IBSI ITBB in 3D, JJUI in 2.5D); non-directional
// families use a single volumetric or slice-merged matrix (KOBO / 62GR).
std::vector<std::optional<double>> aggregate_features(const DiscretizedROI& roi,
                                                      FeatureFamily family, Aggregation agg);

// The 18 first-order features from the resegmented raw HU values; entropy and
// uniformity use the discretized histogram.
std::vector<std::optional<double>> first_order_features(const DiscretizedROI& roi);

struct FeatureVector {
  std::string extractor;
  std::string roi;
  std::array<std::optional<double>, kFeatureCount> values;
};

struct RoiSpec {
  std::string name;
  const MaskVolume* mask = nullptr;
};

struct RoiExtraction {
  std::string roi;
  std::optional<FeatureVector> features;       // absent when extraction failed
  std::vector<std::string> missing_features;   // undefined values (zero denominators etc.)
  std::string error;                           // per-ROI failure message
};

// Runs the full preprocessing + feature pipeline for each ROI of one image.
// A per-ROI failure (e.g. empty ROI after resegmentation) is recorded without
// affecting the other ROIs.
std::vector<RoiExtraction> extract(const ImageVolume& image, const std::vector<RoiSpec>& rois,
                                   const ExtractionConfig& cfg);

// Builds a DiscretizedROI directly from a level grid (0 = outside the ROI);
// raw values are set to the level value. Used by tests and benchmarks.
DiscretizedROI roi_from_levels(const std::array<int, 3>& dims, const std::vector<int>& levels,
                               int n_levels, const std::array<double, 3>& spacing = {1.0, 1.0, 1.0});

}  // namespace rrw
