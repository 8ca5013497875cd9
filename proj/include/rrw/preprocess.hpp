#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rrw/volume.hpp"

namespace rrw {

enum class Interpolator { bspline3, trilinear, nearest };
enum class Aggregation { agg2_5D, agg3D };

std::string interpolator_str(Interpolator i);
Interpolator parse_interpolator(const std::string& s);
std::string aggregation_str(Aggregation a);
Aggregation parse_aggregation(const std::string& s);

// One feature-extraction setting: resampling triple + aggregation mode plus
// discretization/resegmentation parameters. z_mm empty means "preserve".
struct ExtractionConfig {
  std::string name;
  double in_plane_mm = 1.0;
  std::optional<double> z_mm;
  Aggregation aggregation = Aggregation::agg3D;
  int bin_count = 24;
  double resegment_lo = -50.0;
  double resegment_hi = 350.0;
  Interpolator image_interpolator = Interpolator::bspline3;
  Interpolator mask_interpolator = Interpolator::nearest;

  void validate() const;
};

// The eight built-in settings (L2i, L2, L3, S2i, S2, S3, A2, A3).
const std::vector<ExtractionConfig>& builtin_configs();
const ExtractionConfig& builtin_config(const std::string& name);
bool is_builtin_config(const std::string& name);

// Parses a JSON settings file ({"name": {"in_plane_mm":..., ...}, ...}) and
// returns the custom configs; built-in names may not be redefined.
std::vector<ExtractionConfig> load_config_file(const std::string& path);

// Resolves a comma-separated settings list ("all" or names) against built-ins + customs.
std::vector<ExtractionConfig> resolve_settings(const std::string& list,
                                               const std::vector<ExtractionConfig>& custom);

struct TargetSpacing {
  std::array<double, 3> mm;        // per axis; z ignored when preserve_z
  bool preserve_z = false;
};

// Output grid for a resample: spacing = target, dims = ceil(extent/target),
// grid centers aligned so the physical center of the input volume is preserved.
VolumeGeometry resample_geometry(const VolumeGeometry& in, const TargetSpacing& target);

ImageVolume resample(const ImageVolume& v, const TargetSpacing& target, Interpolator interp);
MaskVolume resample(const MaskVolume& m, const TargetSpacing& target);

// Resamples onto an explicit output grid (image and mask of one ROI must land
// on the identical grid).
ImageVolume resample_to(const ImageVolume& v, const VolumeGeometry& out_geom, Interpolator interp);
MaskVolume resample_to(const MaskVolume& m, const VolumeGeometry& out_geom);

struct ResegmentResult {
  MaskVolume mask;
  long removed = 0;
  long kept = 0;
};

// Keeps mask voxels whose HU lies inside [lo, hi]; empty result is an error.
ResegmentResult resegment(const ImageVolume& image, const MaskVolume& mask, double lo, double hi);

// ROI discretized to integer gray levels, cropped to its bounding box, carrying
// everything the feature engine needs (levels, raw HU, slice indices).
struct DiscretizedROI {
  std::array<int, 3> box_dims{0, 0, 0};
  std::array<int, 3> box_offset{0, 0, 0};   // position of the box in the resampled grid
  std::array<double, 3> spacing{1, 1, 1};   // resampled spacing (voxel volume for features)
  std::vector<int> levels;                  // box grid; 0 = outside ROI, 1..n_levels inside
  int n_levels = 0;                         // N_g (= bin_count unless the ROI is constant)
  long voxel_count = 0;
  double min_hu = 0.0, max_hu = 0.0, mean_hu = 0.0;
  std::vector<double> roi_values;           // raw resegmented HU, scan order (z,y,x ascending)
  std::vector<int> roi_levels;              // levels matching roi_values

  int level_at(int x, int y, int z) const {
    return levels[static_cast<std::size_t>(x) +
                  static_cast<std::size_t>(box_dims[0]) *
                      (static_cast<std::size_t>(y) +
                       static_cast<std::size_t>(box_dims[1]) * static_cast<std::size_t>(z))];
  }
};

// Fixed-bin-count discretization over the in-ROI [min, max] HU range:
// w = (max-min)/bin_count, level(v) = min(floor((v-min)/w)+1, bin_count);
// a constant ROI collapses to a single level.
DiscretizedROI discretize(const ImageVolume& image, const MaskVolume& mask, int bin_count);

// Full preprocessing for one (image, ROI mask, config): resample image and mask
// onto the config's grid, resegment, discretize.
DiscretizedROI prepare_roi(const ImageVolume& image, const MaskVolume& mask,
                           const ExtractionConfig& cfg);

}  // namespace rrw
