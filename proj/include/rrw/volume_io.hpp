#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rrw/volume.hpp"

namespace rrw {

// NIfTI-1 on-disk datatypes supported by this reader/writer.
enum class NiftiType { uint8 = 2, int16 = 4, float32 = 16 };

// Reads a single-file NIfTI-1 volume (.nii or .nii.gz). Little-endian only;
// datatypes uint8/int16/float32; the affine must be axis-aligned. Values are
// scaled by scl_slope/scl_inter when set.
ImageVolume read_image(const std::string& path);

// Same reader, but validates that the payload is binary and returns a mask.
MaskVolume read_mask(const std::string& path);

// Writes a volume as single-file NIfTI-1; a ".gz" suffix selects gzip output.
// Images default to float32 (int16 allowed for integral data); masks are uint8.
void write_volume(const ImageVolume& v, const std::string& path,
                  NiftiType datatype = NiftiType::float32);
void write_volume(const MaskVolume& m, const std::string& path);

enum class RoiName { tumor, liver };

std::string roi_name_str(RoiName r);
RoiName parse_roi_name(const std::string& s);

struct ManifestEntry {
  std::string subject_id;
  RoiName roi;
  std::string image_path;
  std::string mask_path;
  double slice_thickness_mm = 0.0;
  std::optional<double> asir_percent;
  std::optional<double> time_days;
  std::optional<bool> event;
};

// Cohort manifest binding images, masks, reconstruction parameters and outcomes.
// Relative image/mask paths are resolved against the manifest's directory.
struct CohortManifest {
  std::vector<ManifestEntry> entries;

  bool is_survival_cohort() const;
  std::vector<double> thickness_levels() const;           // sorted unique
  std::vector<std::optional<double>> asir_levels() const; // sorted unique; absent first
  std::vector<std::string> subjects() const;              // sorted unique
};

CohortManifest load_manifest(const std::string& path);
void write_manifest(const CohortManifest& m, const std::string& path);

}  // namespace rrw
