#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "rrw/error.hpp"

namespace rrw {

// Axis-aligned voxel grid. origin is the physical position (mm) of the center of
// voxel (0,0,0); values are stored x-fastest.
struct VolumeGeometry {
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }

  double voxel_volume() const { return spacing[0] * spacing[1] * spacing[2]; }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (dims[a] < 1) fail(ErrorKind::geometry, "volume dims must be >= 1");
      if (!(spacing[a] > 0.0)) fail(ErrorKind::geometry, "volume spacing must be > 0");
    }
  }

  bool operator==(const VolumeGeometry&) const = default;
};

inline bool geometry_close(const VolumeGeometry& a, const VolumeGeometry& b, double tol = 1e-5) {
  if (a.dims != b.dims) return false;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(a.spacing[i] - b.spacing[i]) > tol) return false;
    if (std::abs(a.origin[i] - b.origin[i]) > tol) return false;
  }
  return true;
}

// Hounsfield-unit image; values real after any on-disk slope/intercept scaling.
struct ImageVolume {
  VolumeGeometry geom;
  std::vector<double> values;

  double at(int x, int y, int z) const { return values[geom.index(x, y, z)]; }
  double& at(int x, int y, int z) { return values[geom.index(x, y, z)]; }

  void validate() const {
    geom.validate();
    if (values.size() != geom.voxel_count())
      fail(ErrorKind::geometry, "image value count does not match dims");
  }
};

// Binary ROI mask on the same grid as its paired image.
struct MaskVolume {
  VolumeGeometry geom;
  std::vector<std::uint8_t> values;

  std::uint8_t at(int x, int y, int z) const { return values[geom.index(x, y, z)]; }
  std::uint8_t& at(int x, int y, int z) { return values[geom.index(x, y, z)]; }

  std::size_t count_set() const {
    std::size_t n = 0;
    for (auto v : values) n += v;
    return n;
  }

  void validate() const {
    geom.validate();
    if (values.size() != geom.voxel_count())
      fail(ErrorKind::geometry, "mask value count does not match dims");
    for (auto v : values)
      if (v > 1) fail(ErrorKind::value, "mask values must be 0 or 1");
  }
};

}  // namespace rrw
