#pragma once

// Internal interface between the texture kernels, the feature formulas and the
// aggregation layer. Not installed; tests use the public API or the serial
// reference implementation.

#include <cstdint>
#include <optional>
#include <vector>

#include "rrw/features.hpp"

namespace rrw::detail {

struct CountMatrix {
  int rows = 0, cols = 0;
  std::vector<long long> v;

  void init(int r, int c) {
    rows = r;
    cols = c;
    v.assign(static_cast<std::size_t>(r) * c, 0);
  }
  long long& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  long long at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  long long total() const {
    long long s = 0;
    for (long long x : v) s += x;
    return s;
  }
  // Drops all-zero trailing columns (run lengths / zone sizes above the max present).
  void trim_cols() {
    int last = 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (at(r, c)) last = std::max(last, c + 1);
    if (last == cols) return;
    CountMatrix t;
    t.init(rows, std::max(last, 1));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < t.cols; ++c) t.at(r, c) = at(r, c);
    *this = std::move(t);
  }
};

struct NgtdmAccumulator {
  std::vector<long long> n;  // per level
  std::vector<double> s;

  void init(int levels) {
    n.assign(levels, 0);
    s.assign(levels, 0.0);
  }
};

// OpenMP-parallel production kernels. slice_index is box-relative and only
// used for Scope::single_slice.
void glcm_kernel(const DiscretizedROI& roi, const Offset& dir, Scope scope, int slice_index,
                 CountMatrix& out);
void glrlm_kernel(const DiscretizedROI& roi, const Offset& dir, Scope scope, int slice_index,
                  CountMatrix& out);
void glszm_kernel(const DiscretizedROI& roi, Scope scope, int slice_index, CountMatrix& out);
void gldm_kernel(const DiscretizedROI& roi, Scope scope, int slice_index, CountMatrix& out);
void ngtdm_kernel(const DiscretizedROI& roi, Scope scope, int slice_index, NgtdmAccumulator& out);

// Feature formulas (one slot per registry entry of the family). n_levels is
// the ROI-wide N_g; voxel counts are those of the matrix scope.
std::vector<std::optional<double>> glcm_features(const CountMatrix& m, int n_levels);
std::vector<std::optional<double>> glrlm_features(const CountMatrix& m, long n_voxels);
std::vector<std::optional<double>> glszm_features(const CountMatrix& m, long n_voxels);
std::vector<std::optional<double>> gldm_features(const CountMatrix& m);
std::vector<std::optional<double>> ngtdm_features(const NgtdmAccumulator& a);

}  // namespace rrw::detail
