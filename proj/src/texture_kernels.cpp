#include <algorithm>

#include "texture_internal.hpp"

// Production texture-matrix kernels. The inner loops are data-parallel over
// axial slices; integer partial matrices merge exactly, and the one floating
// accumulation (NGTDM s_i) is reduced in fixed z order, so results are
// bit-identical for any thread count. A naive serial enumerator lives in
// src/reference/ and is compared against these kernels by the tests and the
// benchmark target.

namespace rrw::detail {

namespace {

struct Box {
  const DiscretizedROI* roi;
  int nx, ny, nz;

  explicit Box(const DiscretizedROI& r)
      : roi(&r), nx(r.box_dims[0]), ny(r.box_dims[1]), nz(r.box_dims[2]) {}

  bool inside(int x, int y, int z) const {
    return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz;
  }
  int level(int x, int y, int z) const { return roi->level_at(x, y, z); }
};

struct SliceRange {
  int z0, z1;
};

SliceRange slice_range(const Box& b, Scope scope, int slice_index) {
  if (scope == Scope::single_slice) {
    if (slice_index < 0 || slice_index >= b.nz)
      fail(ErrorKind::argument, "single_slice scope needs a valid slice index");
    return {slice_index, slice_index + 1};
  }
  return {0, b.nz};
}

}  // namespace

void glcm_kernel(const DiscretizedROI& roi, const Offset& dir, Scope scope, int slice_index,
                 CountMatrix& out) {
  Box b(roi);
  const int ng = roi.n_levels;
  out.init(ng, ng);
  auto [z0, z1] = slice_range(b, scope, slice_index);
  const int dx = dir[0], dy = dir[1], dz = dir[2];

  std::vector<CountMatrix> partial(z1 - z0);
#pragma omp parallel for schedule(static)
  for (int z = z0; z < z1; ++z) {
    CountMatrix& m = partial[z - z0];
    m.init(ng, ng);
    for (int y = 0; y < b.ny; ++y)
      for (int x = 0; x < b.nx; ++x) {
        int a = b.level(x, y, z);
        if (!a) continue;
        int qx = x + dx, qy = y + dy, qz = z + dz;
        if (!b.inside(qx, qy, qz)) continue;
        int c = b.level(qx, qy, qz);
        if (!c) continue;
        ++m.at(a - 1, c - 1);
        ++m.at(c - 1, a - 1);  // symmetric pairing
      }
  }
  for (const auto& m : partial)
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += m.v[i];
}

void glrlm_kernel(const DiscretizedROI& roi, const Offset& dir, Scope scope, int slice_index,
                  CountMatrix& out) {
  Box b(roi);
  const int ng = roi.n_levels;
  const int max_run = std::max({b.nx, b.ny, b.nz});
  out.init(ng, max_run);
  auto [z0, z1] = slice_range(b, scope, slice_index);
  const int dx = dir[0], dy = dir[1], dz = dir[2];

  std::vector<CountMatrix> partial(z1 - z0);
#pragma omp parallel for schedule(static)
  for (int z = z0; z < z1; ++z) {
    CountMatrix& m = partial[z - z0];
    m.init(ng, max_run);
    for (int y = 0; y < b.ny; ++y)
      for (int x = 0; x < b.nx; ++x) {
        int a = b.level(x, y, z);
        if (!a) continue;
        // run start: predecessor along dir is outside the ROI or a different level
        int px = x - dx, py = y - dy, pz = z - dz;
        if (b.inside(px, py, pz) && b.level(px, py, pz) == a) continue;
        int len = 1;
        int qx = x + dx, qy = y + dy, qz = z + dz;
        while (b.inside(qx, qy, qz) && b.level(qx, qy, qz) == a) {
          ++len;
          qx += dx;
          qy += dy;
          qz += dz;
        }
        ++m.at(a - 1, len - 1);
      }
  }
  for (const auto& m : partial)
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += m.v[i];
  out.trim_cols();
}

namespace {

// Flood fill of one connected zone; returns its size. 26-connectivity in 3D,
// 8-connectivity in-plane when z_only_plane is set.
long long flood_zone(const Box& b, std::vector<std::uint8_t>& visited, int sx, int sy, int sz,
                     int level, bool in_plane, std::vector<std::array<int, 3>>& stack) {
  auto idx = [&](int x, int y, int z) {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(b.nx) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(b.ny) * static_cast<std::size_t>(z));
  };
  stack.clear();
  stack.push_back({sx, sy, sz});
  visited[idx(sx, sy, sz)] = 1;
  long long size = 0;
  while (!stack.empty()) {
    auto [x, y, z] = stack.back();
    stack.pop_back();
    ++size;
    const int dzlo = in_plane ? 0 : -1, dzhi = in_plane ? 0 : 1;
    for (int dz = dzlo; dz <= dzhi; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          int qx = x + dx, qy = y + dy, qz = z + dz;
          if (!b.inside(qx, qy, qz)) continue;
          auto qi = idx(qx, qy, qz);
          if (visited[qi] || b.level(qx, qy, qz) != level) continue;
          visited[qi] = 1;
          stack.push_back({qx, qy, qz});
        }
  }
  return size;
}

}  // namespace

void glszm_kernel(const DiscretizedROI& roi, Scope scope, int slice_index, CountMatrix& out) {
  Box b(roi);
  const int ng = roi.n_levels;
  auto [z0, z1] = slice_range(b, scope, slice_index);
  const bool in_plane = scope != Scope::volume;

  // (level, size) pairs; zone sizes are unbounded so densify afterwards.
  std::vector<std::pair<int, long long>> zones;
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(b.nx) * b.ny * b.nz, 0);
  std::vector<std::array<int, 3>> stack;
  for (int z = z0; z < z1; ++z)
    for (int y = 0; y < b.ny; ++y)
      for (int x = 0; x < b.nx; ++x) {
        int a = b.level(x, y, z);
        if (!a) continue;
        auto vi = static_cast<std::size_t>(x) +
                  static_cast<std::size_t>(b.nx) *
                      (static_cast<std::size_t>(y) + static_cast<std::size_t>(b.ny) * static_cast<std::size_t>(z));
        if (visited[vi]) continue;
        zones.emplace_back(a, flood_zone(b, visited, x, y, z, a, in_plane, stack));
      }

  long long max_size = 1;
  for (const auto& [lvl, size] : zones) max_size = std::max(max_size, size);
  out.init(ng, static_cast<int>(max_size));
  for (const auto& [lvl, size] : zones) ++out.at(lvl - 1, static_cast<int>(size) - 1);
}

void gldm_kernel(const DiscretizedROI& roi, Scope scope, int slice_index, CountMatrix& out) {
  Box b(roi);
  const int ng = roi.n_levels;
  auto [z0, z1] = slice_range(b, scope, slice_index);
  const bool in_plane = scope != Scope::volume;
  const int max_dep = in_plane ? 8 : 26;
  out.init(ng, max_dep + 1);

  std::vector<CountMatrix> partial(z1 - z0);
#pragma omp parallel for schedule(static)
  for (int z = z0; z < z1; ++z) {
    CountMatrix& m = partial[z - z0];
    m.init(ng, max_dep + 1);
    const int dzlo = in_plane ? 0 : -1, dzhi = in_plane ? 0 : 1;
    for (int y = 0; y < b.ny; ++y)
      for (int x = 0; x < b.nx; ++x) {
        int a = b.level(x, y, z);
        if (!a) continue;
        int dep = 0;
        for (int dz = dzlo; dz <= dzhi; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (!dx && !dy && !dz) continue;
              int qx = x + dx, qy = y + dy, qz = z + dz;
              if (!b.inside(qx, qy, qz)) continue;
              if (b.level(qx, qy, qz) == a) ++dep;  // alpha = 0: equal levels only
            }
        ++m.at(a - 1, dep);
      }
  }
  for (const auto& m : partial)
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += m.v[i];
  out.trim_cols();
}

void ngtdm_kernel(const DiscretizedROI& roi, Scope scope, int slice_index, NgtdmAccumulator& out) {
  Box b(roi);
  const int ng = roi.n_levels;
  auto [z0, z1] = slice_range(b, scope, slice_index);
  const bool in_plane = scope != Scope::volume;
  out.init(ng);

  std::vector<NgtdmAccumulator> partial(z1 - z0);
#pragma omp parallel for schedule(static)
  for (int z = z0; z < z1; ++z) {
    NgtdmAccumulator& acc = partial[z - z0];
    acc.init(ng);
    const int dzlo = in_plane ? 0 : -1, dzhi = in_plane ? 0 : 1;
    for (int y = 0; y < b.ny; ++y)
      for (int x = 0; x < b.nx; ++x) {
        int a = b.level(x, y, z);
        if (!a) continue;
        long long nsum = 0;
        int ncount = 0;
        for (int dz = dzlo; dz <= dzhi; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (!dx && !dy && !dz) continue;
              int qx = x + dx, qy = y + dy, qz = z + dz;
              if (!b.inside(qx, qy, qz)) continue;
              int c = b.level(qx, qy, qz);
              if (!c) continue;
              nsum += c;
              ++ncount;
            }
        ++acc.n[a - 1];
        if (ncount > 0)
          acc.s[a - 1] += std::abs(a - static_cast<double>(nsum) / ncount);
        // a voxel with no in-ROI neighbors still counts in n, contributing 0 to s
      }
  }
  // fixed z-order reduction keeps the s sums independent of thread count
  for (const auto& acc : partial) {
    for (int i = 0; i < ng; ++i) {
      out.n[i] += acc.n[i];
      out.s[i] += acc.s[i];
    }
  }
}

}  // namespace rrw::detail
