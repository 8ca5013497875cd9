#include <map>
#include <set>

#include "reference.hpp"

namespace rrw::ref {

namespace {

struct Voxel {
  int x, y, z, level;
};

std::vector<Voxel> roi_voxels(const DiscretizedROI& roi) {
  std::vector<Voxel> v;
  for (int z = 0; z < roi.box_dims[2]; ++z)
    for (int y = 0; y < roi.box_dims[1]; ++y)
      for (int x = 0; x < roi.box_dims[0]; ++x) {
        int l = roi.level_at(x, y, z);
        if (l > 0) v.push_back({x, y, z, l});
      }
  return v;
}

int level_of(const DiscretizedROI& roi, int x, int y, int z) {
  if (x < 0 || y < 0 || z < 0 || x >= roi.box_dims[0] || y >= roi.box_dims[1] ||
      z >= roi.box_dims[2])
    return 0;
  return roi.level_at(x, y, z);
}

bool chebyshev_one(const Voxel& a, const Voxel& b, bool three_d) {
  if (!three_d && a.z != b.z) return false;
  int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y), dz = std::abs(a.z - b.z);
  if (dx == 0 && dy == 0 && dz == 0) return false;
  return dx <= 1 && dy <= 1 && dz <= 1;
}

}  // namespace

CountMatrix glcm(const DiscretizedROI& roi, const Offset& dir) {
  auto voxels = roi_voxels(roi);
  CountMatrix m;
  m.init(roi.n_levels, roi.n_levels);
  for (const auto& p : voxels)
    for (const auto& q : voxels) {
      if (q.x - p.x == dir[0] && q.y - p.y == dir[1] && q.z - p.z == dir[2]) {
        ++m.at(p.level - 1, q.level - 1);
        ++m.at(q.level - 1, p.level - 1);
      }
    }
  return m;
}

CountMatrix glrlm(const DiscretizedROI& roi, const Offset& dir) {
  auto voxels = roi_voxels(roi);
  std::set<std::array<int, 3>> starts;
  for (const auto& v : voxels) {
    // walk back to the start of this voxel's run
    int x = v.x, y = v.y, z = v.z;
    while (level_of(roi, x - dir[0], y - dir[1], z - dir[2]) == v.level) {
      x -= dir[0];
      y -= dir[1];
      z -= dir[2];
    }
    starts.insert({x, y, z});
  }
  int max_run = std::max({roi.box_dims[0], roi.box_dims[1], roi.box_dims[2]});
  CountMatrix m;
  m.init(roi.n_levels, max_run);
  for (const auto& s : starts) {
    int level = level_of(roi, s[0], s[1], s[2]);
    int len = 0;
    int x = s[0], y = s[1], z = s[2];
    while (level_of(roi, x, y, z) == level) {
      ++len;
      x += dir[0];
      y += dir[1];
      z += dir[2];
    }
    ++m.at(level - 1, len - 1);
  }
  m.trim_cols();
  return m;
}

CountMatrix glszm(const DiscretizedROI& roi, bool three_d) {
  auto voxels = roi_voxels(roi);
  const int n = static_cast<int>(voxels.size());
  std::vector<int> label(n);
  for (int i = 0; i < n; ++i) label[i] = i;

  // propagate the minimum label across same-level neighbors until nothing moves
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (voxels[i].level != voxels[j].level) continue;
        if (!chebyshev_one(voxels[i], voxels[j], three_d)) continue;
        if (label[j] < label[i]) {
          label[i] = label[j];
          changed = true;
        }
      }
  }

  std::map<int, long long> zone_size;
  for (int i = 0; i < n; ++i) ++zone_size[label[i]];
  long long max_size = 1;
  for (const auto& [l, s] : zone_size) max_size = std::max(max_size, s);

  CountMatrix m;
  m.init(roi.n_levels, static_cast<int>(max_size));
  for (const auto& [l, s] : zone_size) ++m.at(voxels[l].level - 1, static_cast<int>(s) - 1);
  return m;
}

CountMatrix gldm(const DiscretizedROI& roi, bool three_d) {
  auto voxels = roi_voxels(roi);
  const int max_dep = three_d ? 26 : 8;
  CountMatrix m;
  m.init(roi.n_levels, max_dep + 1);
  for (const auto& p : voxels) {
    int dep = 0;
    for (const auto& q : voxels)
      if (chebyshev_one(p, q, three_d) && q.level == p.level) ++dep;
    ++m.at(p.level - 1, dep);
  }
  m.trim_cols();
  return m;
}

NgtdmAccumulator ngtdm(const DiscretizedROI& roi, bool three_d) {
  auto voxels = roi_voxels(roi);
  NgtdmAccumulator acc;
  acc.init(roi.n_levels);
  for (const auto& p : voxels) {
    double sum = 0.0;
    int count = 0;
    for (const auto& q : voxels)
      if (chebyshev_one(p, q, three_d)) {
        sum += q.level;
        ++count;
      }
    ++acc.n[p.level - 1];
    if (count > 0) acc.s[p.level - 1] += std::abs(p.level - sum / count);
  }
  return acc;
}

}  // namespace rrw::ref
