#include "rrw/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rrw {

std::string interpolator_str(Interpolator i) {
  switch (i) {
    case Interpolator::bspline3: return "bspline3";
    case Interpolator::trilinear: return "trilinear";
    default: return "nearest";
  }
}

Interpolator parse_interpolator(const std::string& s) {
  if (s == "bspline3") return Interpolator::bspline3;
  if (s == "trilinear") return Interpolator::trilinear;
  if (s == "nearest") return Interpolator::nearest;
  fail(ErrorKind::config, "unknown interpolator '" + s + "'");
}

std::string aggregation_str(Aggregation a) { return a == Aggregation::agg2_5D ? "2.5D" : "3D"; }

Aggregation parse_aggregation(const std::string& s) {
  if (s == "2.5D") return Aggregation::agg2_5D;
  if (s == "3D") return Aggregation::agg3D;
  fail(ErrorKind::config, "unknown aggregation '" + s + "' (expected 2.5D or 3D)");
}

void ExtractionConfig::validate() const {
  if (name.empty()) fail(ErrorKind::config, "extraction setting needs a name");
  if (!(in_plane_mm > 0.0)) fail(ErrorKind::config, "in_plane_mm must be > 0");
  if (z_mm && !(*z_mm > 0.0)) fail(ErrorKind::config, "z_mm must be > 0 or preserve");
  if (bin_count < 2) fail(ErrorKind::config, "bin_count must be >= 2");
  if (!(resegment_lo <= resegment_hi)) fail(ErrorKind::config, "resegment window is empty");
  if (mask_interpolator != Interpolator::nearest)
    fail(ErrorKind::config, "masks are always resampled nearest-neighbor");
  if (!z_mm && aggregation != Aggregation::agg2_5D)
    fail(ErrorKind::config, "in-plane-only resampling requires 2.5D aggregation");
}

const std::vector<ExtractionConfig>& builtin_configs() {
  static const std::vector<ExtractionConfig> configs = [] {
    auto make = [](std::string name, double in_plane, std::optional<double> z, Aggregation agg) {
      ExtractionConfig c;
      c.name = std::move(name);
      c.in_plane_mm = in_plane;
      c.z_mm = z;
      c.aggregation = agg;
      return c;
    };
    std::vector<ExtractionConfig> v;
    v.push_back(make("L2i", 1.0, std::nullopt, Aggregation::agg2_5D));
    v.push_back(make("L2", 1.0, 1.0, Aggregation::agg2_5D));
    v.push_back(make("L3", 1.0, 1.0, Aggregation::agg3D));
    v.push_back(make("S2i", 0.85, std::nullopt, Aggregation::agg2_5D));
    v.push_back(make("S2", 0.85, 0.85, Aggregation::agg2_5D));
    v.push_back(make("S3", 0.85, 0.85, Aggregation::agg3D));
    v.push_back(make("A2", 0.85, 2.5, Aggregation::agg2_5D));
    v.push_back(make("A3", 0.85, 2.5, Aggregation::agg3D));
    return v;
  }();
  return configs;
}

bool is_builtin_config(const std::string& name) {
  for (const auto& c : builtin_configs())
    if (c.name == name) return true;
  return false;
}

const ExtractionConfig& builtin_config(const std::string& name) {
  for (const auto& c : builtin_configs())
    if (c.name == name) return c;
  std::string names;
  for (const auto& c : builtin_configs()) names += (names.empty() ? "" : ", ") + c.name;
  fail(ErrorKind::argument, "unknown setting '" + name + "' (valid: " + names + ", all)");
}

std::vector<ExtractionConfig> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::config, "invalid JSON in " + path + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::config, "settings file must be a JSON object");
  std::vector<ExtractionConfig> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (is_builtin_config(it.key()))
      fail(ErrorKind::config, "cannot redefine built-in setting '" + it.key() + "'");
    const auto& o = it.value();
    ExtractionConfig c;
    c.name = it.key();
    try {
      c.in_plane_mm = o.at("in_plane_mm").get<double>();
      if (o.contains("z_mm") && !o.at("z_mm").is_string()) c.z_mm = o.at("z_mm").get<double>();
      c.aggregation = parse_aggregation(o.at("aggregation").get<std::string>());
      if (o.contains("bin_count")) c.bin_count = o.at("bin_count").get<int>();
      if (o.contains("resegment_window")) {
        c.resegment_lo = o.at("resegment_window").at(0).get<double>();
        c.resegment_hi = o.at("resegment_window").at(1).get<double>();
      }
      if (o.contains("image_interpolator"))
        c.image_interpolator = parse_interpolator(o.at("image_interpolator").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::config, "setting '" + it.key() + "': " + e.what());
    }
    c.validate();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ExtractionConfig> resolve_settings(const std::string& list,
                                               const std::vector<ExtractionConfig>& custom) {
  std::vector<ExtractionConfig> out;
  if (list == "all" || list.empty()) {
    out = builtin_configs();
    out.insert(out.end(), custom.begin(), custom.end());
    return out;
  }
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    bool found = false;
    for (const auto& c : custom)
      if (c.name == name) {
        out.push_back(c);
        found = true;
        break;
      }
    if (!found) out.push_back(builtin_config(name));
  }
  if (out.empty()) fail(ErrorKind::argument, "no extraction settings selected");
  return out;
}

namespace {

// --- cubic B-spline prefilter (Unser), mirror boundary ---

constexpr double kPole = -0.26794919243112270647;  // sqrt(3) - 2

void prefilter_line(double* c, int n, int stride) {
  if (n < 2) return;
  const double z = kPole;
  const double gain = 6.0;
  for (int i = 0; i < n; ++i) c[i * stride] *= gain;

  // causal init for the mirror boundary: truncated geometric sum when the
  // line is long enough, exact sum over one mirror period otherwise
  const int horizon = 28;  // |z|^28 < 1e-16
  if (horizon < n) {
    double sum = c[0];
    double zn = z;
    for (int k = 1; k < horizon; ++k) {
      sum += zn * c[k * stride];
      zn *= z;
    }
    c[0] = sum;
  } else {
    double zn = z;
    double iz = 1.0 / z;
    double z2n = std::pow(z, n - 1.0);
    double sum = c[0] + z2n * c[(n - 1) * stride];
    z2n *= z2n * iz;
    for (int k = 1; k <= n - 2; ++k) {
      sum += (zn + z2n) * c[k * stride];
      zn *= z;
      z2n *= iz;
    }
    c[0] = sum / (1.0 - std::pow(z, 2.0 * n - 2.0));
  }
  for (int i = 1; i < n; ++i) c[i * stride] += z * c[(i - 1) * stride];

  // anticausal init (mirror boundary)
  c[(n - 1) * stride] =
      (z / (z * z - 1.0)) * (z * c[(n - 2) * stride] + c[(n - 1) * stride]);
  for (int i = n - 2; i >= 0; --i)
    c[i * stride] = z * (c[(i + 1) * stride] - c[i * stride]);
}

std::vector<double> bspline_coefficients(const ImageVolume& v) {
  std::vector<double> c = v.values;
  const auto& d = v.geom.dims;
  const int nx = d[0], ny = d[1], nz = d[2];
  // x lines
#pragma omp parallel for collapse(2) schedule(static)
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y) prefilter_line(&c[v.geom.index(0, y, z)], nx, 1);
  // y lines
#pragma omp parallel for collapse(2) schedule(static)
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x) prefilter_line(&c[v.geom.index(x, 0, z)], ny, nx);
  // z lines
#pragma omp parallel for collapse(2) schedule(static)
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) prefilter_line(&c[v.geom.index(x, y, 0)], nz, nx * ny);
  return c;
}

inline int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

inline void bspline_weights(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
  w[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
  w[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
  w[3] = t3 / 6.0;
}

double bspline_eval(const std::vector<double>& c, const VolumeGeometry& g, double ux, double uy,
                    double uz) {
  const int bx = static_cast<int>(std::floor(ux)), by = static_cast<int>(std::floor(uy)),
            bz = static_cast<int>(std::floor(uz));
  double wx[4], wy[4], wz[4];
  bspline_weights(ux - bx, wx);
  bspline_weights(uy - by, wy);
  bspline_weights(uz - bz, wz);
  int ix[4], iy[4], iz[4];
  for (int k = 0; k < 4; ++k) {
    ix[k] = mirror_index(bx - 1 + k, g.dims[0]);
    iy[k] = mirror_index(by - 1 + k, g.dims[1]);
    iz[k] = mirror_index(bz - 1 + k, g.dims[2]);
  }
  double acc = 0.0;
  for (int kz = 0; kz < 4; ++kz) {
    double accy = 0.0;
    for (int ky = 0; ky < 4; ++ky) {
      const double* row = &c[g.index(0, iy[ky], iz[kz])];
      double accx = 0.0;
      for (int kx = 0; kx < 4; ++kx) accx += wx[kx] * row[ix[kx]];
      accy += wy[ky] * accx;
    }
    acc += wz[kz] * accy;
  }
  return acc;
}

double trilinear_eval(const std::vector<double>& vals, const VolumeGeometry& g, double ux,
                      double uy, double uz) {
  auto clampu = [](double u, int n) { return std::clamp(u, 0.0, static_cast<double>(n - 1)); };
  ux = clampu(ux, g.dims[0]);
  uy = clampu(uy, g.dims[1]);
  uz = clampu(uz, g.dims[2]);
  int x0 = std::min(static_cast<int>(std::floor(ux)), g.dims[0] - 2 >= 0 ? g.dims[0] - 2 : 0);
  int y0 = std::min(static_cast<int>(std::floor(uy)), g.dims[1] - 2 >= 0 ? g.dims[1] - 2 : 0);
  int z0 = std::min(static_cast<int>(std::floor(uz)), g.dims[2] - 2 >= 0 ? g.dims[2] - 2 : 0);
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  z0 = std::max(z0, 0);
  int x1 = std::min(x0 + 1, g.dims[0] - 1), y1 = std::min(y0 + 1, g.dims[1] - 1),
      z1 = std::min(z0 + 1, g.dims[2] - 1);
  double fx = ux - x0, fy = uy - y0, fz = uz - z0;
  auto v = [&](int x, int y, int z) { return vals[g.index(x, y, z)]; };
  double c00 = v(x0, y0, z0) * (1 - fx) + v(x1, y0, z0) * fx;
  double c10 = v(x0, y1, z0) * (1 - fx) + v(x1, y1, z0) * fx;
  double c01 = v(x0, y0, z1) * (1 - fx) + v(x1, y0, z1) * fx;
  double c11 = v(x0, y1, z1) * (1 - fx) + v(x1, y1, z1) * fx;
  double c0 = c00 * (1 - fy) + c10 * fy;
  double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

inline int nearest_index(double u, int n) {
  int i = static_cast<int>(std::lround(u));
  return std::clamp(i, 0, n - 1);
}

}  // namespace

VolumeGeometry resample_geometry(const VolumeGeometry& in, const TargetSpacing& target) {
  in.validate();
  VolumeGeometry out;
  for (int a = 0; a < 3; ++a) {
    double t = (a == 2 && target.preserve_z) ? in.spacing[a] : target.mm[a];
    if (!(t > 0.0)) fail(ErrorKind::geometry, "target spacing must be > 0");
    double extent = in.dims[a] * in.spacing[a];
    int m = static_cast<int>(std::ceil(extent / t - 1e-9));
    if (m < 1) fail(ErrorKind::geometry, "resample produces a degenerate grid (axis " +
                                             std::to_string(a) + ")");
    double center = in.origin[a] + 0.5 * (in.dims[a] - 1) * in.spacing[a];
    out.dims[a] = m;
    out.spacing[a] = t;
    // Same spacing keeps the grid unchanged; snap to avoid center round-trip wobble.
    out.origin[a] = (t == in.spacing[a] && m == in.dims[a]) ? in.origin[a]
                                                            : center - 0.5 * (m - 1) * t;
  }
  return out;
}

ImageVolume resample_to(const ImageVolume& v, const VolumeGeometry& out_geom, Interpolator interp) {
  v.validate();
  if (out_geom == v.geom) return v;  // identity on values when the grid is unchanged

  ImageVolume out;
  out.geom = out_geom;
  out.values.resize(out_geom.voxel_count());

  std::vector<double> coeff;
  if (interp == Interpolator::bspline3) coeff = bspline_coefficients(v);
  const std::vector<double>& src = interp == Interpolator::bspline3 ? coeff : v.values;

  const auto& g = v.geom;
  const int mx = out_geom.dims[0], my = out_geom.dims[1], mz = out_geom.dims[2];
#pragma omp parallel for schedule(static)
  for (int z = 0; z < mz; ++z) {
    double uz = (out_geom.origin[2] + z * out_geom.spacing[2] - g.origin[2]) / g.spacing[2];
    for (int y = 0; y < my; ++y) {
      double uy = (out_geom.origin[1] + y * out_geom.spacing[1] - g.origin[1]) / g.spacing[1];
      for (int x = 0; x < mx; ++x) {
        double ux = (out_geom.origin[0] + x * out_geom.spacing[0] - g.origin[0]) / g.spacing[0];
        double val;
        switch (interp) {
          case Interpolator::bspline3: val = bspline_eval(src, g, ux, uy, uz); break;
          case Interpolator::trilinear: val = trilinear_eval(src, g, ux, uy, uz); break;
          default:
            val = src[g.index(nearest_index(ux, g.dims[0]), nearest_index(uy, g.dims[1]),
                              nearest_index(uz, g.dims[2]))];
        }
        out.values[out.geom.index(x, y, z)] = val;
      }
    }
  }
  return out;
}

MaskVolume resample_to(const MaskVolume& m, const VolumeGeometry& out_geom) {
  m.validate();
  if (out_geom == m.geom) return m;
  MaskVolume out;
  out.geom = out_geom;
  out.values.resize(out_geom.voxel_count());
  const auto& g = m.geom;
#pragma omp parallel for schedule(static)
  for (int z = 0; z < out_geom.dims[2]; ++z) {
    double uz = (out_geom.origin[2] + z * out_geom.spacing[2] - g.origin[2]) / g.spacing[2];
    int iz = nearest_index(uz, g.dims[2]);
    for (int y = 0; y < out_geom.dims[1]; ++y) {
      double uy = (out_geom.origin[1] + y * out_geom.spacing[1] - g.origin[1]) / g.spacing[1];
      int iy = nearest_index(uy, g.dims[1]);
      for (int x = 0; x < out_geom.dims[0]; ++x) {
        double ux = (out_geom.origin[0] + x * out_geom.spacing[0] - g.origin[0]) / g.spacing[0];
        out.values[out.geom.index(x, y, z)] = m.values[g.index(nearest_index(ux, g.dims[0]), iy, iz)];
      }
    }
  }
  return out;
}

ImageVolume resample(const ImageVolume& v, const TargetSpacing& target, Interpolator interp) {
  return resample_to(v, resample_geometry(v.geom, target), interp);
}

MaskVolume resample(const MaskVolume& m, const TargetSpacing& target) {
  return resample_to(m, resample_geometry(m.geom, target));
}

ResegmentResult resegment(const ImageVolume& image, const MaskVolume& mask, double lo, double hi) {
  image.validate();
  mask.validate();
  if (!(image.geom == mask.geom))
    fail(ErrorKind::geometry, "image/mask geometry mismatch in resegment");
  ResegmentResult r;
  r.mask.geom = mask.geom;
  r.mask.values.resize(mask.values.size());
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    if (mask.values[i] && image.values[i] >= lo && image.values[i] <= hi) {
      r.mask.values[i] = 1;
      ++r.kept;
    } else {
      r.mask.values[i] = 0;
      if (mask.values[i]) ++r.removed;
    }
  }
  if (r.kept == 0)
    fail(ErrorKind::empty_roi, "resegmentation removed every ROI voxel (window [" +
                                   std::to_string(lo) + ", " + std::to_string(hi) + "])");
  return r;
}

DiscretizedROI discretize(const ImageVolume& image, const MaskVolume& mask, int bin_count) {
  image.validate();
  mask.validate();
  if (!(image.geom == mask.geom))
    fail(ErrorKind::geometry, "image/mask geometry mismatch in discretize");
  if (bin_count < 2) fail(ErrorKind::argument, "bin_count must be >= 2");

  const auto& d = image.geom.dims;
  int lo[3] = {d[0], d[1], d[2]}, hi[3] = {-1, -1, -1};
  double vmin = 0.0, vmax = 0.0, vsum = 0.0;
  long count = 0;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (!mask.at(x, y, z)) continue;
        double v = image.at(x, y, z);
        if (count == 0) {
          vmin = vmax = v;
        } else {
          vmin = std::min(vmin, v);
          vmax = std::max(vmax, v);
        }
        vsum += v;
        ++count;
        int c[3] = {x, y, z};
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], c[a]);
          hi[a] = std::max(hi[a], c[a]);
        }
      }
  if (count == 0) fail(ErrorKind::empty_roi, "discretize called with an empty mask");

  DiscretizedROI roi;
  roi.box_offset = {lo[0], lo[1], lo[2]};
  roi.box_dims = {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
  roi.spacing = image.geom.spacing;
  roi.voxel_count = count;
  roi.min_hu = vmin;
  roi.max_hu = vmax;
  roi.mean_hu = vsum / static_cast<double>(count);

  // ranges this far below the HU scale are interpolation noise, not signal
  // (float32 storage could not even represent them); collapse to one level
  const bool constant =
      vmax - vmin <= 1e-9 * std::max({1.0, std::abs(vmax), std::abs(vmin)});
  roi.n_levels = constant ? 1 : bin_count;
  const double width = constant ? 1.0 : (vmax - vmin) / bin_count;

  roi.levels.assign(static_cast<std::size_t>(roi.box_dims[0]) * roi.box_dims[1] * roi.box_dims[2], 0);
  roi.roi_values.reserve(count);
  roi.roi_levels.reserve(count);
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) {
        if (!mask.at(x, y, z)) continue;
        double v = image.at(x, y, z);
        int level = constant ? 1
                             : std::min(static_cast<int>(std::floor((v - vmin) / width)) + 1, bin_count);
        roi.levels[static_cast<std::size_t>(x - lo[0]) +
                   static_cast<std::size_t>(roi.box_dims[0]) *
                       (static_cast<std::size_t>(y - lo[1]) +
                        static_cast<std::size_t>(roi.box_dims[1]) * static_cast<std::size_t>(z - lo[2]))] =
            level;
        roi.roi_values.push_back(v);
        roi.roi_levels.push_back(level);
      }
  return roi;
}

DiscretizedROI prepare_roi(const ImageVolume& image, const MaskVolume& mask,
                           const ExtractionConfig& cfg) {
  cfg.validate();
  if (!geometry_close(image.geom, mask.geom))
    fail(ErrorKind::geometry, "image and mask grids differ");

  TargetSpacing target;
  target.mm = {cfg.in_plane_mm, cfg.in_plane_mm, cfg.z_mm.value_or(0.0)};
  target.preserve_z = !cfg.z_mm.has_value();

  VolumeGeometry out_geom = resample_geometry(image.geom, target);
  ImageVolume rimg = resample_to(image, out_geom, cfg.image_interpolator);
  MaskVolume rmask = resample_to(mask, out_geom);
  if (rmask.count_set() == 0)
    fail(ErrorKind::empty_roi, "ROI mask is empty after resampling");

  ResegmentResult rs = resegment(rimg, rmask, cfg.resegment_lo, cfg.resegment_hi);
  return discretize(rimg, rs.mask, cfg.bin_count);
}

}  // namespace rrw
