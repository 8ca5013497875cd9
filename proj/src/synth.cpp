#include "rrw/synth.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rrw/csv.hpp"
#include "rrw/preprocess.hpp"
#include "rrw/rng.hpp"

namespace rrw {

namespace {

constexpr std::uint64_t kSubjectStream = 0x53554213;
constexpr std::uint64_t kOutcomeStream = 0x4F555443;

int slab_group(double thickness, double fine_spacing) {
  double ratio = thickness / fine_spacing;
  int g = static_cast<int>(std::llround(ratio));
  if (g < 1 || std::abs(ratio - g) > 1e-9)
    fail(ErrorKind::config, "thickness " + fmt_double(thickness) +
                                " is not an integer multiple of the fine spacing");
  return g;
}

double standardized(double v, const std::array<double, 2>& range) {
  if (range[1] == range[0]) return 0.0;
  return 2.0 * (v - range[0]) / (range[1] - range[0]) - 1.0;
}

// separable Gaussian smoothing, kernel truncated at 3 sigma (in voxels)
void gaussian_smooth_axis(std::vector<double>& vals, const std::array<int, 3>& dims, int axis,
                          double sigma_vox) {
  if (sigma_vox <= 0.0) return;
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_vox)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma_vox * sigma_vox));
    sum += kernel[k + radius];
  }
  for (double& w : kernel) w /= sum;

  const int nx = dims[0], ny = dims[1], nz = dims[2];
  auto index = [&](int x, int y, int z) {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) +
                                           static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
  };
  std::vector<double> tmp(vals.size());
  const int n_axis = dims[axis];
  auto reflect = [&](int i) {
    if (n_axis == 1) return 0;
    int period = 2 * (n_axis - 1);
    i = std::abs(i) % period;
    return i < n_axis ? i : period - i;
  };
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          int c[3] = {x, y, z};
          c[axis] = reflect(c[axis] + k);
          acc += kernel[k + radius] * vals[index(c[0], c[1], c[2])];
        }
        tmp[index(x, y, z)] = acc;
      }
  vals.swap(tmp);
}

// white noise smoothed to the requested correlation length, rescaled so the
// post-smoothing standard deviation equals sigma_hu
std::vector<double> correlated_noise(Rng& rng, const std::array<int, 3>& dims,
                                     const std::array<double, 3>& spacing, double sigma_hu,
                                     double corr_length_mm) {
  std::vector<double> noise(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  for (double& v : noise) v = rng.normal();

  double var_factor = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    double sigma_vox = corr_length_mm / spacing[axis];
    if (sigma_vox <= 0.0) continue;
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_vox)));
    double wsum = 0.0, w2sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      double w = std::exp(-0.5 * k * k / (sigma_vox * sigma_vox));
      wsum += w;
      w2sum += w * w;
    }
    var_factor *= w2sum / (wsum * wsum);
    gaussian_smooth_axis(noise, dims, axis, sigma_vox);
  }
  double scale = sigma_hu / std::sqrt(var_factor);
  for (double& v : noise) v *= scale;
  return noise;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_subjects < 2) fail(ErrorKind::config, "n_subjects must be >= 2");
  if (!(fine_spacing_mm > 0.0) || !(in_plane_mm > 0.0))
    fail(ErrorKind::config, "spacings must be > 0");
  if (in_plane_dim < 8) fail(ErrorKind::config, "in_plane_dim too small");
  if (fine_slices < 8) fail(ErrorKind::config, "fine_slices too small");
  if (thickness_levels_mm.empty()) fail(ErrorKind::config, "no thickness levels");
  for (double t : thickness_levels_mm) slab_group(t, fine_spacing_mm);
  if (std::find(thickness_levels_mm.begin(), thickness_levels_mm.end(), reference_thickness_mm) ==
      thickness_levels_mm.end())
    fail(ErrorKind::config, "reference thickness must be one of the thickness levels");
  if (!asir_levels_percent.empty() &&
      std::find(asir_levels_percent.begin(), asir_levels_percent.end(), reference_asir_percent) ==
          asir_levels_percent.end())
    fail(ErrorKind::config, "reference ASiR must be one of the ASiR levels");
  double liver_radius = liver_radius_fraction * in_plane_dim * in_plane_mm;
  if (tumor.radius_mm[1] + tumor_margin_mm >= liver_radius)
    fail(ErrorKind::config, "tumor ellipsoid does not fit inside the liver geometry");
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open synth spec: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::config, "invalid JSON in " + path + ": " + e.what());
  }
  SynthSpec s;
  try {
    auto get = [&](const char* key, auto& ref) {
      if (j.contains(key)) ref = j.at(key).get<std::decay_t<decltype(ref)>>();
    };
    get("n_subjects", s.n_subjects);
    get("rng_seed", s.rng_seed);
    get("fine_spacing_mm", s.fine_spacing_mm);
    get("in_plane_mm", s.in_plane_mm);
    get("in_plane_dim", s.in_plane_dim);
    get("fine_slices", s.fine_slices);
    get("thickness_levels_mm", s.thickness_levels_mm);
    get("asir_levels_percent", s.asir_levels_percent);
    get("asir_max_sigma_mm", s.asir_max_sigma_mm);
    get("reference_thickness_mm", s.reference_thickness_mm);
    get("reference_asir_percent", s.reference_asir_percent);
    get("reference_only", s.reference_only);
    get("background_hu", s.background_hu);
    get("liver_radius_fraction", s.liver_radius_fraction);
    get("tumor_margin_mm", s.tumor_margin_mm);
    if (j.contains("liver")) {
      const auto& o = j.at("liver");
      if (o.contains("mean_hu")) s.liver.mean_hu = o.at("mean_hu").get<double>();
      if (o.contains("noise_hu")) s.liver.noise_hu = o.at("noise_hu").get<std::array<double, 2>>();
      if (o.contains("corr_length_mm"))
        s.liver.corr_length_mm = o.at("corr_length_mm").get<std::array<double, 2>>();
    }
    if (j.contains("tumor")) {
      const auto& o = j.at("tumor");
      if (o.contains("radius_mm")) s.tumor.radius_mm = o.at("radius_mm").get<std::array<double, 2>>();
      if (o.contains("contrast_hu"))
        s.tumor.contrast_hu = o.at("contrast_hu").get<std::array<double, 2>>();
      if (o.contains("noise_hu")) s.tumor.noise_hu = o.at("noise_hu").get<std::array<double, 2>>();
      if (o.contains("corr_length_mm"))
        s.tumor.corr_length_mm = o.at("corr_length_mm").get<std::array<double, 2>>();
    }
    if (j.contains("survival")) {
      const auto& o = j.at("survival");
      s.survival.enabled = o.value("enabled", true);
      if (o.contains("baseline_median_days"))
        s.survival.baseline_median_days = o.at("baseline_median_days").get<double>();
      if (o.contains("censor_horizon_days"))
        s.survival.censor_horizon_days = o.at("censor_horizon_days").get<double>();
      if (o.contains("hazard"))
        s.survival.hazard = o.at("hazard").get<std::map<std::string, double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, "synth spec " + path + ": " + e.what());
  }
  s.validate();
  return s;
}

SubjectParams draw_subject_params(const SynthSpec& spec, int subject_index) {
  Rng rng(derive_seed(spec.rng_seed, {kSubjectStream, static_cast<std::uint64_t>(subject_index)}));
  SubjectParams p;
  p.tumor_contrast = rng.uniform(spec.tumor.contrast_hu[0], spec.tumor.contrast_hu[1]);
  p.tumor_noise = rng.uniform(spec.tumor.noise_hu[0], spec.tumor.noise_hu[1]);
  p.tumor_corr_length = rng.uniform(spec.tumor.corr_length_mm[0], spec.tumor.corr_length_mm[1]);
  p.liver_noise = rng.uniform(spec.liver.noise_hu[0], spec.liver.noise_hu[1]);
  p.liver_corr_length = rng.uniform(spec.liver.corr_length_mm[0], spec.liver.corr_length_mm[1]);
  p.tumor_radius = rng.uniform(spec.tumor.radius_mm[0], spec.tumor.radius_mm[1]);

  double offset = 0.0;
  for (const auto& [name, beta] : spec.survival.hazard) {
    double z;
    if (name == "tumor_contrast") z = standardized(p.tumor_contrast, spec.tumor.contrast_hu);
    else if (name == "tumor_noise") z = standardized(p.tumor_noise, spec.tumor.noise_hu);
    else if (name == "tumor_corr_length")
      z = standardized(p.tumor_corr_length, spec.tumor.corr_length_mm);
    else if (name == "liver_noise") z = standardized(p.liver_noise, spec.liver.noise_hu);
    else if (name == "liver_corr_length")
      z = standardized(p.liver_corr_length, spec.liver.corr_length_mm);
    else if (name == "tumor_radius") z = standardized(p.tumor_radius, spec.tumor.radius_mm);
    else fail(ErrorKind::config, "unknown hazard parameter '" + name + "'");
    offset += beta * z;
  }
  p.log_hazard_offset = offset;
  return p;
}

namespace {

std::string subject_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "sub%04d", index);
  return buf;
}

}  // namespace

namespace {

struct SubjectGeometry {
  double cx, cy, cz;
  double liver_r_inplane, liver_r_z;

  bool inside_liver(double x, double y, double z) const {
    double u = (x - cx) / liver_r_inplane, v = (y - cy) / liver_r_inplane, w = (z - cz) / liver_r_z;
    return u * u + v * v + w * w <= 1.0;
  }
  double tumor_dist2(double x, double y, double z, double r) const {
    double u = (x - cx) / r, v = (y - cy) / r, w = (z - cz) / r;
    return u * u + v * v + w * w;
  }
};

SubjectGeometry subject_geometry(const SynthSpec& spec) {
  const std::array<int, 3> fdims{spec.in_plane_dim, spec.in_plane_dim, spec.fine_slices};
  const std::array<double, 3> fspacing{spec.in_plane_mm, spec.in_plane_mm, spec.fine_spacing_mm};
  SubjectGeometry g;
  g.cx = 0.5 * (fdims[0] - 1) * fspacing[0];
  g.cy = 0.5 * (fdims[1] - 1) * fspacing[1];
  g.cz = 0.5 * (fdims[2] - 1) * fspacing[2];
  g.liver_r_inplane = spec.liver_radius_fraction * fdims[0] * fspacing[0];
  g.liver_r_z = 0.46 * fdims[2] * fspacing[2];
  return g;
}

}  // namespace

ImageVolume synth_fine_volume(const SynthSpec& spec, int subject_index) {
  SubjectParams params = draw_subject_params(spec, subject_index);
  Rng rng(derive_seed(spec.rng_seed,
                      {kSubjectStream, static_cast<std::uint64_t>(subject_index), 0xF1E1D}));
  const std::array<int, 3> fdims{spec.in_plane_dim, spec.in_plane_dim, spec.fine_slices};
  const std::array<double, 3> fspacing{spec.in_plane_mm, spec.in_plane_mm, spec.fine_spacing_mm};
  SubjectGeometry geo = subject_geometry(spec);
  const double tumor_r = params.tumor_radius;

  auto liver_noise =
      correlated_noise(rng, fdims, fspacing, params.liver_noise, params.liver_corr_length);
  auto tumor_noise =
      correlated_noise(rng, fdims, fspacing, params.tumor_noise, params.tumor_corr_length);

  ImageVolume fine;
  fine.geom.dims = fdims;
  fine.geom.spacing = fspacing;
  fine.geom.origin = {0.0, 0.0, 0.0};
  fine.values.resize(fine.geom.voxel_count());
  for (int z = 0; z < fdims[2]; ++z)
    for (int y = 0; y < fdims[1]; ++y)
      for (int x = 0; x < fdims[0]; ++x) {
        double px = x * fspacing[0], py = y * fspacing[1], pz = z * fspacing[2];
        std::size_t i = fine.geom.index(x, y, z);
        if (geo.tumor_dist2(px, py, pz, tumor_r) <= 1.0) {
          fine.values[i] = spec.liver.mean_hu + params.tumor_contrast + tumor_noise[i];
        } else if (geo.inside_liver(px, py, pz)) {
          fine.values[i] = spec.liver.mean_hu + liver_noise[i];
        } else {
          fine.values[i] = spec.background_hu;
        }
      }
  return fine;
}

ImageVolume slab_average(const ImageVolume& fine, int group) {
  if (group < 1) fail(ErrorKind::argument, "slab group must be >= 1");
  int nz = fine.geom.dims[2] / group;
  if (nz < 1) fail(ErrorKind::config, "fine grid too thin for the slab grouping");
  ImageVolume v;
  v.geom.dims = {fine.geom.dims[0], fine.geom.dims[1], nz};
  v.geom.spacing = {fine.geom.spacing[0], fine.geom.spacing[1], group * fine.geom.spacing[2]};
  v.geom.origin = {fine.geom.origin[0], fine.geom.origin[1],
                   fine.geom.origin[2] + 0.5 * (group - 1) * fine.geom.spacing[2]};
  v.values.resize(v.geom.voxel_count());
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < v.geom.dims[1]; ++y)
      for (int x = 0; x < v.geom.dims[0]; ++x) {
        double acc = 0.0;
        for (int k = 0; k < group; ++k) acc += fine.at(x, y, z * group + k);
        v.at(x, y, z) = acc / group;
      }
  return v;
}

SubjectVolumes generate_subject(const SynthSpec& spec, int subject_index) {
  spec.validate();
  SubjectVolumes out;
  out.subject_id = subject_name(subject_index);
  out.params = draw_subject_params(spec, subject_index);

  SubjectGeometry geo = subject_geometry(spec);
  const double tumor_r = out.params.tumor_radius;
  auto inside_liver = [&](double x, double y, double z) { return geo.inside_liver(x, y, z); };
  auto tumor_dist2 = [&](double x, double y, double z, double r) {
    return geo.tumor_dist2(x, y, z, r);
  };

  ImageVolume fine = synth_fine_volume(spec, subject_index);

  // thickness variants: average consecutive fine slabs (detector-row grouping)
  std::vector<double> thicknesses =
      spec.reference_only ? std::vector<double>{spec.reference_thickness_mm}
                          : spec.thickness_levels_mm;
  std::vector<double> asirs = spec.reference_only
                                  ? std::vector<double>{spec.reference_asir_percent}
                                  : spec.asir_levels_percent;
  if (asirs.empty()) asirs.push_back(0.0);
  double asir_max = 0.0;
  for (double a : asirs) asir_max = std::max(asir_max, a);
  if (asir_max <= 0.0) asir_max = 1.0;

  std::map<double, ImageVolume> slabbed;
  for (double t : thicknesses)
    slabbed[t] = slab_average(fine, slab_group(t, spec.fine_spacing_mm));

  // masks on the reference grid, nearest-neighbor resampled to the others
  const ImageVolume& ref = slabbed.at(spec.reference_thickness_mm);
  MaskVolume tumor_ref, liver_ref;
  tumor_ref.geom = ref.geom;
  liver_ref.geom = ref.geom;
  tumor_ref.values.assign(ref.geom.voxel_count(), 0);
  liver_ref.values.assign(ref.geom.voxel_count(), 0);
  const double margin_r = tumor_r + spec.tumor_margin_mm;
  for (int z = 0; z < ref.geom.dims[2]; ++z)
    for (int y = 0; y < ref.geom.dims[1]; ++y)
      for (int x = 0; x < ref.geom.dims[0]; ++x) {
        double px = ref.geom.origin[0] + x * ref.geom.spacing[0];
        double py = ref.geom.origin[1] + y * ref.geom.spacing[1];
        double pz = ref.geom.origin[2] + z * ref.geom.spacing[2];
        std::size_t i = ref.geom.index(x, y, z);
        if (tumor_dist2(px, py, pz, tumor_r) <= 1.0) tumor_ref.values[i] = 1;
        else if (inside_liver(px, py, pz) && tumor_dist2(px, py, pz, margin_r) > 1.0)
          liver_ref.values[i] = 1;
      }

  for (double t : thicknesses) {
    if (t == spec.reference_thickness_mm) {
      out.tumor_masks[t] = tumor_ref;
      out.liver_masks[t] = liver_ref;
    } else {
      out.tumor_masks[t] = resample_to(tumor_ref, slabbed.at(t).geom);
      out.liver_masks[t] = resample_to(liver_ref, slabbed.at(t).geom);
    }
  }

  // ASiR variants: in-plane Gaussian smoothing scaled by the ASiR percentage
  for (double t : thicknesses) {
    for (double a : asirs) {
      Reconstruction rec;
      rec.thickness_mm = t;
      rec.asir_percent = a;
      rec.image = slabbed.at(t);
      double sigma_mm = a / asir_max * spec.asir_max_sigma_mm * (a > 0.0 ? 1.0 : 0.0);
      if (sigma_mm > 0.0) {
        gaussian_smooth_axis(rec.image.values, rec.image.geom.dims, 0,
                             sigma_mm / rec.image.geom.spacing[0]);
        gaussian_smooth_axis(rec.image.values, rec.image.geom.dims, 1,
                             sigma_mm / rec.image.geom.spacing[1]);
      }
      out.reconstructions.push_back(std::move(rec));
    }
  }
  return out;
}

SurvivalRecord generate_outcome(const SynthSpec& spec, int subject_index,
                                const SubjectParams& params) {
  Rng rng(derive_seed(spec.rng_seed, {kOutcomeStream, static_cast<std::uint64_t>(subject_index)}));
  double base_rate = std::log(2.0) / spec.survival.baseline_median_days;
  double rate = base_rate * std::exp(params.log_hazard_offset);
  double t_event = rng.exponential(rate);
  double t_censor = rng.uniform(0.0, spec.survival.censor_horizon_days);
  SurvivalRecord rec;
  rec.subject_id = subject_name(subject_index);
  rec.event = t_event <= t_censor;
  rec.time = std::max(rec.event ? t_event : t_censor, 1e-3);
  return rec;
}

CohortSummary generate_cohort(const SynthSpec& spec, const std::string& out_dir, int workers) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "volumes");

  struct SubjectFiles {
    std::vector<ManifestEntry> entries;
    int n_images = 0;
  };
  std::vector<SubjectFiles> per_subject(spec.n_subjects);

  if (workers > 0) omp_set_num_threads(workers);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < spec.n_subjects; ++s) {
    SubjectVolumes sv = generate_subject(spec, s);
    std::optional<SurvivalRecord> outcome;
    if (spec.survival.enabled) outcome = generate_outcome(spec, s, sv.params);

    SubjectFiles& sf = per_subject[s];
    std::map<double, std::pair<std::string, std::string>> mask_files;
    for (const auto& [t, mask] : sv.tumor_masks) {
      std::string rel = "volumes/" + sv.subject_id + "_t" + fmt_double(t) + "_tumor_mask.nii.gz";
      write_volume(mask, (fs::path(out_dir) / rel).string());
      mask_files[t].first = rel;
    }
    for (const auto& [t, mask] : sv.liver_masks) {
      std::string rel = "volumes/" + sv.subject_id + "_t" + fmt_double(t) + "_liver_mask.nii.gz";
      write_volume(mask, (fs::path(out_dir) / rel).string());
      mask_files[t].second = rel;
    }
    for (const auto& rec : sv.reconstructions) {
      std::string rel = "volumes/" + sv.subject_id + "_t" + fmt_double(rec.thickness_mm) + "_a" +
                        fmt_double(rec.asir_percent) + ".nii.gz";
      write_volume(rec.image, (fs::path(out_dir) / rel).string());
      ++sf.n_images;
      for (RoiName roi : {RoiName::tumor, RoiName::liver}) {
        ManifestEntry e;
        e.subject_id = sv.subject_id;
        e.roi = roi;
        e.image_path = rel;
        e.mask_path = roi == RoiName::tumor ? mask_files[rec.thickness_mm].first
                                            : mask_files[rec.thickness_mm].second;
        e.slice_thickness_mm = rec.thickness_mm;
        e.asir_percent = rec.asir_percent;
        if (outcome) {
          e.time_days = outcome->time;
          e.event = outcome->event;
        }
        sf.entries.push_back(std::move(e));
      }
    }
  }

  CohortManifest manifest;
  CohortSummary summary;
  summary.n_subjects = spec.n_subjects;
  for (const auto& sf : per_subject) {
    summary.n_images += sf.n_images;
    manifest.entries.insert(manifest.entries.end(), sf.entries.begin(), sf.entries.end());
  }
  summary.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
  write_manifest(manifest, summary.manifest_path);
  return summary;
}

}  // namespace rrw
