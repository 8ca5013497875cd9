#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rrw/survival.hpp"
#include "rrw/volume_io.hpp"

namespace rrw {

// Synthetic cohort recipe: multi-thickness reconstructions slab-averaged from
// a common fine grid, a smoothing family standing in for ASiR, and an optional
// planted survival signal linked to the texture-controlling parameters.
struct SynthSpec {
  int n_subjects = 20;
  std::uint64_t rng_seed = 17;

  double fine_spacing_mm = 0.625;   // detector-width analogue; z spacing of the fine grid
  double in_plane_mm = 0.85;
  int in_plane_dim = 48;
  int fine_slices = 96;             // must cover the thickness groupings

  std::vector<double> thickness_levels_mm{2.5, 3.75, 5.0};
  std::vector<double> asir_levels_percent{0, 10, 20, 30, 40, 50, 60};
  double asir_max_sigma_mm = 1.2;   // in-plane Gaussian sigma at the top ASiR level
  double reference_thickness_mm = 5.0;  // masks are drawn here and resampled elsewhere
  double reference_asir_percent = 20.0;
  bool reference_only = false;      // survival-style cohort: one reconstruction per subject

  double background_hu = -500.0;

  struct TissueParams {
    double mean_hu = 90.0;
    std::array<double, 2> noise_hu{10.0, 22.0};         // per-subject range
    std::array<double, 2> corr_length_mm{1.0, 4.0};     // per-subject range
  };
  TissueParams liver;
  struct TumorParams {
    std::array<double, 2> radius_mm{9.0, 14.0};         // per-subject ellipsoid radii range
    std::array<double, 2> contrast_hu{-60.0, -20.0};    // added to the liver mean
    std::array<double, 2> noise_hu{8.0, 18.0};
    std::array<double, 2> corr_length_mm{1.0, 4.0};
  };
  TumorParams tumor;
  double liver_radius_fraction = 0.46;  // of the in-plane extent
  double tumor_margin_mm = 2.0;         // liver ROI excludes the tumor plus this margin

  struct Survival {
    bool enabled = false;
    double baseline_median_days = 700.0;
    double censor_horizon_days = 2000.0;
    // log-hazard = log(log 2 / median) + sum beta[param] * standardized(param);
    // params: tumor_contrast, tumor_noise, tumor_corr_length, liver_noise,
    // liver_corr_length, tumor_radius
    std::map<std::string, double> hazard;
  };
  Survival survival;

  void validate() const;
};

SynthSpec load_synth_spec(const std::string& path);

// Per-subject draw of the texture-controlling parameters (also the ground
// truth the planted-signal tests assert against).
struct SubjectParams {
  double tumor_contrast = 0.0;
  double tumor_noise = 0.0;
  double tumor_corr_length = 0.0;
  double liver_noise = 0.0;
  double liver_corr_length = 0.0;
  double tumor_radius = 0.0;
  double log_hazard_offset = 0.0;  // sum of beta * standardized(param)
};

SubjectParams draw_subject_params(const SynthSpec& spec, int subject_index);

struct Reconstruction {
  double thickness_mm = 0.0;
  double asir_percent = 0.0;
  ImageVolume image;
};

struct SubjectVolumes {
  std::string subject_id;
  SubjectParams params;
  std::vector<Reconstruction> reconstructions;
  // masks per thickness (shared across ASiR levels), drawn on the reference
  // thickness grid and nearest-neighbor resampled to the others
  std::map<double, MaskVolume> tumor_masks;
  std::map<double, MaskVolume> liver_masks;
};

// The common fine-grid volume a subject's reconstructions are derived from.
ImageVolume synth_fine_volume(const SynthSpec& spec, int subject_index);

// Thickness variant: every output slice is the mean of `group` consecutive
// fine slices (detector-row grouping).
ImageVolume slab_average(const ImageVolume& fine, int group);

SubjectVolumes generate_subject(const SynthSpec& spec, int subject_index);

SurvivalRecord generate_outcome(const SynthSpec& spec, int subject_index,
                                const SubjectParams& params);

struct CohortSummary {
  int n_subjects = 0;
  int n_images = 0;
  std::string manifest_path;
};

// Generates the cohort to disk (NIfTI volumes + manifest.csv under out_dir).
CohortSummary generate_cohort(const SynthSpec& spec, const std::string& out_dir, int workers);

}  // namespace rrw
