#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "rrw/survival.hpp"
#include "rrw/synth.hpp"
#include "testutil.hpp"

using namespace rrw;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n_subjects = 4;
  s.in_plane_dim = 32;
  s.fine_slices = 48;
  s.tumor.radius_mm = {5.0, 8.0};  // fits the smaller liver geometry
  s.rng_seed = 99;
  return s;
}

}  // namespace

TEST_CASE("thickness variants are exact slab means of the fine grid") {
  SynthSpec spec = small_spec();
  ImageVolume fine = synth_fine_volume(spec, 0);
  for (auto [t, g] : std::vector<std::pair<double, int>>{{2.5, 4}, {3.75, 6}, {5.0, 8}}) {
    ImageVolume v = slab_average(fine, g);
    CHECK(v.geom.spacing[2] == doctest::Approx(t));
    CHECK(v.geom.dims[2] == spec.fine_slices / g);
    for (int z = 0; z < v.geom.dims[2]; ++z)
      for (int y = 0; y < v.geom.dims[1]; y += 5)
        for (int x = 0; x < v.geom.dims[0]; x += 5) {
          double acc = 0.0;
          for (int k = 0; k < g; ++k) acc += fine.at(x, y, z * g + k);
          CHECK(v.at(x, y, z) == acc / g);  // exact, same summation order
        }
  }
  SUBCASE("slab centers line up with the grouped fine slices") {
    ImageVolume v = slab_average(fine, 8);
    CHECK(v.geom.origin[2] == doctest::Approx(0.5 * 7 * spec.fine_spacing_mm));
  }
}

TEST_CASE("slab averaging commutes with constant offsets") {
  // dyadic constants and power-of-two groups keep every mean exact in fp,
  // so the commutation can be asserted with equality
  SynthSpec spec = small_spec();
  spec.liver.noise_hu = {0.0, 0.0};
  spec.tumor.noise_hu = {0.0, 0.0};
  spec.liver.mean_hu = 96.0;
  spec.background_hu = -512.0;
  spec.tumor.contrast_hu = {-48.0, -48.0};
  ImageVolume fine = synth_fine_volume(spec, 1);
  ImageVolume shifted = fine;
  for (auto& v : shifted.values) v += 32.0;
  for (int group : {4, 8}) {
    ImageVolume a = slab_average(fine, group);
    ImageVolume b = slab_average(shifted, group);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == a.values[i] + 32.0);
  }
}

TEST_CASE("zero-noise homogeneous subject gives constant reconstructions") {
  SynthSpec spec = small_spec();
  spec.liver.noise_hu = {0.0, 0.0};
  spec.tumor.noise_hu = {0.0, 0.0};

  SUBCASE("fully homogeneous volume stays constant through every reconstruction") {
    spec.tumor.contrast_hu = {0.0, 0.0};
    spec.background_hu = spec.liver.mean_hu;
    SubjectVolumes sv = generate_subject(spec, 2);
    for (const auto& rec : sv.reconstructions)
      for (double v : rec.image.values)
        CHECK(v == doctest::Approx(spec.liver.mean_hu).epsilon(1e-12));
  }
  SUBCASE("unsmoothed reconstructions are constant inside the tumor interior") {
    spec.tumor.contrast_hu = {-40.0, -40.0};
    SubjectVolumes sv = generate_subject(spec, 2);
    double expect = spec.liver.mean_hu - 40.0;
    for (const auto& rec : sv.reconstructions) {
      if (rec.asir_percent != 0.0) continue;  // ASiR smoothing blurs the boundary inward
      const MaskVolume& tumor = sv.tumor_masks.at(rec.thickness_mm);
      REQUIRE(geometry_close(tumor.geom, rec.image.geom));
      for (int z = 1; z + 1 < tumor.geom.dims[2]; ++z)
        for (int y = 1; y + 1 < tumor.geom.dims[1]; ++y)
          for (int x = 1; x + 1 < tumor.geom.dims[0]; ++x) {
            if (!tumor.at(x, y, z)) continue;
            bool interior = true;
            for (int dz = -1; dz <= 1 && interior; ++dz)
              for (int dy = -1; dy <= 1 && interior; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                  if (!tumor.at(x + dx, y + dy, z + dz)) {
                    interior = false;
                    break;
                  }
            if (interior) CHECK(rec.image.at(x, y, z) == doctest::Approx(expect).epsilon(1e-12));
          }
    }
  }
}

TEST_CASE("same seed gives bit-identical subjects") {
  SynthSpec spec = small_spec();
  SubjectVolumes a = generate_subject(spec, 3);
  SubjectVolumes b = generate_subject(spec, 3);
  REQUIRE(a.reconstructions.size() == b.reconstructions.size());
  for (std::size_t i = 0; i < a.reconstructions.size(); ++i)
    CHECK(a.reconstructions[i].image.values == b.reconstructions[i].image.values);
  CHECK(a.params.tumor_contrast == b.params.tumor_contrast);
}

TEST_CASE("generate_cohort writes the full grid and a loadable manifest") {
  auto dir = test::temp_dir("synth_cohort");
  SynthSpec spec = small_spec();
  CohortSummary s = generate_cohort(spec, dir, 2);
  CHECK(s.n_subjects == 4);
  CHECK(s.n_images == 4 * 3 * 7);  // subjects x thicknesses x ASiR levels

  CohortManifest m = load_manifest(s.manifest_path);
  CHECK(m.entries.size() == 4 * 3 * 7 * 2);  // x 2 ROIs
  CHECK_FALSE(m.is_survival_cohort());

  // volumes and masks load and pair up geometrically
  const auto& e = m.entries.front();
  ImageVolume img = read_image(e.image_path);
  MaskVolume mask = read_mask(e.mask_path);
  CHECK(geometry_close(img.geom, mask.geom, 1e-3));
  CHECK(mask.count_set() > 0);
}

TEST_CASE("reference-only survival cohort carries outcomes") {
  auto dir = test::temp_dir("synth_surv");
  SynthSpec spec = small_spec();
  spec.n_subjects = 40;
  spec.reference_only = true;
  spec.survival.enabled = true;
  spec.survival.hazard["tumor_contrast"] = 1.0;
  CohortSummary s = generate_cohort(spec, dir, 2);
  CHECK(s.n_images == 40);

  CohortManifest m = load_manifest(s.manifest_path);
  CHECK(m.is_survival_cohort());
  int events = 0, total = 0;
  std::set<std::string> seen;
  for (const auto& e : m.entries) {
    if (!seen.insert(e.subject_id).second) continue;
    ++total;
    events += *e.event;
    CHECK(*e.time_days > 0.0);
  }
  CHECK(total == 40);
  // uniform censoring keeps the event fraction moderate
  CHECK(events >= 10);
  CHECK(events <= 38);
}

TEST_CASE("outcome generation calibrates censoring into the 30-50% band") {
  SynthSpec spec = small_spec();
  spec.n_subjects = 600;
  spec.survival.enabled = true;
  int censored = 0;
  for (int i = 0; i < spec.n_subjects; ++i) {
    SurvivalRecord r = generate_outcome(spec, i, draw_subject_params(spec, i));
    censored += !r.event;
  }
  double frac = static_cast<double>(censored) / spec.n_subjects;
  CHECK(frac > 0.30);
  CHECK(frac < 0.50);
}

TEST_CASE("planted hazard links survival to the contrast parameter") {
  SynthSpec spec = small_spec();
  spec.n_subjects = 400;
  spec.survival.enabled = true;

  SUBCASE("null hazard: contrast does not discriminate") {
    std::vector<double> risk;
    std::vector<SurvivalRecord> outcomes;
    for (int i = 0; i < 400; ++i) {
      SubjectParams p = draw_subject_params(spec, i);
      outcomes.push_back(generate_outcome(spec, i, p));
      risk.push_back(p.tumor_contrast);
    }
    double c = harrell_cindex(risk, outcomes);
    CHECK(c > 0.45);
    CHECK(c < 0.55);
  }
  SUBCASE("strong hazard: contrast discriminates well") {
    spec.survival.hazard["tumor_contrast"] = 4.0;
    std::vector<double> risk;
    std::vector<SurvivalRecord> outcomes;
    for (int i = 0; i < 400; ++i) {
      SubjectParams p = draw_subject_params(spec, i);
      outcomes.push_back(generate_outcome(spec, i, p));
      risk.push_back(p.tumor_contrast);
    }
    CHECK(harrell_cindex(risk, outcomes) > 0.8);
  }
}

TEST_CASE("spec validation") {
  SynthSpec spec = small_spec();
  SUBCASE("thickness must divide the fine spacing") {
    spec.thickness_levels_mm = {2.6};
    spec.reference_thickness_mm = 2.6;
    CHECK_THROWS_AS(spec.validate(), Error);
  }
  SUBCASE("tumor must fit inside the liver") {
    spec.tumor.radius_mm = {40.0, 50.0};
    CHECK_THROWS_AS(spec.validate(), Error);
  }
  SUBCASE("JSON round trip honors overrides") {
    auto dir = test::temp_dir("synth_spec");
    std::ofstream out(dir + "/spec.json");
    out << R"({"n_subjects": 7, "rng_seed": 3, "in_plane_dim": 24, "fine_slices": 48,
               "tumor": {"contrast_hu": [-50, -30], "radius_mm": [4, 6]},
               "survival": {"enabled": true, "hazard": {"tumor_contrast": 1.5}}})";
    out.close();
    SynthSpec s = load_synth_spec(dir + "/spec.json");
    CHECK(s.n_subjects == 7);
    CHECK(s.rng_seed == 3);
    CHECK(s.tumor.contrast_hu[0] == -50.0);
    CHECK(s.survival.enabled);
    CHECK(s.survival.hazard.at("tumor_contrast") == 1.5);
  }
}
