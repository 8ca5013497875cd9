#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "rrw/features.hpp"
#include "rrw/preprocess.hpp"
#include "testutil.hpp"

using namespace rrw;

TEST_CASE("identity resampling returns values unchanged") {
  Rng rng(11);
  ImageVolume v = test::random_image(rng, {7, 6, 5}, {0.85, 0.85, 2.5});
  v.geom.origin = {1.25, -3.5, 10.0};
  TargetSpacing t{{0.85, 0.85, 2.5}, false};
  for (Interpolator interp : {Interpolator::bspline3, Interpolator::trilinear,
                              Interpolator::nearest}) {
    ImageVolume r = resample(v, t, interp);
    CHECK(r.geom == v.geom);
    CHECK(r.values == v.values);
  }
  SUBCASE("preserve-z keeps the grid when in-plane also matches") {
    TargetSpacing tz{{0.85, 0.85, 0.0}, true};
    ImageVolume r = resample(v, tz, Interpolator::bspline3);
    CHECK(r.values == v.values);
  }
}

TEST_CASE("trilinear resampling reproduces a linear ramp exactly on the interior") {
  ImageVolume v;
  v.geom.dims = {21, 5, 5};
  v.geom.spacing = {1.0, 1.0, 1.0};
  v.values.resize(v.geom.voxel_count());
  for (int z = 0; z < 5; ++z)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 21; ++x) v.at(x, y, z) = static_cast<double>(x);  // f(x) = x (mm)

  TargetSpacing t{{0.5, 1.0, 1.0}, false};
  ImageVolume r = resample(v, t, Interpolator::trilinear);
  CHECK(r.geom.dims[0] == 42);
  for (int z = 1; z < r.geom.dims[2] - 1; ++z)
    for (int y = 1; y < r.geom.dims[1] - 1; ++y)
      for (int x = 4; x < r.geom.dims[0] - 4; ++x) {
        double phys = r.geom.origin[0] + x * 0.5;  // == f at the new center
        CHECK(std::abs(r.at(x, y, z) - phys) <= 1e-9);
      }
}

TEST_CASE("cubic B-spline reproduces linear fields away from the mirror boundary") {
  // mirror boundary turns a ramp into a tent, with coefficient error decaying
  // like |pole|^d from each edge, so only a wide interior band is exact
  ImageVolume v;
  v.geom.dims = {61, 3, 3};
  v.geom.spacing = {1.0, 1.0, 1.0};
  v.values.resize(v.geom.voxel_count());
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 61; ++x) v.at(x, y, z) = 2.0 * x + 10.0;

  TargetSpacing t{{0.7, 1.0, 1.0}, false};
  ImageVolume r = resample(v, t, Interpolator::bspline3);
  int margin = static_cast<int>(std::ceil(22.0 / 0.7));
  for (int y = 0; y < r.geom.dims[1]; ++y)
    for (int x = margin; x < r.geom.dims[0] - margin; ++x) {
      double px = r.geom.origin[0] + x * 0.7;
      double expect = 2.0 * px + 10.0;
      CHECK(r.at(x, y, 1) == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("resampled grids preserve the physical center and extent") {
  Rng rng(5);
  ImageVolume v = test::random_image(rng, {13, 9, 7}, {0.71, 0.71, 3.0});
  v.geom.origin = {4.0, -2.0, 7.5};
  TargetSpacing t{{1.0, 1.0, 1.0}, false};
  VolumeGeometry g = resample_geometry(v.geom, t);
  for (int a = 0; a < 3; ++a) {
    double in_center = v.geom.origin[a] + 0.5 * (v.geom.dims[a] - 1) * v.geom.spacing[a];
    double out_center = g.origin[a] + 0.5 * (g.dims[a] - 1) * g.spacing[a];
    CHECK(out_center == doctest::Approx(in_center).epsilon(1e-12));
    double in_extent = v.geom.dims[a] * v.geom.spacing[a];
    CHECK(g.dims[a] == static_cast<int>(std::ceil(in_extent / 1.0 - 1e-9)));
  }
}

TEST_CASE("mask resampling stays binary under nearest neighbor") {
  Rng rng(13);
  MaskVolume m = test::ellipsoid_mask({{12, 12, 8}, {0.85, 0.85, 2.5}, {0, 0, 0}});
  for (auto target : {std::array<double, 3>{1, 1, 1}, {0.4, 0.4, 0.4}, {2, 2, 5}}) {
    MaskVolume r = resample(m, TargetSpacing{target, false});
    for (auto v : r.values) CHECK((v == 0 || v == 1));
    CHECK(r.count_set() > 0);
  }
}

TEST_CASE("resample rejects nonpositive spacing") {
  ImageVolume v;
  v.geom.dims = {4, 4, 4};
  v.values.assign(64, 0.0);
  CHECK_THROWS_AS(resample(v, TargetSpacing{{0.0, 1, 1}, false}, Interpolator::trilinear), Error);
}

TEST_CASE("resegmentation applies the HU window to the mask") {
  ImageVolume img;
  img.geom.dims = {4, 1, 1};
  img.values = {0.0, 150.0, 400.0, -1000.0};
  MaskVolume mask;
  mask.geom = img.geom;
  mask.values = {1, 1, 1, 1};

  SUBCASE("voxels inside the window survive") {
    auto r = resegment(img, mask, -50.0, 350.0);
    CHECK(r.kept == 2);
    CHECK(r.removed == 2);
    CHECK(r.mask.values == std::vector<std::uint8_t>{1, 1, 0, 0});
  }
  SUBCASE("all voxels inside leaves the mask unchanged") {
    img.values = {0.0, 10.0, 150.0, 200.0};
    auto r = resegment(img, mask, -50.0, 350.0);
    CHECK(r.mask.values == mask.values);
    CHECK(r.removed == 0);
  }
  SUBCASE("400 HU voxel is removed by the default window") {
    img.values = {100.0, 100.0, 400.0, 100.0};
    auto r = resegment(img, mask, -50.0, 350.0);
    CHECK(r.mask.values == std::vector<std::uint8_t>{1, 1, 0, 1});
  }
  SUBCASE("empty result is an error") {
    img.values = {-1000.0, -1000.0, -1000.0, -1000.0};
    try {
      resegment(img, mask, -50.0, 350.0);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::empty_roi);
    }
  }
  SUBCASE("resegmentation is idempotent") {
    auto r1 = resegment(img, mask, -50.0, 350.0);
    auto r2 = resegment(img, r1.mask, -50.0, 350.0);
    CHECK(r2.mask.values == r1.mask.values);
    CHECK(r2.removed == 0);
  }
}

TEST_CASE("fixed-bin-count discretization") {
  ImageVolume img;
  img.geom.dims = {24, 1, 1};
  img.values.resize(24);
  for (int i = 0; i < 24; ++i) img.values[i] = i;
  MaskVolume mask;
  mask.geom = img.geom;
  mask.values.assign(24, 1);

  SUBCASE("24 consecutive integers map to 24 distinct levels") {
    DiscretizedROI roi = discretize(img, mask, 24);
    CHECK(roi.n_levels == 24);
    for (int i = 0; i < 24; ++i) CHECK(roi.roi_levels[i] == i + 1);
  }
  SUBCASE("the maximum value lands in the top bin (clamp rule)") {
    DiscretizedROI roi = discretize(img, mask, 7);
    CHECK(roi.roi_levels.back() == 7);
    CHECK(roi.roi_levels.front() == 1);
  }
  SUBCASE("constant ROI collapses to a single level") {
    img.values.assign(24, 42.0);
    DiscretizedROI roi = discretize(img, mask, 24);
    CHECK(roi.n_levels == 1);
    for (int l : roi.roi_levels) CHECK(l == 1);
  }
  SUBCASE("discretization is monotone and attains every level") {
    Rng rng(99);
    std::vector<double> vals(200);
    for (auto& v : vals) v = rng.uniform(-80.0, 300.0);
    ImageVolume big;
    big.geom.dims = {200, 1, 1};
    big.values = vals;
    MaskVolume bm;
    bm.geom = big.geom;
    bm.values.assign(200, 1);
    DiscretizedROI roi = discretize(big, bm, 24);
    std::set<int> seen(roi.roi_levels.begin(), roi.roi_levels.end());
    CHECK(static_cast<int>(seen.size()) == 24);
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (std::size_t j = 0; j < vals.size(); ++j)
        if (vals[i] <= vals[j]) CHECK(roi.roi_levels[i] <= roi.roi_levels[j]);
  }
}

TEST_CASE("builtin settings match their naming scheme") {
  const auto& configs = builtin_configs();
  REQUIRE(configs.size() == 8);

  auto get = [&](const std::string& n) { return builtin_config(n); };
  CHECK(get("L2i").in_plane_mm == 1.0);
  CHECK_FALSE(get("L2i").z_mm.has_value());
  CHECK(get("L2i").aggregation == Aggregation::agg2_5D);
  CHECK(get("L2").z_mm == 1.0);
  CHECK(get("L3").aggregation == Aggregation::agg3D);
  CHECK(get("S2i").in_plane_mm == 0.85);
  CHECK_FALSE(get("S2i").z_mm.has_value());
  CHECK(get("S2").z_mm == 0.85);
  CHECK(get("S3").aggregation == Aggregation::agg3D);
  CHECK(get("A2").z_mm == 2.5);
  CHECK(get("A2").aggregation == Aggregation::agg2_5D);
  CHECK(get("A3").z_mm == 2.5);
  CHECK(get("A3").aggregation == Aggregation::agg3D);

  for (const auto& c : configs) {
    CHECK(c.bin_count == 24);
    CHECK(c.resegment_lo == -50.0);
    CHECK(c.resegment_hi == 350.0);
    CHECK(c.image_interpolator == Interpolator::bspline3);
    CHECK(c.mask_interpolator == Interpolator::nearest);
    if (c.name.back() == 'i') {
      CHECK_FALSE(c.z_mm.has_value());
      CHECK(c.aggregation == Aggregation::agg2_5D);
    }
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("settings resolution") {
  CHECK(resolve_settings("all", {}).size() == 8);
  CHECK(resolve_settings("L2i,S3", {}).size() == 2);
  CHECK_THROWS_WITH_AS(resolve_settings("XL9", {}), doctest::Contains("valid"), Error);
}

TEST_CASE("custom settings load from a JSON config file") {
  auto dir = test::temp_dir("prep_config");
  {
    std::ofstream out(dir + "/settings.json");
    out << R"({"coarse16": {"in_plane_mm": 2.0, "z_mm": 2.5, "aggregation": "3D",
                "bin_count": 16, "resegment_window": [-100, 400],
                "image_interpolator": "trilinear"},
               "planar": {"in_plane_mm": 1.0, "z_mm": "preserve", "aggregation": "2.5D"}})";
  }
  auto custom = load_config_file(dir + "/settings.json");
  REQUIRE(custom.size() == 2);
  const auto& c = custom[0].name == "coarse16" ? custom[0] : custom[1];
  CHECK(c.in_plane_mm == 2.0);
  CHECK(c.z_mm == 2.5);
  CHECK(c.bin_count == 16);
  CHECK(c.resegment_lo == -100.0);
  CHECK(c.resegment_hi == 400.0);
  CHECK(c.image_interpolator == Interpolator::trilinear);
  const auto& p = custom[0].name == "planar" ? custom[0] : custom[1];
  CHECK_FALSE(p.z_mm.has_value());
  CHECK(p.aggregation == Aggregation::agg2_5D);
  CHECK(p.bin_count == 24);  // defaults apply

  auto resolved = resolve_settings("coarse16,A3", custom);
  REQUIRE(resolved.size() == 2);
  CHECK(resolved[0].name == "coarse16");
  CHECK(resolved[1].name == "A3");

  SUBCASE("built-in names may not be redefined") {
    std::ofstream out(dir + "/clash.json");
    out << R"({"A3": {"in_plane_mm": 1.0, "aggregation": "3D"}})";
    out.close();
    CHECK_THROWS_AS(load_config_file(dir + "/clash.json"), Error);
  }
  SUBCASE("custom settings run through the extraction pipeline") {
    Rng rng(8);
    ImageVolume img = test::random_image(rng, {16, 16, 8}, {1.0, 1.0, 2.5}, 0.0, 200.0);
    MaskVolume mask = test::ellipsoid_mask(img.geom, 0.4);
    auto res = extract(img, {{"tumor", &mask}}, c);
    REQUIRE(res[0].features.has_value());
    CHECK(res[0].features->extractor == "coarse16");
  }
}

TEST_CASE("in-plane-only resampling requires 2.5D aggregation") {
  ExtractionConfig c = builtin_config("L2i");
  c.aggregation = Aggregation::agg3D;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("prepare_roi runs the full pipeline") {
  Rng rng(31);
  ImageVolume img = test::random_image(rng, {20, 20, 12}, {0.9, 0.9, 2.5}, 20.0, 180.0);
  MaskVolume mask = test::ellipsoid_mask(img.geom, 0.35);
  DiscretizedROI roi = prepare_roi(img, mask, builtin_config("A3"));
  CHECK(roi.voxel_count > 0);
  CHECK(roi.n_levels == 24);
  CHECK(roi.spacing[0] == doctest::Approx(0.85));
  CHECK(roi.spacing[2] == doctest::Approx(2.5));
  CHECK(roi.min_hu >= -50.0);
  CHECK(roi.max_hu <= 350.0);
}
