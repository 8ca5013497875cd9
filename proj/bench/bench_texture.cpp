// Benchmark: production texture kernels (1 thread vs all cores) against the
// naive serial reference enumerators, plus the resampling kernel.
//
//   ./rrw_bench [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "reference/reference.hpp"
#include "rrw/features.hpp"
#include "rrw/preprocess.hpp"
#include "rrw/rng.hpp"

using namespace rrw;

namespace {

DiscretizedROI make_roi(int nx, int ny, int nz, int n_levels, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> levels(static_cast<std::size_t>(nx) * ny * nz, 0);
  double cx = 0.5 * (nx - 1), cy = 0.5 * (ny - 1), cz = 0.5 * (nz - 1);
  std::size_t i = 0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x, ++i) {
        double u = (x - cx) / (0.48 * nx), v = (y - cy) / (0.48 * ny), w = (z - cz) / (0.48 * nz);
        if (u * u + v * v + w * w <= 1.0)
          levels[i] = static_cast<int>(rng.below(n_levels)) + 1;
      }
  return roi_from_levels({nx, ny, nz}, levels, n_levels);
}

template <class F>
double time_ms(int repeats, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    if (ms < best) best = ms;
  }
  return best;
}

void row(const char* name, double serial_ref, double t1, double tn, int threads) {
  if (serial_ref > 0.0)
    std::printf("%-28s %10.2f %10.2f %10.2f %8.2fx %9.2fx\n", name, serial_ref, t1, tn,
                serial_ref / t1, t1 / tn);
  else
    std::printf("%-28s %10s %10.2f %10.2f %8s %9.2fx\n", name, "-", t1, tn, "-", t1 / tn);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  const int threads = omp_get_max_threads();

  // reference comparison on a moderate ROI (the reference is O(N^2) on purpose)
  DiscretizedROI small = make_roi(24, 24, 12, 24, 11);
  // production scaling on a larger ROI
  DiscretizedROI big = make_roi(96, 96, 48, 24, 12);

  std::printf("texture kernels: %lld voxels (reference ROI), %lld voxels (scaling ROI), "
              "%d threads, best of %d\n\n",
              static_cast<long long>(small.voxel_count), static_cast<long long>(big.voxel_count),
              threads, repeats);
  std::printf("%-28s %10s %10s %10s %8s %9s\n", "kernel (ms)", "reference", "1 thread",
              "all cores", "vs ref", "scaling");

  auto bench_family = [&](const char* name, FeatureFamily fam, std::optional<Offset> dir,
                          auto&& ref_fn) {
    double ref_ms = time_ms(repeats, [&] { ref_fn(small); });
    omp_set_num_threads(1);
    double small1 =
        time_ms(repeats, [&] { build_texture_matrix(small, fam, dir, Scope::volume); });
    row((std::string(name) + " [reference ROI]").c_str(), ref_ms, small1, small1, threads);

    omp_set_num_threads(1);
    double t1 = time_ms(repeats, [&] { build_texture_matrix(big, fam, dir, Scope::volume); });
    omp_set_num_threads(threads);
    double tn = time_ms(repeats, [&] { build_texture_matrix(big, fam, dir, Scope::volume); });
    row((std::string(name) + " [scaling ROI]").c_str(), 0.0, t1, tn, threads);
  };

  bench_family("glcm (one direction)", FeatureFamily::glcm, Offset{1, 1, 0},
               [](const DiscretizedROI& r) { ref::glcm(r, {1, 1, 0}); });
  bench_family("glrlm (one direction)", FeatureFamily::glrlm, Offset{1, 1, 0},
               [](const DiscretizedROI& r) { ref::glrlm(r, {1, 1, 0}); });
  bench_family("glszm", FeatureFamily::glszm, std::nullopt,
               [](const DiscretizedROI& r) { ref::glszm(r, true); });
  bench_family("gldm", FeatureFamily::gldm, std::nullopt,
               [](const DiscretizedROI& r) { ref::gldm(r, true); });
  bench_family("ngtdm", FeatureFamily::ngtdm, std::nullopt,
               [](const DiscretizedROI& r) { ref::ngtdm(r, true); });

  // full per-ROI feature aggregation (the unit of cohort-level fan-out)
  {
    omp_set_num_threads(1);
    double t1 = time_ms(repeats, [&] {
      for (FeatureFamily f : {FeatureFamily::glcm, FeatureFamily::glrlm, FeatureFamily::glszm,
                              FeatureFamily::gldm, FeatureFamily::ngtdm})
        aggregate_features(big, f, Aggregation::agg3D);
    });
    omp_set_num_threads(threads);
    double tn = time_ms(repeats, [&] {
      for (FeatureFamily f : {FeatureFamily::glcm, FeatureFamily::glrlm, FeatureFamily::glszm,
                              FeatureFamily::gldm, FeatureFamily::ngtdm})
        aggregate_features(big, f, Aggregation::agg3D);
    });
    row("all texture families (3D)", 0.0, t1, tn, threads);
  }

  // B-spline resampling kernel
  {
    Rng rng(13);
    ImageVolume v;
    v.geom.dims = {128, 128, 40};
    v.geom.spacing = {0.85, 0.85, 2.5};
    v.values.resize(v.geom.voxel_count());
    for (auto& x : v.values) x = rng.uniform(-100.0, 300.0);
    TargetSpacing t{{1.0, 1.0, 1.0}, false};
    omp_set_num_threads(1);
    double t1 = time_ms(repeats, [&] { resample(v, t, Interpolator::bspline3); });
    omp_set_num_threads(threads);
    double tn = time_ms(repeats, [&] { resample(v, t, Interpolator::bspline3); });
    row("bspline3 resample 128x128x40", 0.0, t1, tn, threads);
  }

  return 0;
}
