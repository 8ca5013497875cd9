#include "rrw/features.hpp"

#include <algorithm>
#include <cmath>

#include "rrw/stats_util.hpp"
#include "texture_internal.hpp"

namespace rrw {

namespace {

using detail::CountMatrix;
using detail::NgtdmAccumulator;

bool in_plane(const Offset& d) { return d[2] == 0; }

void validate_direction(FeatureFamily family, const std::optional<Offset>& dir, Scope scope) {
  const bool directional = family == FeatureFamily::glcm || family == FeatureFamily::glrlm;
  if (directional && !dir)
    fail(ErrorKind::argument, family_str(family) + " requires a direction");
  if (!directional && dir)
    fail(ErrorKind::argument, family_str(family) + " takes no direction");
  if (dir) {
    const Offset& d = *dir;
    if (d[0] == 0 && d[1] == 0 && d[2] == 0) fail(ErrorKind::argument, "null direction");
    for (int c : d)
      if (c < -1 || c > 1) fail(ErrorKind::argument, "directions are Chebyshev distance 1 offsets");
    if (scope != Scope::volume && !in_plane(d))
      fail(ErrorKind::argument, "out-of-plane direction with a per-slice scope");
  }
}

// Mean taken over ascending sorted values: exact rotation/permutation
// invariance of the direction average and independence from direction order.
double sorted_mean(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<std::optional<double>> directional_aggregate(const DiscretizedROI& roi,
                                                         FeatureFamily family, Aggregation agg) {
  const auto& dirs = agg == Aggregation::agg3D ? directions_3d() : directions_in_plane();
  const Scope scope = agg == Aggregation::agg3D ? Scope::volume : Scope::merged_slices;
  const int n_features = family == FeatureFamily::glcm ? kGlcmCount : kGlrlmCount;

  std::vector<std::vector<std::optional<double>>> per_dir(dirs.size());
#pragma omp parallel for schedule(static)
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    CountMatrix m;
    if (family == FeatureFamily::glcm) {
      detail::glcm_kernel(roi, dirs[d], scope, -1, m);
      per_dir[d] = detail::glcm_features(m, roi.n_levels);
    } else {
      detail::glrlm_kernel(roi, dirs[d], scope, -1, m);
      per_dir[d] = detail::glrlm_features(m, roi.voxel_count);
    }
  }

  std::vector<std::optional<double>> out(n_features);
  std::vector<double> vals;
  for (int f = 0; f < n_features; ++f) {
    vals.clear();
    for (const auto& dirvals : per_dir)
      if (dirvals[f]) vals.push_back(*dirvals[f]);
    if (!vals.empty()) out[f] = sorted_mean(vals);
  }
  return out;
}

std::vector<std::optional<double>> nondirectional_aggregate(const DiscretizedROI& roi,
                                                            FeatureFamily family, Aggregation agg) {
  const Scope scope = agg == Aggregation::agg3D ? Scope::volume : Scope::merged_slices;
  switch (family) {
    case FeatureFamily::glszm: {
      CountMatrix m;
      detail::glszm_kernel(roi, scope, -1, m);
      return detail::glszm_features(m, roi.voxel_count);
    }
    case FeatureFamily::gldm: {
      CountMatrix m;
      detail::gldm_kernel(roi, scope, -1, m);
      return detail::gldm_features(m);
    }
    default: {
      NgtdmAccumulator a;
      detail::ngtdm_kernel(roi, scope, -1, a);
      return detail::ngtdm_features(a);
    }
  }
}

}  // namespace

TextureMatrix build_texture_matrix(const DiscretizedROI& roi, FeatureFamily family,
                                   std::optional<Offset> direction, Scope scope, int slice_index) {
  if (roi.voxel_count <= 0) fail(ErrorKind::empty_roi, "texture matrix of an empty ROI");
  if (family == FeatureFamily::firstorder)
    fail(ErrorKind::argument, "first-order features have no texture matrix");
  validate_direction(family, direction, scope);
  if (scope == Scope::single_slice && (slice_index < 0 || slice_index >= roi.box_dims[2]))
    fail(ErrorKind::argument, "single_slice scope needs a slice index inside the ROI box");

  TextureMatrix t;
  t.family = family;
  t.scope = scope;
  t.direction = direction;

  auto from_counts = [&](const CountMatrix& m) {
    t.rows = m.rows;
    t.cols = m.cols;
    t.data.assign(m.v.begin(), m.v.end());
  };

  switch (family) {
    case FeatureFamily::glcm: {
      CountMatrix m;
      detail::glcm_kernel(roi, *direction, scope, slice_index, m);
      from_counts(m);
      break;
    }
    case FeatureFamily::glrlm: {
      CountMatrix m;
      detail::glrlm_kernel(roi, *direction, scope, slice_index, m);
      from_counts(m);
      break;
    }
    case FeatureFamily::glszm: {
      CountMatrix m;
      detail::glszm_kernel(roi, scope, slice_index, m);
      from_counts(m);
      break;
    }
    case FeatureFamily::gldm: {
      CountMatrix m;
      detail::gldm_kernel(roi, scope, slice_index, m);
      from_counts(m);
      break;
    }
    default: {
      NgtdmAccumulator a;
      detail::ngtdm_kernel(roi, scope, slice_index, a);
      t.rows = static_cast<int>(a.n.size());
      t.cols = 2;
      t.data.resize(static_cast<std::size_t>(t.rows) * 2);
      for (int i = 0; i < t.rows; ++i) {
        t.data[2 * i] = static_cast<double>(a.n[i]);
        t.data[2 * i + 1] = a.s[i];
      }
      break;
    }
  }
  return t;
}

std::vector<std::optional<double>> aggregate_features(const DiscretizedROI& roi,
                                                      FeatureFamily family, Aggregation agg) {
  if (roi.voxel_count <= 0) fail(ErrorKind::empty_roi, "feature aggregation over an empty ROI");
  switch (family) {
    case FeatureFamily::firstorder:
      return first_order_features(roi);
    case FeatureFamily::glcm:
    case FeatureFamily::glrlm:
      return directional_aggregate(roi, family, agg);
    default:
      return nondirectional_aggregate(roi, family, agg);
  }
}

std::vector<std::optional<double>> first_order_features(const DiscretizedROI& roi) {
  if (roi.voxel_count <= 0) fail(ErrorKind::empty_roi, "first-order features of an empty ROI");
  const auto& v = roi.roi_values;
  const double n = static_cast<double>(v.size());

  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());

  double sum = 0.0, sum_sq = 0.0;
  for (double x : v) {
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0, abs_dev = 0.0;
  for (double x : v) {
    double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    abs_dev += std::abs(d);
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  const double p10 = percentile_sorted(sorted, 10.0);
  const double p25 = percentile_sorted(sorted, 25.0);
  const double p50 = percentile_sorted(sorted, 50.0);
  const double p75 = percentile_sorted(sorted, 75.0);
  const double p90 = percentile_sorted(sorted, 90.0);

  double robust_sum = 0.0;
  long robust_n = 0;
  for (double x : sorted)
    if (x >= p10 && x <= p90) {
      robust_sum += x;
      ++robust_n;
    }
  double rmad = 0.0;
  if (robust_n > 0) {
    double robust_mean = robust_sum / static_cast<double>(robust_n);
    double acc = 0.0;
    for (double x : sorted)
      if (x >= p10 && x <= p90) acc += std::abs(x - robust_mean);
    rmad = acc / static_cast<double>(robust_n);
  }

  // entropy/uniformity from the discretized histogram
  std::vector<double> hist(roi.n_levels, 0.0);
  for (int l : roi.roi_levels) hist[l - 1] += 1.0;
  double entropy = 0.0, uniformity = 0.0;
  for (double c : hist) {
    double p = c / n;
    if (p > 0.0) {
      entropy -= p * std::log2(p);
      uniformity += p * p;
    }
  }

  std::vector<std::optional<double>> out(kFirstOrderCount);
  int k = 0;
  out[k++] = sum_sq;                                // Energy
  out[k++] = roi.spacing[0] * roi.spacing[1] * roi.spacing[2] * sum_sq;  // TotalEnergy
  out[k++] = entropy;
  out[k++] = sorted.front();                        // Minimum
  out[k++] = p10;
  out[k++] = p90;
  out[k++] = sorted.back();                         // Maximum
  out[k++] = mean;
  out[k++] = p50;                                   // Median
  out[k++] = p75 - p25;                             // InterquartileRange
  out[k++] = sorted.back() - sorted.front();        // Range
  out[k++] = abs_dev / n;                           // MeanAbsoluteDeviation
  out[k++] = rmad;
  out[k++] = std::sqrt(sum_sq / n);                 // RootMeanSquared
  if (m2 > 0.0) {
    out[k++] = m3 / std::pow(m2, 1.5);              // Skewness
    out[k++] = m4 / (m2 * m2);                      // Kurtosis (not excess)
  } else {
    out[k++] = std::nullopt;
    out[k++] = std::nullopt;
  }
  out[k++] = m2;                                    // Variance
  out[k++] = uniformity;
  return out;
}

std::vector<RoiExtraction> extract(const ImageVolume& image, const std::vector<RoiSpec>& rois,
                                   const ExtractionConfig& cfg) {
  cfg.validate();
  std::vector<RoiExtraction> out;
  out.reserve(rois.size());
  for (const auto& spec : rois) {
    RoiExtraction res;
    res.roi = spec.name;
    try {
      if (!spec.mask) fail(ErrorKind::argument, "null mask for ROI " + spec.name);
      DiscretizedROI roi = prepare_roi(image, *spec.mask, cfg);

      FeatureVector fv;
      fv.extractor = cfg.name;
      fv.roi = spec.name;
      const FeatureFamily families[] = {FeatureFamily::firstorder, FeatureFamily::glcm,
                                        FeatureFamily::glrlm, FeatureFamily::glszm,
                                        FeatureFamily::gldm, FeatureFamily::ngtdm};
      for (FeatureFamily fam : families) {
        auto vals = aggregate_features(roi, fam, cfg.aggregation);
        auto [first, last] = family_range(fam);
        for (int i = first; i < last; ++i) {
          fv.values[i] = vals[i - first];
          if (!fv.values[i])
            res.missing_features.push_back(family_str(fam) + std::string(".") +
                                           feature_registry()[i].name);
        }
      }
      res.features = std::move(fv);
    } catch (const Error& e) {
      res.error = e.what();
    }
    out.push_back(std::move(res));
  }
  return out;
}

DiscretizedROI roi_from_levels(const std::array<int, 3>& dims, const std::vector<int>& levels,
                               int n_levels, const std::array<double, 3>& spacing) {
  DiscretizedROI roi;
  roi.box_dims = dims;
  roi.box_offset = {0, 0, 0};
  roi.spacing = spacing;
  roi.levels = levels;
  roi.n_levels = n_levels;
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        int l = roi.level_at(x, y, z);
        if (l > 0) {
          if (l > n_levels) fail(ErrorKind::argument, "level above n_levels");
          roi.roi_values.push_back(static_cast<double>(l));
          roi.roi_levels.push_back(l);
          ++roi.voxel_count;
        }
      }
  if (roi.voxel_count == 0) fail(ErrorKind::empty_roi, "level grid has no ROI voxels");
  auto [mn, mx] = std::minmax_element(roi.roi_values.begin(), roi.roi_values.end());
  roi.min_hu = *mn;
  roi.max_hu = *mx;
  double s = 0.0;
  for (double x : roi.roi_values) s += x;
  roi.mean_hu = s / static_cast<double>(roi.voxel_count);
  return roi;
}

}  // namespace rrw
