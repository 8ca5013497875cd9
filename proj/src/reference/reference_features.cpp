#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "reference.hpp"

// Literal, definition-at-a-time transcriptions of the feature formulas. Each
// feature recomputes what it needs from the raw matrix; no shared state with
// the production formula code.

namespace rrw::ref {

namespace {

double lg2(double x) { return std::log2(x); }

}  // namespace

std::vector<std::optional<double>> glcm_features(const CountMatrix& m, int n_levels) {
  std::vector<std::optional<double>> out(kGlcmCount);
  const int ng = m.rows;
  double total = 0.0;
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j) total += static_cast<double>(m.at(i, j));
  if (total <= 0.0) return out;

  auto p = [&](int i, int j) { return static_cast<double>(m.at(i, j)) / total; };
  auto px = [&](int i) {
    double s = 0.0;
    for (int j = 0; j < ng; ++j) s += p(i, j);
    return s;
  };
  auto py = [&](int j) {
    double s = 0.0;
    for (int i = 0; i < ng; ++i) s += p(i, j);
    return s;
  };
  auto mu_x = [&] {
    double s = 0.0;
    for (int i = 0; i < ng; ++i) s += (i + 1.0) * px(i);
    return s;
  }();
  auto mu_y = [&] {
    double s = 0.0;
    for (int j = 0; j < ng; ++j) s += (j + 1.0) * py(j);
    return s;
  }();
  auto p_diff = [&](int k) {
    double s = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j)
        if (std::abs(i - j) == k) s += p(i, j);
    return s;
  };
  auto p_sum = [&](int k) {  // k is the level-value sum i+j, 2..2Ng
    double s = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j)
        if ((i + 1) + (j + 1) == k) s += p(i, j);
    return s;
  };

  {  // Autocorrelation
    double s = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) s += (i + 1.0) * (j + 1.0) * p(i, j);
    out[0] = s;
  }
  {  // ClusterProminence / ClusterShade / ClusterTendency
    double s4 = 0.0, s3 = 0.0, s2 = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) {
        double d = (i + 1.0) + (j + 1.0) - mu_x - mu_y;
        s4 += std::pow(d, 4.0) * p(i, j);
        s3 += std::pow(d, 3.0) * p(i, j);
        s2 += std::pow(d, 2.0) * p(i, j);
      }
    out[1] = s4;
    out[2] = s3;
    out[3] = s2;
  }
  {  // Contrast
    double s = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) s += (i - j) * (i - j) * p(i, j);
    out[4] = s;
  }
  {  // Correlation
    double vx = 0.0, vy = 0.0, cov = 0.0;
    for (int i = 0; i < ng; ++i) vx += px(i) * std::pow(i + 1.0 - mu_x, 2.0);
    for (int j = 0; j < ng; ++j) vy += py(j) * std::pow(j + 1.0 - mu_y, 2.0);
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) cov += p(i, j) * (i + 1.0 - mu_x) * (j + 1.0 - mu_y);
    if (vx > 0.0 && vy > 0.0) out[5] = cov / std::sqrt(vx * vy);
  }
  {  // DifferenceAverage / DifferenceEntropy / DifferenceVariance
    double avg = 0.0;
    for (int k = 0; k < ng; ++k) avg += k * p_diff(k);
    double ent = 0.0, var = 0.0;
    for (int k = 0; k < ng; ++k) {
      double pk = p_diff(k);
      if (pk > 0.0) ent -= pk * lg2(pk);
      var += (k - avg) * (k - avg) * pk;
    }
    out[6] = avg;
    out[7] = ent;
    out[8] = var;
  }
  {  // Id / Idm / Idmn / Idn / InverseVariance
    double id = 0.0, idm = 0.0, idmn = 0.0, idn = 0.0, iv = 0.0;
    for (int k = 0; k < ng; ++k) {
      double pk = p_diff(k);
      id += pk / (1.0 + k);
      idm += pk / (1.0 + k * k);
      idmn += pk / (1.0 + (double(k) * k) / (double(n_levels) * n_levels));
      idn += pk / (1.0 + double(k) / n_levels);
      if (k > 0) iv += pk / (double(k) * k);
    }
    out[9] = id;
    out[10] = idm;
    out[11] = idmn;
    out[12] = idn;
    out[15] = iv;
  }
  {  // Imc1 / Imc2
    double hx = 0.0, hy = 0.0, hxy = 0.0, hxy1 = 0.0, hxy2 = 0.0;
    for (int i = 0; i < ng; ++i)
      if (px(i) > 0.0) hx -= px(i) * lg2(px(i));
    for (int j = 0; j < ng; ++j)
      if (py(j) > 0.0) hy -= py(j) * lg2(py(j));
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) {
        if (p(i, j) > 0.0) {
          hxy -= p(i, j) * lg2(p(i, j));
          hxy1 -= p(i, j) * lg2(px(i) * py(j));
        }
        if (px(i) * py(j) > 0.0) hxy2 -= px(i) * py(j) * lg2(px(i) * py(j));
      }
    if (std::max(hx, hy) > 0.0) out[13] = (hxy - hxy1) / std::max(hx, hy);
    double arg = 1.0 - std::exp(-2.0 * (hxy2 - hxy));
    out[14] = std::sqrt(arg < 0.0 ? 0.0 : arg);
    out[18] = hxy;
  }
  {  // JointAverage
    double s = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) s += (i + 1.0) * p(i, j);
    out[16] = s;
  }
  {  // JointEnergy
    double s = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) s += p(i, j) * p(i, j);
    out[17] = s;
  }
  {  // MCC
    std::vector<int> lv;
    for (int i = 0; i < ng; ++i)
      if (px(i) > 0.0) lv.push_back(i);
    if (lv.size() < 2) {
      out[19] = 1.0;
    } else {
      int np = static_cast<int>(lv.size());
      Eigen::MatrixXd q(np, np);
      for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b) {
          double s = 0.0;
          for (int k = 0; k < np; ++k)
            s += p(lv[a], lv[k]) * p(lv[b], lv[k]) / (px(lv[a]) * py(lv[k]));
          q(a, b) = s;
        }
      Eigen::EigenSolver<Eigen::MatrixXd> es(q, false);
      std::vector<double> ev;
      for (int i = 0; i < np; ++i) ev.push_back(es.eigenvalues()[i].real());
      std::sort(ev.begin(), ev.end());
      out[19] = std::sqrt(std::max(0.0, ev[np - 2]));
    }
  }
  {  // MaximumProbability
    double s = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) s = std::max(s, p(i, j));
    out[20] = s;
  }
  {  // SumAverage / SumEntropy
    double avg = 0.0, ent = 0.0;
    for (int k = 2; k <= 2 * ng; ++k) {
      double pk = p_sum(k);
      avg += k * pk;
      if (pk > 0.0) ent -= pk * lg2(pk);
    }
    out[21] = avg;
    out[22] = ent;
  }
  {  // SumSquares
    double s = 0.0;
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) s += std::pow(i + 1.0 - mu_x, 2.0) * p(i, j);
    out[23] = s;
  }
  return out;
}

namespace {

// Shared by the three (level, size)-style families; formulas written out per
// family below to stay literal where the definitions differ.
double matrix_total(const CountMatrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) s += static_cast<double>(m.at(i, j));
  return s;
}

}  // namespace

std::vector<std::optional<double>> glrlm_features(const CountMatrix& m, long n_voxels) {
  std::vector<std::optional<double>> out(kGlrlmCount);
  double nr = matrix_total(m);
  if (nr <= 0.0) return out;
  auto sum_ij = [&](auto f) {
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i)
      for (int j = 0; j < m.cols; ++j)
        if (m.at(i, j)) s += f(i + 1.0, j + 1.0, static_cast<double>(m.at(i, j)));
    return s;
  };
  double glnu = 0.0;
  for (int i = 0; i < m.rows; ++i) {
    double r = 0.0;
    for (int j = 0; j < m.cols; ++j) r += static_cast<double>(m.at(i, j));
    glnu += r * r;
  }
  double rlnu = 0.0;
  for (int j = 0; j < m.cols; ++j) {
    double c = 0.0;
    for (int i = 0; i < m.rows; ++i) c += static_cast<double>(m.at(i, j));
    rlnu += c * c;
  }
  double mu_i = sum_ij([&](double i, double, double c) { return i * c / nr; });
  double mu_j = sum_ij([&](double, double j, double c) { return j * c / nr; });

  out[0] = glnu / nr;
  out[1] = glnu / (nr * nr);
  out[2] = sum_ij([&](double i, double, double c) { return (i - mu_i) * (i - mu_i) * c / nr; });
  out[3] = sum_ij([&](double i, double, double c) { return i * i * c; }) / nr;
  out[4] = sum_ij([&](double, double j, double c) { return j * j * c; }) / nr;
  out[5] = sum_ij([&](double i, double j, double c) { return i * i * j * j * c; }) / nr;
  out[6] = sum_ij([&](double i, double j, double c) { return j * j * c / (i * i); }) / nr;
  out[7] = sum_ij([&](double i, double, double c) { return c / (i * i); }) / nr;
  out[8] = sum_ij([&](double, double, double c) { return -(c / nr) * lg2(c / nr); });
  out[9] = rlnu / nr;
  out[10] = rlnu / (nr * nr);
  out[11] = nr / static_cast<double>(n_voxels);
  out[12] = sum_ij([&](double, double j, double c) { return (j - mu_j) * (j - mu_j) * c / nr; });
  out[13] = sum_ij([&](double, double j, double c) { return c / (j * j); }) / nr;
  out[14] = sum_ij([&](double i, double j, double c) { return i * i * c / (j * j); }) / nr;
  out[15] = sum_ij([&](double i, double j, double c) { return c / (i * i * j * j); }) / nr;
  return out;
}

std::vector<std::optional<double>> glszm_features(const CountMatrix& m, long n_voxels) {
  std::vector<std::optional<double>> out(kGlszmCount);
  double nz = matrix_total(m);
  if (nz <= 0.0) return out;
  auto sum_ij = [&](auto f) {
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i)
      for (int j = 0; j < m.cols; ++j)
        if (m.at(i, j)) s += f(i + 1.0, j + 1.0, static_cast<double>(m.at(i, j)));
    return s;
  };
  double glnu = 0.0;
  for (int i = 0; i < m.rows; ++i) {
    double r = 0.0;
    for (int j = 0; j < m.cols; ++j) r += static_cast<double>(m.at(i, j));
    glnu += r * r;
  }
  double sznu = 0.0;
  for (int j = 0; j < m.cols; ++j) {
    double c = 0.0;
    for (int i = 0; i < m.rows; ++i) c += static_cast<double>(m.at(i, j));
    sznu += c * c;
  }
  double mu_i = sum_ij([&](double i, double, double c) { return i * c / nz; });
  double mu_s = sum_ij([&](double, double s, double c) { return s * c / nz; });

  out[0] = glnu / nz;
  out[1] = glnu / (nz * nz);
  out[2] = sum_ij([&](double i, double, double c) { return (i - mu_i) * (i - mu_i) * c / nz; });
  out[3] = sum_ij([&](double i, double, double c) { return i * i * c; }) / nz;
  out[4] = sum_ij([&](double, double s, double c) { return s * s * c; }) / nz;
  out[5] = sum_ij([&](double i, double s, double c) { return i * i * s * s * c; }) / nz;
  out[6] = sum_ij([&](double i, double s, double c) { return s * s * c / (i * i); }) / nz;
  out[7] = sum_ij([&](double i, double, double c) { return c / (i * i); }) / nz;
  out[8] = sznu / nz;
  out[9] = sznu / (nz * nz);
  out[10] = sum_ij([&](double, double s, double c) { return c / (s * s); }) / nz;
  out[11] = sum_ij([&](double i, double s, double c) { return i * i * c / (s * s); }) / nz;
  out[12] = sum_ij([&](double i, double s, double c) { return c / (i * i * s * s); }) / nz;
  out[13] = sum_ij([&](double, double, double c) { return -(c / nz) * lg2(c / nz); });
  out[14] = nz / static_cast<double>(n_voxels);
  out[15] = sum_ij([&](double, double s, double c) { return (s - mu_s) * (s - mu_s) * c / nz; });
  return out;
}

std::vector<std::optional<double>> gldm_features(const CountMatrix& m) {
  std::vector<std::optional<double>> out(kGldmCount);
  double nz = matrix_total(m);
  if (nz <= 0.0) return out;
  auto sum_ij = [&](auto f) {
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i)
      for (int j = 0; j < m.cols; ++j)
        if (m.at(i, j)) s += f(i + 1.0, j + 1.0, static_cast<double>(m.at(i, j)));
    return s;
  };
  double glnu = 0.0;
  for (int i = 0; i < m.rows; ++i) {
    double r = 0.0;
    for (int j = 0; j < m.cols; ++j) r += static_cast<double>(m.at(i, j));
    glnu += r * r;
  }
  double dnu = 0.0;
  for (int j = 0; j < m.cols; ++j) {
    double c = 0.0;
    for (int i = 0; i < m.rows; ++i) c += static_cast<double>(m.at(i, j));
    dnu += c * c;
  }
  double mu_i = sum_ij([&](double i, double, double c) { return i * c / nz; });
  double mu_j = sum_ij([&](double, double j, double c) { return j * c / nz; });

  out[0] = sum_ij([&](double, double, double c) { return -(c / nz) * lg2(c / nz); });
  out[1] = dnu / nz;
  out[2] = dnu / (nz * nz);
  out[3] = sum_ij([&](double, double j, double c) { return (j - mu_j) * (j - mu_j) * c / nz; });
  out[4] = glnu / nz;
  out[5] = sum_ij([&](double i, double, double c) { return (i - mu_i) * (i - mu_i) * c / nz; });
  out[6] = sum_ij([&](double i, double, double c) { return i * i * c; }) / nz;
  out[7] = sum_ij([&](double, double j, double c) { return j * j * c; }) / nz;
  out[8] = sum_ij([&](double i, double j, double c) { return i * i * j * j * c; }) / nz;
  out[9] = sum_ij([&](double i, double j, double c) { return j * j * c / (i * i); }) / nz;
  out[10] = sum_ij([&](double i, double, double c) { return c / (i * i); }) / nz;
  out[11] = sum_ij([&](double, double j, double c) { return c / (j * j); }) / nz;
  out[12] = sum_ij([&](double i, double j, double c) { return i * i * c / (j * j); }) / nz;
  out[13] = sum_ij([&](double i, double j, double c) { return c / (i * i * j * j); }) / nz;
  return out;
}

std::vector<std::optional<double>> ngtdm_features(const NgtdmAccumulator& a) {
  std::vector<std::optional<double>> out(kNgtdmCount);
  double nvp = 0.0;
  for (long long c : a.n) nvp += static_cast<double>(c);
  if (nvp <= 0.0) return out;
  const int ng = static_cast<int>(a.n.size());

  double sum_ps = 0.0, sum_s = 0.0;
  int ngp = 0;
  for (int i = 0; i < ng; ++i) {
    if (a.n[i] == 0) continue;
    ++ngp;
    sum_ps += (a.n[i] / nvp) * a.s[i];
    sum_s += a.s[i];
  }

  double busy_den = 0.0, complexity = 0.0, pair_contrast = 0.0, strength_num = 0.0;
  for (int i = 0; i < ng; ++i) {
    if (a.n[i] == 0) continue;
    for (int j = 0; j < ng; ++j) {
      if (a.n[j] == 0) continue;
      double pi = a.n[i] / nvp, pj = a.n[j] / nvp;
      double iv = i + 1.0, jv = j + 1.0;
      busy_den += std::abs(iv * pi - jv * pj);
      complexity += std::abs(iv - jv) * (pi * a.s[i] + pj * a.s[j]) / (pi + pj);
      pair_contrast += pi * pj * (iv - jv) * (iv - jv);
      strength_num += (pi + pj) * (iv - jv) * (iv - jv);
    }
  }
  if (busy_den > 0.0) out[0] = sum_ps / busy_den;
  if (sum_ps > 0.0) out[1] = 1.0 / sum_ps;
  out[2] = complexity / nvp;
  if (ngp > 1) out[3] = (pair_contrast / (double(ngp) * (ngp - 1))) * (sum_s / nvp);
  if (sum_s > 0.0) out[4] = strength_num / sum_s;
  return out;
}

std::vector<std::optional<double>> first_order(const DiscretizedROI& roi) {
  std::vector<std::optional<double>> out(kFirstOrderCount);
  std::vector<double> v = roi.roi_values;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());

  auto pct = [&](double q) {
    double rank = q / 100.0 * (n - 1.0);
    std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (rank - std::floor(rank)) * (v[hi] - v[lo]);
  };

  double energy = 0.0, mean = 0.0;
  for (double x : v) {
    energy += x * x;
    mean += x;
  }
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
  for (double x : v) {
    m2 += std::pow(x - mean, 2.0) / n;
    m3 += std::pow(x - mean, 3.0) / n;
    m4 += std::pow(x - mean, 4.0) / n;
    mad += std::abs(x - mean) / n;
  }

  double p10 = pct(10.0), p90 = pct(90.0);
  std::vector<double> mid;
  for (double x : v)
    if (x >= p10 && x <= p90) mid.push_back(x);
  double mid_mean = 0.0;
  for (double x : mid) mid_mean += x / static_cast<double>(mid.size());
  double rmad = 0.0;
  for (double x : mid) rmad += std::abs(x - mid_mean) / static_cast<double>(mid.size());

  std::vector<long> hist(roi.n_levels, 0);
  for (int l : roi.roi_levels) ++hist[l - 1];
  double entropy = 0.0, uniformity = 0.0;
  for (long c : hist)
    if (c > 0) {
      double p = c / n;
      entropy -= p * lg2(p);
      uniformity += p * p;
    }

  out[0] = energy;
  out[1] = roi.spacing[0] * roi.spacing[1] * roi.spacing[2] * energy;
  out[2] = entropy;
  out[3] = v.front();
  out[4] = p10;
  out[5] = p90;
  out[6] = v.back();
  out[7] = mean;
  out[8] = pct(50.0);
  out[9] = pct(75.0) - pct(25.0);
  out[10] = v.back() - v.front();
  out[11] = mad;
  out[12] = rmad;
  out[13] = std::sqrt(energy / n);
  if (m2 > 0.0) {
    out[14] = m3 / std::pow(m2, 1.5);
    out[15] = m4 / (m2 * m2);
  }
  out[16] = m2;
  out[17] = uniformity;
  return out;
}

std::vector<std::optional<double>> aggregate(const DiscretizedROI& roi, FeatureFamily family,
                                             Aggregation agg) {
  const bool three_d = agg == Aggregation::agg3D;
  switch (family) {
    case FeatureFamily::firstorder:
      return first_order(roi);
    case FeatureFamily::glcm:
    case FeatureFamily::glrlm: {
      const auto& dirs = three_d ? directions_3d() : directions_in_plane();
      const int nf = family == FeatureFamily::glcm ? kGlcmCount : kGlrlmCount;
      std::vector<std::vector<std::optional<double>>> per_dir;
      for (const auto& d : dirs) {
        if (family == FeatureFamily::glcm)
          per_dir.push_back(ref::glcm_features(ref::glcm(roi, d), roi.n_levels));
        else
          per_dir.push_back(ref::glrlm_features(ref::glrlm(roi, d), roi.voxel_count));
      }
      std::vector<std::optional<double>> out(nf);
      for (int f = 0; f < nf; ++f) {
        double s = 0.0;
        int c = 0;
        for (const auto& pd : per_dir)
          if (pd[f]) {
            s += *pd[f];
            ++c;
          }
        if (c > 0) out[f] = s / c;
      }
      return out;
    }
    case FeatureFamily::glszm:
      return ref::glszm_features(ref::glszm(roi, three_d), roi.voxel_count);
    case FeatureFamily::gldm:
      return ref::gldm_features(ref::gldm(roi, three_d));
    default:
      return ref::ngtdm_features(ref::ngtdm(roi, three_d));
  }
}

std::array<std::optional<double>, kFeatureCount> all_features(const DiscretizedROI& roi,
                                                              Aggregation agg) {
  std::array<std::optional<double>, kFeatureCount> out;
  const FeatureFamily fams[] = {FeatureFamily::firstorder, FeatureFamily::glcm,
                                FeatureFamily::glrlm,      FeatureFamily::glszm,
                                FeatureFamily::gldm,       FeatureFamily::ngtdm};
  for (FeatureFamily f : fams) {
    auto vals = aggregate(roi, f, agg);
    auto [first, last] = family_range(f);
    for (int i = first; i < last; ++i) out[i] = vals[i - first];
  }
  return out;
}

}  // namespace rrw::ref
