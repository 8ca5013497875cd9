#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "texture_internal.hpp"

// Feature formulas over the gray-level matrices. Probabilities of zero are
// skipped in entropy-style sums instead of adding an epsilon; undefined values
// (zero denominators, degenerate marginals) come back as nullopt and surface
// as missing values downstream.

namespace rrw::detail {

namespace {

constexpr double kLog2E = 1.4426950408889634074;  // log2(x) = log(x) * kLog2E

inline double xlog2(double p) { return p > 0.0 ? std::log(p) * kLog2E : 0.0; }

}  // namespace

std::vector<std::optional<double>> glcm_features(const CountMatrix& m, int n_levels) {
  std::vector<std::optional<double>> out(kGlcmCount);
  const int ng = m.rows;
  const double total = static_cast<double>(m.total());
  if (total <= 0.0) return out;  // empty direction: every feature undefined

  std::vector<double> p(static_cast<std::size_t>(ng) * ng);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(m.v[i]) / total;
  auto P = [&](int i, int j) { return p[static_cast<std::size_t>(i) * ng + j]; };

  std::vector<double> px(ng, 0.0), py(ng, 0.0);
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j) {
      px[i] += P(i, j);
      py[j] += P(i, j);
    }

  double mu_x = 0.0, mu_y = 0.0;
  for (int i = 0; i < ng; ++i) {
    mu_x += (i + 1.0) * px[i];
    mu_y += (i + 1.0) * py[i];
  }
  double var_x = 0.0, var_y = 0.0;
  for (int i = 0; i < ng; ++i) {
    var_x += px[i] * (i + 1.0 - mu_x) * (i + 1.0 - mu_x);
    var_y += py[i] * (i + 1.0 - mu_y) * (i + 1.0 - mu_y);
  }

  // diagonal marginals: p_{x+y}(k), k = 2..2Ng and p_{x-y}(k), k = 0..Ng-1
  std::vector<double> p_sum(2 * ng - 1, 0.0), p_diff(ng, 0.0);
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j) {
      p_sum[i + j] += P(i, j);
      p_diff[std::abs(i - j)] += P(i, j);
    }

  double hx = 0.0, hxy = 0.0, hxy1 = 0.0, hxy2 = 0.0;
  for (int i = 0; i < ng; ++i) hx -= px[i] * xlog2(px[i]);
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j) {
      double pij = P(i, j);
      double pxy = px[i] * py[j];
      hxy -= pij * xlog2(pij);
      if (pij > 0.0) hxy1 -= pij * xlog2(pxy);
      if (pxy > 0.0) hxy2 -= pxy * xlog2(pxy);
    }

  double autocorr = 0.0, prominence = 0.0, shade = 0.0, tendency = 0.0, contrast = 0.0,
         corr_num = 0.0, energy = 0.0, maxprob = 0.0, sum_squares = 0.0;
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j) {
      double pij = P(i, j);
      if (pij == 0.0) continue;
      double iv = i + 1.0, jv = j + 1.0;
      double splus = iv + jv - mu_x - mu_y;
      autocorr += iv * jv * pij;
      prominence += splus * splus * splus * splus * pij;
      shade += splus * splus * splus * pij;
      tendency += splus * splus * pij;
      contrast += (iv - jv) * (iv - jv) * pij;
      corr_num += pij * (iv - mu_x) * (jv - mu_y);
      energy += pij * pij;
      maxprob = std::max(maxprob, pij);
      sum_squares += (iv - mu_x) * (iv - mu_x) * pij;
    }

  double da = 0.0;
  for (int k = 0; k < ng; ++k) da += k * p_diff[k];
  double diff_entropy = 0.0, diff_var = 0.0, id = 0.0, idm = 0.0, idmn = 0.0, idn = 0.0,
         inv_var = 0.0;
  for (int k = 0; k < ng; ++k) {
    double pk = p_diff[k];
    diff_entropy -= pk * xlog2(pk);
    diff_var += (k - da) * (k - da) * pk;
    id += pk / (1.0 + k);
    idm += pk / (1.0 + static_cast<double>(k) * k);
    idmn += pk / (1.0 + static_cast<double>(k) * k / (static_cast<double>(n_levels) * n_levels));
    idn += pk / (1.0 + static_cast<double>(k) / n_levels);
    if (k >= 1) inv_var += pk / (static_cast<double>(k) * k);
  }

  double sum_avg = 0.0, sum_entropy = 0.0;
  for (int k = 0; k < 2 * ng - 1; ++k) {
    sum_avg += (k + 2.0) * p_sum[k];
    sum_entropy -= p_sum[k] * xlog2(p_sum[k]);
  }

  // MCC over the gray levels actually present
  std::vector<int> present;
  for (int i = 0; i < ng; ++i)
    if (px[i] > 0.0) present.push_back(i);
  double mcc = 1.0;
  if (present.size() > 1) {
    const int np = static_cast<int>(present.size());
    Eigen::MatrixXd q(np, np);
    for (int a = 0; a < np; ++a)
      for (int b = 0; b < np; ++b) {
        double s = 0.0;
        for (int k = 0; k < np; ++k)
          s += P(present[a], present[k]) * P(present[b], present[k]) /
               (px[present[a]] * py[present[k]]);
        q(a, b) = s;
      }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(q, /*computeEigenvectors=*/false);
    std::vector<double> ev(np);
    for (int i = 0; i < np; ++i) ev[i] = solver.eigenvalues()[i].real();
    std::sort(ev.begin(), ev.end());
    mcc = std::sqrt(std::max(ev[np - 2], 0.0));
  }

  int k = 0;
  out[k++] = autocorr;
  out[k++] = prominence;
  out[k++] = shade;
  out[k++] = tendency;
  out[k++] = contrast;
  if (var_x > 0.0 && var_y > 0.0)
    out[k++] = corr_num / std::sqrt(var_x * var_y);
  else
    out[k++] = std::nullopt;
  out[k++] = da;
  out[k++] = diff_entropy;
  out[k++] = diff_var;
  out[k++] = id;
  out[k++] = idm;
  out[k++] = idmn;
  out[k++] = idn;
  if (hx > 0.0)  // symmetric matrix: HX == HY, so max(HX, HY) == HX
    out[k++] = (hxy - hxy1) / hx;
  else
    out[k++] = std::nullopt;
  out[k++] = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - hxy))));
  out[k++] = inv_var;
  out[k++] = mu_x;
  out[k++] = energy;
  out[k++] = hxy;
  out[k++] = mcc;
  out[k++] = maxprob;
  out[k++] = sum_avg;
  out[k++] = sum_entropy;
  out[k++] = sum_squares;
  return out;
}

std::vector<std::optional<double>> glrlm_features(const CountMatrix& m, long n_voxels) {
  std::vector<std::optional<double>> out(kGlrlmCount);
  const double nr = static_cast<double>(m.total());
  if (nr <= 0.0) return out;

  double sre = 0.0, lre = 0.0, lrhgle = 0.0, lrlgle = 0.0, lgre = 0.0, hgre = 0.0, srhgle = 0.0,
         srlgle = 0.0, run_entropy = 0.0, mu_i = 0.0, mu_j = 0.0;
  std::vector<double> row_sum(m.rows, 0.0), col_sum(m.cols, 0.0);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) {
      double c = static_cast<double>(m.at(i, j));
      if (c == 0.0) continue;
      double iv = i + 1.0, jv = j + 1.0;
      double p = c / nr;
      row_sum[i] += c;
      col_sum[j] += c;
      sre += c / (jv * jv);
      lre += c * jv * jv;
      hgre += c * iv * iv;
      lgre += c / (iv * iv);
      srhgle += c * iv * iv / (jv * jv);
      srlgle += c / (iv * iv * jv * jv);
      lrhgle += c * iv * iv * jv * jv;
      lrlgle += c * jv * jv / (iv * iv);
      run_entropy -= p * xlog2(p);
      mu_i += p * iv;
      mu_j += p * jv;
    }
  double glnu = 0.0, rlnu = 0.0;
  for (double s : row_sum) glnu += s * s;
  for (double s : col_sum) rlnu += s * s;
  double glv = 0.0, rv = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) {
      double p = static_cast<double>(m.at(i, j)) / nr;
      if (p == 0.0) continue;
      glv += p * (i + 1.0 - mu_i) * (i + 1.0 - mu_i);
      rv += p * (j + 1.0 - mu_j) * (j + 1.0 - mu_j);
    }

  int k = 0;
  out[k++] = glnu / nr;
  out[k++] = glnu / (nr * nr);
  out[k++] = glv;
  out[k++] = hgre / nr;
  out[k++] = lre / nr;
  out[k++] = lrhgle / nr;
  out[k++] = lrlgle / nr;
  out[k++] = lgre / nr;
  out[k++] = run_entropy;
  out[k++] = rlnu / nr;
  out[k++] = rlnu / (nr * nr);
  out[k++] = nr / static_cast<double>(n_voxels);
  out[k++] = rv;
  out[k++] = sre / nr;
  out[k++] = srhgle / nr;
  out[k++] = srlgle / nr;
  return out;
}

std::vector<std::optional<double>> glszm_features(const CountMatrix& m, long n_voxels) {
  std::vector<std::optional<double>> out(kGlszmCount);
  const double nz = static_cast<double>(m.total());
  if (nz <= 0.0) return out;

  double sae = 0.0, lae = 0.0, lahgle = 0.0, lalgle = 0.0, lgze = 0.0, hgze = 0.0, sahgle = 0.0,
         salgle = 0.0, zone_entropy = 0.0, mu_i = 0.0, mu_s = 0.0;
  std::vector<double> row_sum(m.rows, 0.0), col_sum(m.cols, 0.0);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) {
      double c = static_cast<double>(m.at(i, j));
      if (c == 0.0) continue;
      double iv = i + 1.0, sv = j + 1.0;
      double p = c / nz;
      row_sum[i] += c;
      col_sum[j] += c;
      sae += c / (sv * sv);
      lae += c * sv * sv;
      hgze += c * iv * iv;
      lgze += c / (iv * iv);
      sahgle += c * iv * iv / (sv * sv);
      salgle += c / (iv * iv * sv * sv);
      lahgle += c * iv * iv * sv * sv;
      lalgle += c * sv * sv / (iv * iv);
      zone_entropy -= p * xlog2(p);
      mu_i += p * iv;
      mu_s += p * sv;
    }
  double glnu = 0.0, sznu = 0.0;
  for (double s : row_sum) glnu += s * s;
  for (double s : col_sum) sznu += s * s;
  double glv = 0.0, zv = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) {
      double p = static_cast<double>(m.at(i, j)) / nz;
      if (p == 0.0) continue;
      glv += p * (i + 1.0 - mu_i) * (i + 1.0 - mu_i);
      zv += p * (j + 1.0 - mu_s) * (j + 1.0 - mu_s);
    }

  int k = 0;
  out[k++] = glnu / nz;
  out[k++] = glnu / (nz * nz);
  out[k++] = glv;
  out[k++] = hgze / nz;
  out[k++] = lae / nz;
  out[k++] = lahgle / nz;
  out[k++] = lalgle / nz;
  out[k++] = lgze / nz;
  out[k++] = sznu / nz;
  out[k++] = sznu / (nz * nz);
  out[k++] = sae / nz;
  out[k++] = sahgle / nz;
  out[k++] = salgle / nz;
  out[k++] = zone_entropy;
  out[k++] = nz / static_cast<double>(n_voxels);
  out[k++] = zv;
  return out;
}

std::vector<std::optional<double>> gldm_features(const CountMatrix& m) {
  std::vector<std::optional<double>> out(kGldmCount);
  const double nz = static_cast<double>(m.total());
  if (nz <= 0.0) return out;

  // dependence value j counts the center voxel itself: column c holds voxels
  // with c dependent neighbors, so j = c + 1.
  double sde = 0.0, lde = 0.0, ldhgle = 0.0, ldlgle = 0.0, lgle = 0.0, hgle = 0.0, sdhgle = 0.0,
         sdlgle = 0.0, dep_entropy = 0.0, mu_i = 0.0, mu_j = 0.0;
  std::vector<double> row_sum(m.rows, 0.0), col_sum(m.cols, 0.0);
  for (int i = 0; i < m.rows; ++i)
    for (int c = 0; c < m.cols; ++c) {
      double cnt = static_cast<double>(m.at(i, c));
      if (cnt == 0.0) continue;
      double iv = i + 1.0, jv = c + 1.0;
      double p = cnt / nz;
      row_sum[i] += cnt;
      col_sum[c] += cnt;
      sde += cnt / (jv * jv);
      lde += cnt * jv * jv;
      hgle += cnt * iv * iv;
      lgle += cnt / (iv * iv);
      sdhgle += cnt * iv * iv / (jv * jv);
      sdlgle += cnt / (iv * iv * jv * jv);
      ldhgle += cnt * iv * iv * jv * jv;
      ldlgle += cnt * jv * jv / (iv * iv);
      dep_entropy -= p * xlog2(p);
      mu_i += p * iv;
      mu_j += p * jv;
    }
  double glnu = 0.0, dnu = 0.0;
  for (double s : row_sum) glnu += s * s;
  for (double s : col_sum) dnu += s * s;
  double glv = 0.0, dv = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int c = 0; c < m.cols; ++c) {
      double p = static_cast<double>(m.at(i, c)) / nz;
      if (p == 0.0) continue;
      glv += p * (i + 1.0 - mu_i) * (i + 1.0 - mu_i);
      dv += p * (c + 1.0 - mu_j) * (c + 1.0 - mu_j);
    }

  int k = 0;
  out[k++] = dep_entropy;
  out[k++] = dnu / nz;
  out[k++] = dnu / (nz * nz);
  out[k++] = dv;
  out[k++] = glnu / nz;
  out[k++] = glv;
  out[k++] = hgle / nz;
  out[k++] = lde / nz;
  out[k++] = ldhgle / nz;
  out[k++] = ldlgle / nz;
  out[k++] = lgle / nz;
  out[k++] = sde / nz;
  out[k++] = sdhgle / nz;
  out[k++] = sdlgle / nz;
  return out;
}

std::vector<std::optional<double>> ngtdm_features(const NgtdmAccumulator& a) {
  std::vector<std::optional<double>> out(kNgtdmCount);
  const int ng = static_cast<int>(a.n.size());
  long long nvp_ll = 0;
  for (long long c : a.n) nvp_ll += c;
  if (nvp_ll <= 0) return out;
  const double nvp = static_cast<double>(nvp_ll);

  std::vector<int> present;
  for (int i = 0; i < ng; ++i)
    if (a.n[i] > 0) present.push_back(i);
  const int ngp = static_cast<int>(present.size());

  auto p = [&](int i) { return static_cast<double>(a.n[i]) / nvp; };

  double ps_sum = 0.0, s_sum = 0.0;
  for (int i : present) {
    ps_sum += p(i) * a.s[i];
    s_sum += a.s[i];
  }

  double busyness_den = 0.0, complexity = 0.0, contrast_pair = 0.0, strength_num = 0.0;
  for (int i : present)
    for (int j : present) {
      double iv = i + 1.0, jv = j + 1.0;
      busyness_den += std::abs(iv * p(i) - jv * p(j));
      complexity += std::abs(iv - jv) * (p(i) * a.s[i] + p(j) * a.s[j]) / (p(i) + p(j));
      contrast_pair += p(i) * p(j) * (iv - jv) * (iv - jv);
      strength_num += (p(i) + p(j)) * (iv - jv) * (iv - jv);
    }

  out[0] = busyness_den > 0.0 ? std::optional<double>(ps_sum / busyness_den) : std::nullopt;
  out[1] = ps_sum > 0.0 ? std::optional<double>(1.0 / ps_sum) : std::nullopt;
  out[2] = complexity / nvp;
  out[3] = ngp > 1 ? std::optional<double>(contrast_pair / (static_cast<double>(ngp) * (ngp - 1)) *
                                           (s_sum / nvp))
                   : std::nullopt;
  out[4] = s_sum > 0.0 ? std::optional<double>(strength_num / s_sum) : std::nullopt;
  return out;
}

}  // namespace rrw::detail
