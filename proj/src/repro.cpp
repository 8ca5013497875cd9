#include "rrw/repro.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rrw/csv.hpp"
#include "rrw/stats_util.hpp"

namespace rrw {

double pairwise_ccc(std::span<const double> x, std::span<const double> y, bool sample_moments) {
  if (x.size() != y.size()) fail(ErrorKind::argument, "paired series length mismatch");
  if (x.size() < 3) fail(ErrorKind::insufficient_data, "pairwise CCC needs at least 3 pairs");
  const double n = static_cast<double>(x.size());
  const double scale = sample_moments ? n / (n - 1.0) : 1.0;
  double vx = variance_pop(x) * scale;
  double vy = variance_pop(y) * scale;
  double cov = covariance_pop(x, y) * scale;
  double dm = mean_of(x) - mean_of(y);
  double den = vx + vy + dm * dm;
  if (den == 0.0) return 1.0;  // both constant and equal
  return std::clamp(2.0 * cov / den, -1.0, 1.0);
}

GeneralizedCcc generalized_ccc(const std::vector<GridObservation>& records) {
  if (records.empty()) fail(ErrorKind::insufficient_data, "no observations");

  std::set<std::string> subj_set;
  std::set<double> thick_set;
  std::set<double> asir_set;
  bool asir_absent = false;
  for (const auto& r : records) {
    subj_set.insert(r.subject);
    thick_set.insert(r.thickness);
    if (r.asir) asir_set.insert(*r.asir);
    else asir_absent = true;
  }
  if (asir_absent && !asir_set.empty())
    fail(ErrorKind::unbalanced_design, "mixed present/absent ASiR levels");
  if (thick_set.size() < 2)
    fail(ErrorKind::insufficient_data, "generalized CCC needs >= 2 thickness levels");

  std::vector<std::string> subjects(subj_set.begin(), subj_set.end());
  std::vector<double> thicknesses(thick_set.begin(), thick_set.end());
  std::vector<double> asirs(asir_set.begin(), asir_set.end());
  const long n = static_cast<long>(subjects.size());
  const long L = static_cast<long>(thicknesses.size());
  const long A = asir_absent ? 1 : static_cast<long>(asirs.size());
  if (n < 2) fail(ErrorKind::insufficient_data, "generalized CCC needs >= 2 subjects");

  auto sindex = [&](const std::string& s) {
    return std::lower_bound(subjects.begin(), subjects.end(), s) - subjects.begin();
  };
  auto tindex = [&](double t) {
    return std::lower_bound(thicknesses.begin(), thicknesses.end(), t) - thicknesses.begin();
  };
  auto aindex = [&](const std::optional<double>& a) -> long {
    if (asir_absent) return 0;
    return std::lower_bound(asirs.begin(), asirs.end(), *a) - asirs.begin();
  };

  // balanced design: exactly one observation per (subject, thickness, asir) cell
  std::vector<double> y(static_cast<std::size_t>(n) * L * A);
  std::vector<char> seen(y.size(), 0);
  for (const auto& r : records) {
    std::size_t idx = static_cast<std::size_t>(sindex(r.subject)) * L * A +
                      static_cast<std::size_t>(tindex(r.thickness)) * A + aindex(r.asir);
    if (seen[idx])
      fail(ErrorKind::unbalanced_design, "duplicate observation in the reconstruction grid");
    seen[idx] = 1;
    y[idx] = r.value;
  }
  if (static_cast<long>(records.size()) != n * L * A)
    fail(ErrorKind::unbalanced_design, "incomplete reconstruction grid (no silent imputation)");

  const double N = static_cast<double>(n) * L * A;
  double grand = 0.0;
  for (double v : y) grand += v;
  grand /= N;

  double ss_total = 0.0;
  for (double v : y) ss_total += (v - grand) * (v - grand);
  if (ss_total == 0.0) fail(ErrorKind::degenerate_data, "zero total variance");

  std::vector<double> subj_mean(n, 0.0), thick_mean(L, 0.0), asir_mean(A, 0.0);
  for (long s = 0; s < n; ++s)
    for (long t = 0; t < L; ++t)
      for (long a = 0; a < A; ++a) {
        double v = y[static_cast<std::size_t>(s) * L * A + t * A + a];
        subj_mean[s] += v;
        thick_mean[t] += v;
        asir_mean[a] += v;
      }
  for (long s = 0; s < n; ++s) subj_mean[s] /= static_cast<double>(L * A);
  for (long t = 0; t < L; ++t) thick_mean[t] /= static_cast<double>(n * A);
  for (long a = 0; a < A; ++a) asir_mean[a] /= static_cast<double>(n * L);

  double ss_s = 0.0, ss_t = 0.0, ss_a = 0.0;
  for (long s = 0; s < n; ++s) ss_s += (subj_mean[s] - grand) * (subj_mean[s] - grand);
  for (long t = 0; t < L; ++t) ss_t += (thick_mean[t] - grand) * (thick_mean[t] - grand);
  for (long a = 0; a < A; ++a) ss_a += (asir_mean[a] - grand) * (asir_mean[a] - grand);
  ss_s *= static_cast<double>(L * A);
  ss_t *= static_cast<double>(n * A);
  ss_a *= static_cast<double>(n * L);

  const double df_e = N - 1.0 - (n - 1.0) - (L - 1.0) - (A > 1 ? A - 1.0 : 0.0);
  double sse = ss_total - ss_s - ss_t - ss_a;

  GeneralizedCcc out;
  double ms_s = ss_s / (n - 1.0);
  out.components.error = df_e > 0.0 ? std::max(sse, 0.0) / df_e : 0.0;
  double sigma_s = (ms_s - out.components.error) / static_cast<double>(L * A);
  if (sigma_s < 0.0) {
    out.flags.push_back("sigma2_s_clamped");
    sigma_s = 0.0;
  }
  out.components.subject = sigma_s;
  // fixed-effect dispersions: sum((effect - mean effect)^2) / (levels - 1)
  out.components.thickness = ss_t / (static_cast<double>(n * A) * (L - 1.0));
  out.components.asir = A > 1 ? ss_a / (static_cast<double>(n * L) * (A - 1.0)) : 0.0;

  double den = out.components.subject + out.components.thickness + out.components.error;
  if (den == 0.0) fail(ErrorKind::degenerate_data, "zero variance in the CCC denominator");
  out.ccc = std::clamp(out.components.subject / den, -1.0, 1.0);
  return out;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    std::optional<bool> force_exact) {
  if (x.size() != y.size()) fail(ErrorKind::argument, "paired series length mismatch");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double diff = x[i] - y[i];
    if (diff != 0.0) d.push_back(diff);
  }
  WilcoxonResult res;
  res.n_nonzero = static_cast<int>(d.size());
  if (d.empty()) {
    res.all_zero = true;
    res.p_value = 1.0;
    return res;
  }
  const int n = res.n_nonzero;

  // mid-ranks of |d|
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> rank(n);
  std::vector<int> tie_sizes;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    double mid = 0.5 * (i + 1 + j);  // average of ranks i+1..j
    for (int k = i; k < j; ++k) rank[order[k]] = mid;
    if (j - i > 1) tie_sizes.push_back(j - i);
    i = j;
  }

  double w_plus = 0.0;
  for (int i = 0; i < n; ++i)
    if (d[i] > 0.0) w_plus += rank[i];
  res.statistic = w_plus;

  res.exact = force_exact.value_or(n <= 25);
  if (res.exact) {
    // exact null distribution of 2*W+ over doubled (integer) ranks
    std::vector<long long> r2(n);
    long long total2 = 0;
    for (int i = 0; i < n; ++i) {
      r2[i] = std::llround(2.0 * rank[i]);
      total2 += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    long long reach = 0;
    for (int i = 0; i < n; ++i) {
      reach += r2[i];
      for (long long w = reach; w >= r2[i]; --w) count[w] += count[w - r2[i]];
    }
    const double denom = std::pow(2.0, n);
    long long w2 = std::llround(2.0 * w_plus);
    double p_ge = 0.0, p_le = 0.0;
    for (long long w = 0; w <= total2; ++w) {
      if (w >= w2) p_ge += count[w];
      if (w <= w2) p_le += count[w];
    }
    res.p_value = std::min(1.0, 2.0 * std::min(p_ge, p_le) / denom);
  } else {
    double mu = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    for (int t : tie_sizes) var -= (static_cast<double>(t) * t * t - t) / 48.0;
    if (var <= 0.0) {
      res.p_value = 1.0;
      return res;
    }
    double diff = w_plus - mu;
    double cc = diff > 0.0 ? -0.5 : diff < 0.0 ? 0.5 : 0.0;  // continuity correction
    double z = (diff + cc) / std::sqrt(var);
    res.p_value = normal_two_sided_p(z);
  }
  return res;
}

SpectrumResult ccc_spectrum(const FeatureTable& table, std::optional<double> reference_asir) {
  // index rows by (roi, extractor, feature) -> list
  std::map<ReproKey, std::vector<const FeatureRow*>> cells;
  std::set<double> thick_set;
  std::set<double> asir_present;
  bool asir_absent = false;
  std::set<std::string> subjects;
  for (const auto& r : table.rows) {
    cells[{r.roi, r.extractor, r.feature}].push_back(&r);
    thick_set.insert(r.thickness);
    if (r.asir) asir_present.insert(*r.asir);
    else asir_absent = true;
    subjects.insert(r.subject);
  }
  if (thick_set.size() < 2)
    fail(ErrorKind::insufficient_data, "CCC spectrum needs >= 2 slice thicknesses");

  SpectrumResult out;
  // resolve the reference ASiR level for the pairwise phase
  if (asir_absent && asir_present.empty()) {
    out.reference_asir = -1.0;  // single unlabeled level
  } else if (reference_asir && asir_present.count(*reference_asir)) {
    out.reference_asir = *reference_asir;
  } else if (asir_present.size() == 1) {
    out.reference_asir = *asir_present.begin();
  } else {
    fail(ErrorKind::value, "reference ASiR level " +
                               (reference_asir ? fmt_double(*reference_asir) : std::string("?")) +
                               " not present in the feature table");
  }

  std::vector<double> thicknesses(thick_set.begin(), thick_set.end());
  std::vector<std::string> subj(subjects.begin(), subjects.end());

  std::vector<std::pair<ReproKey, const std::vector<const FeatureRow*>*>> work;
  for (const auto& [key, rows] : cells) work.emplace_back(key, &rows);

  struct CellOut {
    bool excluded = false;
    GeneralizedCcc gen;
    std::vector<PairwiseRow> pw;
  };
  std::vector<CellOut> results(work.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t w = 0; w < work.size(); ++w) {
    const auto& [key, rows] = work[w];
    CellOut& res = results[w];
    // completeness: a missing value anywhere in the grid excludes the cell
    bool missing = false;
    std::vector<GridObservation> obs;
    obs.reserve(rows->size());
    for (const FeatureRow* r : *rows) {
      if (!r->value) {
        missing = true;
        break;
      }
      obs.push_back({r->subject, r->thickness, r->asir, *r->value});
    }
    if (missing || obs.size() != subj.size() * thicknesses.size() *
                                     std::max<std::size_t>(1, asir_present.size())) {
      res.excluded = true;
      continue;
    }
    try {
      res.gen = generalized_ccc(obs);
    } catch (const Error&) {
      res.excluded = true;
      continue;
    }

    // pairwise CCC per thickness pair at the reference ASiR
    std::map<std::pair<std::string, double>, double> ref_vals;  // (subject, thickness) -> value
    for (const FeatureRow* r : *rows) {
      bool at_ref = (!r->asir && out.reference_asir == -1.0) ||
                    (r->asir && *r->asir == out.reference_asir);
      if (at_ref) ref_vals[{r->subject, r->thickness}] = *r->value;
    }
    for (std::size_t a = 0; a < thicknesses.size(); ++a)
      for (std::size_t b = a + 1; b < thicknesses.size(); ++b) {
        std::vector<double> xs, ys;
        for (const auto& s : subj) {
          auto ia = ref_vals.find({s, thicknesses[a]});
          auto ib = ref_vals.find({s, thicknesses[b]});
          if (ia != ref_vals.end() && ib != ref_vals.end()) {
            xs.push_back(ia->second);
            ys.push_back(ib->second);
          }
        }
        if (xs.size() >= 3) {
          PairwiseRow pr;
          pr.key = key;
          pr.thickness_a = thicknesses[a];
          pr.thickness_b = thicknesses[b];
          pr.ccc = pairwise_ccc(xs, ys);
          res.pw.push_back(pr);
        }
      }
  }

  for (std::size_t w = 0; w < work.size(); ++w) {
    if (results[w].excluded) {
      out.excluded.push_back(work[w].first);
    } else {
      out.generalized.push_back({work[w].first, results[w].gen});
      for (auto& pr : results[w].pw) out.pairwise.push_back(std::move(pr));
    }
  }
  return out;
}

namespace {

std::string join_flags(const std::vector<std::string>& flags) {
  std::string s;
  for (const auto& f : flags) {
    if (!s.empty()) s += ';';
    s += f;
  }
  return s;
}

}  // namespace

void write_repro_csv(const SpectrumResult& s, const std::string& path) {
  CsvWriter w(path, {"feature_family", "feature_name", "roi", "extractor", "kind", "ccc",
                     "sigma2_s", "sigma2_t", "sigma2_a", "sigma2_e", "flags"});
  for (const auto& row : s.generalized) {
    const FeatureDef& def = feature_registry()[row.key.feature];
    w.write_row({family_str(def.family), def.name, roi_name_str(row.key.roi), row.key.extractor,
                 "generalized", fmt_double(row.result.ccc), fmt_double(row.result.components.subject),
                 fmt_double(row.result.components.thickness), fmt_double(row.result.components.asir),
                 fmt_double(row.result.components.error), join_flags(row.result.flags)});
  }
  for (const auto& row : s.pairwise) {
    const FeatureDef& def = feature_registry()[row.key.feature];
    w.write_row({family_str(def.family), def.name, roi_name_str(row.key.roi), row.key.extractor,
                 "pairwise_" + fmt_double(row.thickness_a) + "_vs_" + fmt_double(row.thickness_b),
                 fmt_double(row.ccc), "", "", "", "", ""});
  }
  for (const auto& key : s.excluded) {
    const FeatureDef& def = feature_registry()[key.feature];
    w.write_row({family_str(def.family), def.name, roi_name_str(key.roi), key.extractor,
                 "excluded", "", "", "", "", "", "missing_values"});
  }
  w.close();
}

std::vector<GeneralizedRow> read_generalized_rows_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_fam = t.require_column("feature_family");
  int c_name = t.require_column("feature_name");
  int c_roi = t.require_column("roi");
  int c_ext = t.require_column("extractor");
  int c_kind = t.require_column("kind");
  int c_ccc = t.require_column("ccc");
  int c_s = t.require_column("sigma2_s");
  int c_t = t.require_column("sigma2_t");
  int c_a = t.require_column("sigma2_a");
  int c_e = t.require_column("sigma2_e");
  std::vector<GeneralizedRow> out;
  for (const auto& row : t.rows) {
    if (row[c_kind] != "generalized") continue;
    int fi = feature_index(row[c_fam], row[c_name]);
    if (fi < 0) fail(ErrorKind::value, "unknown feature in repro CSV: " + row[c_fam] + "." + row[c_name]);
    GeneralizedRow g;
    g.key = {parse_roi_name(row[c_roi]), row[c_ext], fi};
    g.result.ccc = parse_double(row[c_ccc], "ccc");
    g.result.components.subject = parse_double(row[c_s], "sigma2_s");
    g.result.components.thickness = parse_double(row[c_t], "sigma2_t");
    g.result.components.asir = parse_double(row[c_a], "sigma2_a");
    g.result.components.error = parse_double(row[c_e], "sigma2_e");
    out.push_back(std::move(g));
  }
  return out;
}

std::map<ReproKey, double> read_generalized_ccc_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_fam = t.require_column("feature_family");
  int c_name = t.require_column("feature_name");
  int c_roi = t.require_column("roi");
  int c_ext = t.require_column("extractor");
  int c_kind = t.require_column("kind");
  int c_ccc = t.require_column("ccc");
  std::map<ReproKey, double> out;
  for (const auto& row : t.rows) {
    if (row[c_kind] != "generalized") continue;
    int fi = feature_index(row[c_fam], row[c_name]);
    if (fi < 0) fail(ErrorKind::value, "unknown feature in repro CSV: " + row[c_fam] + "." + row[c_name]);
    ReproKey key{parse_roi_name(row[c_roi]), row[c_ext], fi};
    out[key] = parse_double(row[c_ccc], "ccc");
  }
  return out;
}

}  // namespace rrw
