#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>

#include "rrw/survival.hpp"
#include "testutil.hpp"

using namespace rrw;

namespace {

// O(n^2) oracle: direct transcription of the comparable-pair definition.
double cindex_oracle(const std::vector<double>& risk, const std::vector<SurvivalRecord>& out) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (i == j) continue;
      if (!out[i].event || !(out[i].time < out[j].time)) continue;
      den += 1.0;
      if (risk[i] > risk[j]) num += 1.0;
      else if (risk[i] == risk[j]) num += 0.5;
    }
  return num / den;
}

std::vector<SurvivalRecord> random_outcomes(Rng& rng, int n, double censor_frac = 0.3) {
  std::vector<SurvivalRecord> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].subject_id = "s" + std::to_string(1000 + i);
    out[i].time = rng.exponential(0.002) + 1.0;
    out[i].event = rng.uniform01() > censor_frac;
    if (rng.uniform01() < 0.1 && i > 0) out[i].time = out[i - 1].time;  // inject ties
  }
  return out;
}

}  // namespace

TEST_CASE("Harrell C-index") {
  SUBCASE("perfect risk ordering without censoring") {
    std::vector<SurvivalRecord> out;
    std::vector<double> risk;
    for (int i = 0; i < 8; ++i) {
      out.push_back({"s" + std::to_string(i), 100.0 + 10.0 * i, true});
      risk.push_back(-static_cast<double>(i));  // shorter survival = higher risk
    }
    CHECK(harrell_cindex(risk, out) == doctest::Approx(1.0));
  }
  SUBCASE("all risks equal gives 0.5") {
    std::vector<SurvivalRecord> out;
    for (int i = 0; i < 6; ++i) out.push_back({"s", 10.0 + i, i % 2 == 0});
    std::vector<double> risk(6, 1.0);
    CHECK(harrell_cindex(risk, out) == doctest::Approx(0.5));
  }
  SUBCASE("six-subject worked example matches brute force") {
    std::vector<SurvivalRecord> out = {{"a", 2, true},  {"b", 4, true}, {"c", 5, false},
                                       {"d", 7, true},  {"e", 9, false}, {"f", 11, true}};
    Rng rng(8);
    std::vector<double> risk(6);
    for (auto& r : risk) r = rng.normal();
    CHECK(harrell_cindex(risk, out) == doctest::Approx(cindex_oracle(risk, out)));
  }
  SUBCASE("matches the oracle on 50 seeded censored datasets") {
    Rng rng(1001);
    for (int t = 0; t < 50; ++t) {
      int n = 5 + static_cast<int>(rng.below(95));
      auto out = random_outcomes(rng, n);
      std::vector<double> risk(n);
      for (auto& r : risk) r = rng.normal();
      if (rng.uniform01() < 0.3) risk[rng.below(n)] = risk[rng.below(n)];  // risk ties
      CHECK(harrell_cindex(risk, out) == doctest::Approx(cindex_oracle(risk, out)));
    }
  }
  SUBCASE("complement symmetry and monotone-transform invariance") {
    Rng rng(2002);
    auto out = random_outcomes(rng, 40);
    std::vector<double> risk(40), neg(40), warped(40);
    for (int i = 0; i < 40; ++i) {
      risk[i] = rng.normal();
      neg[i] = -risk[i];
      warped[i] = std::exp(2.0 * risk[i]);  // strictly increasing
    }
    double c = harrell_cindex(risk, out);
    CHECK(c + harrell_cindex(neg, out) == doctest::Approx(1.0));
    CHECK(harrell_cindex(warped, out) == doctest::Approx(c));
  }
  SUBCASE("no comparable pairs is an undefined result") {
    std::vector<SurvivalRecord> out = {{"a", 5, false}, {"b", 6, false}, {"c", 7, false}};
    std::vector<double> risk{1, 2, 3};
    try {
      harrell_cindex(risk, out);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::undefined_result);
    }
  }
}

TEST_CASE("fold_cindex") {
  CHECK(fold_cindex(0.38) == std::pair<double, bool>{0.62, true});
  CHECK(fold_cindex(0.5) == std::pair<double, bool>{0.5, false});
  CHECK(fold_cindex(0.6176) == std::pair<double, bool>{0.6176, false});
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    auto [c, neg] = fold_cindex(rng.uniform01());
    CHECK(c >= 0.5);
    CHECK(c <= 1.0);
  }
}

namespace {

Eigen::MatrixXd random_design(Rng& rng, int n, int p) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  return X;
}

std::vector<SurvivalRecord> cox_outcomes(Rng& rng, const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& beta, double censor_frac) {
  std::vector<SurvivalRecord> out(X.rows());
  for (int i = 0; i < X.rows(); ++i) {
    double rate = 0.01 * std::exp(X.row(i) * beta);
    out[i].subject_id = "s" + std::to_string(i);
    double t_event = rng.exponential(rate);
    double t_cens = rng.exponential(0.01 * censor_frac / (1.0 - censor_frac));
    out[i].event = t_event <= t_cens;
    out[i].time = std::min(t_event, t_cens) + 1e-6;
  }
  return out;
}

}  // namespace

TEST_CASE("Cox score matches central finite differences") {
  Rng rng(909);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 40 + static_cast<int>(rng.below(30));
    int p = 3;
    Eigen::MatrixXd X = random_design(rng, n, p);
    Eigen::VectorXd beta_true = Eigen::VectorXd::Zero(p);
    beta_true << 0.5, -0.3, 0.0;
    auto out = cox_outcomes(rng, X, beta_true, 0.3);

    for (int rep = 0; rep < 5; ++rep) {
      Eigen::VectorXd beta(p);
      for (int j = 0; j < p; ++j) beta[j] = rng.uniform(-1.0, 1.0);
      Eigen::VectorXd score = cox_score(X, out, beta);
      const double h = 1e-6;
      for (int j = 0; j < p; ++j) {
        Eigen::VectorXd bp = beta, bm = beta;
        bp[j] += h;
        bm[j] -= h;
        double fd = (cox_log_likelihood(X, out, bp) - cox_log_likelihood(X, out, bm)) / (2.0 * h);
        double scale = std::max(1.0, std::abs(fd));
        CHECK(std::abs(score[j] - fd) / scale <= 1e-6);
      }
    }
  }
}

TEST_CASE("one-covariate Cox fit matches a golden-section maximizer") {
  Rng rng(40);
  Eigen::MatrixXd X = random_design(rng, 40, 1);
  Eigen::VectorXd beta_true(1);
  beta_true << 0.8;
  auto out = cox_outcomes(rng, X, beta_true, 0.25);

  CoxModel model = cox_fit(X, out);
  REQUIRE(model.converged);

  auto nll = [&](double b) {
    Eigen::VectorXd v(1);
    v << b;
    return -cox_log_likelihood(X, out, v);
  };
  double lo = -5.0, hi = 5.0;
  const double phi = 0.6180339887498949;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  for (int it = 0; it < 200; ++it) {
    if (nll(a) < nll(b)) hi = b;
    else lo = a;
    a = hi - phi * (hi - lo);
    b = lo + phi * (hi - lo);
  }
  double argmax = 0.5 * (lo + hi);
  CHECK(std::abs(model.coefficients[0] - argmax) <= 1e-4);
  CHECK(model.standard_errors[0] > 0.0);
}

TEST_CASE("Cox fit guards") {
  Rng rng(50);
  SUBCASE("constant column raises collinearity") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(20, 1);
    std::vector<SurvivalRecord> out;
    for (int i = 0; i < 20; ++i) out.push_back({"s", 1.0 + i, true});
    try {
      cox_fit(X, out);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::collinearity);
      CHECK(std::string(e.what()).find("column 0") != std::string::npos);
    }
  }
  SUBCASE("duplicated column raises collinearity") {
    Eigen::MatrixXd X(20, 2);
    for (int i = 0; i < 20; ++i) X(i, 0) = X(i, 1) = rng.normal();
    std::vector<SurvivalRecord> out;
    for (int i = 0; i < 20; ++i) out.push_back({"s", 1.0 + i, true});
    CHECK_THROWS_AS(cox_fit(X, out), Error);
  }
  SUBCASE("no events is undefined") {
    Eigen::MatrixXd X = random_design(rng, 10, 1);
    std::vector<SurvivalRecord> out;
    for (int i = 0; i < 10; ++i) out.push_back({"s", 1.0 + i, false});
    CHECK_THROWS_AS(cox_fit(X, out), Error);
  }
  SUBCASE("fitted log-likelihood never falls below the null model") {
    for (int t = 0; t < 10; ++t) {
      Eigen::MatrixXd X = random_design(rng, 50, 2);
      Eigen::VectorXd beta(2);
      beta << 0.6, -0.4;
      auto out = cox_outcomes(rng, X, beta, 0.3);
      CoxModel m = cox_fit(X, out);
      CHECK(m.log_likelihood >= cox_log_likelihood(X, out, Eigen::VectorXd::Zero(2)) - 1e-9);
    }
  }
}

namespace {

// exhaustive evaluation of the greedy recurrence, written independently
std::vector<int> mrmr_oracle(const Eigen::MatrixXd& X, const std::vector<double>& rel, int k,
                             const std::vector<std::string>& ids) {
  int p = static_cast<int>(X.cols());
  auto corr = [&](int a, int b) {
    double ma = X.col(a).mean(), mb = X.col(b).mean();
    double num = 0.0, va = 0.0, vb = 0.0;
    for (int i = 0; i < X.rows(); ++i) {
      num += (X(i, a) - ma) * (X(i, b) - mb);
      va += (X(i, a) - ma) * (X(i, a) - ma);
      vb += (X(i, b) - mb) * (X(i, b) - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return std::abs(num / std::sqrt(va * vb));
  };
  std::vector<int> sel;
  std::vector<bool> used(p, false);
  while (static_cast<int>(sel.size()) < std::min(k, p)) {
    int best = -1;
    double best_score = 0;
    for (int j = 0; j < p; ++j) {
      if (used[j]) continue;
      double red = 0.0;
      for (int s : sel) red += corr(j, s);
      double score = rel[j] - (sel.empty() ? 0.0 : red / sel.size());
      if (best < 0 || score > best_score ||
          (score == best_score &&
           (rel[j] > rel[best] || (rel[j] == rel[best] && ids[j] < ids[best])))) {
        best = j;
        best_score = score;
      }
    }
    used[best] = true;
    sel.push_back(best);
  }
  return sel;
}

}  // namespace

TEST_CASE("MRMR selection") {
  Rng rng(606);
  SUBCASE("k = 1 picks the max-relevance feature") {
    Eigen::MatrixXd X = random_design(rng, 30, 5);
    std::vector<double> rel{0.1, 0.4, 0.2, 0.05, 0.3};
    std::vector<std::string> ids{"a", "b", "c", "d", "e"};
    auto sel = mrmr_select(X, rel, 1, ids);
    REQUIRE(sel.size() == 1);
    CHECK(sel[0] == 1);
  }
  SUBCASE("an exact duplicate of a selected feature is never chosen early") {
    Eigen::MatrixXd X(40, 4);
    for (int i = 0; i < 40; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = X(i, 0);  // duplicate of column 0
      X(i, 2) = rng.normal();
      X(i, 3) = rng.normal();
    }
    std::vector<double> rel{0.4, 0.4, 0.1, 0.05};
    std::vector<std::string> ids{"a", "b", "c", "d"};
    auto sel = mrmr_select(X, rel, 3, ids);
    REQUIRE(sel.size() == 3);
    CHECK(sel[0] == 0);
    CHECK(sel[1] != 1);
    CHECK(sel[2] != 1);
  }
  SUBCASE("matches the exhaustive greedy oracle") {
    for (int t = 0; t < 60; ++t) {
      int n = 20 + static_cast<int>(rng.below(20));
      int p = 2 + static_cast<int>(rng.below(7));
      int k = 1 + static_cast<int>(rng.below(4));
      Eigen::MatrixXd X = random_design(rng, n, p);
      std::vector<double> rel(p);
      for (auto& r : rel) r = rng.uniform(0.0, 0.5);
      std::vector<std::string> ids(p);
      for (int j = 0; j < p; ++j) ids[j] = "f" + std::to_string(j);
      CHECK(mrmr_select(X, rel, k, ids) == mrmr_oracle(X, rel, k, ids));
    }
  }
}

namespace {

CvDataset planted_dataset(Rng& rng, int n, int p, int signal_col, double beta,
                          double censor_frac = 0.35) {
  CvDataset ds;
  Eigen::MatrixXd X = random_design(rng, n, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  b[signal_col] = beta;
  ds.outcomes = cox_outcomes(rng, X, b, censor_frac);
  for (int i = 0; i < n; ++i) ds.outcomes[i].subject_id = "s" + std::to_string(10000 + i);
  for (int j = 0; j < p; ++j) {
    CvFeature f;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "f%03d", j);
    f.id = std::string(j == signal_col ? "tumor" : "liver") + ":X:" + buf;
    f.roi = j == signal_col ? RoiName::tumor : RoiName::liver;
    f.extractor = "X";
    f.feature = j % kFeatureCount;
    f.values.resize(n);
    for (int i = 0; i < n; ++i) f.values[i] = X(i, j);
    ds.features.push_back(std::move(f));
  }
  return ds;
}

}  // namespace

TEST_CASE("run_cv finds a planted signal") {
  Rng rng(515);
  CvDataset ds = planted_dataset(rng, 300, 12, 4, 2.5);
  CVConfig cfg;
  cfg.feature_count = 2;
  cfg.repetitions = 15;
  cfg.rng_seed = 99;
  PerformanceSummary s = run_cv(ds, cfg);
  CHECK(s.mean_test > 0.8);
  CHECK(s.ci_lo <= s.mean_test);
  CHECK(s.mean_test <= s.ci_hi);
  long long signal_folds = 0;
  for (const auto& [id, c] : s.selection_counts)
    if (id.find("f004") != std::string::npos) signal_folds = c;
  CHECK(static_cast<double>(signal_folds) / s.folds_total > 0.9);
  // the planted column is the only tumor feature; everything else is liver
  CHECK(s.liver_fraction < 0.6);
}

TEST_CASE("run_cv on a null cohort stays near 0.5") {
  Rng rng(616);
  CvDataset ds = planted_dataset(rng, 250, 10, 0, 0.0);
  CVConfig cfg;
  cfg.feature_count = 2;
  cfg.repetitions = 10;
  cfg.rng_seed = 7;
  PerformanceSummary s = run_cv(ds, cfg);
  CHECK(s.mean_test > 0.42);
  CHECK(s.mean_test < 0.58);
}

TEST_CASE("run_cv is deterministic across thread counts") {
  Rng rng(717);
  CvDataset ds = planted_dataset(rng, 120, 8, 2, 1.0);
  CVConfig cfg;
  cfg.feature_count = 2;
  cfg.repetitions = 8;
  cfg.rng_seed = 1234;

  omp_set_num_threads(1);
  PerformanceSummary a = run_cv(ds, cfg);
  for (int threads : {2, 8}) {
    omp_set_num_threads(threads);
    PerformanceSummary b = run_cv(ds, cfg);
    CHECK(a.test_cindex == b.test_cindex);
    CHECK(a.train_cindex == b.train_cindex);
    CHECK(a.mean_test == b.mean_test);
    CHECK(a.liver_fraction == b.liver_fraction);
    CHECK(a.selection_counts == b.selection_counts);
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("run_cv saturates when fewer features than requested survive") {
  Rng rng(818);
  CvDataset ds = planted_dataset(rng, 200, 5, 1, 1.2);
  // CCC values so that only 3 features pass the threshold
  for (int j = 0; j < 5; ++j) ds.features[j].ccc = j < 3 ? 0.97 : 0.2;
  CVConfig big, bigger;
  big.ccc_threshold = bigger.ccc_threshold = 0.95;
  big.repetitions = bigger.repetitions = 6;
  big.rng_seed = bigger.rng_seed = 5;
  big.feature_count = 16;
  bigger.feature_count = 64;
  PerformanceSummary a = run_cv(ds, big);
  PerformanceSummary b = run_cv(ds, bigger);
  CHECK(a.test_cindex == b.test_cindex);
  CHECK(a.train_cindex == b.train_cindex);
  CHECK(a.selection_counts == b.selection_counts);
}

TEST_CASE("run_cv rejects a cohort with no comparable pairs") {
  CvDataset ds;
  for (int i = 0; i < 30; ++i) ds.outcomes.push_back({"s" + std::to_string(i), 100.0, false});
  CvFeature f;
  f.id = "tumor:X:a";
  f.roi = RoiName::tumor;
  f.values.assign(30, 1.0);
  ds.features.push_back(f);
  CHECK_THROWS_AS(run_cv(ds, CVConfig{}), Error);
}

TEST_CASE("univariate spectrum folds and reports usable subjects") {
  Rng rng(919);
  CvDataset ds = planted_dataset(rng, 100, 4, 1, 1.5);
  ds.features[2].values[10].reset();
  auto rows = univariate_spectrum(ds);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.cindex >= 0.5);
    CHECK(r.cindex <= 1.0);
  }
  // the signal feature discriminates best
  double best = 0.0;
  ReproKey best_key;
  for (const auto& r : rows)
    if (r.cindex > best) {
      best = r.cindex;
      best_key = r.key;
    }
  CHECK(best_key.roi == RoiName::tumor);
  CHECK(best > 0.65);
}

TEST_CASE("build_cv_dataset pivots a long table") {
  FeatureTable t;
  std::vector<SurvivalRecord> outcomes;
  for (int s = 0; s < 5; ++s) {
    outcomes.push_back({"p" + std::to_string(s), 100.0 + s, s % 2 == 0});
    for (const char* ext : {"L3", "S3"})
      for (int f = 0; f < 3; ++f) {
        FeatureRow r;
        r.subject = "p" + std::to_string(s);
        r.roi = RoiName::tumor;
        r.thickness = 5.0;
        r.extractor = ext;
        r.feature = f;
        r.value = s * 1.0 + f;
        t.rows.push_back(r);
      }
  }
  CvDataset all = build_cv_dataset(t, {}, outcomes, "all");
  CHECK(all.features.size() == 6);
  CvDataset one = build_cv_dataset(t, {}, outcomes, "L3");
  CHECK(one.features.size() == 3);
  for (const auto& f : one.features) {
    CHECK(f.extractor == "L3");
    CHECK(f.values.size() == 5);
  }
  CHECK_THROWS_AS(build_cv_dataset(t, {}, outcomes, "missing_extractor"), Error);
}
