#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rrw/repro.hpp"
#include "rrw/stats_util.hpp"
#include "testutil.hpp"

using namespace rrw;

TEST_CASE("pairwise CCC basics") {
  SUBCASE("perfect concordance") {
    std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(pairwise_ccc(x, x) == doctest::Approx(1.0));
  }
  SUBCASE("shifted series: the spec example 4/7") {
    std::vector<double> x{1, 2, 3}, y{2, 3, 4};
    CHECK(std::abs(pairwise_ccc(x, y) - 4.0 / 7.0) <= 1e-12);
  }
  SUBCASE("symmetry") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> x(10), y(10);
      for (int i = 0; i < 10; ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
      }
      CHECK(pairwise_ccc(x, y) == doctest::Approx(pairwise_ccc(y, x)).epsilon(1e-14));
    }
  }
  SUBCASE("constant series") {
    std::vector<double> a{2, 2, 2}, b{2, 2, 2}, c{3, 3, 3};
    CHECK(pairwise_ccc(a, b) == 1.0);
    CHECK(pairwise_ccc(a, c) == 0.0);
  }
  SUBCASE("too few pairs") {
    std::vector<double> x{1, 2}, y{1, 2};
    CHECK_THROWS_AS(pairwise_ccc(x, y), Error);
  }
}

TEST_CASE("pairwise CCC properties") {
  Rng rng(99);
  SUBCASE("invariant under a common positive affine map") {
    for (int t = 0; t < 200; ++t) {
      int n = 5 + static_cast<int>(rng.below(20));
      std::vector<double> x(n), y(n), xs(n), ys(n);
      double a = rng.uniform(0.1, 5.0), b = rng.uniform(-10.0, 10.0);
      for (int i = 0; i < n; ++i) {
        x[i] = rng.normal() * 3.0 + 1.0;
        y[i] = x[i] * 0.8 + rng.normal();
        xs[i] = a * x[i] + b;
        ys[i] = a * y[i] + b;
      }
      CHECK(std::abs(pairwise_ccc(x, y) - pairwise_ccc(xs, ys)) <= 1e-12);
    }
  }
  SUBCASE("|CCC| never exceeds |Pearson|") {
    for (int t = 0; t < 200; ++t) {
      int n = 5 + static_cast<int>(rng.below(20));
      std::vector<double> x(n), y(n);
      for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = 0.5 * x[i] + rng.normal() + 2.0;
      }
      CHECK(std::abs(pairwise_ccc(x, y)) <= std::abs(pearson(x, y)) + 1e-12);
    }
  }
  SUBCASE("sample-moment variant differs but agrees in the large-n limit") {
    std::vector<double> x(500), y(500);
    for (int i = 0; i < 500; ++i) {
      x[i] = rng.normal();
      y[i] = x[i] + 0.3 * rng.normal();
    }
    CHECK(pairwise_ccc(x, y, false) ==
          doctest::Approx(pairwise_ccc(x, y, true)).epsilon(1e-2));
  }
}

namespace {

std::vector<GridObservation> planted_grid(Rng& rng, int n_subjects, int n_thickness, int n_asir,
                                          double sd_s, double sd_t, double sd_a, double sd_e) {
  // fixed effects with the exact requested dispersion Sum((b - mean)^2)/(L-1)
  std::vector<double> beta(n_thickness), gamma(n_asir);
  for (int t = 0; t < n_thickness; ++t) beta[t] = t - 0.5 * (n_thickness - 1);
  for (int a = 0; a < n_asir; ++a) gamma[a] = a - 0.5 * (n_asir - 1);
  auto scale_to = [](std::vector<double>& v, double sd) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    if (ss == 0.0) return;
    double k = sd / std::sqrt(ss / (v.size() - 1.0));
    for (double& x : v) x *= k;
  };
  scale_to(beta, sd_t);
  scale_to(gamma, sd_a);

  std::vector<GridObservation> obs;
  for (int s = 0; s < n_subjects; ++s) {
    double u = sd_s * rng.normal();
    for (int t = 0; t < n_thickness; ++t)
      for (int a = 0; a < n_asir; ++a) {
        GridObservation o;
        o.subject = "s" + std::to_string(10000 + s);
        o.thickness = 2.5 + t;
        o.asir = 10.0 * a;
        o.value = 5.0 + u + beta[t] + gamma[a] + sd_e * rng.normal();
        obs.push_back(o);
      }
  }
  return obs;
}

}  // namespace

TEST_CASE("generalized CCC") {
  SUBCASE("identical values across reconstructions give CCC 1") {
    std::vector<GridObservation> obs;
    for (int s = 0; s < 5; ++s)
      for (double t : {2.5, 3.75, 5.0})
        for (double a : {0.0, 20.0}) obs.push_back({"s" + std::to_string(s), t, a, 10.0 + s});
    GeneralizedCcc g = generalized_ccc(obs);
    CHECK(g.ccc == doctest::Approx(1.0));
    CHECK(g.components.thickness == doctest::Approx(0.0));
    CHECK(g.components.error == doctest::Approx(0.0));
    CHECK(g.components.subject > 0.0);
  }
  SUBCASE("unbalanced design is an explicit error") {
    std::vector<GridObservation> obs;
    for (int s = 0; s < 4; ++s)
      for (double t : {2.5, 5.0}) obs.push_back({"s" + std::to_string(s), t, 20.0, 1.0 * s});
    obs.pop_back();
    try {
      generalized_ccc(obs);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::unbalanced_design);
    }
  }
  SUBCASE("zero total variance is degenerate") {
    std::vector<GridObservation> obs;
    for (int s = 0; s < 4; ++s)
      for (double t : {2.5, 5.0}) obs.push_back({"s" + std::to_string(s), t, 20.0, 7.0});
    try {
      generalized_ccc(obs);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degenerate_data);
    }
  }
  SUBCASE("Monte Carlo recovery of planted components") {
    Rng rng(2718);
    auto obs = planted_grid(rng, 1200, 3, 7, 1.0, 0.5, std::sqrt(0.1), 0.5);
    GeneralizedCcc g = generalized_ccc(obs);
    // planted sigma2: s=1, t=0.25, a=0.1, e=0.25 -> CCC = 1/1.5
    CHECK(g.ccc == doctest::Approx(1.0 / 1.5).epsilon(0.05));
    CHECK(g.components.subject == doctest::Approx(1.0).epsilon(0.10));
    CHECK(g.components.thickness == doctest::Approx(0.25).epsilon(0.05));
    CHECK(g.components.asir == doctest::Approx(0.1).epsilon(0.05));
    CHECK(g.components.error == doctest::Approx(0.25).epsilon(0.05));
  }
  SUBCASE("no thickness effect: generalized close to pairwise at two levels") {
    Rng rng(31415);
    auto obs = planted_grid(rng, 500, 2, 1, 1.0, 0.0, 0.0, 0.4);
    GeneralizedCcc g = generalized_ccc(obs);
    std::vector<double> x, y;
    std::map<std::string, std::pair<double, double>> per_subject;
    for (const auto& o : obs) {
      if (o.thickness == 2.5) per_subject[o.subject].first = o.value;
      else per_subject[o.subject].second = o.value;
    }
    for (const auto& [s, xy] : per_subject) {
      x.push_back(xy.first);
      y.push_back(xy.second);
    }
    CHECK(g.ccc == doctest::Approx(pairwise_ccc(x, y)).epsilon(0.05));
  }
}

TEST_CASE("Wilcoxon signed-rank") {
  SUBCASE("all-zero differences") {
    std::vector<double> x{1, 2, 3}, y{1, 2, 3};
    WilcoxonResult r = wilcoxon_signed_rank(x, y);
    CHECK(r.all_zero);
    CHECK(r.p_value == 1.0);
  }
  SUBCASE("five positive differences: exact two-sided p = 1/16") {
    std::vector<double> x{1, 2, 3, 4, 5}, y{0, 0, 0, 0, 0};
    WilcoxonResult r = wilcoxon_signed_rank(x, y);
    CHECK(r.exact);
    CHECK(r.statistic == doctest::Approx(15.0));
    CHECK(r.p_value == doctest::Approx(1.0 / 16.0));
  }
  SUBCASE("exact p is symmetric under sign flip") {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
      int n = 4 + static_cast<int>(rng.below(12));
      std::vector<double> x(n), y(n, 0.0), neg(n);
      for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        neg[i] = -x[i];
      }
      WilcoxonResult a = wilcoxon_signed_rank(x, y);
      WilcoxonResult b = wilcoxon_signed_rank(neg, y);
      CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));
    }
  }
  SUBCASE("exact and normal approximation agree at the n = 25 boundary") {
    Rng rng(77);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> x(25), y(25);
      for (int i = 0; i < 25; ++i) {
        x[i] = rng.normal() + 0.3;
        y[i] = rng.normal();
      }
      WilcoxonResult ex = wilcoxon_signed_rank(x, y, true);
      WilcoxonResult ap = wilcoxon_signed_rank(x, y, false);
      CHECK(std::abs(ex.p_value - ap.p_value) <= 0.01);
    }
  }
  SUBCASE("ties get mid-ranks") {
    std::vector<double> x{1, 1, 2, 2}, y{0, 0, 0, 0};
    WilcoxonResult r = wilcoxon_signed_rank(x, y);
    CHECK(r.statistic == doctest::Approx(10.0));  // ranks 1.5,1.5,3.5,3.5 all positive
  }
}

namespace {

FeatureTable synthetic_table(int n_subjects, const std::vector<std::string>& extractors,
                             int n_features, double thickness_bias_on_feature1) {
  Rng rng(4321);
  FeatureTable t;
  std::vector<double> thicknesses{2.5, 3.75, 5.0};
  std::vector<double> asirs{0, 10, 20};
  for (int s = 0; s < n_subjects; ++s) {
    std::map<int, double> base;
    for (int f = 0; f < n_features; ++f) base[f] = rng.normal() * 3.0;
    for (RoiName roi : {RoiName::tumor, RoiName::liver})
      for (const auto& ext : extractors)
        for (double th : thicknesses)
          for (double a : asirs)
            for (int f = 0; f < n_features; ++f) {
              FeatureRow r;
              r.subject = "s" + std::to_string(100 + s);
              r.roi = roi;
              r.thickness = th;
              r.asir = a;
              r.extractor = ext;
              r.feature = f;
              double v = base[f];
              if (f == 1) v += thickness_bias_on_feature1 * th + 0.5 * rng.normal();
              if (f >= 2) v += 0.05 * rng.normal();
              r.value = v;
              t.rows.push_back(r);
            }
  }
  return t;
}

}  // namespace

TEST_CASE("ccc_spectrum over a synthetic table") {
  FeatureTable t = synthetic_table(12, {"L3", "S3"}, 4, 2.0);
  SpectrumResult s = ccc_spectrum(t, 20.0);
  CHECK(s.reference_asir == 20.0);

  // feature 0 copied verbatim across reconstructions -> CCC 1 everywhere
  int n_feature0 = 0;
  double worst_bias_ccc = 1.0, best_other = -1.0;
  std::map<int, double> min_ccc;
  for (const auto& row : s.generalized) {
    if (row.key.feature == 0) {
      CHECK(row.result.ccc == doctest::Approx(1.0));
      ++n_feature0;
    }
    auto it = min_ccc.find(row.key.feature);
    if (it == min_ccc.end() || row.result.ccc < it->second) min_ccc[row.key.feature] = row.result.ccc;
  }
  CHECK(n_feature0 == 4);  // 2 ROIs x 2 extractors

  // thickness-biased feature 1 has the lowest CCC among its peers
  for (const auto& [f, c] : min_ccc) {
    if (f == 1) worst_bias_ccc = c;
    else best_other = std::max(best_other, 1.0 - c);
  }
  for (const auto& [f, c] : min_ccc)
    if (f != 1) CHECK(min_ccc[1] < c);

  // bookkeeping: rows = (#features - #excluded) x #ROIs x #extractors
  CHECK(s.generalized.size() == 4 * 2 * 2);
  CHECK(s.excluded.empty());
  // pairwise: 3 thickness pairs per kept cell
  CHECK(s.pairwise.size() == s.generalized.size() * 3);
}

TEST_CASE("ccc_spectrum excludes cells with missing values") {
  FeatureTable t = synthetic_table(6, {"L3"}, 3, 0.0);
  for (auto& r : t.rows)
    if (r.feature == 2 && r.roi == RoiName::tumor && r.subject == "s101") r.value.reset();
  SpectrumResult s = ccc_spectrum(t, 20.0);
  CHECK(s.generalized.size() == 3 * 2 * 1 - 1);
  REQUIRE(s.excluded.size() == 1);
  CHECK(s.excluded[0].feature == 2);
  CHECK(s.excluded[0].roi == RoiName::tumor);
}

TEST_CASE("repro CSV round trip") {
  auto dir = test::temp_dir("repro_csv");
  FeatureTable t = synthetic_table(8, {"L3", "A2"}, 3, 1.0);
  SpectrumResult s = ccc_spectrum(t, 20.0);
  write_repro_csv(s, dir + "/repro.csv");
  auto ccc_map = read_generalized_ccc_csv(dir + "/repro.csv");
  CHECK(ccc_map.size() == s.generalized.size());
  for (const auto& row : s.generalized) {
    auto it = ccc_map.find(row.key);
    REQUIRE(it != ccc_map.end());
    CHECK(it->second == doctest::Approx(row.result.ccc).epsilon(1e-14));
  }
  auto rows = read_generalized_rows_csv(dir + "/repro.csv");
  CHECK(rows.size() == s.generalized.size());
}
