#include "rrw/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "rrw/csv.hpp"
#include "rrw/rng.hpp"
#include "rrw/stats_util.hpp"

namespace rrw {

namespace {

// Comparable pairs (i, j): subject i has the strictly smaller time and an
// observed event. Depends only on the outcomes, so folds reuse it across
// features.
std::vector<std::pair<int, int>> comparable_pairs(std::span<const SurvivalRecord> outcomes) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(outcomes.size());
  for (int i = 0; i < n; ++i) {
    if (!outcomes[i].event) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (outcomes[i].time < outcomes[j].time) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

double cindex_from_pairs(std::span<const double> risk,
                         const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) fail(ErrorKind::undefined_result, "no comparable pairs");
  double concordant = 0.0;
  for (const auto& [i, j] : pairs) {
    if (risk[i] > risk[j]) concordant += 1.0;
    else if (risk[i] == risk[j]) concordant += 0.5;
  }
  return concordant / static_cast<double>(pairs.size());
}

}  // namespace

double harrell_cindex(std::span<const double> risk, std::span<const SurvivalRecord> outcomes) {
  if (risk.size() != outcomes.size()) fail(ErrorKind::argument, "risk/outcome length mismatch");
  if (outcomes.size() < 2) fail(ErrorKind::insufficient_data, "C-index needs >= 2 subjects");
  return cindex_from_pairs(risk, comparable_pairs(outcomes));
}

std::pair<double, bool> fold_cindex(double c) {
  if (c < 0.0 || c > 1.0) fail(ErrorKind::argument, "C-index outside [0, 1]");
  return {std::max(c, 1.0 - c), c < 0.5};
}

namespace {

struct TiedGroup {
  double time;
  std::vector<int> events;   // indices with an event at this time
  std::vector<int> at_risk;  // indices entering the risk set at this time (time == t)
};

// Unique times in decreasing order with their event sets.
std::vector<TiedGroup> tied_groups(std::span<const SurvivalRecord> outcomes) {
  std::vector<int> order(outcomes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (outcomes[a].time != outcomes[b].time) return outcomes[a].time > outcomes[b].time;
    return a < b;
  });
  std::vector<TiedGroup> groups;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t k2 = k;
    TiedGroup g;
    g.time = outcomes[order[k]].time;
    while (k2 < order.size() && outcomes[order[k2]].time == g.time) {
      g.at_risk.push_back(order[k2]);
      if (outcomes[order[k2]].event) g.events.push_back(order[k2]);
      ++k2;
    }
    groups.push_back(std::move(g));
    k = k2;
  }
  return groups;
}

struct CoxEval {
  double ll = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;  // negative Hessian
};

CoxEval cox_eval(const Eigen::MatrixXd& X, std::span<const SurvivalRecord> outcomes,
                 const Eigen::VectorXd& beta, bool with_derivatives) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  Eigen::VectorXd eta = X * beta;
  // shift for numerical stability of exp()
  double eta_max = eta.size() ? eta.maxCoeff() : 0.0;
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = std::exp(eta[i] - eta_max);

  CoxEval ev;
  ev.grad = Eigen::VectorXd::Zero(p);
  ev.info = Eigen::MatrixXd::Zero(p, p);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

  for (const auto& g : tied_groups(outcomes)) {
    for (int i : g.at_risk) {
      s0 += w[i];
      if (with_derivatives) {
        s1 += w[i] * X.row(i).transpose();
        s2 += w[i] * (X.row(i).transpose() * X.row(i));
      }
    }
    const int d = static_cast<int>(g.events.size());
    if (d == 0) continue;

    double s0d = 0.0;
    Eigen::VectorXd s1d = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2d = Eigen::MatrixXd::Zero(p, p);
    for (int i : g.events) {
      ev.ll += eta[i] - eta_max;
      if (with_derivatives) ev.grad += X.row(i).transpose();
      s0d += w[i];
      if (with_derivatives) {
        s1d += w[i] * X.row(i).transpose();
        s2d += w[i] * (X.row(i).transpose() * X.row(i));
      }
    }
    for (int l = 0; l < d; ++l) {
      double frac = static_cast<double>(l) / d;
      double denom = s0 - frac * s0d;
      ev.ll -= std::log(denom);
      if (with_derivatives) {
        Eigen::VectorXd gl = (s1 - frac * s1d) / denom;
        ev.grad -= gl;
        ev.info += (s2 - frac * s2d) / denom - gl * gl.transpose();
      }
    }
  }
  return ev;
}

[[noreturn]] void collinearity_error(const Eigen::LDLT<Eigen::MatrixXd>& ldlt, int p) {
  // map the smallest pivot back through the permutation to name a column
  int worst = 0;
  double dmin = std::abs(ldlt.vectorD()(0));
  for (int i = 1; i < p; ++i) {
    double d = std::abs(ldlt.vectorD()(i));
    if (d < dmin) {
      dmin = d;
      worst = i;
    }
  }
  Eigen::VectorXi perm = Eigen::VectorXi::LinSpaced(p, 0, p - 1);
  perm = ldlt.transpositionsP() * perm;
  fail(ErrorKind::collinearity,
       "singular information matrix (collinear column " + std::to_string(perm(worst)) + ")");
}

}  // namespace

double cox_log_likelihood(const Eigen::MatrixXd& X, std::span<const SurvivalRecord> outcomes,
                          const Eigen::VectorXd& beta) {
  return cox_eval(X, outcomes, beta, false).ll;
}

Eigen::VectorXd cox_score(const Eigen::MatrixXd& X, std::span<const SurvivalRecord> outcomes,
                          const Eigen::VectorXd& beta) {
  return cox_eval(X, outcomes, beta, true).grad;
}

CoxModel cox_fit(const Eigen::MatrixXd& X, std::span<const SurvivalRecord> outcomes,
                 int max_iterations) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n != static_cast<int>(outcomes.size())) fail(ErrorKind::argument, "X/outcome size mismatch");
  if (p < 1) fail(ErrorKind::argument, "no covariates");
  int n_events = 0;
  for (const auto& o : outcomes) n_events += o.event;
  if (n_events == 0) fail(ErrorKind::undefined_result, "no observed events");

  for (int j = 0; j < p; ++j) {
    double lo = X.col(j).minCoeff(), hi = X.col(j).maxCoeff();
    if (lo == hi)
      fail(ErrorKind::collinearity, "singular information matrix (collinear column " +
                                        std::to_string(j) + ": constant)");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  CoxEval ev = cox_eval(X, outcomes, beta, true);

  CoxModel model;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    model.iterations = iter;
    ldlt.compute(ev.info);
    double dmax = ev.info.diagonal().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * std::max(dmax, 1.0))
      collinearity_error(ldlt, p);

    Eigen::VectorXd delta = ldlt.solve(ev.grad);
    double step = 1.0;
    Eigen::VectorXd beta_new;
    CoxEval ev_new;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      beta_new = beta + step * delta;
      ev_new = cox_eval(X, outcomes, beta_new, true);
      if (ev_new.ll >= ev.ll - 1e-12 * std::abs(ev.ll)) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;  // the damped step could not improve; report the best iterate

    double rel_change = std::abs(ev_new.ll - ev.ll) / std::max(1.0, std::abs(ev_new.ll));
    beta = beta_new;
    ev = ev_new;
    if (ev.grad.cwiseAbs().maxCoeff() < 1e-8 || rel_change < 1e-10) {
      model.converged = true;
      break;
    }
  }

  ldlt.compute(ev.info);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 0.0)
    collinearity_error(ldlt, p);
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  model.log_likelihood = ev.ll;
  model.coefficients.resize(p);
  model.standard_errors.resize(p);
  model.wald_p.resize(p);
  for (int j = 0; j < p; ++j) {
    model.coefficients[j] = beta[j];
    model.standard_errors[j] = std::sqrt(std::max(cov(j, j), 0.0));
    double z = model.standard_errors[j] > 0.0 ? beta[j] / model.standard_errors[j] : 0.0;
    model.wald_p[j] = normal_two_sided_p(z);
  }
  return model;
}

std::vector<int> mrmr_select(const Eigen::MatrixXd& X, const std::vector<double>& relevance,
                             int k, const std::vector<std::string>& ids) {
  const int p = static_cast<int>(X.cols());
  if (p == 0 || k < 1) fail(ErrorKind::argument, "mrmr needs candidates and k >= 1");
  if (static_cast<int>(relevance.size()) != p || static_cast<int>(ids.size()) != p)
    fail(ErrorKind::argument, "mrmr input size mismatch");

  Eigen::VectorXd mean = X.colwise().mean();
  Eigen::MatrixXd C = X.rowwise() - mean.transpose();
  Eigen::VectorXd norm(p);
  for (int j = 0; j < p; ++j) norm[j] = C.col(j).norm();

  auto abs_corr = [&](int a, int b) {
    if (norm[a] == 0.0 || norm[b] == 0.0) return 0.0;
    return std::abs(C.col(a).dot(C.col(b)) / (norm[a] * norm[b]));
  };

  std::vector<int> selected;
  std::vector<char> used(p, 0);
  std::vector<double> redundancy_sum(p, 0.0);

  while (static_cast<int>(selected.size()) < std::min(k, p)) {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < p; ++j) {
      if (used[j]) continue;
      double score = relevance[j];
      if (!selected.empty()) score -= redundancy_sum[j] / static_cast<double>(selected.size());
      bool better = false;
      if (best < 0) {
        better = true;
      } else if (score != best_score) {
        better = score > best_score;
      } else if (relevance[j] != relevance[best]) {
        better = relevance[j] > relevance[best];
      } else {
        better = ids[j] < ids[best];
      }
      if (better) {
        best = j;
        best_score = score;
      }
    }
    used[best] = 1;
    selected.push_back(best);
    for (int j = 0; j < p; ++j)
      if (!used[j]) redundancy_sum[j] += abs_corr(j, best);
  }
  return selected;
}

namespace {

struct FoldModel {
  std::vector<int> selected;        // feature indices into CvDataset::features
  std::vector<double> coef, mu, sigma;
  bool null_model = true;
};

struct RepResult {
  double test_c = 0.5;
  double train_c = 0.5;
  std::vector<std::pair<int, int>> selections;  // (feature idx, count 1) per fold selection
  std::vector<std::vector<int>> fold_selections;
  long long liver_selected = 0;
  long long total_selected = 0;
  long long null_folds = 0;
};

}  // namespace

PerformanceSummary run_cv(const CvDataset& data, const CVConfig& config) {
  const int n = static_cast<int>(data.outcomes.size());
  if (n < config.folds) fail(ErrorKind::insufficient_data, "fewer subjects than folds");
  if (config.feature_count < 1) fail(ErrorKind::argument, "feature_count must be >= 1");
  for (const auto& f : data.features)
    if (static_cast<int>(f.values.size()) != n)
      fail(ErrorKind::argument, "feature column length mismatch");
  if (comparable_pairs(data.outcomes).empty())
    fail(ErrorKind::undefined_result, "no comparable pairs in the cohort");

  const int reps = config.repetitions;
  std::vector<RepResult> rep_results(reps);

#pragma omp parallel for schedule(dynamic)
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(config.rng_seed, {0xCF01, static_cast<std::uint64_t>(rep)}));
    RepResult& rr = rep_results[rep];

    // stratified fold assignment: events and censored dealt round-robin after a shuffle
    std::vector<int> fold(n, 0);
    std::vector<int> events_idx, censored_idx;
    for (int i = 0; i < n; ++i)
      (data.outcomes[i].event ? events_idx : censored_idx).push_back(i);
    rng.shuffle(events_idx);
    rng.shuffle(censored_idx);
    int pos = 0;
    for (int i : events_idx) fold[i] = pos++ % config.folds;
    for (int i : censored_idx) fold[i] = pos++ % config.folds;

    std::vector<double> pooled_risk(n, 0.0);
    double train_c_sum = 0.0;

    for (int f = 0; f < config.folds; ++f) {
      std::vector<int> train, test;
      for (int i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(i);

      std::vector<SurvivalRecord> train_out;
      train_out.reserve(train.size());
      for (int i : train) train_out.push_back(data.outcomes[i]);
      auto train_pairs = comparable_pairs(train_out);

      // per-fold candidate filtering on training data only
      struct Candidate {
        int index;
        double relevance;
        std::vector<double> z;  // z-scored training values
        double mu, sigma;
      };
      std::vector<Candidate> cands;
      if (!train_pairs.empty()) {
        for (int fi = 0; fi < static_cast<int>(data.features.size()); ++fi) {
          const CvFeature& feat = data.features[fi];
          if (config.ccc_threshold > 0.0 && (!feat.ccc || *feat.ccc < config.ccc_threshold))
            continue;
          std::vector<double> vals;
          vals.reserve(train.size());
          bool missing = false;
          for (int i : train) {
            if (!feat.values[i]) {
              missing = true;
              break;
            }
            vals.push_back(*feat.values[i]);
          }
          if (missing) continue;  // missing values exclude the feature within this fold

          double c_raw = cindex_from_pairs(vals, train_pairs);
          auto [c_folded, negated] = fold_cindex(c_raw);
          (void)negated;
          if (c_folded < config.univariate_cindex_min) continue;

          double mu = mean_of(vals);
          double var = variance_pop(vals);
          if (var <= 0.0) continue;
          double sigma = std::sqrt(var);
          Candidate c;
          c.index = fi;
          c.relevance = c_folded - 0.5;
          c.mu = mu;
          c.sigma = sigma;
          c.z.resize(vals.size());
          for (std::size_t i = 0; i < vals.size(); ++i) c.z[i] = (vals[i] - mu) / sigma;

          Eigen::MatrixXd x1(train.size(), 1);
          for (std::size_t i = 0; i < vals.size(); ++i) x1(i, 0) = c.z[i];
          try {
            CoxModel uni = cox_fit(x1, train_out);
            if (!uni.converged || uni.wald_p[0] >= config.univariate_p_max) continue;
          } catch (const Error&) {
            continue;
          }
          cands.push_back(std::move(c));
        }
      }

      // collapse exact-duplicate training columns; candidates arrive in id
      // order, so the first of a duplicate group is the lexicographic pick
      std::vector<int> keep;
      for (int a = 0; a < static_cast<int>(cands.size()); ++a) {
        bool dup = false;
        for (int b : keep) {
          if (cands[b].z == cands[a].z) {
            dup = true;
            break;
          }
        }
        if (!dup) keep.push_back(a);
      }

      FoldModel fm;
      if (!keep.empty()) {
        Eigen::MatrixXd Xc(train.size(), keep.size());
        std::vector<double> rel(keep.size());
        std::vector<std::string> ids(keep.size());
        for (std::size_t k = 0; k < keep.size(); ++k) {
          const Candidate& c = cands[keep[k]];
          for (std::size_t i = 0; i < c.z.size(); ++i) Xc(i, k) = c.z[i];
          rel[k] = c.relevance;
          ids[k] = data.features[c.index].id;
        }
        std::vector<int> order = mrmr_select(Xc, rel, config.feature_count, ids);

        // multivariable fit; drop trailing selections if the matrix turns singular
        while (!order.empty()) {
          Eigen::MatrixXd Xm(train.size(), order.size());
          for (std::size_t k = 0; k < order.size(); ++k) Xm.col(k) = Xc.col(order[k]);
          try {
            CoxModel mv = cox_fit(Xm, train_out);
            fm.null_model = false;
            for (std::size_t k = 0; k < order.size(); ++k) {
              const Candidate& c = cands[keep[order[k]]];
              fm.selected.push_back(c.index);
              fm.coef.push_back(mv.coefficients[k]);
              fm.mu.push_back(c.mu);
              fm.sigma.push_back(c.sigma);
            }
            break;
          } catch (const Error& e) {
            if (e.kind() == ErrorKind::collinearity && order.size() > 1) order.pop_back();
            else break;
          }
        }
      }

      if (config.record_fold_selections) rr.fold_selections.push_back(fm.selected);

      if (fm.null_model) {
        ++rr.null_folds;  // test risks stay 0, train C-index is the tie value 0.5
        train_c_sum += 0.5;
        continue;
      }

      auto risk_of = [&](int subject) {
        double eta = 0.0;
        for (std::size_t k = 0; k < fm.selected.size(); ++k) {
          const auto& v = data.features[fm.selected[k]].values[subject];
          if (v) eta += fm.coef[k] * ((*v - fm.mu[k]) / fm.sigma[k]);
          // missing at prediction time contributes the training mean (z = 0)
        }
        return eta;
      };

      std::vector<double> train_risk(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) train_risk[i] = risk_of(train[i]);
      train_c_sum += cindex_from_pairs(train_risk, train_pairs);

      for (int i : test) pooled_risk[i] = risk_of(i);

      for (int fi : fm.selected) {
        rr.selections.emplace_back(fi, 1);
        ++rr.total_selected;
        if (data.features[fi].roi == RoiName::liver) ++rr.liver_selected;
      }
    }

    rr.test_c = harrell_cindex(pooled_risk, data.outcomes);
    rr.train_c = train_c_sum / config.folds;
  }

  PerformanceSummary s;
  s.test_cindex.reserve(reps);
  s.train_cindex.reserve(reps);
  long long liver = 0, total = 0;
  for (const auto& rr : rep_results) {
    s.test_cindex.push_back(rr.test_c);
    s.train_cindex.push_back(rr.train_c);
    liver += rr.liver_selected;
    total += rr.total_selected;
    s.null_folds += rr.null_folds;
    for (const auto& [fi, c] : rr.selections) s.selection_counts[data.features[fi].id] += c;
    for (const auto& sel : rr.fold_selections) s.fold_selections.push_back(sel);
  }
  s.folds_total = static_cast<long long>(reps) * config.folds;
  s.mean_test = mean_of(s.test_cindex);
  s.mean_train = mean_of(s.train_cindex);
  s.ci_lo = percentile(s.test_cindex, 2.5);
  s.ci_hi = percentile(s.test_cindex, 97.5);
  s.liver_fraction = total > 0 ? static_cast<double>(liver) / static_cast<double>(total) : 0.0;
  return s;
}

std::vector<UnivariateRow> univariate_spectrum(const CvDataset& data) {
  std::vector<UnivariateRow> rows(data.features.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t fi = 0; fi < data.features.size(); ++fi) {
    const CvFeature& feat = data.features[fi];
    UnivariateRow row;
    row.key = {feat.roi, feat.extractor, feat.feature};
    std::vector<double> risk;
    std::vector<SurvivalRecord> outs;
    for (std::size_t i = 0; i < data.outcomes.size(); ++i) {
      if (feat.values[i]) {
        risk.push_back(*feat.values[i]);
        outs.push_back(data.outcomes[i]);
      }
    }
    row.n_used = static_cast<long>(risk.size());
    if (risk.size() >= 2) {
      try {
        auto [c, neg] = fold_cindex(harrell_cindex(risk, outs));
        row.cindex = c;
        row.negated = neg;
      } catch (const Error&) {
        row.n_used = 0;  // no comparable pairs
      }
    } else {
      row.n_used = 0;
    }
    rows[fi] = std::move(row);
  }
  // drop rows that could not be computed
  std::vector<UnivariateRow> out;
  for (auto& r : rows)
    if (r.n_used > 0) out.push_back(std::move(r));
  return out;
}

void write_univariate_csv(const std::vector<UnivariateRow>& rows, const std::string& path) {
  CsvWriter w(path, {"feature_family", "feature_name", "roi", "extractor", "cindex", "negated",
                     "n_used"});
  for (const auto& r : rows) {
    const FeatureDef& def = feature_registry()[r.key.feature];
    w.write_row({family_str(def.family), def.name, roi_name_str(r.key.roi), r.key.extractor,
                 fmt_double(r.cindex), r.negated ? "1" : "0", std::to_string(r.n_used)});
  }
  w.close();
}

std::vector<UnivariateRow> read_univariate_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_fam = t.require_column("feature_family");
  int c_name = t.require_column("feature_name");
  int c_roi = t.require_column("roi");
  int c_ext = t.require_column("extractor");
  int c_c = t.require_column("cindex");
  int c_neg = t.require_column("negated");
  int c_n = t.require_column("n_used");
  std::vector<UnivariateRow> out;
  for (const auto& row : t.rows) {
    UnivariateRow r;
    int fi = feature_index(row[c_fam], row[c_name]);
    if (fi < 0) fail(ErrorKind::value, "unknown feature in univariate CSV");
    r.key = {parse_roi_name(row[c_roi]), row[c_ext], fi};
    r.cindex = parse_double(row[c_c], "cindex");
    r.negated = row[c_neg] == "1";
    r.n_used = static_cast<long>(parse_double(row[c_n], "n_used"));
    out.push_back(std::move(r));
  }
  return out;
}

CvDataset build_cv_dataset(const FeatureTable& table, const std::map<ReproKey, double>& ccc,
                           const std::vector<SurvivalRecord>& outcomes,
                           const std::string& extractor_set) {
  CvDataset ds;
  ds.outcomes = outcomes;
  std::sort(ds.outcomes.begin(), ds.outcomes.end(),
            [](const SurvivalRecord& a, const SurvivalRecord& b) {
              return a.subject_id < b.subject_id;
            });
  std::unordered_map<std::string, int> subject_index;
  for (int i = 0; i < static_cast<int>(ds.outcomes.size()); ++i) {
    if (!subject_index.emplace(ds.outcomes[i].subject_id, i).second)
      fail(ErrorKind::duplicate, "duplicate subject in outcomes: " + ds.outcomes[i].subject_id);
    if (!(ds.outcomes[i].time > 0.0)) fail(ErrorKind::value, "nonpositive survival time");
  }

  std::map<ReproKey, std::vector<std::optional<double>>> columns;
  for (const auto& r : table.rows) {
    if (extractor_set != "all" && r.extractor != extractor_set) continue;
    auto it = subject_index.find(r.subject);
    if (it == subject_index.end()) continue;  // subjects without outcomes are ignored
    ReproKey key{r.roi, r.extractor, r.feature};
    auto& col = columns[key];
    if (col.empty()) col.resize(ds.outcomes.size());
    if (col[it->second])
      fail(ErrorKind::duplicate, "duplicate feature value for subject " + r.subject);
    col[it->second] = r.value;
  }
  if (columns.empty()) fail(ErrorKind::insufficient_data, "no features for extractor set '" +
                                                              extractor_set + "'");

  for (auto& [key, col] : columns) {
    CvFeature f;
    const FeatureDef& def = feature_registry()[key.feature];
    f.id = roi_name_str(key.roi) + ":" + key.extractor + ":" + family_str(def.family) + "." +
           def.name;
    f.roi = key.roi;
    f.extractor = key.extractor;
    f.feature = key.feature;
    auto it = ccc.find(key);
    if (it != ccc.end()) f.ccc = it->second;
    f.values = std::move(col);
    ds.features.push_back(std::move(f));
  }
  std::sort(ds.features.begin(), ds.features.end(),
            [](const CvFeature& a, const CvFeature& b) { return a.id < b.id; });
  return ds;
}

}  // namespace rrw
