#include "rrw/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "rrw/csv.hpp"

namespace rrw {

namespace {

constexpr int kOloExactLimit = 2000;

Eigen::MatrixXd pairwise_euclidean(const Eigen::MatrixXd& rows) {
  const int n = static_cast<int>(rows.rows());
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      double v = (rows.row(i) - rows.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

// Bar-Joseph exact optimal leaf ordering: minimizes the sum of distances
// between adjacent leaves over all 2^(n-1) subtree flips.
struct LeafOrderer {
  const std::vector<Dendrogram::Merge>& merges;
  const Eigen::MatrixXd& dist;
  int n;

  std::vector<std::vector<int>> leaves;  // per node
  // cost[node] maps (left leaf, right leaf) -> (cost, m1, m2, flipped)
  struct Entry {
    double cost = 0.0;
    int m1 = -1, m2 = -1;
    bool flipped = false;
  };
  std::vector<std::map<std::pair<int, int>, Entry>> cost;

  LeafOrderer(const std::vector<Dendrogram::Merge>& m, const Eigen::MatrixXd& d, int n_leaves)
      : merges(m), dist(d), n(n_leaves) {}

  void run(std::vector<int>& order) {
    const int total = n + static_cast<int>(merges.size());
    leaves.resize(total);
    cost.resize(total);
    for (int i = 0; i < n; ++i) {
      leaves[i] = {i};
      cost[i][{i, i}] = {0.0, -1, -1, false};
    }
    for (std::size_t k = 0; k < merges.size(); ++k) solve_node(n + static_cast<int>(k));

    const int root = total - 1;
    const Entry* best = nullptr;
    std::pair<int, int> best_key{-1, -1};
    for (const auto& [key, e] : cost[root]) {
      if (!best || e.cost < best->cost || (e.cost == best->cost && key < best_key)) {
        best = &e;
        best_key = key;
      }
    }
    order.clear();
    emit(root, best_key.first, best_key.second, order);
  }

  void solve_node(int node) {
    const auto& m = merges[node - n];
    for (int pass = 0; pass < 2; ++pass) {
      int left = pass == 0 ? m.a : m.b;
      int right = pass == 0 ? m.b : m.a;
      const auto& L = leaves[left];
      const auto& R = leaves[right];
      // T(l, m2) = min over m1 of cost_left(l, m1) + d(m1, m2)
      std::map<std::pair<int, int>, std::pair<double, int>> T;
      for (const auto& [lk, le] : cost[left]) {
        for (int m2 : R) {
          double c = le.cost + dist(lk.second, m2);
          auto key = std::make_pair(lk.first, m2);
          auto it = T.find(key);
          if (it == T.end() || c < it->second.first ||
              (c == it->second.first && lk.second < it->second.second))
            T[key] = {c, lk.second};
        }
      }
      for (const auto& [rk, re] : cost[right]) {
        for (int l : L) {
          auto it = T.find({l, rk.first});
          if (it == T.end()) continue;
          double c = it->second.first + re.cost;
          auto key = std::make_pair(l, rk.second);
          auto cur = cost[node].find(key);
          if (cur == cost[node].end() || c < cur->second.cost) {
            Entry e;
            e.cost = c;
            e.m1 = it->second.second;
            e.m2 = rk.first;
            e.flipped = pass == 1;
            cost[node][key] = e;
          }
        }
      }
    }
    leaves[node] = leaves[m.a];
    leaves[node].insert(leaves[node].end(), leaves[m.b].begin(), leaves[m.b].end());
  }

  void emit(int node, int l, int r, std::vector<int>& order) {
    if (node < n) {
      order.push_back(node);
      return;
    }
    const Entry& e = cost[node].at({l, r});
    const auto& m = merges[node - n];
    int left = e.flipped ? m.b : m.a;
    int right = e.flipped ? m.a : m.b;
    emit(left, l, e.m1, order);
    emit(right, e.m2, r, order);
  }
};

std::vector<int> dendrogram_order(const Dendrogram& d) {
  std::vector<std::vector<int>> leaves(d.n_leaves + d.merges.size());
  for (int i = 0; i < d.n_leaves; ++i) leaves[i] = {i};
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    auto& v = leaves[d.n_leaves + k];
    v = leaves[d.merges[k].a];
    v.insert(v.end(), leaves[d.merges[k].b].begin(), leaves[d.merges[k].b].end());
  }
  return leaves.back();
}

}  // namespace

Dendrogram ward_cluster(const Eigen::MatrixXd& rows) {
  const int n = static_cast<int>(rows.rows());
  if (n < 2) fail(ErrorKind::insufficient_data, "clustering needs >= 2 rows");
  for (int i = 0; i < rows.size(); ++i)
    if (!std::isfinite(rows.data()[i])) fail(ErrorKind::value, "non-finite value in cluster input");

  Eigen::MatrixXd base_dist = pairwise_euclidean(rows);
  Eigen::MatrixXd d2 = base_dist.array().square();

  Dendrogram out;
  out.n_leaves = n;

  std::vector<int> node_id(n), size(n, 1);
  std::vector<bool> active(n, true);
  for (int i = 0; i < n; ++i) node_id[i] = i;

  for (int step = 0; step < n - 1; ++step) {
    int bi = -1, bj = -1;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (bi < 0 || d2(i, j) < best) {
          best = d2(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    Dendrogram::Merge m;
    m.a = node_id[bi];
    m.b = node_id[bj];
    if (m.a > m.b) std::swap(m.a, m.b);
    m.height = std::sqrt(std::max(best, 0.0));
    m.size = size[bi] + size[bj];
    out.merges.push_back(m);

    // Lance-Williams Ward update into slot bi
    for (int k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      double nk = size[k], ni = size[bi], nj = size[bj];
      double v = ((ni + nk) * d2(bi, k) + (nj + nk) * d2(bj, k) - nk * d2(bi, bj)) /
                 (ni + nj + nk);
      d2(bi, k) = v;
      d2(k, bi) = v;
    }
    size[bi] += size[bj];
    active[bj] = false;
    node_id[bi] = n + step;
  }

  if (n <= kOloExactLimit) {
    LeafOrderer olo(out.merges, base_dist, n);
    olo.run(out.leaf_order);
    out.leaf_order_exact = true;
  } else {
    out.leaf_order = dendrogram_order(out);
    out.leaf_order_exact = false;
  }
  return out;
}

std::vector<std::size_t> pareto_front(const std::vector<ParetoPoint>& points) {
  if (points.empty()) fail(ErrorKind::argument, "pareto_front of an empty set");
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].ccc != points[b].ccc) return points[a].ccc > points[b].ccc;
    if (points[a].cindex != points[b].cindex) return points[a].cindex > points[b].cindex;
    return a < b;
  });

  std::vector<std::size_t> front;
  double best_cindex = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < idx.size()) {
    // group of equal ccc; survivors need the group-max cindex, strictly above
    // everything seen at higher ccc
    std::size_t j = i;
    double group_max = points[idx[i]].cindex;  // sorted desc within the group
    while (j < idx.size() && points[idx[j]].ccc == points[idx[i]].ccc) ++j;
    if (group_max > best_cindex) {
      for (std::size_t k = i; k < j; ++k)
        if (points[idx[k]].cindex == group_max) front.push_back(idx[k]);
      best_cindex = group_max;
    }
    i = j;
  }
  return front;
}

JoinedResults join_results(const std::vector<GeneralizedRow>& repro,
                           const std::vector<UnivariateRow>& univariate) {
  std::map<std::tuple<int, RoiName, std::string>, JoinedCell> cells;
  std::set<std::tuple<int, RoiName, std::string>> have_ccc;
  for (const auto& r : repro) {
    cells[{r.key.feature, r.key.roi, r.key.extractor}].ccc = r.result.ccc;
    have_ccc.insert({r.key.feature, r.key.roi, r.key.extractor});
  }
  JoinedResults out;
  for (const auto& u : univariate) {
    auto key = std::make_tuple(u.key.feature, u.key.roi, u.key.extractor);
    if (!have_ccc.count(key)) continue;  // features missing either statistic are excluded
    JoinedCell c = cells[key];
    c.cindex = u.cindex;
    out[{u.key.feature, u.key.roi}][u.key.extractor] = c;
  }
  return out;
}

FrontAnalysis per_feature_extractor_fronts(const JoinedResults& joined) {
  FrontAnalysis fa;
  std::vector<ParetoPoint> all_points;

  for (const auto& [fk, by_ext] : joined) {
    auto [feature, roi] = fk;
    double max_ccc = -2.0, max_c = -2.0;
    for (const auto& [ext, cell] : by_ext) {
      max_ccc = std::max(max_ccc, cell.ccc);
      max_c = std::max(max_c, cell.cindex);
    }
    std::vector<ParetoPoint> pts;
    for (const auto& [ext, cell] : by_ext) {
      pts.push_back({feature, roi, ext, cell.ccc, cell.cindex});
      all_points.push_back(pts.back());
    }
    auto front = pareto_front(pts);

    // duplicate groups: extractors with identical (ccc, cindex)
    std::map<std::pair<double, double>, std::vector<std::string>> groups;
    for (const auto& [ext, cell] : by_ext) groups[{cell.ccc, cell.cindex}].push_back(ext);
    auto dedup_first = [&](const std::string& ext, const JoinedCell& cell) {
      return groups[{cell.ccc, cell.cindex}].front() == ext;
    };

    for (const auto& [ext, cell] : by_ext) {
      if (cell.ccc == max_ccc) {
        ++fa.counts.best_ccc[{ext, roi}];
        if (dedup_first(ext, cell)) ++fa.counts.best_ccc_dedup[{ext, roi}];
      }
      if (cell.cindex == max_c) {
        ++fa.counts.best_cindex[{ext, roi}];
        if (dedup_first(ext, cell)) ++fa.counts.best_cindex_dedup[{ext, roi}];
      }
    }
    auto& fset = fa.per_feature_front[fk];
    for (std::size_t i : front) {
      fset.push_back(pts[i].extractor);
      ++fa.counts.pareto[{pts[i].extractor, roi}];
      if (dedup_first(pts[i].extractor, by_ext.at(pts[i].extractor)))
        ++fa.counts.pareto_dedup[{pts[i].extractor, roi}];
    }
    std::sort(fset.begin(), fset.end());
  }

  if (!all_points.empty()) {
    auto front = pareto_front(all_points);
    for (std::size_t i : front) {
      fa.global_front.push_back(all_points[i]);
      ++fa.global_front_counts[{all_points[i].extractor, all_points[i].roi}];
    }
  }
  return fa;
}

namespace {

// simple blue -> white -> red ramp over [lo, hi]
std::string heat_color(double v, double lo, double hi) {
  double t = hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.5;
  int r, g, b;
  if (t < 0.5) {
    double u = t * 2.0;
    r = static_cast<int>(59 + (255 - 59) * u);
    g = static_cast<int>(76 + (255 - 76) * u);
    b = static_cast<int>(192 + (255 - 192) * u);
  } else {
    double u = (t - 0.5) * 2.0;
    r = static_cast<int>(255 - (255 - 180) * u);
    g = static_cast<int>(255 - 251 * u);
    b = static_cast<int>(255 - 217 * u);
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void write_heatmap_svg(const std::string& path, const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names, const Eigen::MatrixXd& values,
                       const std::vector<int>& row_order, const std::vector<int>& col_order,
                       double lo, double hi) {
  const int cell = 12, label_w = 260, label_h = 110;
  const int nr = static_cast<int>(row_order.size()), nc = static_cast<int>(col_order.size());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label_w + nc * cell + 10
      << "\" height=\"" << label_h + nr * cell + 10 << "\" font-family=\"sans-serif\">\n";
  for (int c = 0; c < nc; ++c) {
    out << "<text x=\"" << label_w + c * cell + cell / 2 << "\" y=\"" << label_h - 6
        << "\" font-size=\"9\" text-anchor=\"start\" transform=\"rotate(-60 "
        << label_w + c * cell + cell / 2 << " " << label_h - 6 << ")\">" << col_names[col_order[c]]
        << "</text>\n";
  }
  for (int r = 0; r < nr; ++r) {
    out << "<text x=\"" << label_w - 4 << "\" y=\"" << label_h + r * cell + cell - 3
        << "\" font-size=\"8\" text-anchor=\"end\">" << row_names[row_order[r]] << "</text>\n";
    for (int c = 0; c < nc; ++c) {
      double v = values(row_order[r], col_order[c]);
      out << "<rect x=\"" << label_w + c * cell << "\" y=\"" << label_h + r * cell << "\" width=\""
          << cell << "\" height=\"" << cell << "\" fill=\"" << heat_color(v, lo, hi) << "\"><title>"
          << row_names[row_order[r]] << " | " << col_names[col_order[c]] << " = " << fmt_double(v)
          << "</title></rect>\n";
    }
  }
  out << "</svg>\n";
  if (!out) fail(ErrorKind::io, "write failure on " + path);
}

}  // namespace

ReportPaths emit_reports(const std::vector<GeneralizedRow>& repro,
                         const std::vector<UnivariateRow>& univariate,
                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ReportPaths paths;
  auto at = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  // --- clustered CCC heatmap: rows = features, columns = roi x extractor ---
  std::set<int> feat_set;
  std::set<std::pair<RoiName, std::string>> col_set;
  std::map<std::tuple<int, RoiName, std::string>, double> ccc_map;
  for (const auto& r : repro) {
    feat_set.insert(r.key.feature);
    col_set.insert({r.key.roi, r.key.extractor});
    ccc_map[{r.key.feature, r.key.roi, r.key.extractor}] = r.result.ccc;
  }

  std::ofstream cluster_csv(at("cluster_assignments.csv"));
  if (!cluster_csv) fail(ErrorKind::io, "cannot write cluster CSV");
  cluster_csv << "heatmap,axis,position,label\n";

  auto emit_heatmap = [&](const std::string& tag, const std::vector<int>& feats,
                          const std::vector<std::string>& col_labels,
                          const Eigen::MatrixXd& values, const std::string& svg_path,
                          double lo, double hi) {
    // rows with any missing entry were dropped by the caller
    std::vector<int> row_order, col_order;
    if (values.rows() >= 2) {
      row_order = ward_cluster(values).leaf_order;
    } else {
      row_order.resize(values.rows());
      for (int i = 0; i < values.rows(); ++i) row_order[i] = i;
    }
    if (values.cols() >= 2) {
      col_order = ward_cluster(values.transpose()).leaf_order;
    } else {
      col_order.resize(values.cols());
      for (int i = 0; i < values.cols(); ++i) col_order[i] = i;
    }
    std::vector<std::string> row_names;
    for (int f : feats) {
      const FeatureDef& def = feature_registry()[f];
      row_names.push_back(family_str(def.family) + "." + def.name);
    }
    write_heatmap_svg(svg_path, row_names, col_labels, values, row_order, col_order, lo, hi);
    for (std::size_t i = 0; i < row_order.size(); ++i)
      cluster_csv << tag << ",row," << i << "," << csv_quote(row_names[row_order[i]]) << "\n";
    for (std::size_t i = 0; i < col_order.size(); ++i)
      cluster_csv << tag << ",column," << i << "," << csv_quote(col_labels[col_order[i]]) << "\n";
  };

  {
    std::vector<std::pair<RoiName, std::string>> cols(col_set.begin(), col_set.end());
    std::vector<int> feats;
    for (int f : feat_set) {
      bool complete = true;
      for (const auto& c : cols)
        if (!ccc_map.count({f, c.first, c.second})) complete = false;
      if (complete) feats.push_back(f);
    }
    if (!feats.empty() && !cols.empty()) {
      Eigen::MatrixXd values(feats.size(), cols.size());
      for (std::size_t i = 0; i < feats.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
          values(i, j) = ccc_map[{feats[i], cols[j].first, cols[j].second}];
      std::vector<std::string> labels;
      for (const auto& c : cols) labels.push_back(roi_name_str(c.first) + ":" + c.second);
      paths.ccc_heatmap_svg = at("ccc_heatmap.svg");
      emit_heatmap("ccc", feats, labels, values, paths.ccc_heatmap_svg, 0.0, 1.0);
    }
  }

  // --- per-ROI C-index heatmaps: rows = features, columns = extractors ---
  for (RoiName roi : {RoiName::tumor, RoiName::liver}) {
    std::set<int> feats_set;
    std::set<std::string> ext_set;
    std::map<std::pair<int, std::string>, double> cmap;
    for (const auto& u : univariate) {
      if (u.key.roi != roi) continue;
      feats_set.insert(u.key.feature);
      ext_set.insert(u.key.extractor);
      cmap[{u.key.feature, u.key.extractor}] = u.cindex;
    }
    std::vector<std::string> exts(ext_set.begin(), ext_set.end());
    std::vector<int> feats;
    for (int f : feats_set) {
      bool complete = true;
      for (const auto& e : exts)
        if (!cmap.count({f, e})) complete = false;
      if (complete) feats.push_back(f);
    }
    if (feats.empty() || exts.empty()) continue;
    Eigen::MatrixXd values(feats.size(), exts.size());
    for (std::size_t i = 0; i < feats.size(); ++i)
      for (std::size_t j = 0; j < exts.size(); ++j) values(i, j) = cmap[{feats[i], exts[j]}];
    std::string path = at("cindex_heatmap_" + roi_name_str(roi) + ".svg");
    if (roi == RoiName::tumor) paths.cindex_tumor_svg = path;
    else paths.cindex_liver_svg = path;
    emit_heatmap("cindex_" + roi_name_str(roi), feats, exts, values, path, 0.5, 1.0);
  }
  cluster_csv.close();
  paths.cluster_csv = at("cluster_assignments.csv");

  // --- Pareto front over all (feature, roi, extractor) points ---
  JoinedResults joined = join_results(repro, univariate);
  FrontAnalysis fa = per_feature_extractor_fronts(joined);

  {
    CsvWriter w(at("pareto_front.csv"), {"feature_family", "feature_name", "roi", "extractor",
                                         "ccc", "cindex"});
    for (const auto& p : fa.global_front) {
      const FeatureDef& def = feature_registry()[p.feature];
      w.write_row({family_str(def.family), def.name, roi_name_str(p.roi), p.extractor,
                   fmt_double(p.ccc), fmt_double(p.cindex)});
    }
    w.close();
    paths.pareto_csv = at("pareto_front.csv");
  }

  {
    CsvWriter w(at("extractor_front_counts.csv"),
                {"extractor", "roi", "criterion", "count", "count_dedup"});
    auto dump = [&](const char* crit,
                    const std::map<std::pair<std::string, RoiName>, long>& raw,
                    const std::map<std::pair<std::string, RoiName>, long>& dedup) {
      for (const auto& [key, count] : raw) {
        long dd = 0;
        auto it = dedup.find(key);
        if (it != dedup.end()) dd = it->second;
        w.write_row({key.first, roi_name_str(key.second), crit, std::to_string(count),
                     std::to_string(dd)});
      }
    };
    dump("best_ccc", fa.counts.best_ccc, fa.counts.best_ccc_dedup);
    dump("best_cindex", fa.counts.best_cindex, fa.counts.best_cindex_dedup);
    dump("pareto", fa.counts.pareto, fa.counts.pareto_dedup);
    for (const auto& [key, count] : fa.global_front_counts)
      w.write_row({key.first, roi_name_str(key.second), "global_front", std::to_string(count),
                   std::to_string(count)});
    w.close();
    paths.front_counts_csv = at("extractor_front_counts.csv");
  }

  {  // scatter of all points, front members circled
    std::vector<ParetoPoint> pts;
    for (const auto& [fk, by_ext] : joined)
      for (const auto& [ext, cell] : by_ext)
        pts.push_back({fk.first, fk.second, ext, cell.ccc, cell.cindex});
    std::set<std::tuple<int, RoiName, std::string>> on_front;
    for (const auto& p : fa.global_front) on_front.insert({p.feature, p.roi, p.extractor});

    const int w = 640, h = 480, margin = 50;
    std::ofstream out(at("pareto_scatter.svg"));
    if (!out) fail(ErrorKind::io, "cannot write pareto scatter");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" font-family=\"sans-serif\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    double ccc_lo = 0.0, ccc_hi = 1.0, c_lo = 0.5, c_hi = 1.0;
    for (const auto& p : pts) {
      ccc_lo = std::min(ccc_lo, p.ccc);
    }
    auto sx = [&](double ccc) {
      return margin + (ccc - ccc_lo) / (ccc_hi - ccc_lo) * (w - 2 * margin);
    };
    auto sy = [&](double c) { return h - margin - (c - c_lo) / (c_hi - c_lo) * (h - 2 * margin); };
    out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" font-size=\"12\" "
        << "text-anchor=\"middle\">CCC</text>\n";
    out << "<text x=\"14\" y=\"" << h / 2 << "\" font-size=\"12\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 14 " << h / 2 << ")\">C-index</text>\n";
    for (const auto& p : pts) {
      bool front = on_front.count({p.feature, p.roi, p.extractor}) > 0;
      const FeatureDef& def = feature_registry()[p.feature];
      out << "<circle cx=\"" << svg_num(sx(p.ccc)) << "\" cy=\"" << svg_num(sy(p.cindex))
          << "\" r=\"" << (front ? 4 : 2) << "\" fill=\""
          << (p.roi == RoiName::tumor ? "#1f77b4" : "#ff7f0e") << "\" fill-opacity=\""
          << (front ? "1.0" : "0.35") << "\"";
      if (front) out << " stroke=\"red\" stroke-width=\"1.5\"";
      out << "><title>" << roi_name_str(p.roi) << ":" << p.extractor << ":"
          << family_str(def.family) << "." << def.name << " ccc=" << fmt_double(p.ccc)
          << " cindex=" << fmt_double(p.cindex) << "</title></circle>\n";
    }
    out << "</svg>\n";
    if (!out) fail(ErrorKind::io, "write failure on pareto scatter");
    paths.pareto_svg = at("pareto_scatter.svg");
  }
  return paths;
}

}  // namespace rrw
