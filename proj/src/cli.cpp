#include "rrw/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "rrw/analysis.hpp"
#include "rrw/csv.hpp"
#include "rrw/feature_table.hpp"
#include "rrw/preprocess.hpp"
#include "rrw/repro.hpp"
#include "rrw/survival.hpp"
#include "rrw/synth.hpp"

namespace rrw {

namespace fs = std::filesystem;

void cmd_synth(const SynthOptions& opt) {
  SynthSpec spec = opt.spec_path.empty() ? SynthSpec{} : load_synth_spec(opt.spec_path);
  if (opt.seed) spec.rng_seed = *opt.seed;
  if (opt.n_subjects) spec.n_subjects = *opt.n_subjects;
  if (opt.survival) spec.survival.enabled = true;
  if (opt.reference_only) spec.reference_only = true;
  CohortSummary s = generate_cohort(spec, opt.out_dir, opt.workers);
  std::cout << "cohort: " << s.n_subjects << " subjects, " << s.n_images
            << " reconstructions, manifest " << s.manifest_path << "\n";
}

void cmd_extract(const ExtractOptions& opt) {
  std::vector<ExtractionConfig> custom =
      opt.config_file.empty() ? std::vector<ExtractionConfig>{} : load_config_file(opt.config_file);
  std::vector<ExtractionConfig> configs = resolve_settings(opt.settings, custom);
  CohortManifest manifest = load_manifest(opt.manifest_path);

  // rows already on disk survive a resume; key = (subject, roi, thickness, asir, extractor).
  // A zero-byte file (crash before the header flush) counts as a fresh start.
  FeatureTable existing;
  std::set<std::tuple<std::string, int, double, double, std::string>> done;
  if (fs::exists(opt.out_csv) && fs::file_size(opt.out_csv) > 0) {
    existing = read_feature_table(opt.out_csv);
    for (const auto& r : existing.rows)
      done.insert({r.subject, static_cast<int>(r.roi), r.thickness, r.asir.value_or(-1.0),
                   r.extractor});
  }

  // one work item per (image, extractor); both ROIs of an image share the item
  struct ImageGroup {
    std::string subject;
    std::string image_path;
    double thickness;
    std::optional<double> asir;
    std::vector<const ManifestEntry*> rois;
  };
  std::map<std::tuple<std::string, std::string, double, double>, ImageGroup> groups;
  for (const auto& e : manifest.entries) {
    auto key = std::make_tuple(e.subject_id, e.image_path, e.slice_thickness_mm,
                               e.asir_percent.value_or(-1.0));
    auto& g = groups[key];
    g.subject = e.subject_id;
    g.image_path = e.image_path;
    g.thickness = e.slice_thickness_mm;
    g.asir = e.asir_percent;
    g.rois.push_back(&e);
  }

  struct WorkItem {
    const ImageGroup* group;
    const ExtractionConfig* config;
    std::vector<const ManifestEntry*> pending;  // ROI entries not yet in the output
  };
  std::vector<WorkItem> items;
  for (const auto& [key, g] : groups) {
    for (const auto& cfg : configs) {
      WorkItem item{&g, &cfg, {}};
      for (const ManifestEntry* e : g.rois) {
        if (!done.count({e->subject_id, static_cast<int>(e->roi), e->slice_thickness_mm,
                         e->asir_percent.value_or(-1.0), cfg.name}))
          item.pending.push_back(e);
      }
      if (!item.pending.empty()) items.push_back(std::move(item));
    }
  }

  // journal: append finished ROIs immediately so an interrupted run resumes
  std::ofstream journal;
  if (!items.empty()) {
    bool fresh = !fs::exists(opt.out_csv) || fs::file_size(opt.out_csv) == 0;
    journal.open(opt.out_csv, std::ios::app);
    if (!journal) fail(ErrorKind::io, "cannot open output CSV: " + opt.out_csv);
    if (fresh)
      journal << "subject_id,roi,slice_thickness_mm,asir_percent,extractor,feature_family,"
                 "feature_name,value\n";
  }

  std::vector<std::vector<FeatureRow>> results(items.size());
  long n_failures = 0;
  if (opt.workers > 0) omp_set_num_threads(opt.workers);
#pragma omp parallel for schedule(dynamic) reduction(+ : n_failures)
  for (std::size_t w = 0; w < items.size(); ++w) {
    const WorkItem& item = items[w];
    std::vector<FeatureRow>& rows = results[w];
    try {
      ImageVolume image = read_image(item.group->image_path);
      std::vector<MaskVolume> masks;
      std::vector<RoiSpec> rois;
      masks.reserve(item.pending.size());
      for (const ManifestEntry* e : item.pending) masks.push_back(read_mask(e->mask_path));
      for (std::size_t i = 0; i < item.pending.size(); ++i)
        rois.push_back({roi_name_str(item.pending[i]->roi), &masks[i]});

      auto extractions = extract(image, rois, *item.config);
      for (std::size_t i = 0; i < extractions.size(); ++i) {
        const RoiExtraction& ex = extractions[i];
        const ManifestEntry* e = item.pending[i];
        if (!ex.features) {
          ++n_failures;
#pragma omp critical(extract_log)
          std::cerr << "extract: " << e->subject_id << "/" << roi_name_str(e->roi) << " t"
                    << fmt_double(e->slice_thickness_mm) << " " << item.config->name
                    << " failed: " << ex.error << "\n";
          continue;
        }
        for (int f = 0; f < kFeatureCount; ++f) {
          FeatureRow r;
          r.subject = e->subject_id;
          r.roi = e->roi;
          r.thickness = e->slice_thickness_mm;
          r.asir = e->asir_percent;
          r.extractor = item.config->name;
          r.feature = f;
          r.value = ex.features->values[f];
          rows.push_back(std::move(r));
        }
      }
    } catch (const Error& err) {
      ++n_failures;
#pragma omp critical(extract_log)
      std::cerr << "extract: " << item.group->subject << " " << item.config->name
                << " failed: " << err.what() << "\n";
    }
#pragma omp critical(extract_journal)
    {
      for (const auto& r : rows) {
        const FeatureDef& def = feature_registry()[r.feature];
        journal << r.subject << ',' << roi_name_str(r.roi) << ',' << fmt_double(r.thickness) << ','
                << fmt_optional(r.asir) << ',' << r.extractor << ',' << family_str(def.family)
                << ',' << def.name << ',' << fmt_optional(r.value) << '\n';
      }
      journal.flush();
    }
  }
  if (journal.is_open()) journal.close();

  // consolidate: canonical order makes the final file independent of worker
  // count and of interruption history
  FeatureTable table = std::move(existing);
  for (auto& rows : results)
    for (auto& r : rows) table.rows.push_back(std::move(r));
  table.sort_canonical();
  std::string tmp = opt.out_csv + ".tmp";
  write_feature_table(table, tmp);
  fs::rename(tmp, opt.out_csv);

  std::cout << "extracted " << table.rows.size() << " feature rows ("
            << n_failures << " ROI failures) -> " << opt.out_csv << "\n";
}

void cmd_repro(const ReproOptions& opt) {
  FeatureTable table = read_feature_table(opt.feature_csv);
  SpectrumResult spectrum = ccc_spectrum(table, opt.reference_asir);
  write_repro_csv(spectrum, opt.out_csv);

  if (!opt.wilcoxon_csv.empty()) {
    // CCC distributions compared between thickness pairs, per extractor,
    // paired over (feature, roi)
    std::map<std::string,
             std::map<std::pair<double, double>, std::map<std::pair<int, int>, double>>>
        by_ext;
    for (const auto& p : spectrum.pairwise)
      by_ext[p.key.extractor][{p.thickness_a, p.thickness_b}]
            [{p.key.feature, static_cast<int>(p.key.roi)}] = p.ccc;

    CsvWriter w(opt.wilcoxon_csv,
                {"extractor", "pair_a", "pair_b", "n", "statistic", "p_value"});
    for (const auto& [ext, pairs] : by_ext) {
      std::vector<std::pair<double, double>> keys;
      for (const auto& [k, v] : pairs) keys.push_back(k);
      for (std::size_t a = 0; a < keys.size(); ++a)
        for (std::size_t b = a + 1; b < keys.size(); ++b) {
          std::vector<double> xs, ys;
          for (const auto& [cell, ccc] : pairs.at(keys[a])) {
            auto it = pairs.at(keys[b]).find(cell);
            if (it != pairs.at(keys[b]).end()) {
              xs.push_back(ccc);
              ys.push_back(it->second);
            }
          }
          if (xs.empty()) continue;
          WilcoxonResult wr = wilcoxon_signed_rank(xs, ys);
          auto pair_name = [](const std::pair<double, double>& p) {
            return fmt_double(p.first) + "_vs_" + fmt_double(p.second);
          };
          w.write_row({ext, pair_name(keys[a]), pair_name(keys[b]), std::to_string(xs.size()),
                       fmt_double(wr.statistic), fmt_double(wr.p_value)});
        }
    }
    w.close();
  }
  std::cout << "repro: " << spectrum.generalized.size() << " generalized CCCs, "
            << spectrum.pairwise.size() << " pairwise rows, " << spectrum.excluded.size()
            << " excluded -> " << opt.out_csv << "\n";
}

SurvivalGrid default_survival_grid(const std::vector<std::string>& table_extractors) {
  SurvivalGrid g;
  g.extractor_sets = table_extractors;
  g.extractor_sets.push_back("all");
  return g;
}

SurvivalGrid load_survival_grid(const std::string& path,
                                const std::vector<std::string>& table_extractors) {
  SurvivalGrid g = default_survival_grid(table_extractors);
  if (path.empty()) return g;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open grid file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::config, "invalid JSON in " + path + ": " + e.what());
  }
  try {
    if (j.contains("extractor_sets"))
      g.extractor_sets = j.at("extractor_sets").get<std::vector<std::string>>();
    if (j.contains("ccc_thresholds"))
      g.ccc_thresholds = j.at("ccc_thresholds").get<std::vector<double>>();
    if (j.contains("feature_counts"))
      g.feature_counts = j.at("feature_counts").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, "grid file " + path + ": " + e.what());
  }
  if (g.cell_count() == 0) fail(ErrorKind::config, "empty run matrix in " + path);
  return g;
}

void cmd_survival(const SurvivalOptions& opt) {
  FeatureTable table = read_feature_table(opt.feature_csv);
  CohortManifest manifest = load_manifest(opt.manifest_path);
  if (!manifest.is_survival_cohort())
    fail(ErrorKind::schema, "manifest has no survival outcomes");

  std::map<std::string, SurvivalRecord> outcome_map;
  for (const auto& e : manifest.entries)
    outcome_map[e.subject_id] = {e.subject_id, *e.time_days, *e.event};
  std::vector<SurvivalRecord> outcomes;
  for (auto& [id, rec] : outcome_map) outcomes.push_back(rec);

  std::map<ReproKey, double> ccc;
  if (!opt.repro_csv.empty()) ccc = read_generalized_ccc_csv(opt.repro_csv);

  if (opt.workers > 0) omp_set_num_threads(opt.workers);

  if (!opt.univariate_csv.empty()) {
    CvDataset all = build_cv_dataset(table, ccc, outcomes, "all");
    write_univariate_csv(univariate_spectrum(all), opt.univariate_csv);
  }

  SurvivalGrid grid;
  bool single = opt.extractor_set || opt.ccc_threshold || opt.feature_count;
  if (single) {
    if (!(opt.extractor_set && opt.ccc_threshold && opt.feature_count))
      fail(ErrorKind::argument,
           "single-cell mode needs --extractor-set, --ccc-threshold and --n-features together");
    grid.extractor_sets = {*opt.extractor_set};
    grid.ccc_thresholds = {*opt.ccc_threshold};
    grid.feature_counts = {*opt.feature_count};
  } else {
    grid = load_survival_grid(opt.grid_file, table.extractors());
  }

  for (double t : grid.ccc_thresholds)
    if (t > 0.0 && ccc.empty())
      fail(ErrorKind::argument, "ccc threshold " + fmt_double(t) +
                                    " requires --repro with generalized CCC rows");

  struct Row {
    std::string extractor;
    double threshold;
    int n_features;
    PerformanceSummary summary;
  };
  std::vector<Row> rows;
  for (const auto& ext : grid.extractor_sets) {
    CvDataset ds = build_cv_dataset(table, ccc, outcomes, ext);
    for (double t : grid.ccc_thresholds) {
      for (int k : grid.feature_counts) {
        CVConfig cfg;
        cfg.ccc_threshold = t;
        cfg.feature_count = k;
        cfg.folds = opt.folds;
        cfg.repetitions = opt.repetitions;
        cfg.rng_seed = opt.seed;
        Row row{ext, t, k, run_cv(ds, cfg)};
        rows.push_back(std::move(row));
      }
    }
  }

  CsvWriter w(opt.out_csv, {"extractor", "ccc_threshold", "n_features", "mean_test_cindex",
                            "ci_lo", "ci_hi", "mean_train_cindex", "liver_fraction"});
  for (const auto& r : rows)
    w.write_row({r.extractor, fmt_double(r.threshold), std::to_string(r.n_features),
                 fmt_double(r.summary.mean_test), fmt_double(r.summary.ci_lo),
                 fmt_double(r.summary.ci_hi), fmt_double(r.summary.mean_train),
                 fmt_double(r.summary.liver_fraction)});
  w.close();

  std::vector<const Row*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const Row* a, const Row* b) {
    if (a->summary.mean_test != b->summary.mean_test)
      return a->summary.mean_test > b->summary.mean_test;
    return std::make_tuple(a->extractor, a->threshold, a->n_features) <
           std::make_tuple(b->extractor, b->threshold, b->n_features);
  });
  std::cout << "top " << std::min<std::size_t>(opt.top, sorted.size())
            << " cells by mean test C-index:\n";
  std::cout << "extractor,ccc_threshold,n_features,mean_test_cindex,ci_lo,ci_hi,"
               "mean_train_cindex,liver_fraction\n";
  for (std::size_t i = 0; i < sorted.size() && i < static_cast<std::size_t>(opt.top); ++i) {
    const Row& r = *sorted[i];
    std::cout << r.extractor << ',' << fmt_double(r.threshold) << ',' << r.n_features << ','
              << fmt_double(r.summary.mean_test) << ',' << fmt_double(r.summary.ci_lo) << ','
              << fmt_double(r.summary.ci_hi) << ',' << fmt_double(r.summary.mean_train) << ','
              << fmt_double(r.summary.liver_fraction) << "\n";
  }
}

void cmd_analyze(const AnalyzeOptions& opt) {
  std::vector<GeneralizedRow> repro = read_generalized_rows_csv(opt.repro_csv);
  std::vector<UnivariateRow> univariate = read_univariate_csv(opt.univariate_csv);
  if (repro.empty()) fail(ErrorKind::insufficient_data, "no generalized CCC rows");
  ReportPaths paths = emit_reports(repro, univariate, opt.out_dir);
  std::cout << "reports written to " << opt.out_dir << "\n";
}

}  // namespace rrw
