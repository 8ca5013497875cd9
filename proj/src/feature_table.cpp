#include "rrw/feature_table.hpp"

#include <algorithm>
#include <set>

#include "rrw/csv.hpp"

namespace rrw {

void FeatureTable::sort_canonical() {
  std::sort(rows.begin(), rows.end(),
            [](const FeatureRow& a, const FeatureRow& b) { return a.key() < b.key(); });
}

std::vector<std::string> FeatureTable::extractors() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.extractor);
  return {s.begin(), s.end()};
}

void write_feature_table(const FeatureTable& t, const std::string& path) {
  CsvWriter w(path, {"subject_id", "roi", "slice_thickness_mm", "asir_percent", "extractor",
                     "feature_family", "feature_name", "value"});
  for (const auto& r : t.rows) {
    const FeatureDef& def = feature_registry()[r.feature];
    w.write_row({r.subject, roi_name_str(r.roi), fmt_double(r.thickness), fmt_optional(r.asir),
                 r.extractor, family_str(def.family), def.name, fmt_optional(r.value)});
  }
  w.close();
}

FeatureTable read_feature_table(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_subj = t.require_column("subject_id");
  int c_roi = t.require_column("roi");
  int c_thick = t.require_column("slice_thickness_mm");
  int c_asir = t.require_column("asir_percent");
  int c_ext = t.require_column("extractor");
  int c_fam = t.require_column("feature_family");
  int c_name = t.require_column("feature_name");
  int c_val = t.require_column("value");

  FeatureTable out;
  out.rows.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    FeatureRow r;
    r.subject = row[c_subj];
    r.roi = parse_roi_name(row[c_roi]);
    r.thickness = parse_double(row[c_thick], "slice_thickness_mm");
    r.asir = parse_optional_double(row[c_asir], "asir_percent");
    r.extractor = row[c_ext];
    r.feature = feature_index(row[c_fam], row[c_name]);
    if (r.feature < 0)
      fail(ErrorKind::value, "unknown feature " + row[c_fam] + "." + row[c_name] + " in " + path);
    r.value = parse_optional_double(row[c_val], "feature value");
    out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace rrw
