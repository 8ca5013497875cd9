#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rrw/features.hpp"
#include "rrw/volume_io.hpp"

namespace rrw {

// One extracted feature value in long format; the hinge between extraction
// and the statistics modules.
struct FeatureRow {
  std::string subject;
  RoiName roi = RoiName::tumor;
  double thickness = 0.0;
  std::optional<double> asir;
  std::string extractor;
  int feature = 0;  // registry index
  std::optional<double> value;

  auto key() const {
    return std::make_tuple(subject, static_cast<int>(roi), thickness, asir.value_or(-1.0),
                           extractor, feature);
  }
};

struct FeatureTable {
  std::vector<FeatureRow> rows;

  void sort_canonical();
  std::vector<std::string> extractors() const;  // sorted unique
};

void write_feature_table(const FeatureTable& t, const std::string& path);
FeatureTable read_feature_table(const std::string& path);

}  // namespace rrw
