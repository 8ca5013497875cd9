#include "rrw/features.hpp"

#include <map>

namespace rrw {

namespace {

constexpr std::array<FeatureDef, kFeatureCount> kRegistry = {{
    // first order (18)
    {FeatureFamily::firstorder, "Energy"},
    {FeatureFamily::firstorder, "TotalEnergy"},
    {FeatureFamily::firstorder, "Entropy"},
    {FeatureFamily::firstorder, "Minimum"},
    {FeatureFamily::firstorder, "10Percentile"},
    {FeatureFamily::firstorder, "90Percentile"},
    {FeatureFamily::firstorder, "Maximum"},
    {FeatureFamily::firstorder, "Mean"},
    {FeatureFamily::firstorder, "Median"},
    {FeatureFamily::firstorder, "InterquartileRange"},
    {FeatureFamily::firstorder, "Range"},
    {FeatureFamily::firstorder, "MeanAbsoluteDeviation"},
    {FeatureFamily::firstorder, "RobustMeanAbsoluteDeviation"},
    {FeatureFamily::firstorder, "RootMeanSquared"},
    {FeatureFamily::firstorder, "Skewness"},
    {FeatureFamily::firstorder, "Kurtosis"},
    {FeatureFamily::firstorder, "Variance"},
    {FeatureFamily::firstorder, "Uniformity"},
    // GLCM (24)
    {FeatureFamily::glcm, "Autocorrelation"},
    {FeatureFamily::glcm, "ClusterProminence"},
    {FeatureFamily::glcm, "ClusterShade"},
    {FeatureFamily::glcm, "ClusterTendency"},
    {FeatureFamily::glcm, "Contrast"},
    {FeatureFamily::glcm, "Correlation"},
    {FeatureFamily::glcm, "DifferenceAverage"},
    {FeatureFamily::glcm, "DifferenceEntropy"},
    {FeatureFamily::glcm, "DifferenceVariance"},
    {FeatureFamily::glcm, "Id"},
    {FeatureFamily::glcm, "Idm"},
    {FeatureFamily::glcm, "Idmn"},
    {FeatureFamily::glcm, "Idn"},
    {FeatureFamily::glcm, "Imc1"},
    {FeatureFamily::glcm, "Imc2"},
    {FeatureFamily::glcm, "InverseVariance"},
    {FeatureFamily::glcm, "JointAverage"},
    {FeatureFamily::glcm, "JointEnergy"},
    {FeatureFamily::glcm, "JointEntropy"},
    {FeatureFamily::glcm, "MCC"},
    {FeatureFamily::glcm, "MaximumProbability"},
    {FeatureFamily::glcm, "SumAverage"},
    {FeatureFamily::glcm, "SumEntropy"},
    {FeatureFamily::glcm, "SumSquares"},
    // GLRLM (16)
    {FeatureFamily::glrlm, "GrayLevelNonUniformity"},
    {FeatureFamily::glrlm, "GrayLevelNonUniformityNormalized"},
    {FeatureFamily::glrlm, "GrayLevelVariance"},
    {FeatureFamily::glrlm, "HighGrayLevelRunEmphasis"},
    {FeatureFamily::glrlm, "LongRunEmphasis"},
    {FeatureFamily::glrlm, "LongRunHighGrayLevelEmphasis"},
    {FeatureFamily::glrlm, "LongRunLowGrayLevelEmphasis"},
    {FeatureFamily::glrlm, "LowGrayLevelRunEmphasis"},
    {FeatureFamily::glrlm, "RunEntropy"},
    {FeatureFamily::glrlm, "RunLengthNonUniformity"},
    {FeatureFamily::glrlm, "RunLengthNonUniformityNormalized"},
    {FeatureFamily::glrlm, "RunPercentage"},
    {FeatureFamily::glrlm, "RunVariance"},
    {FeatureFamily::glrlm, "ShortRunEmphasis"},
    {FeatureFamily::glrlm, "ShortRunHighGrayLevelEmphasis"},
    {FeatureFamily::glrlm, "ShortRunLowGrayLevelEmphasis"},
    // GLSZM (16)
    {FeatureFamily::glszm, "GrayLevelNonUniformity"},
    {FeatureFamily::glszm, "GrayLevelNonUniformityNormalized"},
    {FeatureFamily::glszm, "GrayLevelVariance"},
    {FeatureFamily::glszm, "HighGrayLevelZoneEmphasis"},
    {FeatureFamily::glszm, "LargeAreaEmphasis"},
    {FeatureFamily::glszm, "LargeAreaHighGrayLevelEmphasis"},
    {FeatureFamily::glszm, "LargeAreaLowGrayLevelEmphasis"},
    {FeatureFamily::glszm, "LowGrayLevelZoneEmphasis"},
    {FeatureFamily::glszm, "SizeZoneNonUniformity"},
    {FeatureFamily::glszm, "SizeZoneNonUniformityNormalized"},
    {FeatureFamily::glszm, "SmallAreaEmphasis"},
    {FeatureFamily::glszm, "SmallAreaHighGrayLevelEmphasis"},
    {FeatureFamily::glszm, "SmallAreaLowGrayLevelEmphasis"},
    {FeatureFamily::glszm, "ZoneEntropy"},
    {FeatureFamily::glszm, "ZonePercentage"},
    {FeatureFamily::glszm, "ZoneVariance"},
    // GLDM (14)
    {FeatureFamily::gldm, "DependenceEntropy"},
    {FeatureFamily::gldm, "DependenceNonUniformity"},
    {FeatureFamily::gldm, "DependenceNonUniformityNormalized"},
    {FeatureFamily::gldm, "DependenceVariance"},
    {FeatureFamily::gldm, "GrayLevelNonUniformity"},
    {FeatureFamily::gldm, "GrayLevelVariance"},
    {FeatureFamily::gldm, "HighGrayLevelEmphasis"},
    {FeatureFamily::gldm, "LargeDependenceEmphasis"},
    {FeatureFamily::gldm, "LargeDependenceHighGrayLevelEmphasis"},
    {FeatureFamily::gldm, "LargeDependenceLowGrayLevelEmphasis"},
    {FeatureFamily::gldm, "LowGrayLevelEmphasis"},
    {FeatureFamily::gldm, "SmallDependenceEmphasis"},
    {FeatureFamily::gldm, "SmallDependenceHighGrayLevelEmphasis"},
    {FeatureFamily::gldm, "SmallDependenceLowGrayLevelEmphasis"},
    // NGTDM (5)
    {FeatureFamily::ngtdm, "Busyness"},
    {FeatureFamily::ngtdm, "Coarseness"},
    {FeatureFamily::ngtdm, "Complexity"},
    {FeatureFamily::ngtdm, "Contrast"},
    {FeatureFamily::ngtdm, "Strength"},
}};

}  // namespace

const std::array<FeatureDef, kFeatureCount>& feature_registry() { return kRegistry; }

std::string family_str(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::firstorder: return "firstorder";
    case FeatureFamily::glcm: return "glcm";
    case FeatureFamily::glrlm: return "glrlm";
    case FeatureFamily::glszm: return "glszm";
    case FeatureFamily::gldm: return "gldm";
    default: return "ngtdm";
  }
}

FeatureFamily parse_family(const std::string& s) {
  if (s == "firstorder") return FeatureFamily::firstorder;
  if (s == "glcm") return FeatureFamily::glcm;
  if (s == "glrlm") return FeatureFamily::glrlm;
  if (s == "glszm") return FeatureFamily::glszm;
  if (s == "gldm") return FeatureFamily::gldm;
  if (s == "ngtdm") return FeatureFamily::ngtdm;
  fail(ErrorKind::value, "unknown feature family '" + s + "'");
}

int feature_index(const std::string& family, const std::string& name) {
  static const std::map<std::pair<std::string, std::string>, int> index = [] {
    std::map<std::pair<std::string, std::string>, int> m;
    for (int i = 0; i < kFeatureCount; ++i)
      m[{family_str(kRegistry[i].family), kRegistry[i].name}] = i;
    return m;
  }();
  auto it = index.find({family, name});
  return it == index.end() ? -1 : it->second;
}

std::pair<int, int> family_range(FeatureFamily f) {
  int first = -1, last = -1;
  for (int i = 0; i < kFeatureCount; ++i) {
    if (kRegistry[i].family == f) {
      if (first < 0) first = i;
      last = i + 1;
    }
  }
  return {first, last};
}

const std::vector<Offset>& directions_3d() {
  static const std::vector<Offset> dirs = [] {
    std::vector<Offset> v;
    // canonical: dz > 0, or dz == 0 with dy > 0, or (0, 0, +x)
    v.push_back({1, 0, 0});
    v.push_back({0, 1, 0});
    v.push_back({1, 1, 0});
    v.push_back({-1, 1, 0});
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) v.push_back({dx, dy, 1});
    return v;
  }();
  return dirs;
}

const std::vector<Offset>& directions_in_plane() {
  static const std::vector<Offset> dirs = {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {-1, 1, 0}};
  return dirs;
}

}  // namespace rrw
