#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bkan {

// Input file missing, unreadable, or schema-violating.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> features;  // row-major n_rows x n_cols, always finite
  std::vector<int> labels;       // 0/1
  std::vector<std::string> feature_names;

  std::span<const double> row(int i) const {
    return std::span<const double>(features)
        .subspan(static_cast<std::size_t>(i) * static_cast<std::size_t>(n_cols),
                 static_cast<std::size_t>(n_cols));
  }
  double at(int r, int c) const {
    return features[static_cast<std::size_t>(r) * static_cast<std::size_t>(n_cols) +
                    static_cast<std::size_t>(c)];
  }
  Dataset subset(std::span<const int> indices) const;
  int count_label(int v) const;
};

struct StandardizeStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population (divide by N)
};

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratified = true;
};

// Pima Indians Diabetes: 9 columns (8 features + outcome), header optional.
// Biologically impossible zeros in glucose, blood_pressure, skin_thickness,
// insulin and bmi are treated as missing and median-imputed.
Dataset load_pima(const std::string& path);

// Cleveland Heart Disease: 14 columns (13 features + num), '?' cells
// median-imputed, label = (num > 0).
Dataset load_heart(const std::string& path);

// Generic numeric CSV, last column a {0,1} label, header optional,
// '?' cells median-imputed.
Dataset load_csv(const std::string& path);

// Label-free feature rows for prediction; header optional, missing cells
// rejected (there is no training split to impute from).
struct FeatureMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> values;       // row-major
  std::vector<std::string> header;  // empty when absent
};
FeatureMatrix load_features(const std::string& path);

StandardizeStats standardize_fit(const Dataset& train);
Dataset standardize_apply(const StandardizeStats& stats, const Dataset& ds);

// Seeded per-class partition; |test| is the sum of per-class rounded
// counts, so class proportions are within one sample of exact.
std::pair<Dataset, Dataset> stratified_split(const Dataset& ds,
                                             const SplitSpec& spec);

}  // namespace bkan
