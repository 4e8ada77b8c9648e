#include "bkan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "bkan/rng.hpp"

namespace bkan {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_number(const std::string& cell, double* out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + cell.size()) return false;
  *out = v;
  return true;
}

struct RawCsv {
  std::vector<std::vector<double>> rows;  // NaN marks a '?' cell
  std::vector<std::string> header;        // empty when absent
};

// Reads a comma-separated numeric table. '?' is the only recognized
// missing token. A non-numeric first row is taken as a header.
RawCsv read_numeric_csv(const std::string& path, int expected_cols) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  RawCsv out;
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");

    if (expected_cols > 0 && static_cast<int>(cells.size()) != expected_cols) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected " << expected_cols
          << " columns, found " << cells.size();
      throw DataError(msg.str());
    }

    std::vector<double> vals(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i] == "?") {
        vals[i] = kMissing;
      } else if (!parse_number(cells[i], &vals[i])) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      out.rows.push_back(std::move(vals));
    } else if (first) {
      out.header = cells;
    } else {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": non-numeric cell outside header";
      throw DataError(msg.str());
    }
    first = false;
  }
  if (out.rows.empty()) throw DataError("no data rows in " + path);
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Replaces NaN cells with the column median over non-missing values.
void impute_median(std::vector<std::vector<double>>& rows, int col) {
  std::vector<double> present;
  for (const auto& r : rows) {
    const double v = r[static_cast<std::size_t>(col)];
    if (!std::isnan(v)) present.push_back(v);
  }
  if (present.empty())
    throw DataError("column " + std::to_string(col) + " has no observed values");
  const double med = median_of(std::move(present));
  for (auto& r : rows) {
    double& v = r[static_cast<std::size_t>(col)];
    if (std::isnan(v)) v = med;
  }
}

Dataset assemble(std::vector<std::vector<double>>& rows,
                 std::vector<std::string> names, const std::string& origin) {
  const int d = static_cast<int>(names.size());
  for (int c = 0; c < d; ++c) impute_median(rows, c);

  Dataset ds;
  ds.n_rows = static_cast<int>(rows.size());
  ds.n_cols = d;
  ds.feature_names = std::move(names);
  ds.features.reserve(static_cast<std::size_t>(ds.n_rows) * static_cast<std::size_t>(d));
  ds.labels.reserve(static_cast<std::size_t>(ds.n_rows));
  for (const auto& r : rows) {
    for (int c = 0; c < d; ++c) {
      const double v = r[static_cast<std::size_t>(c)];
      if (!std::isfinite(v)) throw DataError(origin + ": non-finite feature value");
      ds.features.push_back(v);
    }
    const double lab = r[static_cast<std::size_t>(d)];
    if (std::isnan(lab)) throw DataError(origin + ": missing label");
    if (lab != 0.0 && lab != 1.0)
      throw DataError(origin + ": label outside {0,1}");
    ds.labels.push_back(lab == 1.0 ? 1 : 0);
  }
  return ds;
}

}  // namespace

Dataset Dataset::subset(std::span<const int> indices) const {
  Dataset out;
  out.n_rows = static_cast<int>(indices.size());
  out.n_cols = n_cols;
  out.feature_names = feature_names;
  out.features.reserve(indices.size() * static_cast<std::size_t>(n_cols));
  out.labels.reserve(indices.size());
  for (int i : indices) {
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

int Dataset::count_label(int v) const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), v));
}

Dataset load_pima(const std::string& path) {
  RawCsv raw = read_numeric_csv(path, 9);
  if (raw.rows.size() != 768)
    std::cerr << "warning: " << path << " has " << raw.rows.size()
              << " rows, the canonical Pima file has 768\n";

  // Zeros in these physiological columns are recording artifacts.
  for (int col : {1, 2, 3, 4, 5}) {
    for (auto& r : raw.rows) {
      double& v = r[static_cast<std::size_t>(col)];
      if (v == 0.0) v = kMissing;
    }
  }
  std::vector<std::string> names = {
      "pregnancies", "glucose",  "blood_pressure",    "skin_thickness",
      "insulin",     "bmi",      "diabetes_pedigree", "age"};
  return assemble(raw.rows, std::move(names), path);
}

Dataset load_heart(const std::string& path) {
  RawCsv raw = read_numeric_csv(path, 14);
  if (raw.rows.size() != 303)
    std::cerr << "warning: " << path << " has " << raw.rows.size()
              << " rows, the canonical Cleveland file has 303\n";

  // Binarize num (0..4) before assembling so the label check passes.
  for (auto& r : raw.rows) {
    double& num = r[13];
    if (!std::isnan(num)) num = num > 0.0 ? 1.0 : 0.0;
  }
  std::vector<std::string> names = {"age",     "sex",   "cp",    "trestbps",
                                    "chol",    "fbs",   "restecg", "thalach",
                                    "exang",   "oldpeak", "slope", "ca",
                                    "thal"};
  return assemble(raw.rows, std::move(names), path);
}

Dataset load_csv(const std::string& path) {
  RawCsv raw = read_numeric_csv(path, 0);
  const int cols = static_cast<int>(raw.rows.front().size());
  if (cols < 2) throw DataError(path + ": need at least one feature column and a label");
  for (const auto& r : raw.rows)
    if (static_cast<int>(r.size()) != cols)
      throw DataError(path + ": ragged rows");

  std::vector<std::string> names;
  if (!raw.header.empty() && static_cast<int>(raw.header.size()) == cols) {
    names.assign(raw.header.begin(), raw.header.end() - 1);
  } else {
    for (int c = 0; c < cols - 1; ++c) names.push_back("f" + std::to_string(c));
  }
  return assemble(raw.rows, std::move(names), path);
}

FeatureMatrix load_features(const std::string& path) {
  RawCsv raw = read_numeric_csv(path, 0);
  FeatureMatrix fm;
  fm.n_rows = static_cast<int>(raw.rows.size());
  fm.n_cols = static_cast<int>(raw.rows.front().size());
  fm.header = raw.header;
  fm.values.reserve(static_cast<std::size_t>(fm.n_rows) *
                    static_cast<std::size_t>(fm.n_cols));
  for (const auto& r : raw.rows) {
    if (static_cast<int>(r.size()) != fm.n_cols)
      throw DataError(path + ": ragged rows");
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (std::isnan(r[c])) {
        std::string col = c < fm.header.size() ? fm.header[c] : std::to_string(c);
        throw DataError(path + ": missing value in column " + col);
      }
      fm.values.push_back(r[c]);
    }
  }
  return fm;
}

StandardizeStats standardize_fit(const Dataset& train) {
  if (train.n_rows == 0) throw DataError("standardize_fit: empty dataset");
  StandardizeStats st;
  st.mean.assign(static_cast<std::size_t>(train.n_cols), 0.0);
  st.stddev.assign(static_cast<std::size_t>(train.n_cols), 0.0);
  for (int r = 0; r < train.n_rows; ++r)
    for (int c = 0; c < train.n_cols; ++c)
      st.mean[static_cast<std::size_t>(c)] += train.at(r, c);
  for (auto& m : st.mean) m /= train.n_rows;
  for (int r = 0; r < train.n_rows; ++r)
    for (int c = 0; c < train.n_cols; ++c) {
      const double d = train.at(r, c) - st.mean[static_cast<std::size_t>(c)];
      st.stddev[static_cast<std::size_t>(c)] += d * d;
    }
  for (auto& s : st.stddev) s = std::sqrt(s / train.n_rows);
  return st;
}

Dataset standardize_apply(const StandardizeStats& stats, const Dataset& ds) {
  if (static_cast<int>(stats.mean.size()) != ds.n_cols)
    throw DataError("standardize_apply: column count mismatch");
  Dataset out = ds;
  for (int r = 0; r < ds.n_rows; ++r)
    for (int c = 0; c < ds.n_cols; ++c) {
      const std::size_t idx =
          static_cast<std::size_t>(r) * static_cast<std::size_t>(ds.n_cols) +
          static_cast<std::size_t>(c);
      const double sd = stats.stddev[static_cast<std::size_t>(c)];
      out.features[idx] =
          sd < 1e-9 ? 0.0 : (ds.features[idx] - stats.mean[static_cast<std::size_t>(c)]) / sd;
    }
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds,
                                             const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw DataError("stratified_split: test_fraction must be in (0,1)");
  if (ds.n_rows < 2) throw DataError("stratified_split: need at least 2 rows");

  Rng rng = Rng::substream(spec.seed, 17);
  std::vector<int> test_idx;
  std::vector<int> train_idx;

  auto take = [&](std::vector<int>& pool) {
    // Fisher-Yates, then the first n_test entries become test rows.
    for (std::size_t i = pool.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
      std::swap(pool[i - 1], pool[j]);
    }
    const auto n_test = static_cast<std::size_t>(
        std::llround(spec.test_fraction * static_cast<double>(pool.size())));
    for (std::size_t i = 0; i < pool.size(); ++i)
      (i < n_test ? test_idx : train_idx).push_back(pool[i]);
  };

  if (spec.stratified) {
    std::vector<int> neg, pos;
    for (int i = 0; i < ds.n_rows; ++i)
      (ds.labels[static_cast<std::size_t>(i)] == 1 ? pos : neg).push_back(i);
    if (neg.empty() || pos.empty())
      throw DataError("stratified_split: both classes must be present");
    take(neg);
    take(pos);
  } else {
    std::vector<int> all(static_cast<std::size_t>(ds.n_rows));
    for (int i = 0; i < ds.n_rows; ++i) all[static_cast<std::size_t>(i)] = i;
    take(all);
  }

  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

}  // namespace bkan
