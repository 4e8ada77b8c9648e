#include "bkan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"

using namespace bkan;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name, const std::string& content) {
    path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::error_code ec; fs::remove(path, ec); }
};

std::string data_dir() {
#ifdef BKAN_SOURCE_DIR
  return std::string(BKAN_SOURCE_DIR) + "/data";
#else
  return "data";
#endif
}

}  // namespace

TEST_CASE("load_csv handles optional headers") {
  const std::string body = "1.0,2.0,0\n2.0,1.0,1\n-1.5,0.5,0\n";
  TempFile no_header("bkan_t1.csv", body);
  TempFile with_header("bkan_t2.csv", "alpha,beta,label\n" + body);

  const Dataset a = load_csv(no_header.path.string());
  CHECK(a.n_rows == 3);
  CHECK(a.n_cols == 2);
  CHECK(a.feature_names == std::vector<std::string>{"f0", "f1"});
  CHECK(a.labels == std::vector<int>{0, 1, 0});
  CHECK(a.at(2, 0) == -1.5);

  const Dataset b = load_csv(with_header.path.string());
  CHECK(b.n_rows == 3);
  CHECK(b.feature_names == std::vector<std::string>{"alpha", "beta"});
}

TEST_CASE("load_csv rejects bad files") {
  TempFile bad_cell("bkan_t3.csv", "1,2,0\n1,oops,1\n");
  CHECK_THROWS_AS(load_csv(bad_cell.path.string()), DataError);

  TempFile bad_label("bkan_t4.csv", "1,2,0\n1,3,2\n");
  CHECK_THROWS_AS(load_csv(bad_label.path.string()), DataError);

  CHECK_THROWS_AS(load_csv("/nonexistent/bkan.csv"), DataError);

  TempFile missing_label("bkan_t5.csv", "1,2,0\n1,3,?\n");
  CHECK_THROWS_AS(load_csv(missing_label.path.string()), DataError);
}

TEST_CASE("load_csv imputes '?' with the column median") {
  TempFile f("bkan_t6.csv", "1,10,0\n?,20,1\n3,30,0\n5,?,1\n");
  const Dataset ds = load_csv(f.path.string());
  CHECK(ds.at(1, 0) == 3.0);   // median of {1,3,5}
  CHECK(ds.at(3, 1) == 20.0);  // median of {10,20,30}
  CHECK(ds.n_rows == 4);
  CHECK(ds.labels.size() == 4);
}

TEST_CASE("load_pima applies the zero-as-missing rule") {
  // Columns: preg, glucose, bp, skin, insulin, bmi, pedigree, age, outcome.
  const std::string body =
      "1,100,70,20,80,30.0,0.5,30,0\n"
      "2,0,72,0,0,31.0,0.6,40,1\n"
      "3,120,0,25,90,0,0.7,50,0\n"
      "0,140,80,30,100,33.5,0.8,60,1\n";
  TempFile f("bkan_t7.csv", body);
  const Dataset ds = load_pima(f.path.string());  // warns about row count
  REQUIRE(ds.n_rows == 4);
  REQUIRE(ds.n_cols == 8);
  CHECK(ds.feature_names[1] == "glucose");

  // Glucose zero in row 1 imputed with median of {100, 120, 140}.
  CHECK(ds.at(1, 1) == 120.0);
  // Blood pressure zero in row 2 imputed with median of {70, 72, 80}.
  CHECK(ds.at(2, 2) == 72.0);
  // BMI zero in row 2 imputed with median of {30, 31, 33.5}.
  CHECK(ds.at(2, 5) == 31.0);
  // Pregnancies keeps its zero.
  CHECK(ds.at(3, 0) == 0.0);
  for (double v : ds.features) CHECK(std::isfinite(v));
  for (int l : ds.labels) CHECK((l == 0 || l == 1));
}

TEST_CASE("load_pima rejects a wrong column count") {
  TempFile f("bkan_t8.csv", "1,2,3,0\n");
  CHECK_THROWS_AS(load_pima(f.path.string()), DataError);
}

TEST_CASE("load_heart binarizes num and imputes '?'") {
  const std::string body =
      "63,1,1,145,233,1,2,150,0,2.3,3,0,6,0\n"
      "67,1,4,160,286,0,2,108,1,1.5,2,3,3,2\n"
      "41,0,2,130,204,0,2,172,0,1.4,1,?,3,4\n"
      "56,1,3,120,236,0,0,178,0,0.8,1,0,?,1\n";
  TempFile f("bkan_t9.csv", body);
  const Dataset ds = load_heart(f.path.string());
  REQUIRE(ds.n_rows == 4);
  REQUIRE(ds.n_cols == 13);
  CHECK(ds.labels == std::vector<int>{0, 1, 1, 1});
  CHECK(ds.at(2, 11) == 0.0);  // ca '?': median of {0, 3, 0}
  CHECK(ds.at(3, 12) == 3.0);  // thal '?': median of {6, 3, 3}
  for (double v : ds.features) CHECK(std::isfinite(v));
}

TEST_CASE("standardize") {
  Dataset ds;
  ds.n_rows = 3;
  ds.n_cols = 2;
  ds.feature_names = {"a", "const"};
  ds.features = {1, 7, 2, 7, 3, 7};
  ds.labels = {0, 1, 0};

  const StandardizeStats st = standardize_fit(ds);
  CHECK(st.mean[0] == 2.0);
  CHECK(st.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));

  const Dataset out = standardize_apply(st, ds);
  CHECK(out.at(0, 0) == doctest::Approx(-1.224745).epsilon(1e-6));
  CHECK(out.at(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.at(2, 0) == doctest::Approx(1.224745).epsilon(1e-6));
  // Constant column maps to zeros.
  for (int r = 0; r < 3; ++r) CHECK(out.at(r, 1) == 0.0);

  SUBCASE("train columns are centered and unit scale after applying") {
    for (int c = 0; c < 1; ++c) {
      double mean = 0, var = 0;
      for (int r = 0; r < 3; ++r) mean += out.at(r, c);
      mean /= 3;
      for (int r = 0; r < 3; ++r) var += (out.at(r, c) - mean) * (out.at(r, c) - mean);
      var /= 3;
      CHECK(std::abs(mean) <= 1e-12);
      CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-12);
    }
  }

  SUBCASE("labels and rows are untouched") {
    CHECK(out.labels == ds.labels);
    CHECK(out.n_rows == ds.n_rows);
  }
}

TEST_CASE("stratified_split") {
  Dataset ds;
  ds.n_rows = 100;
  ds.n_cols = 1;
  ds.feature_names = {"x"};
  for (int i = 0; i < 100; ++i) {
    ds.features.push_back(static_cast<double>(i));
    ds.labels.push_back(i < 30 ? 1 : 0);
  }

  SUBCASE("per-class proportions within one sample") {
    const auto [train, test] = stratified_split(ds, {0.2, 7, true});
    CHECK(test.n_rows == 20);
    CHECK(train.n_rows == 80);
    CHECK(test.count_label(1) == 6);   // round(30 * 0.2)
    CHECK(test.count_label(0) == 14);  // round(70 * 0.2)
  }

  SUBCASE("same seed gives the identical partition") {
    const auto [tr1, te1] = stratified_split(ds, {0.25, 3, true});
    const auto [tr2, te2] = stratified_split(ds, {0.25, 3, true});
    CHECK(te1.features == te2.features);
    CHECK(tr1.features == tr2.features);
  }

  SUBCASE("round-trip recovers every row exactly once") {
    const auto [train, test] = stratified_split(ds, {0.3, 11, true});
    std::map<double, int> seen;
    for (int r = 0; r < train.n_rows; ++r) seen[train.at(r, 0)]++;
    for (int r = 0; r < test.n_rows; ++r) seen[test.at(r, 0)]++;
    CHECK(seen.size() == 100);
    for (const auto& [k, v] : seen) {
      (void)k;
      CHECK(v == 1);
    }
  }

  SUBCASE("single-class stratified split rejected") {
    Dataset mono = ds;
    for (auto& l : mono.labels) l = 0;
    CHECK_THROWS_AS(stratified_split(mono, {0.2, 1, true}), DataError);
  }
}

TEST_CASE("load_features") {
  TempFile f("bkan_t10.csv", "a,b\n1,2\n3,4\n");
  const FeatureMatrix fm = load_features(f.path.string());
  CHECK(fm.n_rows == 2);
  CHECK(fm.n_cols == 2);
  CHECK(fm.header == std::vector<std::string>{"a", "b"});
  CHECK(fm.values == std::vector<double>{1, 2, 3, 4});

  TempFile g("bkan_t11.csv", "1,?\n");
  CHECK_THROWS_AS(load_features(g.path.string()), DataError);
}

// The canonical files, when fetched (see tools/fetch_data.sh).
TEST_CASE("canonical pima file") {
  const std::string path = data_dir() + "/pima.csv";
  if (!fs::exists(path)) {
    MESSAGE("[ SKIP ] ", path, " not present; run tools/fetch_data.sh");
    return;
  }
  const Dataset ds = load_pima(path);
  CHECK(ds.n_rows == 768);
  CHECK(ds.n_cols == 8);
  CHECK(ds.count_label(1) == 268);
  int glucose_zeros = 0;
  for (int r = 0; r < ds.n_rows; ++r)
    if (ds.at(r, 1) == 0.0) ++glucose_zeros;
  CHECK(glucose_zeros == 0);
  for (double v : ds.features) CHECK(std::isfinite(v));
}

TEST_CASE("canonical cleveland file") {
  const std::string path = data_dir() + "/cleveland.csv";
  if (!fs::exists(path)) {
    MESSAGE("[ SKIP ] ", path, " not present; run tools/fetch_data.sh");
    return;
  }
  const Dataset ds = load_heart(path);
  CHECK(ds.n_rows == 303);
  CHECK(ds.n_cols == 13);
  CHECK(ds.count_label(1) == 139);
  for (double v : ds.features) CHECK(std::isfinite(v));
}
