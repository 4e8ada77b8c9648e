#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bkan/model.hpp"
#include "bkan/rng.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const char* kCli = BKAN_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("bkan_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { std::error_code ec; fs::remove_all(dir, ec); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

// 160-row, 3-feature synthetic classification CSV.
void write_synthetic_csv(const std::string& path, std::uint64_t seed) {
  bkan::Rng rng(seed);
  std::ofstream out(path);
  for (int i = 0; i < 160; ++i) {
    const int y = i % 2;
    const double base = y == 1 ? 0.8 : -0.8;
    out << base + 0.5 * rng.next_normal() << ',' << base + 0.5 * rng.next_normal()
        << ',' << rng.next_normal() << ',' << y << '\n';
  }
}

}  // namespace

TEST_CASE("train writes model, history and manifest") {
  Scratch s;
  write_synthetic_csv(s / "toy.csv", 1);
  const std::string out = s / "run1";
  REQUIRE(run("train --dataset csv --data " + (s / "toy.csv") + " --out " + out +
              " --seed 3 --epochs 20 --quiet") == 0);
  CHECK(fs::exists(out + "/model.json"));
  CHECK(fs::exists(out + "/history.csv"));
  CHECK(fs::exists(out + "/manifest.json"));

  const std::string hist = slurp(out + "/history.csv");
  CHECK(hist.rfind("epoch,train_loss,train_nll,train_kl,val_nll,val_acc\n", 0) == 0);
  CHECK(count_lines(hist) <= 21);  // header + at most --epochs rows

  // The model file parses and carries the input pipeline.
  const bkan::BayesKanModel m = bkan::BayesKanModel::load(out + "/model.json");
  CHECK(m.spec().input_dim == 3);
  CHECK(m.has_standardization());
  CHECK(m.feature_names.size() == 3);
}

TEST_CASE("train twice with the same seed is byte-identical") {
  Scratch s;
  write_synthetic_csv(s / "toy.csv", 2);
  REQUIRE(run("train --dataset csv --data " + (s / "toy.csv") + " --out " + (s / "a") +
              " --seed 11 --epochs 15 --quiet") == 0);
  REQUIRE(run("train --dataset csv --data " + (s / "toy.csv") + " --out " + (s / "b") +
              " --seed 11 --epochs 15 --quiet") == 0);
  CHECK(slurp(s / "a/model.json") == slurp(s / "b/model.json"));
  CHECK(slurp(s / "a/history.csv") == slurp(s / "b/history.csv"));
}

TEST_CASE("exit codes") {
  Scratch s;
  write_synthetic_csv(s / "toy.csv", 3);

  SUBCASE("unknown flag is a config error") {
    CHECK(run("train --no-such-flag") == 1);
  }

  SUBCASE("unknown config-file key is a config error and writes nothing") {
    std::ofstream(s / "bad.ini") << "no_such_key=1\n";
    CHECK(run("train --dataset csv --data " + (s / "toy.csv") + " --out " +
              (s / "never") + " --config " + (s / "bad.ini")) == 1);
    CHECK(!fs::exists(s / "never"));
  }

  SUBCASE("missing data file is a data error") {
    CHECK(run("train --dataset csv --data " + (s / "absent.csv") + " --out " +
              (s / "never2")) == 2);
    CHECK(!fs::exists(s / "never2"));
  }

  SUBCASE("bad config value is a config error") {
    CHECK(run("train --dataset csv --data " + (s / "toy.csv") + " --out " +
              (s / "never3") + " --val-fraction 0.9") == 1);
  }

  SUBCASE("curves with an out-of-range layer is a config error") {
    REQUIRE(run("train --dataset csv --data " + (s / "toy.csv") + " --out " +
                (s / "m") + " --seed 1 --epochs 5 --quiet") == 0);
    CHECK(run("curves --model " + (s / "m/model.json") + " --layer 9 --out " +
              (s / "c")) == 1);
  }
}

TEST_CASE("init-config writes a loadable default config") {
  Scratch s;
  write_synthetic_csv(s / "toy.csv", 4);
  REQUIRE(run("init-config --out " + (s / "bkan.ini")) == 0);
  const std::string ini = slurp(s / "bkan.ini");
  CHECK(ini.find("grid-size") != std::string::npos);
  CHECK(ini.find("epochs") != std::string::npos);
  CHECK(run("train --dataset csv --data " + (s / "toy.csv") + " --out " + (s / "r") +
            " --config " + (s / "bkan.ini") + " --epochs 5 --quiet") == 0);
}

TEST_CASE("predict") {
  Scratch s;
  write_synthetic_csv(s / "toy.csv", 5);
  REQUIRE(run("train --dataset csv --data " + (s / "toy.csv") + " --out " + (s / "m") +
              " --seed 2 --epochs 10 --quiet") == 0);

  SUBCASE("output has one row per input row, epistemic >= 0") {
    std::ofstream(s / "in.csv") << "0.5,0.5,0.1\n-0.5,-0.5,0.0\n1.0,0.9,-1.0\n";
    REQUIRE(run("predict --model " + (s / "m/model.json") + " --input " + (s / "in.csv") +
                " --out " + (s / "p") + " --mc-samples 50 --quiet") == 0);
    const std::string csv = slurp(s / "p/predictions.csv");
    CHECK(csv.rfind("index,mean_prob,ci_lo,ci_hi,total,aleatoric,epistemic,pred_class\n",
                    0) == 0);
    CHECK(count_lines(csv) == 4);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      double idx, mean, lo, hi, tot, ale, epi;
      int cls;
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%d", &idx, &mean,
                          &lo, &hi, &tot, &ale, &epi, &cls) == 8);
      CHECK(epi >= 0.0);
      CHECK(lo <= mean + 1e-12);
      CHECK(hi >= mean - 1e-12);
      CHECK((cls == 0 || cls == 1));
      CHECK(cls == (mean >= 0.5 ? 1 : 0));
    }
  }

  SUBCASE("sigma-floored model degenerates the interval") {
    bkan::BayesKanModel m = bkan::BayesKanModel::load(s / "m/model.json");
    m.freeze_sigmas();
    m.save(s / "frozen.json");
    std::ofstream(s / "in.csv") << "0.2,0.2,0.2\n";
    REQUIRE(run("predict --model " + (s / "frozen.json") + " --input " + (s / "in.csv") +
                " --out " + (s / "pf") + " --mc-samples 20 --quiet") == 0);
    std::istringstream in(slurp(s / "pf/predictions.csv"));
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    double idx, mean, lo, hi, tot, ale, epi;
    int cls;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%d", &idx, &mean,
                        &lo, &hi, &tot, &ale, &epi, &cls) == 8);
    CHECK(lo == mean);
    CHECK(hi == mean);
    CHECK(epi == 0.0);
  }

  SUBCASE("column count mismatch is a data error") {
    std::ofstream(s / "bad.csv") << "0.5,0.5\n";
    CHECK(run("predict --model " + (s / "m/model.json") + " --input " + (s / "bad.csv") +
              " --out " + (s / "pb")) == 2);
  }
}

TEST_CASE("importance and curves") {
  Scratch s;
  write_synthetic_csv(s / "toy.csv", 6);
  REQUIRE(run("train --dataset csv --data " + (s / "toy.csv") + " --out " + (s / "m") +
              " --seed 7 --epochs 15 --quiet") == 0);

  REQUIRE(run("importance --model " + (s / "m/model.json") + " --dataset csv --data " +
              (s / "toy.csv") + " --out " + (s / "imp") + " --quiet") == 0);
  const std::string imp = slurp(s / "imp/importance.csv");
  CHECK(imp.rfind("rank,feature,score\n", 0) == 0);
  CHECK(count_lines(imp) == 4);  // header + one row per feature
  // Scores descending.
  std::istringstream in(imp);
  std::string line;
  std::getline(in, line);
  double prev = 1e300;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    const double score = std::stod(line.substr(pos + 1));
    CHECK(score <= prev);
    prev = score;
  }

  REQUIRE(run("curves --model " + (s / "m/model.json") +
              " --layer 0 --unit 1 --input-index 2 --points 41 --mc-samples 30 --out " +
              (s / "cv") + " --quiet") == 0);
  const std::string curve = slurp(s / "cv/curve_l0_o1_i2.csv");
  CHECK(curve.rfind("x,mean,lo,hi\n", 0) == 0);
  CHECK(count_lines(curve) == 42);
}

TEST_CASE("evaluate and compare") {
  Scratch s;
  write_synthetic_csv(s / "toy.csv", 8);
  REQUIRE(run("train --dataset csv --data " + (s / "toy.csv") + " --out " + (s / "m") +
              " --seed 4 --epochs 15 --quiet") == 0);
  REQUIRE(run("evaluate --model " + (s / "m/model.json") + " --dataset csv --data " +
              (s / "toy.csv") + " --seed 4 --mc-samples 40 --bootstrap 200 --out " +
              (s / "ev") + " --quiet") == 0);
  const std::string metrics = slurp(s / "ev/metrics.csv");
  CHECK(metrics.rfind("model,accuracy,f1,auc,acc_ci_lo,acc_ci_hi,f1_ci_lo,f1_ci_hi,"
                      "auc_ci_lo,auc_ci_hi\n", 0) == 0);
  CHECK(metrics.find("bayesian-kan") != std::string::npos);
  CHECK(fs::exists(s / "ev/uncertainty.csv"));

  const std::string compare_args =
      "compare --dataset csv --data " + (s / "toy.csv") +
      " --seeds 1 2 --epochs 10 --mc-samples 30 --bootstrap 100 --quiet --out ";
  REQUIRE(run(compare_args + (s / "cmp1")) == 0);
  REQUIRE(run(compare_args + (s / "cmp2")) == 0);
  const std::string cmp = slurp(s / "cmp1/comparison.csv");
  CHECK(count_lines(cmp) == 4);
  CHECK(cmp.find("bayesian-kan") != std::string::npos);
  CHECK(cmp.find("logistic-regression") != std::string::npos);
  CHECK(cmp.find("traditional-nn") != std::string::npos);
  CHECK(cmp == slurp(s / "cmp2/comparison.csv"));
  CHECK(slurp(s / "cmp1/comparison_per_seed.csv") ==
        slurp(s / "cmp2/comparison_per_seed.csv"));

  // All metric cells live in [0, 1].
  std::istringstream in(cmp);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // model name
    while (std::getline(row, cell, ',')) {
      const double v = std::stod(cell);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}
