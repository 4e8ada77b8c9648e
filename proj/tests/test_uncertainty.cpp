#include "bkan/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using namespace bkan;

namespace {

ModelSpec spec2() {
  ModelSpec s;
  s.input_dim = 2;
  s.layers = {{LayerKind::kan, 3, Activation::identity},
              {LayerKind::kan, 1, Activation::identity}};
  s.spline = {3, 2, -2.0, 2.0};
  return s;
}

PredictiveDistribution from_probs(std::vector<double> probs) {
  PredictiveDistribution p;
  p.mc_probs = std::move(probs);
  double sum = 0.0;
  for (double v : p.mc_probs) sum += v;
  p.mean_prob = sum / static_cast<double>(p.mc_probs.size());
  return p;
}

}  // namespace

TEST_CASE("mc_predict") {
  const BayesKanModel m = BayesKanModel::init(spec2(), 11);
  const std::vector<double> x = {0.4, -0.9};

  SUBCASE("S = 1 is a single sample-mode prediction") {
    const auto pred = mc_predict(m, x, 1, 5);
    REQUIRE(pred.mc_probs.size() == 1);
    CHECK(pred.mean_prob == pred.mc_probs[0]);
    Rng rng = Rng::substream(5, 0);
    CHECK(pred.mc_probs[0] == m.predict_proba(x, m.sample_draw(rng)));
  }

  SUBCASE("sigma floored collapses to the mean-mode probability") {
    BayesKanModel f = BayesKanModel::init(spec2(), 11);
    f.freeze_sigmas();
    const auto pred = mc_predict(f, x, 32, 7);
    const double mean_mode = f.predict_proba(x, f.mean_draw());
    for (double p : pred.mc_probs) CHECK(p == mean_mode);
    CHECK(pred.mean_prob == doctest::Approx(mean_mode).epsilon(1e-15));
  }

  SUBCASE("deterministic and order-independent across samples") {
    const auto a = mc_predict(m, x, 100, 99);
    const auto b = mc_predict(m, x, 100, 99);
    CHECK(a.mc_probs == b.mc_probs);
    // Each sample is reproducible in isolation, so any evaluation order
    // (or parallel schedule) yields the same vector.
    for (int s = 99; s >= 0; --s) {
      Rng rng = Rng::substream(99, static_cast<std::uint64_t>(s));
      CHECK(m.predict_proba(x, m.sample_draw(rng)) ==
            a.mc_probs[static_cast<std::size_t>(s)]);
    }
  }

  SUBCASE("mean_prob is the arithmetic mean") {
    const auto pred = mc_predict(m, x, 33, 3);
    double sum = 0.0;
    for (double p : pred.mc_probs) sum += p;
    CHECK(std::abs(pred.mean_prob - sum / 33.0) <= 1e-15);
  }
}

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.2) == doctest::Approx(0.500402).epsilon(1e-5));
}

TEST_CASE("decompose") {
  SUBCASE("identical samples give exactly zero epistemic") {
    const auto u = decompose(from_probs({0.37, 0.37, 0.37, 0.37}));
    CHECK(u.epistemic == 0.0);
    CHECK(u.total == u.aleatoric);
  }

  SUBCASE("all samples at one half") {
    const auto u = decompose(from_probs(std::vector<double>(10, 0.5)));
    CHECK(u.total == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(u.aleatoric == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(u.epistemic == 0.0);
  }

  SUBCASE("hand-computed {0.2, 0.8}") {
    const auto u = decompose(from_probs({0.2, 0.8}));
    CHECK(u.total == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(u.aleatoric == doctest::Approx(0.500402).epsilon(1e-6));
    CHECK(u.epistemic == doctest::Approx(0.192745).epsilon(1e-5));
    CHECK(std::abs(u.epistemic - 0.192745) <= 1e-6);
  }

  SUBCASE("identity holds on random vectors") {
    Rng rng(8);
    for (int rep = 0; rep < 10000; ++rep) {
      const int S = 1 + static_cast<int>(rng.next_below(12));
      std::vector<double> probs(static_cast<std::size_t>(S));
      for (auto& p : probs) p = std::clamp(rng.next_uniform(), 1e-7, 1.0 - 1e-7);
      const auto u = decompose(from_probs(std::move(probs)));
      CHECK(u.total - (u.aleatoric + u.epistemic) <= 1e-12);
      CHECK(u.total - (u.aleatoric + u.epistemic) >= -1e-12);
      CHECK(u.epistemic >= 0.0);
      CHECK(u.aleatoric >= 0.0);
      CHECK(u.total <= std::log(2.0) + 1e-12);
    }
  }

  SUBCASE("samples symmetric about one half have positive epistemic") {
    for (double d : {0.1, 0.2, 0.3, 0.45}) {
      const auto u = decompose(from_probs({0.5 - d, 0.5 + d}));
      CHECK(u.epistemic > 0.0);
    }
  }

  SUBCASE("shrinking every sigma cannot raise epistemic") {
    Rng seed_rng(21);
    for (int rep = 0; rep < 20; ++rep) {
      BayesKanModel wide = BayesKanModel::init(spec2(), 400 + static_cast<std::uint64_t>(rep));
      for (auto& p : wide.parameters()) p.rho = rho_for_sigma(0.3);
      BayesKanModel narrow = wide;
      for (auto& p : narrow.parameters()) p.rho = rho_for_sigma(0.03);
      const std::vector<double> x = {seed_rng.next_uniform(-2, 2),
                                     seed_rng.next_uniform(-2, 2)};
      const double e_wide = decompose(mc_predict(wide, x, 64, 5)).epistemic;
      const double e_narrow = decompose(mc_predict(narrow, x, 64, 5)).epistemic;
      CHECK(e_narrow <= e_wide + 1e-9);
    }
  }
}

TEST_CASE("credible_interval") {
  SUBCASE("nearest-rank worked example") {
    std::vector<double> probs(100);
    for (int i = 0; i < 100; ++i) probs[static_cast<std::size_t>(i)] = (i + 1) / 100.0;
    const auto ci = credible_interval(from_probs(std::move(probs)), 0.95);
    CHECK(ci.lo == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(ci.hi == doctest::Approx(0.98).epsilon(1e-12));
  }

  SUBCASE("degenerate samples") {
    const auto ci = credible_interval(from_probs({0.42, 0.42, 0.42}), 0.9);
    CHECK(ci.lo == 0.42);
    CHECK(ci.hi == 0.42);
  }

  SUBCASE("level 1 gives the full range") {
    const auto ci = credible_interval(from_probs({0.9, 0.1, 0.5, 0.3}), 1.0);
    CHECK(ci.lo == 0.1);
    CHECK(ci.hi == 0.9);
  }

  SUBCASE("bounds are sample values and widening never narrows") {
    Rng rng(77);
    for (int rep = 0; rep < 500; ++rep) {
      const int S = 1 + static_cast<int>(rng.next_below(40));
      std::vector<double> probs(static_cast<std::size_t>(S));
      for (auto& p : probs) p = rng.next_uniform();
      const auto pd = from_probs(probs);
      double prev_lo = 1.0, prev_hi = 0.0;
      bool first = true;
      for (double level : {0.5, 0.8, 0.9, 0.95, 1.0}) {
        const auto ci = credible_interval(pd, level);
        CHECK(ci.lo <= ci.hi);
        CHECK(std::count(probs.begin(), probs.end(), ci.lo) > 0);
        CHECK(std::count(probs.begin(), probs.end(), ci.hi) > 0);
        if (!first) {
          CHECK(ci.lo <= prev_lo);
          CHECK(ci.hi >= prev_hi);
        }
        prev_lo = ci.lo;
        prev_hi = ci.hi;
        first = false;
      }
    }
  }

  SUBCASE("rejects bad levels") {
    CHECK_THROWS_AS(credible_interval(from_probs({0.5}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(credible_interval(from_probs({0.5}), 1.5), std::invalid_argument);
  }
}

TEST_CASE("expected_calibration_error") {
  SUBCASE("confident and correct is perfectly calibrated") {
    const std::vector<double> p(8, 1.0);
    const std::vector<int> y(8, 1);
    CHECK(expected_calibration_error(p, y, 10) == 0.0);
  }

  SUBCASE("0.9 bin with 9 of 10 positive") {
    const std::vector<double> p(10, 0.9);
    std::vector<int> y(10, 1);
    y[0] = 0;
    CHECK(expected_calibration_error(p, y, 10) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("0.9 bin with 5 of 10 positive, single bin") {
    const std::vector<double> p(10, 0.9);
    std::vector<int> y(10, 0);
    for (int i = 0; i < 5; ++i) y[static_cast<std::size_t>(i)] = 1;
    CHECK(expected_calibration_error(p, y, 1) == doctest::Approx(0.4).epsilon(1e-12));
  }

  SUBCASE("rejects bad input") {
    CHECK_THROWS_AS(expected_calibration_error(std::vector<double>{0.5},
                                               std::vector<int>{1, 0}, 10),
                    std::invalid_argument);
    CHECK_THROWS_AS(expected_calibration_error(std::vector<double>{0.5},
                                               std::vector<int>{1}, 0),
                    std::invalid_argument);
  }
}
