#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bkan/model.hpp"

namespace bkan {

// S Monte Carlo probabilities for one input; the computable stand-in for
// the posterior predictive integral.
struct PredictiveDistribution {
  std::vector<double> mc_probs;
  double mean_prob = 0.0;
};

// All entropies are in nats; for a binary output they are bounded by ln 2.
struct UncertaintyBreakdown {
  double total = 0.0;      // H(mean_prob)
  double aleatoric = 0.0;  // mean over samples of H(p_s)
  double epistemic = 0.0;  // total - aleatoric, clamped at 0
};

struct CredibleInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;
};

// S sample-mode predictions; sample s uses the rng substream derived from
// (seed, s), so results do not depend on evaluation order or parallelism.
PredictiveDistribution mc_predict(const BayesKanModel& m,
                                  std::span<const double> x, int S,
                                  std::uint64_t seed);

// Binary entropy in nats, 0 at p in {0, 1} by continuity.
double binary_entropy(double p);

UncertaintyBreakdown decompose(const PredictiveDistribution& pred);

// Nearest-rank empirical quantiles of mc_probs; both bounds are actual
// sample values. level = 1 gives [min, max].
CredibleInterval credible_interval(const PredictiveDistribution& pred,
                                   double level);

// Equal-width right-inclusive bins on [0, 1]; per bin compares the mean
// predicted probability with the observed positive frequency; empty bins
// are skipped.
double expected_calibration_error(std::span<const double> mean_probs,
                                  std::span<const int> labels, int bins);

}  // namespace bkan
