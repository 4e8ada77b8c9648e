#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bkan/data.hpp"
#include "bkan/model.hpp"
#include "bkan/training.hpp"

namespace bkan {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

// Predicted positive iff prob >= threshold.
ConfusionCounts confusion(std::span<const double> probs,
                          std::span<const int> labels, double threshold = 0.5);

double accuracy(const ConfusionCounts& c);
// Harmonic mean of precision and recall; 0 by convention when tp == 0.
double f1_score(const ConfusionCounts& c);

// Mann-Whitney statistic: fraction of (positive, negative) pairs ranked
// correctly, ties counting one half. Computed from exact integer pair
// counts, so it equals the all-pairs definition bit for bit. Throws on
// single-class labels.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

enum class MetricKind { accuracy, f1, auc };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile (nearest-rank) bootstrap over B resamples with replacement.
// Resample r draws from the rng substream (seed, r), so results are
// order-independent. AUC resamples missing a class are redrawn up to 10
// times, then skipped.
Interval bootstrap_ci(MetricKind metric, std::span<const double> probs,
                      std::span<const int> labels, int B = 1000,
                      double level = 0.95, std::uint64_t seed = 0);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double predict_proba(std::span<const double> x) const;
};

// Full-batch gradient descent on the mean log-loss until the gradient
// max-norm drops below 1e-6 or the epoch cap. Deterministic.
LinearModel train_logreg(const Dataset& train, double lr = 0.5,
                         int max_epochs = 20000);

// Point-estimate MLP with the bayes-mlp preset widths/activations:
// same Adam and early-stopping machinery with the KL term off and every
// sigma frozen at zero, so it follows the exact trajectory a sigma-floored
// BKAN would under the same seed.
TrainResult train_mlp_baseline(const Dataset& train, TrainConfig config);

struct ImportanceEntry {
  std::string feature;
  double score = 0.0;
  int index = 0;
};

// First-layer attribution, descending, ties broken by feature index.
// KAN first layer: mean |edge output| over rows and output units in mean
// mode. Dense first layer: mean |weight mu| over output units.
std::vector<ImportanceEntry> feature_importance(const BayesKanModel& m,
                                                const Dataset& data);

struct CurvePoint {
  double x = 0.0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Edge function profile over the spline domain: mean-mode value plus a
// 95% credible band over S parameter draws per point.
std::vector<CurvePoint> export_spline_curve(const BayesKanModel& m, int layer,
                                            int out_idx, int in_idx,
                                            int n_points = 201, int S = 100,
                                            std::uint64_t seed = 0);

}  // namespace bkan
