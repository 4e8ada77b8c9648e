#include "bkan/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bkan {

PredictiveDistribution mc_predict(const BayesKanModel& m,
                                  std::span<const double> x, int S,
                                  std::uint64_t seed) {
  if (S < 1) throw std::invalid_argument("mc_predict: S must be >= 1");
  PredictiveDistribution pred;
  pred.mc_probs.resize(static_cast<std::size_t>(S));
  double sum = 0.0;
  for (int s = 0; s < S; ++s) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(s));
    const ParameterDraw draw = m.sample_draw(rng);
    const double p = m.predict_proba(x, draw);
    pred.mc_probs[static_cast<std::size_t>(s)] = p;
    sum += p;
  }
  pred.mean_prob = sum / static_cast<double>(S);
  return pred;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

UncertaintyBreakdown decompose(const PredictiveDistribution& pred) {
  if (pred.mc_probs.empty()) throw std::invalid_argument("decompose: no samples");
  UncertaintyBreakdown u;
  u.total = binary_entropy(pred.mean_prob);
  double acc = 0.0;
  for (double p : pred.mc_probs) acc += binary_entropy(p);
  u.aleatoric = acc / static_cast<double>(pred.mc_probs.size());
  // H is concave, so total >= aleatoric up to rounding; the clamp only
  // absorbs that rounding.
  u.epistemic = std::max(0.0, u.total - u.aleatoric);
  return u;
}

CredibleInterval credible_interval(const PredictiveDistribution& pred,
                                   double level) {
  if (!(level > 0.0 && level <= 1.0))
    throw std::invalid_argument("credible_interval: level must be in (0, 1]");
  if (pred.mc_probs.empty())
    throw std::invalid_argument("credible_interval: no samples");

  std::vector<double> sorted = pred.mc_probs;
  std::sort(sorted.begin(), sorted.end());
  const auto S = static_cast<double>(sorted.size());
  const auto rank = [&](double q) {
    // Nearest-rank: smallest r with r/S >= q, clamped to [1, S].
    const long r = static_cast<long>(std::ceil(q * S));
    return static_cast<std::size_t>(std::clamp<long>(r, 1, static_cast<long>(S))) - 1;
  };
  CredibleInterval ci;
  ci.level = level;
  ci.lo = sorted[rank((1.0 - level) / 2.0)];
  ci.hi = sorted[rank((1.0 + level) / 2.0)];
  return ci;
}

double expected_calibration_error(std::span<const double> mean_probs,
                                  std::span<const int> labels, int bins) {
  if (mean_probs.size() != labels.size())
    throw std::invalid_argument("expected_calibration_error: length mismatch");
  if (mean_probs.empty())
    throw std::invalid_argument("expected_calibration_error: empty input");
  if (bins < 1) throw std::invalid_argument("expected_calibration_error: bins must be >= 1");

  std::vector<double> conf(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> freq(static_cast<std::size_t>(bins), 0.0);
  std::vector<long> count(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < mean_probs.size(); ++i) {
    const double p = mean_probs[i];
    // Right-inclusive bins ((b-1)/B, b/B]; p = 0 lands in the first bin.
    int b = static_cast<int>(std::ceil(p * bins)) - 1;
    b = std::clamp(b, 0, bins - 1);
    conf[static_cast<std::size_t>(b)] += p;
    freq[static_cast<std::size_t>(b)] += labels[i] == 1 ? 1.0 : 0.0;
    ++count[static_cast<std::size_t>(b)];
  }
  double ece = 0.0;
  const double n = static_cast<double>(mean_probs.size());
  for (int b = 0; b < bins; ++b) {
    const auto idx = static_cast<std::size_t>(b);
    if (count[idx] == 0) continue;
    const double c = static_cast<double>(count[idx]);
    ece += (c / n) * std::abs(freq[idx] / c - conf[idx] / c);
  }
  return ece;
}

}  // namespace bkan
