#include "bkan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bkan/uncertainty.hpp"

namespace bkan {

ConfusionCounts confusion(std::span<const double> probs,
                          std::span<const int> labels, double threshold) {
  if (probs.size() != labels.size())
    throw std::invalid_argument("confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (pred && actual) ++c.tp;
    else if (pred && !actual) ++c.fp;
    else if (!pred && actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double f1_score(const ConfusionCounts& c) {
  if (c.tp == 0) return 0.0;
  const double p = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double r = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return 2.0 * p * r / (p + r);
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc_roc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::uint64_t wins = 0;  // positive strictly above negative
  std::uint64_t ties = 0;  // equal scores across classes
  std::uint64_t neg_below = 0;
  std::uint64_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::uint64_t group_pos = 0, group_neg = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) ++group_pos; else ++group_neg;
      ++j;
    }
    wins += group_pos * neg_below;
    ties += group_pos * group_neg;
    neg_below += group_neg;
    n_pos += group_pos;
    n_neg += group_neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc_roc: needs both classes");
  return (2.0 * static_cast<double>(wins) + static_cast<double>(ties)) /
         (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

double metric_value(MetricKind metric, std::span<const double> probs,
                    std::span<const int> labels) {
  switch (metric) {
    case MetricKind::accuracy: return accuracy(confusion(probs, labels));
    case MetricKind::f1: return f1_score(confusion(probs, labels));
    case MetricKind::auc: return auc_roc(probs, labels);
  }
  return 0.0;
}

}  // namespace

Interval bootstrap_ci(MetricKind metric, std::span<const double> probs,
                      std::span<const int> labels, int B, double level,
                      std::uint64_t seed) {
  if (probs.size() != labels.size())
    throw std::invalid_argument("bootstrap_ci: length mismatch");
  if (probs.size() < 2) throw std::invalid_argument("bootstrap_ci: need N >= 2");
  if (B < 1) throw std::invalid_argument("bootstrap_ci: B must be >= 1");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("bootstrap_ci: level must be in (0, 1)");
  if (metric == MetricKind::auc) {
    // Fail fast on data where no resample can ever work.
    (void)auc_roc(probs, labels);
  }

  const std::size_t n = probs.size();
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(B));
  std::vector<double> rp(n);
  std::vector<int> rl(n);

  for (int b = 0; b < B; ++b) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(b));
    bool ok = false;
    for (int attempt = 0; attempt < 11 && !ok; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto pick = static_cast<std::size_t>(rng.next_below(n));
        rp[i] = probs[pick];
        rl[i] = labels[pick];
      }
      if (metric == MetricKind::auc) {
        const long pos = std::count(rl.begin(), rl.end(), 1);
        ok = pos > 0 && pos < static_cast<long>(n);
      } else {
        ok = true;
      }
    }
    if (ok) values.push_back(metric_value(metric, rp, rl));
  }
  if (values.empty())
    throw std::invalid_argument("bootstrap_ci: every resample was degenerate");

  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  const auto rank = [&](double q) {
    const long r = static_cast<long>(std::ceil(q * m));
    return static_cast<std::size_t>(std::clamp<long>(r, 1, static_cast<long>(m))) - 1;
  };
  return {values[rank((1.0 - level) / 2.0)], values[rank((1.0 + level) / 2.0)]};
}

double LinearModel::predict_proba(std::span<const double> x) const {
  double z = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * x[i];
  return sigmoid_clamped(z);
}

LinearModel train_logreg(const Dataset& train, double lr, int max_epochs) {
  if (train.n_rows == 0) throw DataError("train_logreg: empty dataset");
  if (train.count_label(0) == 0 || train.count_label(1) == 0)
    throw DataError("train_logreg: needs both classes");

  const int d = train.n_cols;
  LinearModel model;
  model.weights.assign(static_cast<std::size_t>(d), 0.0);
  std::vector<double> gw(static_cast<std::size_t>(d));

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (int r = 0; r < train.n_rows; ++r) {
      const auto row = train.row(r);
      double z = model.bias;
      for (int c = 0; c < d; ++c)
        z += model.weights[static_cast<std::size_t>(c)] * row[static_cast<std::size_t>(c)];
      const double err = logistic(z) - static_cast<double>(train.labels[static_cast<std::size_t>(r)]);
      for (int c = 0; c < d; ++c) gw[static_cast<std::size_t>(c)] += err * row[static_cast<std::size_t>(c)];
      gb += err;
    }
    double max_abs = std::abs(gb);
    for (int c = 0; c < d; ++c) {
      gw[static_cast<std::size_t>(c)] /= train.n_rows;
      max_abs = std::max(max_abs, std::abs(gw[static_cast<std::size_t>(c)]));
    }
    gb /= train.n_rows;
    max_abs = std::max(max_abs, std::abs(gb));
    if (max_abs < 1e-6) break;
    for (int c = 0; c < d; ++c)
      model.weights[static_cast<std::size_t>(c)] -= lr * gw[static_cast<std::size_t>(c)];
    model.bias -= lr * gb;
  }
  return model;
}

TrainResult train_mlp_baseline(const Dataset& train, TrainConfig config) {
  config.kl_enabled = false;
  config.freeze_sigma = true;
  return bkan::train(ModelSpec::bayes_mlp_default(train.n_cols), train, config);
}

std::vector<ImportanceEntry> feature_importance(const BayesKanModel& m,
                                                const Dataset& data) {
  if (data.n_rows == 0) throw DataError("feature_importance: empty dataset");
  if (data.n_cols != m.spec().input_dim)
    throw std::invalid_argument("feature_importance: dataset does not match model input dim");

  const auto& first = m.layers().front();
  std::vector<double> scores(static_cast<std::size_t>(first.in_dim), 0.0);
  if (first.kind == LayerKind::kan) {
    const ParameterDraw mean = m.mean_draw();
    for (int r = 0; r < data.n_rows; ++r) {
      const auto row = data.row(r);
      for (int i = 0; i < first.in_dim; ++i)
        for (int j = 0; j < first.out_dim; ++j)
          scores[static_cast<std::size_t>(i)] +=
              std::abs(edge_eval(m, 0, j, i, row[static_cast<std::size_t>(i)], mean));
    }
    const double denom = static_cast<double>(data.n_rows) *
                         static_cast<double>(first.out_dim);
    for (auto& s : scores) s /= denom;
  } else {
    for (int i = 0; i < first.in_dim; ++i) {
      for (int j = 0; j < first.out_dim; ++j)
        scores[static_cast<std::size_t>(i)] +=
            std::abs(m.parameters()[m.dense_weight_index(0, j, i)].mu);
      scores[static_cast<std::size_t>(i)] /= static_cast<double>(first.out_dim);
    }
  }

  std::vector<ImportanceEntry> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i].index = static_cast<int>(i);
    out[i].score = scores[i];
    out[i].feature = i < data.feature_names.size() ? data.feature_names[i]
                                                   : "f" + std::to_string(i);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.score > b.score;
                   });
  return out;
}

std::vector<CurvePoint> export_spline_curve(const BayesKanModel& m, int layer,
                                            int out_idx, int in_idx,
                                            int n_points, int S,
                                            std::uint64_t seed) {
  if (layer < 0 || layer >= static_cast<int>(m.layers().size()))
    throw std::out_of_range("export_spline_curve: layer index out of range");
  const auto& lay = m.layers()[static_cast<std::size_t>(layer)];
  if (lay.kind != LayerKind::kan)
    throw std::invalid_argument("export_spline_curve: not a KAN layer");
  if (out_idx < 0 || out_idx >= lay.out_dim || in_idx < 0 || in_idx >= lay.in_dim)
    throw std::out_of_range("export_spline_curve: edge index out of range");
  if (n_points < 2 || S < 1)
    throw std::invalid_argument("export_spline_curve: need n_points >= 2 and S >= 1");

  const double lo = m.knots().domain_min;
  const double hi = m.knots().domain_max;
  const ParameterDraw mean = m.mean_draw();
  std::vector<ParameterDraw> draws;
  draws.reserve(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(s));
    draws.push_back(m.sample_draw(rng));
  }

  std::vector<CurvePoint> curve(static_cast<std::size_t>(n_points));
  PredictiveDistribution band;
  band.mc_probs.resize(static_cast<std::size_t>(S));
  for (int p = 0; p < n_points; ++p) {
    const double x = lo + (hi - lo) * static_cast<double>(p) /
                              static_cast<double>(n_points - 1);
    auto& cp = curve[static_cast<std::size_t>(p)];
    cp.x = x;
    cp.mean = edge_eval(m, layer, out_idx, in_idx, x, mean);
    for (int s = 0; s < S; ++s)
      band.mc_probs[static_cast<std::size_t>(s)] =
          edge_eval(m, layer, out_idx, in_idx, x, draws[static_cast<std::size_t>(s)]);
    const CredibleInterval ci = credible_interval(band, 0.95);
    cp.lo = ci.lo;
    cp.hi = ci.hi;
  }
  return curve;
}

}  // namespace bkan
