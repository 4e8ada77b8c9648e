#include "bkan/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "bkan/common.hpp"

namespace bkan {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (mc_train_samples < 1) throw std::invalid_argument("TrainConfig: mc_train_samples must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5))
    throw std::invalid_argument("TrainConfig: validation_fraction must be in (0, 0.5)");
  if (min_delta < 0.0) throw std::invalid_argument("TrainConfig: min_delta must be >= 0");
  if (grad_clip < 0.0) throw std::invalid_argument("TrainConfig: grad_clip must be >= 0");
  if (freeze_sigma && kl_enabled)
    throw std::invalid_argument("TrainConfig: freeze_sigma requires kl_enabled = false");
}

double nll_bernoulli(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size())
    throw std::invalid_argument("nll_bernoulli: length mismatch");
  if (probs.empty()) throw std::invalid_argument("nll_bernoulli: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    acc -= labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return acc / static_cast<double>(probs.size());
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: length mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]) || !std::isfinite(params[i]))
      throw TrainingDivergence("adam_step: non-finite input at index " +
                               std::to_string(i));
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,train_nll,train_kl,val_nll,val_acc\n";
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const auto& r = epochs[e];
    out << e + 1 << ',' << fmt_double(r.train_loss) << ','
        << fmt_double(r.train_nll) << ',' << fmt_double(r.train_kl) << ','
        << fmt_double(r.val_nll) << ',' << fmt_double(r.val_acc) << '\n';
  }
}

namespace {

// Per-example forward pass bookkeeping reused across a batch.
struct LayerTrace {
  std::vector<double> input;
  std::vector<double> pre;    // dense pre-activations
  std::vector<double> basis;  // kan: in_dim x n_basis values
};

struct Workspace {
  std::vector<LayerTrace> traces;
  std::vector<double> out;
  std::vector<double> g_cur;
  std::vector<double> g_prev;
  std::vector<double> deriv;  // scratch for basis derivatives
};

double forward_traced(const BayesKanModel& m, std::span<const double> x,
                      const ParameterDraw& draw, Workspace& ws) {
  const auto& layers = m.layers();
  ws.traces.resize(layers.size());
  const int n_basis = m.knots().basis_count();

  std::vector<double>* cur = &ws.out;
  cur->assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lay = layers[l];
    auto& tr = ws.traces[l];
    tr.input = *cur;
    std::vector<double> next(static_cast<std::size_t>(lay.out_dim));
    if (lay.kind == LayerKind::kan) {
      tr.basis.resize(static_cast<std::size_t>(lay.in_dim) *
                      static_cast<std::size_t>(n_basis));
      for (int i = 0; i < lay.in_dim; ++i)
        basis_values(m.knots(), tr.input[static_cast<std::size_t>(i)],
                     std::span<double>(tr.basis)
                         .subspan(static_cast<std::size_t>(i) *
                                      static_cast<std::size_t>(n_basis),
                                  static_cast<std::size_t>(n_basis)));
      for (int j = 0; j < lay.out_dim; ++j) {
        double acc = draw.value[lay.bias_offset + static_cast<std::size_t>(j)];
        std::size_t p = lay.offset + static_cast<std::size_t>(j) *
                                         static_cast<std::size_t>(lay.in_dim) *
                                         lay.edge_stride;
        for (int i = 0; i < lay.in_dim; ++i, p += lay.edge_stride) {
          const double xi = tr.input[static_cast<std::size_t>(i)];
          acc += draw.value[p] * (xi > 0.0 ? xi : 0.0);
          const double* b = tr.basis.data() + static_cast<std::size_t>(i) *
                                                  static_cast<std::size_t>(n_basis);
          for (int k = 0; k < n_basis; ++k)
            acc += draw.value[p + 1 + static_cast<std::size_t>(k)] * b[k];
        }
        next[static_cast<std::size_t>(j)] = acc;
      }
    } else {
      tr.pre.resize(static_cast<std::size_t>(lay.out_dim));
      for (int j = 0; j < lay.out_dim; ++j) {
        double acc = draw.value[lay.bias_offset + static_cast<std::size_t>(j)];
        const std::size_t p = lay.offset + static_cast<std::size_t>(j) *
                                               static_cast<std::size_t>(lay.in_dim);
        for (int i = 0; i < lay.in_dim; ++i)
          acc += draw.value[p + static_cast<std::size_t>(i)] *
                 tr.input[static_cast<std::size_t>(i)];
        tr.pre[static_cast<std::size_t>(j)] = acc;
        next[static_cast<std::size_t>(j)] = apply_activation(lay.activation, acc);
      }
    }
    for (double v : next)
      if (!std::isfinite(v))
        throw TrainingDivergence("non-finite activation after layer " +
                                 std::to_string(l));
    *cur = std::move(next);
  }
  return (*cur)[0];
}

// Accumulates d(loss)/d(theta) for one example into dtheta, starting from
// d(loss)/d(logit) = g_logit.
void backward_traced(const BayesKanModel& m, const ParameterDraw& draw,
                     Workspace& ws, double g_logit,
                     std::vector<double>& dtheta) {
  const auto& layers = m.layers();
  const int n_basis = m.knots().basis_count();
  ws.g_cur.assign(1, g_logit);

  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const auto& lay = layers[static_cast<std::size_t>(l)];
    auto& tr = ws.traces[static_cast<std::size_t>(l)];
    const bool need_input_grad = l > 0;
    if (need_input_grad)
      ws.g_prev.assign(static_cast<std::size_t>(lay.in_dim), 0.0);

    if (lay.kind == LayerKind::kan) {
      if (need_input_grad) {
        ws.deriv.resize(static_cast<std::size_t>(lay.in_dim) *
                        static_cast<std::size_t>(n_basis));
        for (int i = 0; i < lay.in_dim; ++i)
          basis_derivatives(m.knots(), tr.input[static_cast<std::size_t>(i)],
                            std::span<double>(ws.deriv)
                                .subspan(static_cast<std::size_t>(i) *
                                             static_cast<std::size_t>(n_basis),
                                         static_cast<std::size_t>(n_basis)));
      }
      for (int j = 0; j < lay.out_dim; ++j) {
        const double gj = ws.g_cur[static_cast<std::size_t>(j)];
        if (gj == 0.0) continue;
        dtheta[lay.bias_offset + static_cast<std::size_t>(j)] += gj;
        std::size_t p = lay.offset + static_cast<std::size_t>(j) *
                                         static_cast<std::size_t>(lay.in_dim) *
                                         lay.edge_stride;
        for (int i = 0; i < lay.in_dim; ++i, p += lay.edge_stride) {
          const double xi = tr.input[static_cast<std::size_t>(i)];
          dtheta[p] += gj * (xi > 0.0 ? xi : 0.0);
          const double* b = tr.basis.data() + static_cast<std::size_t>(i) *
                                                  static_cast<std::size_t>(n_basis);
          for (int k = 0; k < n_basis; ++k)
            dtheta[p + 1 + static_cast<std::size_t>(k)] += gj * b[k];
          if (need_input_grad) {
            double dx = draw.value[p] * (xi > 0.0 ? 1.0 : 0.0);
            const double* bd = ws.deriv.data() +
                               static_cast<std::size_t>(i) *
                                   static_cast<std::size_t>(n_basis);
            for (int k = 0; k < n_basis; ++k)
              dx += draw.value[p + 1 + static_cast<std::size_t>(k)] * bd[k];
            ws.g_prev[static_cast<std::size_t>(i)] += gj * dx;
          }
        }
      }
    } else {
      for (int j = 0; j < lay.out_dim; ++j) {
        const double gpre =
            ws.g_cur[static_cast<std::size_t>(j)] *
            activation_derivative(lay.activation, tr.pre[static_cast<std::size_t>(j)]);
        if (gpre == 0.0) continue;
        dtheta[lay.bias_offset + static_cast<std::size_t>(j)] += gpre;
        const std::size_t p = lay.offset + static_cast<std::size_t>(j) *
                                               static_cast<std::size_t>(lay.in_dim);
        for (int i = 0; i < lay.in_dim; ++i) {
          dtheta[p + static_cast<std::size_t>(i)] +=
              gpre * tr.input[static_cast<std::size_t>(i)];
          if (need_input_grad)
            ws.g_prev[static_cast<std::size_t>(i)] +=
                gpre * draw.value[p + static_cast<std::size_t>(i)];
        }
      }
    }
    if (need_input_grad) ws.g_cur.swap(ws.g_prev);
  }
}

std::vector<std::vector<double>> make_eps_draws(const BayesKanModel& m,
                                                int mc_samples, Rng& rng) {
  std::vector<std::vector<double>> draws(static_cast<std::size_t>(mc_samples));
  for (auto& eps : draws) {
    eps.resize(m.parameter_count());
    for (auto& e : eps) e = rng.next_normal();
  }
  return draws;
}

ParameterDraw realize(const BayesKanModel& m, const std::vector<double>& eps) {
  ParameterDraw d;
  d.eps = eps;
  d.value.resize(eps.size());
  const auto params = m.parameters();
  for (std::size_t i = 0; i < eps.size(); ++i)
    d.value[i] = reparam_sample(params[i], eps[i]);
  return d;
}

}  // namespace

LossBreakdown elbo_loss_with_eps(const BayesKanModel& m, const Dataset& data,
                                 std::span<const int> rows, double kl_weight,
                                 std::span<const std::vector<double>> eps_draws) {
  if (rows.empty()) throw std::invalid_argument("elbo_loss: empty batch");
  if (eps_draws.empty()) throw std::invalid_argument("elbo_loss: no draws");
  if (kl_weight < 0.0) throw std::invalid_argument("elbo_loss: negative kl_weight");

  Workspace ws;
  double nll = 0.0;
  for (const auto& eps : eps_draws) {
    const ParameterDraw draw = realize(m, eps);
    for (int r : rows) {
      const double logit = forward_traced(m, data.row(r), draw, ws);
      const double p = sigmoid_clamped(logit);
      nll -= data.labels[static_cast<std::size_t>(r)] == 1 ? std::log(p)
                                                           : std::log1p(-p);
    }
  }
  nll /= static_cast<double>(rows.size()) * static_cast<double>(eps_draws.size());

  LossBreakdown b;
  b.nll = nll;
  b.kl = kl_weight == 0.0 ? 0.0 : m.kl();
  b.loss = kl_weight == 0.0 ? nll : nll + kl_weight * b.kl;
  return b;
}

LossBreakdown elbo_loss(const BayesKanModel& m, const Dataset& data,
                        std::span<const int> rows, double kl_weight,
                        int mc_samples, Rng& rng) {
  if (mc_samples < 1) throw std::invalid_argument("elbo_loss: mc_samples must be >= 1");
  const auto draws = make_eps_draws(m, mc_samples, rng);
  return elbo_loss_with_eps(m, data, rows, kl_weight, draws);
}

std::pair<LossBreakdown, GradientRecord> backward_with_eps(
    const BayesKanModel& m, const Dataset& data, std::span<const int> rows,
    double kl_weight, std::span<const std::vector<double>> eps_draws,
    bool freeze_sigma) {
  if (rows.empty()) throw std::invalid_argument("backward: empty batch");
  if (eps_draws.empty()) throw std::invalid_argument("backward: no draws");
  if (kl_weight < 0.0) throw std::invalid_argument("backward: negative kl_weight");

  const std::size_t n_params = m.parameter_count();
  const auto params = m.parameters();
  GradientRecord g;
  g.d_mu.assign(n_params, 0.0);
  g.d_rho.assign(n_params, 0.0);

  const double scale =
      1.0 / (static_cast<double>(rows.size()) * static_cast<double>(eps_draws.size()));
  Workspace ws;
  std::vector<double> dtheta(n_params);
  double nll = 0.0;

  for (const auto& eps : eps_draws) {
    const ParameterDraw draw = realize(m, eps);
    std::fill(dtheta.begin(), dtheta.end(), 0.0);
    for (int r : rows) {
      const double logit = forward_traced(m, data.row(r), draw, ws);
      const double p = sigmoid_clamped(logit);
      const int y = data.labels[static_cast<std::size_t>(r)];
      nll -= y == 1 ? std::log(p) : std::log1p(-p);
      const double g_logit = (logistic(logit) - static_cast<double>(y)) * scale;
      backward_traced(m, draw, ws, g_logit, dtheta);
    }
    // Reparameterization: z = mu + softplus(rho) * eps.
    for (std::size_t i = 0; i < n_params; ++i) {
      g.d_mu[i] += dtheta[i];
      if (!freeze_sigma)
        g.d_rho[i] += dtheta[i] * eps[i] * logistic(params[i].rho);
    }
  }
  nll *= scale;

  LossBreakdown b;
  b.nll = nll;
  b.kl = kl_weight == 0.0 ? 0.0 : m.kl();
  b.loss = kl_weight == 0.0 ? nll : nll + kl_weight * b.kl;

  if (kl_weight > 0.0) {
    for (std::size_t i = 0; i < n_params; ++i) {
      const KlGrad kg = kl_gaussian_grad(params[i], m.spec().prior);
      g.d_mu[i] += kl_weight * kg.d_mu;
      if (!freeze_sigma) g.d_rho[i] += kl_weight * kg.d_rho;
    }
  }

  if (!std::isfinite(b.loss))
    throw TrainingDivergence("non-finite loss (nll=" + std::to_string(b.nll) +
                             ", kl=" + std::to_string(b.kl) + ")");
  for (std::size_t i = 0; i < n_params; ++i)
    if (!std::isfinite(g.d_mu[i]) || !std::isfinite(g.d_rho[i]))
      throw TrainingDivergence("non-finite gradient at parameter " +
                               std::to_string(i));
  return {b, std::move(g)};
}

std::pair<LossBreakdown, GradientRecord> backward(
    const BayesKanModel& m, const Dataset& data, std::span<const int> rows,
    double kl_weight, int mc_samples, Rng& rng, bool freeze_sigma) {
  if (mc_samples < 1) throw std::invalid_argument("backward: mc_samples must be >= 1");
  const auto draws = make_eps_draws(m, mc_samples, rng);
  return backward_with_eps(m, data, rows, kl_weight, draws, freeze_sigma);
}

TrainResult train(const ModelSpec& spec, const Dataset& train_set,
                  const TrainConfig& config) {
  config.validate();
  spec.validate();
  if (train_set.n_rows == 0) throw DataError("train: empty dataset");
  if (train_set.count_label(0) == 0 || train_set.count_label(1) == 0)
    throw DataError("train: training set must contain both classes");
  if (spec.input_dim != train_set.n_cols)
    throw std::invalid_argument("train: spec input_dim does not match dataset");

  SplitSpec val_split;
  val_split.test_fraction = config.validation_fraction;
  val_split.seed = mix64(config.seed ^ 0x76616c5f73706c69ull);
  val_split.stratified = true;
  auto [fit_set, val_set] = stratified_split(train_set, val_split);
  if (fit_set.count_label(0) == 0 || fit_set.count_label(1) == 0)
    throw DataError("train: fit split lost a class; dataset too small");

  BayesKanModel model = BayesKanModel::init(spec, config.seed);
  if (config.freeze_sigma) model.freeze_sigmas();

  const std::size_t n_params = model.parameter_count();
  AdamState opt(2 * n_params);
  std::vector<double> flat(2 * n_params);
  std::vector<double> flat_grad(2 * n_params);
  Rng eps_rng = Rng::substream(config.seed, 2);

  const int n_fit = fit_set.n_rows;
  std::vector<int> perm(static_cast<std::size_t>(n_fit));
  for (int i = 0; i < n_fit; ++i) perm[static_cast<std::size_t>(i)] = i;
  const int num_batches = (n_fit + config.batch_size - 1) / config.batch_size;
  const double kl_weight = config.kl_enabled ? 1.0 / num_batches : 0.0;

  std::vector<int> val_rows(static_cast<std::size_t>(val_set.n_rows));
  for (int i = 0; i < val_set.n_rows; ++i) val_rows[static_cast<std::size_t>(i)] = i;

  TrainHistory history;
  std::vector<GaussianVariational> best_params(model.parameters().begin(),
                                               model.parameters().end());
  double best_val = std::numeric_limits<double>::infinity();
  double sig_best = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng = Rng::substream(config.seed, 1000 + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[static_cast<std::size_t>(shuffle_rng.next_below(i))]);

    double sum_loss = 0.0, sum_nll = 0.0, sum_kl = 0.0;
    for (int bstart = 0; bstart < n_fit; bstart += config.batch_size) {
      const int bsize = std::min(config.batch_size, n_fit - bstart);
      std::span<const int> rows(perm.data() + bstart,
                                static_cast<std::size_t>(bsize));
      auto [loss, grad] = backward(model, fit_set, rows, kl_weight,
                                   config.mc_train_samples, eps_rng,
                                   config.freeze_sigma);
      if (config.grad_clip > 0.0) {
        for (auto& v : grad.d_mu) v = std::clamp(v, -config.grad_clip, config.grad_clip);
        for (auto& v : grad.d_rho) v = std::clamp(v, -config.grad_clip, config.grad_clip);
      }
      auto params = model.parameters();
      for (std::size_t i = 0; i < n_params; ++i) {
        flat[i] = params[i].mu;
        flat[n_params + i] = params[i].rho;
        flat_grad[i] = grad.d_mu[i];
        flat_grad[n_params + i] = grad.d_rho[i];
      }
      adam_step(opt, flat, flat_grad, config.learning_rate);
      for (std::size_t i = 0; i < n_params; ++i) {
        params[i].mu = flat[i];
        params[i].rho = flat[n_params + i];
      }
      sum_loss += loss.loss;
      sum_nll += loss.nll;
      sum_kl += loss.kl;
    }

    // Mean-mode validation pass; monitors nll, not the full loss, since
    // KL does not depend on the data.
    const ParameterDraw mean = model.mean_draw();
    std::vector<double> val_probs(val_rows.size());
    int correct = 0;
    for (std::size_t i = 0; i < val_rows.size(); ++i) {
      val_probs[i] = model.predict_proba(val_set.row(val_rows[i]), mean);
      const int pred = val_probs[i] >= 0.5 ? 1 : 0;
      if (pred == val_set.labels[i]) ++correct;
    }
    EpochRecord rec;
    rec.train_loss = sum_loss / num_batches;
    rec.train_nll = sum_nll / num_batches;
    rec.train_kl = sum_kl / num_batches;
    rec.val_nll = nll_bernoulli(val_probs, val_set.labels);
    rec.val_acc = static_cast<double>(correct) / static_cast<double>(val_set.n_rows);
    history.epochs.push_back(rec);

    if (rec.val_nll < best_val) {
      best_val = rec.val_nll;
      history.best_epoch = epoch;
      best_params.assign(model.parameters().begin(), model.parameters().end());
    }
    if (rec.val_nll < sig_best - config.min_delta) {
      sig_best = rec.val_nll;
      stall = 0;
    } else if (++stall >= config.patience) {
      break;
    }
  }

  std::copy(best_params.begin(), best_params.end(), model.parameters().begin());
  return {std::move(model), std::move(history)};
}

}  // namespace bkan
