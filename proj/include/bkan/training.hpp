#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bkan/data.hpp"
#include "bkan/model.hpp"

namespace bkan {

// Raised when a non-finite loss or gradient appears; training aborts
// rather than propagate NaNs.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int patience = 10;
  double min_delta = 1e-5;  // improvement below this does not reset patience
  int batch_size = 32;
  int mc_train_samples = 1;
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;
  // Per-batch KL weight is 1/num_batches so one epoch charges the full
  // model KL exactly once. kl_enabled=false drops the term entirely.
  bool kl_enabled = true;
  // Freeze every sigma at the zero floor and train mu only; with
  // kl_enabled=false this is a plain point-estimate network.
  bool freeze_sigma = false;
  double grad_clip = 0.0;  // elementwise clip, 0 = off

  void validate() const;  // throws std::invalid_argument
};

struct LossBreakdown {
  double nll = 0.0;   // mean negative Bernoulli log-likelihood over the batch
  double kl = 0.0;    // model KL (independent of the batch)
  double loss = 0.0;  // nll + kl_weight * kl
};

// d loss / d mu and d loss / d rho per parameter, traversal order.
struct GradientRecord {
  std::vector<double> d_mu;
  std::vector<double> d_rho;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n)
      : m(n, 0.0), v(n, 0.0) {}
};

// Standard bias-corrected Adam update, elementwise.
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, double lr);

struct EpochRecord {
  double train_loss = 0.0;
  double train_nll = 0.0;
  double train_kl = 0.0;
  double val_nll = 0.0;
  double val_acc = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // argmin of val_nll, first occurrence

  // CSV: epoch,train_loss,train_nll,train_kl,val_nll,val_acc
  void write_csv(std::ostream& out) const;
};

// Mean of -[y ln p + (1-y) ln(1-p)]; probs must already be clamped away
// from {0,1} (predict_proba does this).
double nll_bernoulli(std::span<const double> probs, std::span<const int> labels);

// Stochastic ELBO estimate: nll averaged over mc_samples parameter draws
// from rng, KL computed once.
LossBreakdown elbo_loss(const BayesKanModel& m, const Dataset& data,
                        std::span<const int> rows, double kl_weight,
                        int mc_samples, Rng& rng);

// Deterministic variant used by gradient oracles: one eps vector per draw.
LossBreakdown elbo_loss_with_eps(const BayesKanModel& m, const Dataset& data,
                                 std::span<const int> rows, double kl_weight,
                                 std::span<const std::vector<double>> eps_draws);

// Reverse-mode gradients of the stochastic ELBO loss with respect to every
// mu and rho: through the reparameterization (dz/dmu = 1,
// dz/drho = eps * logistic(rho)), the spline bases, the ReLU base terms and
// the dense activations. Throws TrainingDivergence on non-finite values.
std::pair<LossBreakdown, GradientRecord> backward(
    const BayesKanModel& m, const Dataset& data, std::span<const int> rows,
    double kl_weight, int mc_samples, Rng& rng, bool freeze_sigma = false);

std::pair<LossBreakdown, GradientRecord> backward_with_eps(
    const BayesKanModel& m, const Dataset& data, std::span<const int> rows,
    double kl_weight, std::span<const std::vector<double>> eps_draws,
    bool freeze_sigma = false);

struct TrainResult {
  BayesKanModel model;     // parameters restored to the best checkpoint
  TrainHistory history;
};

// Minibatch Adam on the negative ELBO with a stratified validation
// holdout, early stopping on validation nll, and best-checkpoint return.
// Deterministic given (spec, data, config).
TrainResult train(const ModelSpec& spec, const Dataset& train_set,
                  const TrainConfig& config);

}  // namespace bkan
