#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bkan/rng.hpp"
#include "bkan/spline.hpp"
#include "bkan/variational.hpp"

namespace bkan {

enum class Activation { relu, sigmoid, identity };
enum class LayerKind { kan, dense };

const char* to_string(Activation a);
const char* to_string(LayerKind k);
Activation activation_from_string(const std::string& s);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
  LayerKind kind = LayerKind::kan;
  int width = 1;
  // Nodewise activation, dense layers only. KAN layers have none: the
  // edge functions themselves are the nonlinearity.
  Activation activation = Activation::identity;
};

struct SplineConfig {
  int grid_size = 5;
  int degree = 3;
  double domain_min = -2.0;
  double domain_max = 2.0;
};

struct ModelSpec {
  int input_dim = 0;
  std::vector<LayerSpec> layers;  // last layer must have width 1
  SplineConfig spline;
  PriorSpec prior;

  // KAN hidden stack [2n+1, 8, 4] and a width-1 KAN output head.
  static ModelSpec bkan_default(int input_dim);
  // Dense ReLU hidden stack of the same widths with an identity-logit
  // output head; the literal Bayesian-MLP reading.
  static ModelSpec bayes_mlp_default(int input_dim);

  void validate() const;  // throws std::invalid_argument
  std::size_t parameter_count() const;
};

// One realized value per parameter, plus the standard-normal draws that
// produced them (eps = 0 everywhere for the mean draw). Order follows the
// model's parameter traversal contract.
struct ParameterDraw {
  std::vector<double> value;
  std::vector<double> eps;
};

struct LayerLayout {
  LayerKind kind = LayerKind::kan;
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::identity;
  std::size_t offset = 0;       // first parameter index of this layer
  std::size_t count = 0;        // total parameters in this layer
  std::size_t edge_stride = 0;  // per-edge parameter count
  std::size_t bias_offset = 0;  // index of bias 0 (after all edges)
};

// Stacked Bayesian KAN / dense layers over one flat parameter table.
//
// Parameter traversal order (fixed; rng draws, gradients, Adam state and
// serialization all use it): layer-major; within a layer, output unit
// major, then input unit; per KAN edge the base weight then the spline
// coefficients ascending; per dense edge the single weight; the layer's
// biases come last, ascending by output unit.
class BayesKanModel {
 public:
  BayesKanModel() = default;

  // Random initialization: mu ~ U[-r, r] with r = 1/sqrt(in_dim) per layer,
  // rho set so sigma = 0.05.
  static BayesKanModel init(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  const KnotVector& knots() const { return knots_; }
  const std::vector<LayerLayout>& layers() const { return layout_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<GaussianVariational> parameters() { return params_; }
  std::span<const GaussianVariational> parameters() const { return params_; }

  std::size_t edge_base_index(int layer, int out, int in) const;
  std::size_t edge_coeff_index(int layer, int out, int in, int m) const;
  std::size_t dense_weight_index(int layer, int out, int in) const;
  std::size_t bias_index(int layer, int out) const;

  ParameterDraw mean_draw() const;
  ParameterDraw sample_draw(Rng& rng) const;

  // Composes all layers; the output is a raw logit (identity head).
  double forward_logit(std::span<const double> x, const ParameterDraw& draw) const;
  // sigmoid(logit) clamped to [1e-7, 1 - 1e-7].
  double predict_proba(std::span<const double> x, const ParameterDraw& draw) const;

  // Sum of kl_gaussian over every parameter against the model prior.
  double kl() const;

  // Push every rho to the underflow floor so sigma == 0 and sample mode
  // collapses onto mean mode.
  void freeze_sigmas();

  // Inference-time input pipeline carried with the model so a saved file
  // is self-contained: names for schema checks, and the train-split
  // standardization applied to raw feature rows. Both may be empty.
  std::vector<std::string> feature_names;
  std::vector<double> input_mean;
  std::vector<double> input_std;

  bool has_standardization() const { return !input_mean.empty(); }
  std::vector<double> standardize_row(std::span<const double> raw) const;

  // "bkan-model/1" JSON document; round-trips every mu/rho bit-exactly.
  std::string to_json() const;
  static BayesKanModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static BayesKanModel load(const std::string& path);

 private:
  ModelSpec spec_;
  KnotVector knots_;
  std::vector<GaussianVariational> params_;
  std::vector<LayerLayout> layout_;

  void build_layout();  // derives layout_ and knots_ from spec_
  friend void kan_layer_forward(const BayesKanModel&, int,
                                std::span<const double>, const ParameterDraw&,
                                std::span<double>);
  friend void dense_layer_forward(const BayesKanModel&, int,
                                  std::span<const double>,
                                  const ParameterDraw&, std::span<double>);
};

// Single edge function value: base_weight * relu(x) + sum_m c_m * B_m(x).
double edge_eval(const BayesKanModel& m, int layer, int out, int in, double x,
                 const ParameterDraw& draw);

// out_j = bias_j + sum_i edge_{ji}(x_i); no nodewise activation.
void kan_layer_forward(const BayesKanModel& m, int layer,
                       std::span<const double> x, const ParameterDraw& draw,
                       std::span<double> out);

// out_j = act(sum_i w_ji x_i + bias_j).
void dense_layer_forward(const BayesKanModel& m, int layer,
                         std::span<const double> x, const ParameterDraw& draw,
                         std::span<double> out);

double apply_activation(Activation a, double v);
double activation_derivative(Activation a, double pre);

// predict_proba's squash, exposed for reuse: sigmoid clamped to
// [1e-7, 1 - 1e-7] so downstream log-likelihoods stay finite.
double sigmoid_clamped(double logit);

}  // namespace bkan
