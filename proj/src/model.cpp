#include "bkan/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace bkan {

using nlohmann::json;

const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

const char* to_string(LayerKind k) {
  return k == LayerKind::kan ? "kan" : "dense";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation: " + s);
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "kan") return LayerKind::kan;
  if (s == "dense") return LayerKind::dense;
  throw std::invalid_argument("unknown layer kind: " + s);
}

double apply_activation(Activation a, double v) {
  switch (a) {
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::sigmoid: return logistic(v);
    case Activation::identity: return v;
  }
  return v;
}

double activation_derivative(Activation a, double pre) {
  switch (a) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = logistic(pre);
      return s * (1.0 - s);
    }
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

double sigmoid_clamped(double logit) {
  return std::clamp(logistic(logit), 1e-7, 1.0 - 1e-7);
}

ModelSpec ModelSpec::bkan_default(int input_dim) {
  ModelSpec s;
  s.input_dim = input_dim;
  s.layers = {{LayerKind::kan, 2 * input_dim + 1, Activation::identity},
              {LayerKind::kan, 8, Activation::identity},
              {LayerKind::kan, 4, Activation::identity},
              {LayerKind::kan, 1, Activation::identity}};
  return s;
}

ModelSpec ModelSpec::bayes_mlp_default(int input_dim) {
  ModelSpec s;
  s.input_dim = input_dim;
  s.layers = {{LayerKind::dense, 2 * input_dim + 1, Activation::relu},
              {LayerKind::dense, 8, Activation::relu},
              {LayerKind::dense, 4, Activation::relu},
              {LayerKind::dense, 1, Activation::identity}};
  return s;
}

void ModelSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("ModelSpec: input_dim must be >= 1");
  if (layers.empty()) throw std::invalid_argument("ModelSpec: no layers");
  for (const auto& l : layers)
    if (l.width < 1) throw std::invalid_argument("ModelSpec: layer width must be >= 1");
  if (layers.back().width != 1)
    throw std::invalid_argument("ModelSpec: output layer width must be 1");
  if (spline.grid_size < 1) throw std::invalid_argument("ModelSpec: grid_size must be >= 1");
  if (spline.degree < 0) throw std::invalid_argument("ModelSpec: degree must be >= 0");
  if (!(spline.domain_min < spline.domain_max))
    throw std::invalid_argument("ModelSpec: spline domain is inverted or empty");
  if (!(prior.sigma0 > 0.0)) throw std::invalid_argument("ModelSpec: prior sigma0 must be > 0");
}

std::size_t ModelSpec::parameter_count() const {
  const std::size_t n_basis =
      static_cast<std::size_t>(spline.grid_size + spline.degree);
  std::size_t total = 0;
  int in_dim = input_dim;
  for (const auto& l : layers) {
    const std::size_t in = static_cast<std::size_t>(in_dim);
    const std::size_t out = static_cast<std::size_t>(l.width);
    if (l.kind == LayerKind::kan)
      total += out * in * (n_basis + 1) + out;
    else
      total += out * in + out;
    in_dim = l.width;
  }
  return total;
}

void BayesKanModel::build_layout() {
  spec_.validate();
  knots_ = build_knots(spec_.spline.domain_min, spec_.spline.domain_max,
                       spec_.spline.grid_size, spec_.spline.degree);
  layout_.clear();
  std::size_t offset = 0;
  int in_dim = spec_.input_dim;
  for (const auto& l : spec_.layers) {
    LayerLayout lay;
    lay.kind = l.kind;
    lay.in_dim = in_dim;
    lay.out_dim = l.width;
    lay.activation = l.activation;
    lay.offset = offset;
    lay.edge_stride = l.kind == LayerKind::kan
                          ? static_cast<std::size_t>(knots_.basis_count()) + 1
                          : 1;
    const std::size_t edges = static_cast<std::size_t>(l.width) *
                              static_cast<std::size_t>(in_dim) * lay.edge_stride;
    lay.bias_offset = offset + edges;
    lay.count = edges + static_cast<std::size_t>(l.width);
    offset += lay.count;
    layout_.push_back(lay);
    in_dim = l.width;
  }
  params_.resize(offset);
}

BayesKanModel BayesKanModel::init(const ModelSpec& spec, std::uint64_t seed) {
  BayesKanModel m;
  m.spec_ = spec;
  m.build_layout();
  Rng rng = Rng::substream(seed, 0);
  const double rho0 = rho_for_sigma(0.05);
  for (const auto& lay : m.layout_) {
    const double r = 1.0 / std::sqrt(static_cast<double>(lay.in_dim));
    for (std::size_t i = lay.offset; i < lay.offset + lay.count; ++i) {
      m.params_[i].mu = rng.next_uniform(-r, r);
      m.params_[i].rho = rho0;
    }
  }
  return m;
}

std::size_t BayesKanModel::edge_base_index(int layer, int out, int in) const {
  const auto& lay = layout_.at(static_cast<std::size_t>(layer));
  return lay.offset +
         (static_cast<std::size_t>(out) * static_cast<std::size_t>(lay.in_dim) +
          static_cast<std::size_t>(in)) *
             lay.edge_stride;
}

std::size_t BayesKanModel::edge_coeff_index(int layer, int out, int in,
                                            int m) const {
  return edge_base_index(layer, out, in) + 1 + static_cast<std::size_t>(m);
}

std::size_t BayesKanModel::dense_weight_index(int layer, int out, int in) const {
  return edge_base_index(layer, out, in);
}

std::size_t BayesKanModel::bias_index(int layer, int out) const {
  const auto& lay = layout_.at(static_cast<std::size_t>(layer));
  return lay.bias_offset + static_cast<std::size_t>(out);
}

ParameterDraw BayesKanModel::mean_draw() const {
  ParameterDraw d;
  d.value.resize(params_.size());
  d.eps.assign(params_.size(), 0.0);
  for (std::size_t i = 0; i < params_.size(); ++i) d.value[i] = params_[i].mu;
  return d;
}

ParameterDraw BayesKanModel::sample_draw(Rng& rng) const {
  ParameterDraw d;
  d.value.resize(params_.size());
  d.eps.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    d.eps[i] = rng.next_normal();
    d.value[i] = reparam_sample(params_[i], d.eps[i]);
  }
  return d;
}

double edge_eval(const BayesKanModel& m, int layer, int out, int in, double x,
                 const ParameterDraw& draw) {
  const std::size_t base = m.edge_base_index(layer, out, in);
  const int n_basis = m.knots().basis_count();
  double acc = draw.value[base] * (x > 0.0 ? x : 0.0);
  std::vector<double> b(static_cast<std::size_t>(n_basis));
  basis_values(m.knots(), x, b);
  for (int j = 0; j < n_basis; ++j)
    acc += draw.value[base + 1 + static_cast<std::size_t>(j)] *
           b[static_cast<std::size_t>(j)];
  return acc;
}

void kan_layer_forward(const BayesKanModel& m, int layer,
                       std::span<const double> x, const ParameterDraw& draw,
                       std::span<double> out) {
  const auto& lay = m.layout_.at(static_cast<std::size_t>(layer));
  if (lay.kind != LayerKind::kan)
    throw std::invalid_argument("kan_layer_forward: not a KAN layer");
  if (static_cast<int>(x.size()) != lay.in_dim ||
      static_cast<int>(out.size()) != lay.out_dim)
    throw std::invalid_argument("kan_layer_forward: dimension mismatch");

  const int n_basis = m.knots().basis_count();
  const std::size_t stride = lay.edge_stride;
  std::vector<double> basis(static_cast<std::size_t>(lay.in_dim) *
                            static_cast<std::size_t>(n_basis));
  std::vector<double> relu_x(static_cast<std::size_t>(lay.in_dim));
  for (int i = 0; i < lay.in_dim; ++i) {
    basis_values(m.knots(), x[static_cast<std::size_t>(i)],
                 std::span<double>(basis).subspan(
                     static_cast<std::size_t>(i) * static_cast<std::size_t>(n_basis),
                     static_cast<std::size_t>(n_basis)));
    relu_x[static_cast<std::size_t>(i)] =
        x[static_cast<std::size_t>(i)] > 0.0 ? x[static_cast<std::size_t>(i)] : 0.0;
  }

  for (int j = 0; j < lay.out_dim; ++j) {
    double acc = draw.value[lay.bias_offset + static_cast<std::size_t>(j)];
    std::size_t p = lay.offset + static_cast<std::size_t>(j) *
                                     static_cast<std::size_t>(lay.in_dim) * stride;
    for (int i = 0; i < lay.in_dim; ++i, p += stride) {
      acc += draw.value[p] * relu_x[static_cast<std::size_t>(i)];
      const double* b = basis.data() + static_cast<std::size_t>(i) *
                                           static_cast<std::size_t>(n_basis);
      for (int k = 0; k < n_basis; ++k)
        acc += draw.value[p + 1 + static_cast<std::size_t>(k)] * b[k];
    }
    out[static_cast<std::size_t>(j)] = acc;
  }
}

void dense_layer_forward(const BayesKanModel& m, int layer,
                         std::span<const double> x, const ParameterDraw& draw,
                         std::span<double> out) {
  const auto& lay = m.layout_.at(static_cast<std::size_t>(layer));
  if (lay.kind != LayerKind::dense)
    throw std::invalid_argument("dense_layer_forward: not a dense layer");
  if (static_cast<int>(x.size()) != lay.in_dim ||
      static_cast<int>(out.size()) != lay.out_dim)
    throw std::invalid_argument("dense_layer_forward: dimension mismatch");

  for (int j = 0; j < lay.out_dim; ++j) {
    double acc = draw.value[lay.bias_offset + static_cast<std::size_t>(j)];
    std::size_t p = lay.offset + static_cast<std::size_t>(j) *
                                     static_cast<std::size_t>(lay.in_dim);
    for (int i = 0; i < lay.in_dim; ++i)
      acc += draw.value[p + static_cast<std::size_t>(i)] *
             x[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(j)] = apply_activation(lay.activation, acc);
  }
}

double BayesKanModel::forward_logit(std::span<const double> x,
                                    const ParameterDraw& draw) const {
  if (static_cast<int>(x.size()) != spec_.input_dim)
    throw std::invalid_argument("forward_logit: input dimension mismatch");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (int l = 0; l < static_cast<int>(layout_.size()); ++l) {
    next.assign(static_cast<std::size_t>(layout_[static_cast<std::size_t>(l)].out_dim), 0.0);
    if (layout_[static_cast<std::size_t>(l)].kind == LayerKind::kan)
      kan_layer_forward(*this, l, cur, draw, next);
    else
      dense_layer_forward(*this, l, cur, draw, next);
    cur.swap(next);
  }
  return cur[0];
}

double BayesKanModel::predict_proba(std::span<const double> x,
                                    const ParameterDraw& draw) const {
  return sigmoid_clamped(forward_logit(x, draw));
}

double BayesKanModel::kl() const {
  double total = 0.0;
  for (const auto& p : params_) total += kl_gaussian(p, spec_.prior);
  return total;
}

void BayesKanModel::freeze_sigmas() {
  for (auto& p : params_) p.rho = -800.0;  // softplus underflows to exactly 0
}

std::vector<double> BayesKanModel::standardize_row(
    std::span<const double> raw) const {
  if (!has_standardization())
    return std::vector<double>(raw.begin(), raw.end());
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out[i] = input_std[i] < 1e-9 ? 0.0 : (raw[i] - input_mean[i]) / input_std[i];
  return out;
}

std::string BayesKanModel::to_json() const {
  json j;
  j["format"] = "bkan-model/1";
  j["input_dim"] = spec_.input_dim;
  json layers = json::array();
  for (const auto& l : spec_.layers)
    layers.push_back({{"kind", to_string(l.kind)},
                      {"width", l.width},
                      {"activation", to_string(l.activation)}});
  j["layers"] = layers;
  j["spline"] = {{"grid_size", spec_.spline.grid_size},
                 {"degree", spec_.spline.degree},
                 {"domain_min", spec_.spline.domain_min},
                 {"domain_max", spec_.spline.domain_max}};
  j["prior"] = {{"mu0", spec_.prior.mu0}, {"sigma0", spec_.prior.sigma0}};
  if (!feature_names.empty()) j["feature_names"] = feature_names;
  if (!input_mean.empty()) {
    j["input_standardization"] = {{"mean", input_mean}, {"std", input_std}};
  }
  json mu = json::array();
  json rho = json::array();
  for (const auto& p : params_) {
    mu.push_back(p.mu);
    rho.push_back(p.rho);
  }
  j["mu"] = std::move(mu);
  j["rho"] = std::move(rho);
  return j.dump(2) + "\n";
}

BayesKanModel BayesKanModel::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.contains("format") || j["format"] != "bkan-model/1")
    throw std::runtime_error("model file has missing or unsupported format tag");

  BayesKanModel m;
  m.spec_.input_dim = j.at("input_dim").get<int>();
  for (const auto& l : j.at("layers")) {
    LayerSpec ls;
    ls.kind = layer_kind_from_string(l.at("kind").get<std::string>());
    ls.width = l.at("width").get<int>();
    ls.activation = activation_from_string(l.at("activation").get<std::string>());
    m.spec_.layers.push_back(ls);
  }
  const auto& sp = j.at("spline");
  m.spec_.spline = {sp.at("grid_size").get<int>(), sp.at("degree").get<int>(),
                    sp.at("domain_min").get<double>(),
                    sp.at("domain_max").get<double>()};
  m.spec_.prior = {j.at("prior").at("mu0").get<double>(),
                   j.at("prior").at("sigma0").get<double>()};
  m.build_layout();

  const auto& mu = j.at("mu");
  const auto& rho = j.at("rho");
  if (mu.size() != m.params_.size() || rho.size() != m.params_.size())
    throw std::runtime_error("model file parameter arrays do not match the spec's parameter count");
  for (std::size_t i = 0; i < m.params_.size(); ++i) {
    m.params_[i].mu = mu[i].get<double>();
    m.params_[i].rho = rho[i].get<double>();
    if (!std::isfinite(m.params_[i].mu) || !std::isfinite(m.params_[i].rho))
      throw std::runtime_error("model file contains non-finite parameters");
  }
  if (j.contains("feature_names"))
    m.feature_names = j["feature_names"].get<std::vector<std::string>>();
  if (j.contains("input_standardization")) {
    m.input_mean = j["input_standardization"]["mean"].get<std::vector<double>>();
    m.input_std = j["input_standardization"]["std"].get<std::vector<double>>();
    if (m.input_mean.size() != static_cast<std::size_t>(m.spec_.input_dim) ||
        m.input_std.size() != static_cast<std::size_t>(m.spec_.input_dim))
      throw std::runtime_error("model file standardization length mismatch");
  }
  return m;
}

void BayesKanModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_json();
  if (!out) throw std::runtime_error("write failed: " + path);
}

BayesKanModel BayesKanModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace bkan
