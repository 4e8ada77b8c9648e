// bkan: train, evaluate and interrogate Bayesian KAN classifiers on
// tabular binary-classification CSVs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bkan/common.hpp"
#include "bkan/data.hpp"
#include "bkan/evaluation.hpp"
#include "bkan/model.hpp"
#include "bkan/training.hpp"
#include "bkan/uncertainty.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string dataset = "pima";  // pima | heart | csv
  std::string data_path;
  std::string model_path;
  std::string input_path;
  std::string out_dir = "out";
  std::string arch = "bkan";  // bkan | bayes-mlp
  std::vector<int> hidden_widths;

  int grid_size = 5;
  int degree = 3;
  double domain_min = -2.0;
  double domain_max = 2.0;
  double prior_mu = 0.0;
  double prior_sigma = 1.0;

  double lr = 1e-3;
  int epochs = 100;
  int patience = 10;
  double min_delta = 1e-5;
  int batch_size = 32;
  int mc_train_samples = 1;
  double val_fraction = 0.1;
  double grad_clip = 0.0;

  double test_fraction = 0.2;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  int mc_samples = 100;   // evaluation-time posterior samples
  int bootstrap = 1000;   // bootstrap resamples
  double ci_level = 0.95;

  int layer = 0;
  int unit = 0;
  int input_index = 0;
  int points = 201;

  bool quiet = false;
};

std::ostream& info(const Options& opt) {
  static std::ofstream null_sink;
  if (opt.quiet) {
    null_sink.setstate(std::ios::badbit);
    return null_sink;
  }
  return std::cout;
}

bkan::Dataset load_dataset(const Options& opt) {
  if (opt.data_path.empty())
    throw std::invalid_argument("--data is required for this command");
  if (opt.dataset == "pima") return bkan::load_pima(opt.data_path);
  if (opt.dataset == "heart") return bkan::load_heart(opt.data_path);
  if (opt.dataset == "csv") return bkan::load_csv(opt.data_path);
  throw std::invalid_argument("unknown dataset kind: " + opt.dataset);
}

bkan::ModelSpec make_spec(const Options& opt, int input_dim) {
  bkan::ModelSpec spec;
  if (opt.arch == "bkan")
    spec = bkan::ModelSpec::bkan_default(input_dim);
  else if (opt.arch == "bayes-mlp")
    spec = bkan::ModelSpec::bayes_mlp_default(input_dim);
  else
    throw std::invalid_argument("unknown arch: " + opt.arch);

  if (!opt.hidden_widths.empty()) {
    const bool kan = opt.arch == "bkan";
    spec.layers.clear();
    for (int w : opt.hidden_widths)
      spec.layers.push_back({kan ? bkan::LayerKind::kan : bkan::LayerKind::dense,
                             w,
                             kan ? bkan::Activation::identity : bkan::Activation::relu});
    spec.layers.push_back({kan ? bkan::LayerKind::kan : bkan::LayerKind::dense,
                           1, bkan::Activation::identity});
  }
  spec.spline = {opt.grid_size, opt.degree, opt.domain_min, opt.domain_max};
  spec.prior = {opt.prior_mu, opt.prior_sigma};
  spec.validate();
  return spec;
}

bkan::TrainConfig make_train_config(const Options& opt, std::uint64_t seed) {
  bkan::TrainConfig cfg;
  cfg.learning_rate = opt.lr;
  cfg.max_epochs = opt.epochs;
  cfg.patience = opt.patience;
  cfg.min_delta = opt.min_delta;
  cfg.batch_size = opt.batch_size;
  cfg.mc_train_samples = opt.mc_train_samples;
  cfg.validation_fraction = opt.val_fraction;
  cfg.grad_clip = opt.grad_clip;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bkan::DataError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return bkan::fnv1a64(ss.str());
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json options_json(const Options& opt) {
  json j;
  j["dataset"] = opt.dataset;
  j["data"] = opt.data_path;
  j["model"] = opt.model_path;
  j["input"] = opt.input_path;
  j["out"] = opt.out_dir;
  j["arch"] = opt.arch;
  j["hidden_widths"] = opt.hidden_widths;
  j["grid_size"] = opt.grid_size;
  j["degree"] = opt.degree;
  j["domain_min"] = opt.domain_min;
  j["domain_max"] = opt.domain_max;
  j["prior_mu"] = opt.prior_mu;
  j["prior_sigma"] = opt.prior_sigma;
  j["lr"] = opt.lr;
  j["epochs"] = opt.epochs;
  j["patience"] = opt.patience;
  j["min_delta"] = opt.min_delta;
  j["batch_size"] = opt.batch_size;
  j["mc_train_samples"] = opt.mc_train_samples;
  j["val_fraction"] = opt.val_fraction;
  j["grad_clip"] = opt.grad_clip;
  j["test_fraction"] = opt.test_fraction;
  j["seed"] = opt.seed;
  j["seeds"] = opt.seeds;
  j["mc_samples"] = opt.mc_samples;
  j["bootstrap"] = opt.bootstrap;
  j["ci_level"] = opt.ci_level;
  j["layer"] = opt.layer;
  j["unit"] = opt.unit;
  j["input_index"] = opt.input_index;
  j["points"] = opt.points;
  return j;
}

std::string to_hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << "0x" << std::hex << v;
  return ss.str();
}

void write_manifest(const Options& opt, const std::string& command,
                    const std::vector<std::string>& outputs) {
  json j;
  j["tool"] = "bkan";
  j["command"] = command;
  j["options"] = options_json(opt);
  if (!opt.data_path.empty())
    j["data_fnv1a64"] = to_hex(file_checksum(opt.data_path));
  j["outputs"] = outputs;
  write_file(fs::path(opt.out_dir) / "manifest.json", j.dump(2) + "\n");
}

// Seed helpers: every derived stream hangs off the user seed through
// distinct fixed tags so reruns reproduce byte-identical outputs.
std::uint64_t eval_seed(std::uint64_t seed) { return bkan::mix64(seed ^ 0x6576616cull); }
std::uint64_t row_seed(std::uint64_t base, int row) {
  return bkan::mix64(base + static_cast<std::uint64_t>(row));
}

// Monte Carlo mean probabilities for every row of a standardized dataset.
std::vector<double> mc_mean_probs(const bkan::BayesKanModel& m,
                                  const bkan::Dataset& ds, int S,
                                  std::uint64_t base_seed) {
  std::vector<double> probs(static_cast<std::size_t>(ds.n_rows));
  for (int r = 0; r < ds.n_rows; ++r)
    probs[static_cast<std::size_t>(r)] =
        bkan::mc_predict(m, ds.row(r), S, row_seed(base_seed, r)).mean_prob;
  return probs;
}

struct ModelRow {
  std::string name;
  double acc = 0, f1 = 0, auc = 0;
  bkan::Interval acc_ci, f1_ci, auc_ci;
};

ModelRow score_model(const std::string& name, std::span<const double> probs,
                     std::span<const int> labels, int B, double level,
                     std::uint64_t seed) {
  ModelRow row;
  row.name = name;
  const auto c = bkan::confusion(probs, labels);
  row.acc = bkan::accuracy(c);
  row.f1 = bkan::f1_score(c);
  row.auc = bkan::auc_roc(probs, labels);
  row.acc_ci = bkan::bootstrap_ci(bkan::MetricKind::accuracy, probs, labels, B, level, seed);
  row.f1_ci = bkan::bootstrap_ci(bkan::MetricKind::f1, probs, labels, B, level, bkan::mix64(seed + 1));
  row.auc_ci = bkan::bootstrap_ci(bkan::MetricKind::auc, probs, labels, B, level, bkan::mix64(seed + 2));
  return row;
}

std::string metrics_csv(const std::vector<ModelRow>& rows) {
  std::ostringstream out;
  out << "model,accuracy,f1,auc,acc_ci_lo,acc_ci_hi,f1_ci_lo,f1_ci_hi,auc_ci_lo,auc_ci_hi\n";
  for (const auto& r : rows) {
    out << r.name << ',' << bkan::fmt_double(r.acc) << ',' << bkan::fmt_double(r.f1)
        << ',' << bkan::fmt_double(r.auc) << ',' << bkan::fmt_double(r.acc_ci.lo)
        << ',' << bkan::fmt_double(r.acc_ci.hi) << ',' << bkan::fmt_double(r.f1_ci.lo)
        << ',' << bkan::fmt_double(r.f1_ci.hi) << ',' << bkan::fmt_double(r.auc_ci.lo)
        << ',' << bkan::fmt_double(r.auc_ci.hi) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------

int cmd_train(const Options& opt) {
  bkan::Dataset full = load_dataset(opt);
  bkan::SplitSpec split{opt.test_fraction, opt.seed, true};
  auto [train_raw, test_raw] = bkan::stratified_split(full, split);
  const bkan::StandardizeStats stats = bkan::standardize_fit(train_raw);
  const bkan::Dataset train_std = bkan::standardize_apply(stats, train_raw);

  const bkan::ModelSpec spec = make_spec(opt, full.n_cols);
  const bkan::TrainConfig cfg = make_train_config(opt, opt.seed);
  bkan::TrainResult result = bkan::train(spec, train_std, cfg);

  result.model.feature_names = full.feature_names;
  result.model.input_mean = stats.mean;
  result.model.input_std = stats.stddev;

  fs::create_directories(opt.out_dir);
  const fs::path model_path = fs::path(opt.out_dir) / "model.json";
  result.model.save(model_path.string());
  std::ostringstream hist;
  result.history.write_csv(hist);
  write_file(fs::path(opt.out_dir) / "history.csv", hist.str());
  write_manifest(opt, "train", {"model.json", "history.csv"});

  const auto& best = result.history.epochs[static_cast<std::size_t>(result.history.best_epoch)];
  info(opt) << "trained " << opt.arch << " on " << opt.dataset << " ("
            << train_std.n_rows << " train rows, " << test_raw.n_rows
            << " held-out test rows)\n"
            << "epochs run: " << result.history.epochs.size()
            << ", best epoch: " << result.history.best_epoch + 1
            << " (val nll " << best.val_nll << ", val acc " << best.val_acc << ")\n"
            << "wrote " << model_path.string() << "\n";
  return 0;
}

int cmd_evaluate(const Options& opt) {
  if (opt.model_path.empty()) throw std::invalid_argument("--model is required");
  const bkan::BayesKanModel model = bkan::BayesKanModel::load(opt.model_path);
  bkan::Dataset full = load_dataset(opt);
  if (full.n_cols != model.spec().input_dim)
    throw bkan::DataError("dataset has " + std::to_string(full.n_cols) +
                          " features but the model expects " +
                          std::to_string(model.spec().input_dim));

  bkan::SplitSpec split{opt.test_fraction, opt.seed, true};
  auto [train_raw, test_raw] = bkan::stratified_split(full, split);
  bkan::StandardizeStats stats;
  if (model.has_standardization()) {
    stats.mean = model.input_mean;
    stats.stddev = model.input_std;
  } else {
    stats = bkan::standardize_fit(train_raw);
  }
  const bkan::Dataset test_std = bkan::standardize_apply(stats, test_raw);

  const std::uint64_t base = eval_seed(opt.seed);
  const std::vector<double> probs = mc_mean_probs(model, test_std, opt.mc_samples, base);
  const ModelRow row = score_model("bayesian-kan", probs, test_std.labels,
                                   opt.bootstrap, opt.ci_level, bkan::mix64(base));

  std::ostringstream unc;
  unc << "index,mean_prob,ci_lo,ci_hi,total,aleatoric,epistemic\n";
  for (int r = 0; r < test_std.n_rows; ++r) {
    const auto pred = bkan::mc_predict(model, test_std.row(r), opt.mc_samples,
                                       row_seed(base, r));
    const auto ci = bkan::credible_interval(pred, opt.ci_level);
    const auto u = bkan::decompose(pred);
    unc << r << ',' << bkan::fmt_double(pred.mean_prob) << ','
        << bkan::fmt_double(ci.lo) << ',' << bkan::fmt_double(ci.hi) << ','
        << bkan::fmt_double(u.total) << ',' << bkan::fmt_double(u.aleatoric)
        << ',' << bkan::fmt_double(u.epistemic) << '\n';
  }

  fs::create_directories(opt.out_dir);
  write_file(fs::path(opt.out_dir) / "metrics.csv", metrics_csv({row}));
  write_file(fs::path(opt.out_dir) / "uncertainty.csv", unc.str());
  write_manifest(opt, "evaluate", {"metrics.csv", "uncertainty.csv"});

  info(opt) << "test rows: " << test_std.n_rows << "\n"
            << "accuracy " << row.acc << "  f1 " << row.f1 << "  auc " << row.auc
            << "\n95% CIs: acc [" << row.acc_ci.lo << ", " << row.acc_ci.hi
            << "], f1 [" << row.f1_ci.lo << ", " << row.f1_ci.hi << "], auc ["
            << row.auc_ci.lo << ", " << row.auc_ci.hi << "]\n";
  return 0;
}

int cmd_compare(const Options& opt) {
  bkan::Dataset full = load_dataset(opt);
  const int n_models = 3;
  std::vector<std::string> names = {"bayesian-kan", "logistic-regression",
                                    "traditional-nn"};
  std::vector<std::vector<ModelRow>> per_seed;  // [seed][model]

  for (std::uint64_t s : opt.seeds) {
    bkan::SplitSpec split{opt.test_fraction, s, true};
    auto [train_raw, test_raw] = bkan::stratified_split(full, split);
    const bkan::StandardizeStats stats = bkan::standardize_fit(train_raw);
    const bkan::Dataset train_std = bkan::standardize_apply(stats, train_raw);
    const bkan::Dataset test_std = bkan::standardize_apply(stats, test_raw);
    const std::uint64_t base = eval_seed(s);

    std::vector<ModelRow> rows;

    bkan::TrainResult bk = bkan::train(make_spec(opt, full.n_cols), train_std,
                                       make_train_config(opt, s));
    rows.push_back(score_model(names[0],
                               mc_mean_probs(bk.model, test_std, opt.mc_samples, base),
                               test_std.labels, opt.bootstrap, opt.ci_level,
                               bkan::mix64(base + 11)));

    const bkan::LinearModel lr = bkan::train_logreg(train_std);
    std::vector<double> lr_probs(static_cast<std::size_t>(test_std.n_rows));
    for (int r = 0; r < test_std.n_rows; ++r)
      lr_probs[static_cast<std::size_t>(r)] = lr.predict_proba(test_std.row(r));
    rows.push_back(score_model(names[1], lr_probs, test_std.labels,
                               opt.bootstrap, opt.ci_level, bkan::mix64(base + 22)));

    bkan::TrainResult nn = bkan::train_mlp_baseline(train_std, make_train_config(opt, s));
    const bkan::ParameterDraw mean = nn.model.mean_draw();
    std::vector<double> nn_probs(static_cast<std::size_t>(test_std.n_rows));
    for (int r = 0; r < test_std.n_rows; ++r)
      nn_probs[static_cast<std::size_t>(r)] = nn.model.predict_proba(test_std.row(r), mean);
    rows.push_back(score_model(names[2], nn_probs, test_std.labels,
                               opt.bootstrap, opt.ci_level, bkan::mix64(base + 33)));

    per_seed.push_back(std::move(rows));
    info(opt) << "seed " << s << ": bkan acc " << per_seed.back()[0].acc
              << " auc " << per_seed.back()[0].auc << " | logreg auc "
              << per_seed.back()[1].auc << " | nn auc " << per_seed.back()[2].auc
              << "\n";
  }

  // Seed-averaged table.
  std::vector<ModelRow> avg(static_cast<std::size_t>(n_models));
  for (int m = 0; m < n_models; ++m) {
    auto& a = avg[static_cast<std::size_t>(m)];
    a.name = names[static_cast<std::size_t>(m)];
    for (const auto& rows : per_seed) {
      const auto& r = rows[static_cast<std::size_t>(m)];
      a.acc += r.acc; a.f1 += r.f1; a.auc += r.auc;
      a.acc_ci.lo += r.acc_ci.lo; a.acc_ci.hi += r.acc_ci.hi;
      a.f1_ci.lo += r.f1_ci.lo; a.f1_ci.hi += r.f1_ci.hi;
      a.auc_ci.lo += r.auc_ci.lo; a.auc_ci.hi += r.auc_ci.hi;
    }
    const auto k = static_cast<double>(per_seed.size());
    a.acc /= k; a.f1 /= k; a.auc /= k;
    a.acc_ci.lo /= k; a.acc_ci.hi /= k;
    a.f1_ci.lo /= k; a.f1_ci.hi /= k;
    a.auc_ci.lo /= k; a.auc_ci.hi /= k;
  }

  std::ostringstream per_seed_csv;
  per_seed_csv << "seed,model,accuracy,f1,auc,acc_ci_lo,acc_ci_hi,f1_ci_lo,f1_ci_hi,auc_ci_lo,auc_ci_hi\n";
  for (std::size_t si = 0; si < per_seed.size(); ++si)
    for (const auto& r : per_seed[si])
      per_seed_csv << opt.seeds[si] << ',' << r.name << ','
                   << bkan::fmt_double(r.acc) << ',' << bkan::fmt_double(r.f1) << ','
                   << bkan::fmt_double(r.auc) << ',' << bkan::fmt_double(r.acc_ci.lo)
                   << ',' << bkan::fmt_double(r.acc_ci.hi) << ','
                   << bkan::fmt_double(r.f1_ci.lo) << ',' << bkan::fmt_double(r.f1_ci.hi)
                   << ',' << bkan::fmt_double(r.auc_ci.lo) << ','
                   << bkan::fmt_double(r.auc_ci.hi) << '\n';

  fs::create_directories(opt.out_dir);
  write_file(fs::path(opt.out_dir) / "comparison.csv", metrics_csv(avg));
  write_file(fs::path(opt.out_dir) / "comparison_per_seed.csv", per_seed_csv.str());
  write_manifest(opt, "compare", {"comparison.csv", "comparison_per_seed.csv"});

  info(opt) << "seed-averaged over " << per_seed.size() << " seeds:\n";
  for (const auto& a : avg)
    info(opt) << "  " << a.name << ": acc " << a.acc << "  f1 " << a.f1
              << "  auc " << a.auc << "\n";
  return 0;
}

int cmd_predict(const Options& opt) {
  if (opt.model_path.empty()) throw std::invalid_argument("--model is required");
  if (opt.input_path.empty()) throw std::invalid_argument("--input is required");
  const bkan::BayesKanModel model = bkan::BayesKanModel::load(opt.model_path);
  const bkan::FeatureMatrix in = bkan::load_features(opt.input_path);

  const int want = model.spec().input_dim;
  if (in.n_cols != want) {
    std::ostringstream msg;
    msg << opt.input_path << " has " << in.n_cols << " columns but the model expects "
        << want;
    if (!model.feature_names.empty()) {
      if (in.n_cols < want)
        msg << "; first missing column: " << model.feature_names[static_cast<std::size_t>(in.n_cols)];
      else
        msg << "; first unexpected column index: " << want;
    }
    throw bkan::DataError(msg.str());
  }
  if (!in.header.empty() && !model.feature_names.empty()) {
    for (int c = 0; c < want; ++c)
      if (in.header[static_cast<std::size_t>(c)] != model.feature_names[static_cast<std::size_t>(c)])
        throw bkan::DataError("input column '" + in.header[static_cast<std::size_t>(c)] +
                              "' does not match the model's feature '" +
                              model.feature_names[static_cast<std::size_t>(c)] + "'");
  }

  const std::uint64_t base = eval_seed(opt.seed);
  std::ostringstream out;
  out << "index,mean_prob,ci_lo,ci_hi,total,aleatoric,epistemic,pred_class\n";
  for (int r = 0; r < in.n_rows; ++r) {
    const auto raw = std::span<const double>(in.values).subspan(
        static_cast<std::size_t>(r) * static_cast<std::size_t>(in.n_cols),
        static_cast<std::size_t>(in.n_cols));
    const std::vector<double> x = model.standardize_row(raw);
    const auto pred = bkan::mc_predict(model, x, opt.mc_samples, row_seed(base, r));
    const auto ci = bkan::credible_interval(pred, opt.ci_level);
    const auto u = bkan::decompose(pred);
    out << r << ',' << bkan::fmt_double(pred.mean_prob) << ','
        << bkan::fmt_double(ci.lo) << ',' << bkan::fmt_double(ci.hi) << ','
        << bkan::fmt_double(u.total) << ',' << bkan::fmt_double(u.aleatoric) << ','
        << bkan::fmt_double(u.epistemic) << ',' << (pred.mean_prob >= 0.5 ? 1 : 0)
        << '\n';
  }

  fs::create_directories(opt.out_dir);
  write_file(fs::path(opt.out_dir) / "predictions.csv", out.str());
  write_manifest(opt, "predict", {"predictions.csv"});
  info(opt) << "wrote predictions for " << in.n_rows << " rows\n";
  return 0;
}

int cmd_importance(const Options& opt) {
  if (opt.model_path.empty()) throw std::invalid_argument("--model is required");
  const bkan::BayesKanModel model = bkan::BayesKanModel::load(opt.model_path);
  bkan::Dataset full = load_dataset(opt);
  if (full.n_cols != model.spec().input_dim)
    throw bkan::DataError("dataset does not match the model's input dimension");

  bkan::Dataset data_std;
  if (model.has_standardization()) {
    bkan::StandardizeStats stats{model.input_mean, model.input_std};
    data_std = bkan::standardize_apply(stats, full);
  } else {
    data_std = bkan::standardize_apply(bkan::standardize_fit(full), full);
  }

  const auto ranking = bkan::feature_importance(model, data_std);
  std::ostringstream out;
  out << "rank,feature,score\n";
  for (std::size_t i = 0; i < ranking.size(); ++i)
    out << i + 1 << ',' << ranking[i].feature << ','
        << bkan::fmt_double(ranking[i].score) << '\n';

  fs::create_directories(opt.out_dir);
  write_file(fs::path(opt.out_dir) / "importance.csv", out.str());
  write_manifest(opt, "importance", {"importance.csv"});
  info(opt) << "top feature: " << ranking.front().feature << " (score "
            << ranking.front().score << ")\n";
  return 0;
}

int cmd_curves(const Options& opt) {
  if (opt.model_path.empty()) throw std::invalid_argument("--model is required");
  const bkan::BayesKanModel model = bkan::BayesKanModel::load(opt.model_path);
  const auto curve = bkan::export_spline_curve(model, opt.layer, opt.unit,
                                               opt.input_index, opt.points,
                                               opt.mc_samples, opt.seed);
  std::ostringstream out;
  out << "x,mean,lo,hi\n";
  for (const auto& p : curve)
    out << bkan::fmt_double(p.x) << ',' << bkan::fmt_double(p.mean) << ','
        << bkan::fmt_double(p.lo) << ',' << bkan::fmt_double(p.hi) << '\n';

  std::ostringstream name;
  name << "curve_l" << opt.layer << "_o" << opt.unit << "_i" << opt.input_index
       << ".csv";
  fs::create_directories(opt.out_dir);
  write_file(fs::path(opt.out_dir) / name.str(), out.str());
  write_manifest(opt, "curves", {name.str()});
  info(opt) << "wrote " << (fs::path(opt.out_dir) / name.str()).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian Kolmogorov-Arnold networks for tabular binary classification"};
  app.require_subcommand(1);
  Options opt;

  auto add_dataset_opts = [&](CLI::App* cmd) {
    cmd->add_option("--dataset", opt.dataset, "Dataset kind")
        ->check(CLI::IsMember({"pima", "heart", "csv"}))
        ->capture_default_str();
    cmd->add_option("--data", opt.data_path, "Path to the dataset CSV");
  };
  auto add_model_opts = [&](CLI::App* cmd) {
    cmd->add_option("--arch", opt.arch, "Architecture preset")
        ->check(CLI::IsMember({"bkan", "bayes-mlp"}))
        ->capture_default_str();
    cmd->add_option("--hidden-widths", opt.hidden_widths,
                    "Hidden layer widths (default: 2n+1,8,4)");
    cmd->add_option("--grid-size", opt.grid_size, "Spline grid intervals")->capture_default_str();
    cmd->add_option("--degree", opt.degree, "Spline degree")->capture_default_str();
    cmd->add_option("--domain-min", opt.domain_min, "Spline domain lower bound")->capture_default_str();
    cmd->add_option("--domain-max", opt.domain_max, "Spline domain upper bound")->capture_default_str();
    cmd->add_option("--prior-mu", opt.prior_mu, "Gaussian prior mean")->capture_default_str();
    cmd->add_option("--prior-sigma", opt.prior_sigma, "Gaussian prior stddev")->capture_default_str();
  };
  auto add_train_opts = [&](CLI::App* cmd) {
    cmd->add_option("--lr", opt.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--epochs", opt.epochs, "Max training epochs")->capture_default_str();
    cmd->add_option("--patience", opt.patience, "Early-stopping patience (epochs)")->capture_default_str();
    cmd->add_option("--min-delta", opt.min_delta, "Minimum val-nll improvement")->capture_default_str();
    cmd->add_option("--batch-size", opt.batch_size, "Minibatch size")->capture_default_str();
    cmd->add_option("--mc-train-samples", opt.mc_train_samples,
                    "Parameter draws per training step")->capture_default_str();
    cmd->add_option("--val-fraction", opt.val_fraction,
                    "Fraction of the training split held out for validation")->capture_default_str();
    cmd->add_option("--grad-clip", opt.grad_clip, "Elementwise gradient clip (0 = off)")->capture_default_str();
    cmd->add_option("--test-fraction", opt.test_fraction, "Held-out test fraction")->capture_default_str();
  };
  auto add_eval_opts = [&](CLI::App* cmd) {
    cmd->add_option("--mc-samples", opt.mc_samples, "Posterior samples per prediction")->capture_default_str();
    cmd->add_option("--bootstrap", opt.bootstrap, "Bootstrap resamples for metric CIs")->capture_default_str();
    cmd->add_option("--ci-level", opt.ci_level, "Interval level")->capture_default_str();
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    cmd->add_flag("--quiet", opt.quiet, "Suppress the stdout summary");
    cmd->set_config("--config", "", "Read options from an INI file (flags win)");
    cmd->allow_config_extras(false);
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model and write model.json + history.csv");
  add_dataset_opts(train_cmd);
  add_model_opts(train_cmd);
  add_train_opts(train_cmd);
  add_common(train_cmd);

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score a saved model on the held-out test split");
  add_dataset_opts(eval_cmd);
  eval_cmd->add_option("--model", opt.model_path, "Path to a bkan-model/1 file");
  eval_cmd->add_option("--test-fraction", opt.test_fraction, "Held-out test fraction")->capture_default_str();
  add_eval_opts(eval_cmd);
  add_common(eval_cmd);

  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "Train bkan, logistic-regression and traditional-nn on identical splits per seed");
  add_dataset_opts(compare_cmd);
  add_model_opts(compare_cmd);
  add_train_opts(compare_cmd);
  add_eval_opts(compare_cmd);
  compare_cmd->add_option("--seeds", opt.seeds, "Seeds to average over")->capture_default_str();
  add_common(compare_cmd);

  CLI::App* predict_cmd = app.add_subcommand("predict", "Per-row predictions with uncertainty");
  predict_cmd->add_option("--model", opt.model_path, "Path to a bkan-model/1 file");
  predict_cmd->add_option("--input", opt.input_path, "Feature CSV (no label column)");
  add_eval_opts(predict_cmd);
  add_common(predict_cmd);

  CLI::App* imp_cmd = app.add_subcommand("importance", "Feature importance ranking");
  add_dataset_opts(imp_cmd);
  imp_cmd->add_option("--model", opt.model_path, "Path to a bkan-model/1 file");
  add_common(imp_cmd);

  CLI::App* curves_cmd = app.add_subcommand("curves", "Export one edge function's curve with credible band");
  curves_cmd->add_option("--model", opt.model_path, "Path to a bkan-model/1 file");
  curves_cmd->add_option("--layer", opt.layer, "KAN layer index")->capture_default_str();
  curves_cmd->add_option("--unit", opt.unit, "Output unit index")->capture_default_str();
  curves_cmd->add_option("--input-index", opt.input_index, "Input unit index")->capture_default_str();
  curves_cmd->add_option("--points", opt.points, "Points across the spline domain")->capture_default_str();
  curves_cmd->add_option("--mc-samples", opt.mc_samples, "Draws for the credible band")->capture_default_str();
  add_common(curves_cmd);

  CLI::App* init_cmd = app.add_subcommand("init-config", "Write an example config file with all defaults");
  std::string config_out = "bkan.ini";
  init_cmd->add_option("--out", config_out, "Config file to write")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(opt);
    if (eval_cmd->parsed()) return cmd_evaluate(opt);
    if (compare_cmd->parsed()) return cmd_compare(opt);
    if (predict_cmd->parsed()) return cmd_predict(opt);
    if (imp_cmd->parsed()) return cmd_importance(opt);
    if (curves_cmd->parsed()) return cmd_curves(opt);
    if (init_cmd->parsed()) {
      const std::string content = train_cmd->config_to_str(true, true);
      write_file(config_out, content);
      std::cout << "wrote " << config_out << "\n";
      return 0;
    }
  } catch (const bkan::TrainingDivergence& e) {
    std::cerr << "error (training divergence): " << e.what() << "\n";
    return 3;
  } catch (const bkan::DataError& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return 2;
  }
  return 0;
}
