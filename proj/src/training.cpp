#include "rpx/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rpx/rng.hpp"

namespace rpx {

using nlohmann::json;

std::string train_mode_name(TrainMode m) {
  return m == TrainMode::ssl ? "ssl" : "supervised";
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "ssl") return TrainMode::ssl;
  if (name == "supervised") return TrainMode::supervised;
  throw std::invalid_argument("unknown training mode: " + name);
}

SplitIndices split_dataset(std::size_t n, const SplitFractions& fractions,
                           std::uint64_t seed) {
  require(n >= 10, "split_dataset: need at least 10 instances");
  require(fractions.train >= 0.0 && fractions.val >= 0.0 && fractions.test >= 0.0,
          "split_dataset: fractions must be nonnegative");
  require(std::fabs(fractions.train + fractions.val + fractions.test - 1.0) < 1e-9,
          "split_dataset: fractions must sum to 1");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 1000000007));
  shuffle(perm, rng);

  const std::size_t n_train =
      static_cast<std::size_t>(fractions.train * static_cast<double>(n));
  const std::size_t n_val =
      static_cast<std::size_t>(fractions.val * static_cast<double>(n));
  require(n_train + n_val <= n, "split_dataset: fractions leave no test set");

  SplitIndices idx;
  idx.train.assign(perm.begin(), perm.begin() + n_train);
  idx.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  idx.test.assign(perm.begin() + n_train + n_val, perm.end());
  return idx;
}

SplitIndices split_dataset(const Dataset& ds, const SplitFractions& fractions,
                           std::uint64_t seed) {
  return split_dataset(ds.size(), fractions, seed);
}

void write_train_log_csv(std::ostream& os, const TrainLog& log) {
  os << "epoch,train_loss,val_loss,val_feasible_pct,val_mean_max_violation,"
        "seconds\n";
  os.precision(17);
  for (const EpochRecord& r : log.epochs)
    os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ','
       << r.val_feasible_pct << ',' << r.val_mean_max_violation << ','
       << r.seconds << '\n';
}

void write_train_log_csv(const std::string& path, const TrainLog& log) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_train_log_csv(os, log);
}

DomainLayer domain_layer_for(Application app, double gamma) {
  DomainLayer layer;
  layer.mode = LayerMode::train;
  layer.gamma = gamma;
  switch (app) {
    case Application::knapsack_cont:
      layer.kind = DomainKind::unit_box_sigmoid;
      break;
    case Application::knapsack_bin:
      layer.kind = DomainKind::binary;
      break;
    case Application::inventory:
      // The inventory x block is scaled per instance inside
      // decision_parameterize; the kind here is descriptive only.
      layer.kind = DomainKind::scaled_box_sigmoid;
      break;
  }
  return layer;
}

namespace {

void check_config(const TrainConfig& cfg, const Dataset& ds) {
  require(cfg.app == ds.app, "train: config app does not match dataset app");
  require(cfg.epochs >= 1, "train: epochs must be >= 1");
  require(cfg.batch_size >= 1, "train: batch size must be >= 1");
  require(cfg.learning_rate > 0.0, "train: learning rate must be > 0");
  require(cfg.gamma > 0.0, "train: gamma must be > 0");
  if (cfg.mode == TrainMode::ssl)
    require(cfg.nu > 0.0, "train: nu must be > 0 in ssl mode");
}

MlpModel build_network(const TrainConfig& cfg, const Dataset& ds) {
  std::vector<std::size_t> dims;
  dims.push_back(feature_dim(ds));
  for (std::size_t h : cfg.hidden_dims) {
    require(h >= 1, "train: hidden dims must be >= 1");
    dims.push_back(h);
  }
  dims.push_back(decision_dim(ds));
  return make_mlp(dims, cfg.hidden_activation, mix_seed(cfg.seed, 1000000009));
}

// Shared epoch loop; `batch_fn` runs one minibatch and returns its summed
// loss, `val_fn` the validation loss used for model selection.
template <typename BatchFn, typename ValFn>
TrainResult run_training(const TrainConfig& cfg, const Dataset& ds,
                         ExecPolicy policy, BatchFn&& batch_fn, ValFn&& val_fn) {
  check_config(cfg, ds);
  TrainResult res;
  res.split = split_dataset(ds, cfg.fractions, cfg.seed);

  TrainedModel trained;
  trained.app = cfg.app;
  trained.mode = cfg.mode;
  trained.model = build_network(cfg, ds);
  trained.layer = domain_layer_for(cfg.app, cfg.gamma);
  trained.stats = compute_feature_stats(ds, res.split.train);
  trained.nu = cfg.mode == TrainMode::ssl ? cfg.nu : 0.0;
  trained.seed = cfg.seed;

  AdamState adam = AdamState::init(trained.model, cfg.learning_rate);
  Rng shuffle_rng(mix_seed(cfg.seed, 1000000021));
  const PenaltyConfig penalty{cfg.mode == TrainMode::ssl ? cfg.nu : 1.0};

  res.best = trained;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order = res.split.train;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle(order, shuffle_rng);

    double train_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(start + cfg.batch_size, order.size());
      const std::vector<std::size_t> batch(order.begin() + start,
                                           order.begin() + stop);
      if (batch.empty()) continue;
      const double batch_sum =
          batch_fn(trained, batch, penalty, policy, adam);
      if (!std::isfinite(batch_sum))
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            ", batch " + std::to_string(batch_index));
      train_sum += batch_sum;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_sum / static_cast<double>(order.size());
    rec.val_loss = val_fn(trained, res.split.val, penalty, policy);
    const BatchMetrics vm =
        batch_metrics(trained.model, ds, res.split.val, trained.stats,
                      trained.layer, penalty, policy);
    rec.val_feasible_pct = vm.feasible_pct();
    rec.val_mean_max_violation = vm.mean_max_violation();
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.log.epochs.push_back(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      res.best = trained;
    }
  }
  return res;
}

}  // namespace

TrainResult train_ssl(const TrainConfig& cfg, const Dataset& ds,
                      ExecPolicy policy) {
  require(cfg.mode == TrainMode::ssl, "train_ssl: config mode must be ssl");
  auto batch_fn = [&](TrainedModel& t, const std::vector<std::size_t>& batch,
                      const PenaltyConfig& penalty, ExecPolicy pol,
                      AdamState& adam) {
    const SslBatchResult r = ssl_loss_batch(t.model, ds, batch, t.stats,
                                            t.layer, penalty, pol);
    adam_step(t.model, r.grad, adam);
    double sum = 0.0;
    for (double v : r.per_instance_total) sum += v;
    return sum;
  };
  auto val_fn = [&](const TrainedModel& t,
                    const std::vector<std::size_t>& val,
                    const PenaltyConfig& penalty, ExecPolicy pol) {
    return batch_metrics(t.model, ds, val, t.stats, t.layer, penalty, pol)
        .mean_loss();
  };
  return run_training(cfg, ds, policy, batch_fn, val_fn);
}

TrainResult train_supervised(const TrainConfig& cfg, const Dataset& ds,
                             const LabelSet& labels, ExecPolicy policy) {
  require(cfg.mode == TrainMode::supervised,
          "train_supervised: config mode must be supervised");
  auto batch_fn = [&](TrainedModel& t, const std::vector<std::size_t>& batch,
                      const PenaltyConfig&, ExecPolicy pol, AdamState& adam) {
    const SlBatchResult r =
        sl_loss_batch(t.model, ds, batch, t.stats, t.layer, labels, pol);
    adam_step(t.model, r.grad, adam);
    double sum = 0.0;
    for (double v : r.per_instance_total) sum += v;
    return sum;
  };
  auto val_fn = [&](const TrainedModel& t, const std::vector<std::size_t>& val,
                    const PenaltyConfig&, ExecPolicy pol) {
    if (val.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t idx : val) {
      if (!labels.has(idx))
        throw std::runtime_error(
            "supervised training needs labels for every validation instance; "
            "instance " + std::to_string(idx) +
            " is missing. Run the solve command on this dataset first.");
      const Vec z = standardize(feature_vector(ds, idx), t.stats);
      const Vec w = forward(t.model, z);
      const Vec decision = decision_parameterize(ds, idx, t.layer, w);
      sum += sl_loss(decision, labels.x_star[labels.position(idx)]);
    }
    return sum / static_cast<double>(val.size());
  };
  return run_training(cfg, ds, policy, batch_fn, val_fn);
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const TrainedModel& trained, const std::string& path) {
  json doc;
  doc["format_version"] = 1;
  doc["app"] = application_name(trained.app);
  doc["mode"] = train_mode_name(trained.mode);
  doc["layer_dims"] = trained.model.layer_dims;
  json weights = json::array();
  for (const DenseMatrix& w : trained.model.weights) weights.push_back(w.data);
  doc["weights"] = std::move(weights);
  doc["biases"] = trained.model.biases;
  doc["hidden_activation"] = activation_name(trained.model.hidden_activation);
  doc["domain_layer"] = domain_kind_name(trained.layer.kind);
  doc["gamma"] = trained.layer.gamma;
  doc["upper"] = trained.layer.upper;
  doc["nu"] = trained.nu;
  doc["seed"] = trained.seed;
  doc["feature_mean"] = trained.stats.mean;
  doc["feature_stddev"] = trained.stats.stddev;

  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << doc.dump(2) << '\n';
}

TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  json doc = json::parse(is);

  if (!doc.contains("format_version") || !doc["format_version"].is_number() ||
      doc["format_version"].get<int>() != 1)
    throw std::runtime_error("checkpoint: unsupported format_version");

  TrainedModel trained;
  trained.app = application_from_name(doc.at("app").get<std::string>());
  trained.mode = train_mode_from_name(doc.at("mode").get<std::string>());
  trained.model.layer_dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
  trained.model.hidden_activation =
      activation_from_name(doc.at("hidden_activation").get<std::string>());
  trained.model.seed = doc.at("seed").get<std::uint64_t>();

  const auto& dims = trained.model.layer_dims;
  if (dims.size() < 2) throw std::runtime_error("checkpoint: bad layer_dims");
  const json& weights = doc.at("weights");
  const json& biases = doc.at("biases");
  if (weights.size() != dims.size() - 1 || biases.size() != dims.size() - 1)
    throw std::runtime_error("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseMatrix w(dims[l + 1], dims[l]);
    Vec flat = weights[l].get<Vec>();
    if (flat.size() != w.data.size())
      throw std::runtime_error("checkpoint: weight shape mismatch");
    w.data = std::move(flat);
    trained.model.weights.push_back(std::move(w));
    Vec b = biases[l].get<Vec>();
    if (b.size() != dims[l + 1])
      throw std::runtime_error("checkpoint: bias shape mismatch");
    trained.model.biases.push_back(std::move(b));
  }

  trained.layer.kind =
      domain_kind_from_name(doc.at("domain_layer").get<std::string>());
  trained.layer.mode = LayerMode::train;
  trained.layer.gamma = doc.at("gamma").get<double>();
  trained.layer.upper = doc.at("upper").get<Vec>();
  trained.nu = doc.at("nu").get<double>();
  trained.seed = doc.at("seed").get<std::uint64_t>();
  trained.stats.mean = doc.at("feature_mean").get<Vec>();
  trained.stats.stddev = doc.at("feature_stddev").get<Vec>();
  return trained;
}

}  // namespace rpx
