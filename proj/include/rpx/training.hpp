#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rpx/batch.hpp"
#include "rpx/dataset_io.hpp"
#include "rpx/domain_layer.hpp"
#include "rpx/mlp.hpp"
#include "rpx/problems.hpp"

namespace rpx {

enum class TrainMode { ssl, supervised };

std::string train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& name);

struct SplitFractions {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

// Seeded shuffle, then contiguous cuts. Deterministic; the three sets
// partition [0, n). Datasets smaller than 10 are rejected.
SplitIndices split_dataset(std::size_t n, const SplitFractions& fractions,
                           std::uint64_t seed);
SplitIndices split_dataset(const Dataset& ds, const SplitFractions& fractions,
                           std::uint64_t seed);

struct TrainConfig {
  Application app = Application::knapsack_cont;
  TrainMode mode = TrainMode::ssl;
  double nu = 50.0;    // penalty coefficient, ssl mode only
  double gamma = 0.1;  // binary-domain smoothing
  std::vector<std::size_t> hidden_dims = {128};
  Activation hidden_activation = Activation::tanh_;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  SplitFractions fractions;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_feasible_pct = 0.0;
  double val_mean_max_violation = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

// CSV with header epoch,train_loss,val_loss,val_feasible_pct,
// val_mean_max_violation,seconds.
void write_train_log_csv(std::ostream& os, const TrainLog& log);
void write_train_log_csv(const std::string& path, const TrainLog& log);

// Everything needed to reproduce predictions: network, domain layer,
// feature standardization, and the training setup that produced them.
struct TrainedModel {
  Application app = Application::knapsack_cont;
  TrainMode mode = TrainMode::ssl;
  MlpModel model;
  DomainLayer layer;  // stored in train mode; evaluation flips to test
  FeatureStats stats;
  double nu = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  TrainedModel best;  // snapshot with lowest validation loss
  TrainLog log;
  SplitIndices split;
};

// The domain layer each application trains through.
DomainLayer domain_layer_for(Application app, double gamma);

// Mini-batch Adam on the mean self-supervised loss. Never touches labels.
TrainResult train_ssl(const TrainConfig& cfg, const Dataset& ds,
                      ExecPolicy policy = ExecPolicy::openmp);

// Same loop with the squared-error loss against solved labels.
TrainResult train_supervised(const TrainConfig& cfg, const Dataset& ds,
                             const LabelSet& labels,
                             ExecPolicy policy = ExecPolicy::openmp);

// JSON checkpoint, format_version 1. load(save(m)) is bitwise identical.
void save_checkpoint(const TrainedModel& trained, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);

}  // namespace rpx
