#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "rpx/solvers.hpp"
#include "rpx/training.hpp"

using namespace rpx;

namespace {

bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool models_bitwise_equal(const MlpModel& a, const MlpModel& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l].rows != b.weights[l].rows ||
        a.weights[l].cols != b.weights[l].cols)
      return false;
    if (!bitwise_equal(a.weights[l].data, b.weights[l].data)) return false;
    if (!bitwise_equal(a.biases[l], b.biases[l])) return false;
  }
  return true;
}

Dataset small_knapsack(std::uint64_t seed, std::size_t count = 24) {
  KnapsackGenConfig cfg;
  cfg.dim = 4;
  cfg.rows = 2;
  cfg.count = count;
  cfg.seed = seed;
  cfg.rho = 0.1;
  return generate_knapsack(cfg);
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.app = Application::knapsack_cont;
  cfg.mode = TrainMode::ssl;
  cfg.nu = 10.0;
  cfg.hidden_dims = {8};
  cfg.epochs = 5;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.seed = seed;
  return cfg;
}

LabelSet solve_all(const Dataset& ds) {
  LabelSet labels;
  labels.app = ds.app;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    SolveResult r = solve_reference(ds, i);
    REQUIRE(r.status == SolveStatus::optimal);
    labels.ids.push_back(i);
    labels.x_star.push_back(r.x);
    labels.f_star.push_back(r.objective);
    labels.solve_time.push_back(r.solve_time);
  }
  return labels;
}

std::string temp_path(const char* stem) {
  return std::string("/tmp/rpx_training_test_") + stem + ".json";
}

}  // namespace

TEST_CASE("training mode names round trip") {
  CHECK(train_mode_name(TrainMode::ssl) == "ssl");
  CHECK(train_mode_name(TrainMode::supervised) == "supervised");
  CHECK(train_mode_from_name("ssl") == TrainMode::ssl);
  CHECK(train_mode_from_name("supervised") == TrainMode::supervised);
  CHECK_THROWS_WITH_AS(train_mode_from_name("sl"), "unknown training mode: sl",
                       std::invalid_argument);
}

TEST_CASE("split sizes follow the fractions with floor rounding") {
  SplitFractions fr;  // 0.70 / 0.15 / 0.15
  SplitIndices s = split_dataset(100, fr, 7);
  CHECK(s.train.size() == 70);
  CHECK(s.val.size() == 15);
  CHECK(s.test.size() == 15);

  SplitIndices tiny = split_dataset(10, fr, 7);
  CHECK(tiny.train.size() == 7);
  CHECK(tiny.val.size() == 1);
  CHECK(tiny.test.size() == 2);
}

TEST_CASE("split is a partition of the index range") {
  SplitIndices s = split_dataset(137, SplitFractions{}, 99);
  std::vector<std::size_t> all;
  all.insert(all.end(), s.train.begin(), s.train.end());
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  REQUIRE(all.size() == 137);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("split is deterministic in the seed and shuffled by it") {
  SplitIndices a = split_dataset(60, SplitFractions{}, 11);
  SplitIndices b = split_dataset(60, SplitFractions{}, 11);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);

  SplitIndices c = split_dataset(60, SplitFractions{}, 12);
  CHECK(a.train != c.train);

  // The dataset overload defers to the count overload.
  Dataset ds = small_knapsack(5, 60);
  SplitIndices d = split_dataset(ds, SplitFractions{}, 11);
  CHECK(d.train == a.train);
}

TEST_CASE("split validation") {
  CHECK_THROWS_AS(split_dataset(9, SplitFractions{}, 0), std::invalid_argument);
  SplitFractions neg{0.9, -0.1, 0.2};
  CHECK_THROWS_AS(split_dataset(50, neg, 0), std::invalid_argument);
  SplitFractions off{0.5, 0.3, 0.3};
  CHECK_THROWS_AS(split_dataset(50, off, 0), std::invalid_argument);
}

TEST_CASE("each application trains through its own domain layer") {
  DomainLayer cont = domain_layer_for(Application::knapsack_cont, 0.1);
  CHECK(cont.kind == DomainKind::unit_box_sigmoid);
  CHECK(cont.mode == LayerMode::train);

  DomainLayer bin = domain_layer_for(Application::knapsack_bin, 0.25);
  CHECK(bin.kind == DomainKind::binary);
  CHECK(bin.gamma == 0.25);

  DomainLayer inv = domain_layer_for(Application::inventory, 0.1);
  CHECK(inv.kind == DomainKind::scaled_box_sigmoid);
}

TEST_CASE("ssl training runs and logs one record per epoch") {
  Dataset ds = small_knapsack(21);
  TrainConfig cfg = small_config(3);
  TrainResult res = train_ssl(cfg, ds);

  REQUIRE(res.log.epochs.size() == cfg.epochs);
  for (std::size_t e = 0; e < res.log.epochs.size(); ++e) {
    const EpochRecord& r = res.log.epochs[e];
    CHECK(r.epoch == e);
    CHECK(std::isfinite(r.train_loss));
    CHECK(std::isfinite(r.val_loss));
    CHECK(r.val_feasible_pct >= 0.0);
    CHECK(r.val_feasible_pct <= 100.0);
    CHECK(r.val_mean_max_violation >= 0.0);
    CHECK(r.seconds >= 0.0);
  }

  CHECK(res.best.app == cfg.app);
  CHECK(res.best.mode == TrainMode::ssl);
  CHECK(res.best.nu == cfg.nu);
  CHECK(res.best.seed == cfg.seed);
  CHECK(res.best.layer.mode == LayerMode::train);

  // Standardization stats come from the train split only.
  FeatureStats want = compute_feature_stats(ds, res.split.train);
  CHECK(bitwise_equal(res.best.stats.mean, want.mean));
  CHECK(bitwise_equal(res.best.stats.stddev, want.stddev));
}

TEST_CASE("the returned snapshot attains the best logged validation loss") {
  Dataset ds = small_knapsack(22);
  TrainConfig cfg = small_config(4);
  cfg.epochs = 8;
  TrainResult res = train_ssl(cfg, ds);

  double best_logged = std::numeric_limits<double>::infinity();
  for (const EpochRecord& r : res.log.epochs)
    best_logged = std::min(best_logged, r.val_loss);

  const PenaltyConfig penalty{cfg.nu};
  const double recomputed =
      batch_metrics(res.best.model, ds, res.split.val, res.best.stats,
                    res.best.layer, penalty, ExecPolicy::openmp)
          .mean_loss();
  CHECK(recomputed == doctest::Approx(best_logged).epsilon(1e-12));
}

TEST_CASE("training is deterministic for a fixed seed") {
  Dataset ds = small_knapsack(23);
  TrainConfig cfg = small_config(5);

  TrainResult a = train_ssl(cfg, ds);
  TrainResult b = train_ssl(cfg, ds);
  CHECK(models_bitwise_equal(a.best.model, b.best.model));
  CHECK(a.split.train == b.split.train);
  REQUIRE(a.log.epochs.size() == b.log.epochs.size());
  for (std::size_t e = 0; e < a.log.epochs.size(); ++e) {
    CHECK(a.log.epochs[e].train_loss == b.log.epochs[e].train_loss);
    CHECK(a.log.epochs[e].val_loss == b.log.epochs[e].val_loss);
  }

  // Serial and parallel execution agree bit for bit as well.
  TrainResult c = train_ssl(cfg, ds, ExecPolicy::serial);
  CHECK(models_bitwise_equal(a.best.model, c.best.model));

  cfg.seed = 6;
  TrainResult d = train_ssl(cfg, ds);
  CHECK_FALSE(models_bitwise_equal(a.best.model, d.best.model));
}

TEST_CASE("ssl training decreases the surrogate loss on a tiny set") {
  Dataset ds = small_knapsack(31, 10);
  TrainConfig cfg = small_config(7);
  cfg.epochs = 60;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  TrainResult res = train_ssl(cfg, ds);
  CHECK(res.log.epochs.back().train_loss < res.log.epochs.front().train_loss);
}

TEST_CASE("supervised training overfits a tiny labelled set") {
  Dataset ds = small_knapsack(32, 10);
  LabelSet labels = solve_all(ds);
  TrainConfig cfg = small_config(8);
  cfg.mode = TrainMode::supervised;
  cfg.epochs = 120;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  TrainResult res = train_supervised(cfg, ds, labels);

  // The squared-error loss is nonnegative, so a halving is meaningful.
  const double first = res.log.epochs.front().train_loss;
  const double last = res.log.epochs.back().train_loss;
  CHECK(last <= 0.5 * first);
  CHECK(res.best.nu == 0.0);
  CHECK(res.best.mode == TrainMode::supervised);
}

TEST_CASE("supervised training requires labels up front") {
  Dataset ds = small_knapsack(33, 12);
  LabelSet labels = solve_all(ds);
  labels.ids.resize(4);  // drop most labels
  labels.x_star.resize(4);
  labels.f_star.resize(4);
  labels.solve_time.resize(4);

  TrainConfig cfg = small_config(9);
  cfg.mode = TrainMode::supervised;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train_supervised(cfg, ds, labels), std::runtime_error);
}

TEST_CASE("training rejects inconsistent configuration") {
  Dataset ds = small_knapsack(34, 12);
  TrainConfig cfg = small_config(10);

  TrainConfig bad = cfg;
  bad.app = Application::inventory;
  CHECK_THROWS_AS(train_ssl(bad, ds), std::invalid_argument);

  bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(train_ssl(bad, ds), std::invalid_argument);

  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train_ssl(bad, ds), std::invalid_argument);

  bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train_ssl(bad, ds), std::invalid_argument);

  bad = cfg;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(train_ssl(bad, ds), std::invalid_argument);

  bad = cfg;
  bad.nu = 0.0;
  CHECK_THROWS_AS(train_ssl(bad, ds), std::invalid_argument);

  bad = cfg;
  bad.hidden_dims = {8, 0};
  CHECK_THROWS_AS(train_ssl(bad, ds), std::invalid_argument);

  bad = cfg;
  bad.mode = TrainMode::supervised;
  CHECK_THROWS_AS(train_ssl(bad, ds), std::invalid_argument);
  bad.mode = TrainMode::ssl;
  CHECK_THROWS_AS(train_supervised(bad, ds, LabelSet{}), std::invalid_argument);
}

TEST_CASE("poisoned instances abort training instead of learning from NaN") {
  Dataset ds = small_knapsack(35, 12);
  // Poison every instance so the bad value reaches the train split no
  // matter how the seeded shuffle assigns it.
  for (KnapsackInstance& inst : ds.knapsack)
    inst.values[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg = small_config(11);
  cfg.epochs = 1;
  // The NaN propagates through the features into the network output and
  // the domain layer refuses it; nothing is silently learned.
  CHECK_THROWS_WITH_AS(train_ssl(cfg, ds), "domain layer: non-finite input",
                       std::invalid_argument);
}

TEST_CASE("train log csv carries the fixed header and one line per epoch") {
  TrainLog log;
  log.epochs.push_back({0, 1.5, 2.5, 50.0, 0.25, 0.01});
  log.epochs.push_back({1, 1.25, 2.0, 75.0, 0.125, 0.01});

  std::ostringstream os;
  write_train_log_csv(os, log);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line ==
        "epoch,train_loss,val_loss,val_feasible_pct,val_mean_max_violation,"
        "seconds");
  REQUIRE(std::getline(is, line));
  CHECK(line.rfind("0,1.5,2.5,50,0.25,", 0) == 0);
  REQUIRE(std::getline(is, line));
  CHECK(line.rfind("1,1.25,2,75,0.125,", 0) == 0);
  CHECK_FALSE(std::getline(is, line));
}

TEST_CASE("checkpoints round trip bitwise") {
  Dataset ds = small_knapsack(36);
  TrainConfig cfg = small_config(12);
  cfg.epochs = 2;
  TrainResult res = train_ssl(cfg, ds);

  const std::string path = temp_path("roundtrip");
  save_checkpoint(res.best, path);
  TrainedModel loaded = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(loaded.app == res.best.app);
  CHECK(loaded.mode == res.best.mode);
  CHECK(loaded.nu == res.best.nu);
  CHECK(loaded.seed == res.best.seed);
  CHECK(loaded.layer.kind == res.best.layer.kind);
  CHECK(loaded.layer.gamma == res.best.layer.gamma);
  CHECK(loaded.layer.mode == LayerMode::train);
  CHECK(loaded.model.hidden_activation == res.best.model.hidden_activation);
  CHECK(models_bitwise_equal(loaded.model, res.best.model));
  CHECK(bitwise_equal(loaded.stats.mean, res.best.stats.mean));
  CHECK(bitwise_equal(loaded.stats.stddev, res.best.stats.stddev));

  // A loaded model reproduces the saved model's predictions exactly.
  Vec z = standardize(feature_vector(ds, 0), loaded.stats);
  CHECK(bitwise_equal(forward(loaded.model, z), forward(res.best.model, z)));
}

TEST_CASE("checkpoints from other format versions are refused") {
  Dataset ds = small_knapsack(37);
  TrainConfig cfg = small_config(13);
  cfg.epochs = 1;
  TrainResult res = train_ssl(cfg, ds);

  const std::string path = temp_path("tampered");
  save_checkpoint(res.best, path);

  nlohmann::json doc;
  {
    std::ifstream is(path);
    REQUIRE(bool(is));
    is >> doc;
  }
  doc["format_version"] = 2;
  {
    std::ofstream os(path);
    os << doc.dump();
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path),
                       "checkpoint: unsupported format_version",
                       std::runtime_error);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_checkpoint("/tmp/rpx_no_such_checkpoint.json"),
                  std::runtime_error);
}

TEST_CASE("inventory training runs end to end") {
  InventoryGenConfig gen;
  gen.retailers = 3;
  gen.factors = 2;
  gen.count = 16;
  gen.seed = 40;
  gen.rho = 0.2;
  Dataset ds = generate_inventory(gen);

  TrainConfig cfg;
  cfg.app = Application::inventory;
  cfg.mode = TrainMode::ssl;
  cfg.nu = 10.0;
  cfg.hidden_dims = {8};
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 14;
  TrainResult res = train_ssl(cfg, ds);
  REQUIRE(res.log.epochs.size() == 3);
  for (const EpochRecord& r : res.log.epochs) CHECK(std::isfinite(r.train_loss));

  const std::string path = temp_path("inventory");
  save_checkpoint(res.best, path);
  TrainedModel loaded = load_checkpoint(path);
  std::remove(path.c_str());
  CHECK(models_bitwise_equal(loaded.model, res.best.model));
  CHECK(loaded.layer.kind == DomainKind::scaled_box_sigmoid);
}
