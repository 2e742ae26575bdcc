// robust_proxy: generate instances, solve them exactly, train proxies,
// evaluate, sweep penalty values, and benchmark proxy vs solver.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpx/batch.hpp"
#include "rpx/dataset_io.hpp"
#include "rpx/evaluation.hpp"
#include "rpx/problems.hpp"
#include "rpx/rng.hpp"
#include "rpx/solvers.hpp"
#include "rpx/training.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rpx;

namespace {

struct RunConfig {
  std::string app = "knapsack-cont";
  std::size_t dx = 20;
  std::size_t m = 5;
  std::size_t nretail = 10;
  std::size_t k = 3;
  double rho = std::numeric_limits<double>::quiet_NaN();  // app default if unset
  std::string norm = "box";
  double nu = 50.0;
  double gamma = 0.1;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::vector<std::size_t> hidden = {128};
  std::string mode = "ssl";
  std::vector<double> sweep_nus = {1.0, 10.0, 20.0, 50.0};
  bool no_oracle = false;
  std::string out = "out";
  std::string dataset;
  std::string labels;
  std::string checkpoint;
  int jobs = 0;
  bool serial = false;
  std::size_t batch = 256;  // bench batch size
  int reps = 5;
};

double default_rho(const std::string& app) {
  return app == "inventory" ? 0.5 : 0.1;
}

// Reads config-file values into cfg before CLI11 parses the command line,
// so flags always win regardless of their position.
void apply_config_file(const std::string& path, RunConfig& cfg,
                       bool& seed_in_config, bool& nu_in_config) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  json doc = json::parse(is);
  const auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("app", cfg.app);
  get("dx", cfg.dx);
  get("m", cfg.m);
  get("nretail", cfg.nretail);
  get("k", cfg.k);
  get("rho", cfg.rho);
  get("norm", cfg.norm);
  get("nu", cfg.nu);
  get("gamma", cfg.gamma);
  get("count", cfg.count);
  get("seed", cfg.seed);
  get("epochs", cfg.epochs);
  get("batch-size", cfg.batch_size);
  get("lr", cfg.lr);
  get("hidden", cfg.hidden);
  get("mode", cfg.mode);
  get("sweep-nus", cfg.sweep_nus);
  get("no-oracle", cfg.no_oracle);
  get("out", cfg.out);
  get("dataset", cfg.dataset);
  get("labels", cfg.labels);
  get("checkpoint", cfg.checkpoint);
  get("jobs", cfg.jobs);
  get("serial", cfg.serial);
  get("batch", cfg.batch);
  get("reps", cfg.reps);
  seed_in_config = doc.contains("seed");
  nu_in_config = doc.contains("nu");
}

json effective_config(const RunConfig& cfg) {
  json doc;
  doc["app"] = cfg.app;
  doc["dx"] = cfg.dx;
  doc["m"] = cfg.m;
  doc["nretail"] = cfg.nretail;
  doc["k"] = cfg.k;
  doc["rho"] = cfg.rho;
  doc["norm"] = cfg.norm;
  doc["nu"] = cfg.nu;
  doc["gamma"] = cfg.gamma;
  doc["count"] = cfg.count;
  doc["seed"] = cfg.seed;
  doc["epochs"] = cfg.epochs;
  doc["batch-size"] = cfg.batch_size;
  doc["lr"] = cfg.lr;
  doc["hidden"] = cfg.hidden;
  doc["mode"] = cfg.mode;
  doc["sweep-nus"] = cfg.sweep_nus;
  doc["no-oracle"] = cfg.no_oracle;
  doc["out"] = cfg.out;
  doc["dataset"] = cfg.dataset;
  doc["labels"] = cfg.labels;
  doc["checkpoint"] = cfg.checkpoint;
  doc["jobs"] = cfg.jobs;
  doc["serial"] = cfg.serial;
  doc["batch"] = cfg.batch;
  doc["reps"] = cfg.reps;
  return doc;
}

void write_config_echo(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  std::ofstream os(fs::path(cfg.out) / "config.json");
  if (!os) throw std::runtime_error("cannot write config echo in " + cfg.out);
  os << effective_config(cfg).dump(2) << '\n';
}

ExecPolicy policy_for(const RunConfig& cfg) {
  return cfg.serial ? ExecPolicy::serial : ExecPolicy::openmp;
}

void apply_jobs(const RunConfig& cfg) {
#ifdef _OPENMP
  if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
#else
  (void)cfg;
#endif
}

std::string trim_number(double v) {
  std::ostringstream ss;
  ss << v;  // default precision drops trailing zeros for grid values
  return ss.str();
}

Dataset generate_from_config(const RunConfig& cfg) {
  if (cfg.app == "inventory") {
    InventoryGenConfig g;
    g.retailers = cfg.nretail;
    g.factors = cfg.k;
    g.count = cfg.count;
    g.rho = cfg.rho;
    g.norm_kind = norm_from_name(cfg.norm);
    g.seed = cfg.seed;
    return generate_inventory(g);
  }
  KnapsackGenConfig g;
  g.dim = cfg.dx;
  g.rows = cfg.m;
  g.count = cfg.count;
  g.rho = cfg.rho;
  g.norm_kind = norm_from_name(cfg.norm);
  g.seed = cfg.seed;
  g.binary_domain = cfg.app == "knapsack-bin";
  return generate_knapsack(g);
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig tc;
  tc.app = application_from_name(cfg.app);
  tc.mode = train_mode_from_name(cfg.mode);
  tc.nu = cfg.nu;
  tc.gamma = cfg.gamma;
  tc.hidden_dims = cfg.hidden;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.lr;
  tc.seed = cfg.seed;
  return tc;
}

void write_instances_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "id,f_hat,f_star,regret,abs_gap,max_violation,feasible,proxy_time_s,"
        "solver_time_s\n";
  os.precision(17);
  for (const InstanceEval& r : report.rows) {
    os << r.id << ',' << r.f_hat << ',';
    if (r.f_star) os << *r.f_star;
    os << ',';
    if (r.regret) os << *r.regret;
    os << ',';
    if (r.f_star) os << r.abs_gap;
    os << ',' << r.max_violation << ',' << (r.feasible ? 1 : 0) << ','
       << r.proxy_time_s << ',' << r.solver_time_s << '\n';
  }
}

void report_warnings(const RunConfig& cfg, const EvalReport& report) {
  if (report.warnings.empty()) return;
  std::ofstream os(fs::path(cfg.out) / "warnings.txt");
  for (const std::string& w : report.warnings) {
    os << w << '\n';
    std::cerr << "warning: " << w << '\n';
  }
}

int cmd_gen(const RunConfig& cfg) {
  apply_jobs(cfg);
  const Dataset ds = generate_from_config(cfg);
  write_config_echo(cfg);
  const fs::path out = fs::path(cfg.out) / "dataset.jsonl";
  write_dataset_jsonl(out.string(), ds);
  std::cout << "wrote " << out.string() << ": " << ds.size()
            << " instances, seed " << cfg.seed << "\n";
  return 0;
}

int cmd_solve(const RunConfig& cfg) {
  apply_jobs(cfg);
  if (cfg.dataset.empty())
    throw std::runtime_error("solve: --dataset is required");
  const Dataset ds = read_dataset_jsonl(cfg.dataset);

  LabelSet labels;
  labels.app = ds.app;
  labels.ids.resize(ds.size());
  labels.x_star.resize(ds.size());
  labels.f_star.resize(ds.size());
  labels.solve_time.resize(ds.size());
  for_each_index(ds.size(), policy_for(cfg), [&](std::size_t i) {
    const SolveResult sr = solve_reference(ds, i);
    if (sr.status != SolveStatus::optimal)
      throw std::runtime_error("solve: instance " + std::to_string(i) +
                               " finished with status " + status_name(sr.status));
    labels.ids[i] = i;
    labels.x_star[i] = sr.x;
    labels.f_star[i] = sr.objective;
    labels.solve_time[i] = sr.solve_time;
  });

  write_config_echo(cfg);
  const fs::path out = fs::path(cfg.out) / "labels.jsonl";
  write_labels_jsonl(out.string(), labels);
  std::cout << "wrote " << out.string() << ": " << labels.size()
            << " solutions\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, bool nu_given) {
  apply_jobs(cfg);
  if (cfg.dataset.empty())
    throw std::runtime_error("train: --dataset is required");
  if (cfg.mode == "supervised" && nu_given)
    throw std::runtime_error("train: --nu is only accepted in ssl mode");
  const Dataset ds = read_dataset_jsonl(cfg.dataset);
  const TrainConfig tc = train_config_from(cfg);

  TrainResult result;
  if (tc.mode == TrainMode::ssl) {
    result = train_ssl(tc, ds, policy_for(cfg));
  } else {
    if (cfg.labels.empty())
      throw std::runtime_error(
          "train: supervised mode needs --labels; run the solve command "
          "first");
    if (!fs::exists(cfg.labels))
      throw std::runtime_error("train: no labels at " + cfg.labels +
                               "; run the solve command first");
    const LabelSet labels = read_labels_jsonl(cfg.labels, ds.app);
    result = train_supervised(tc, ds, labels, policy_for(cfg));
  }

  write_config_echo(cfg);
  const fs::path ckpt = fs::path(cfg.out) / "checkpoint.json";
  save_checkpoint(result.best, ckpt.string());
  write_train_log_csv((fs::path(cfg.out) / "train_log.csv").string(),
                      result.log);
  const EpochRecord& last = result.log.epochs.back();
  std::cout << "wrote " << ckpt.string() << "; final epoch " << last.epoch
            << ": train_loss " << last.train_loss << ", val_loss "
            << last.val_loss << ", val feasible " << last.val_feasible_pct
            << "%\n";
  return 0;
}

EvalReport run_eval(const RunConfig& cfg, const TrainedModel& trained,
                    const Dataset& ds) {
  const SplitIndices split =
      split_dataset(ds, SplitFractions{}, trained.seed);
  EvalOptions opts;
  opts.use_oracle = !cfg.no_oracle;
  opts.policy = policy_for(cfg);
  opts.timing_reps = cfg.reps;
  LabelSet labels;
  if (!cfg.labels.empty()) {
    labels = read_labels_jsonl(cfg.labels, ds.app);
    opts.labels = &labels;
  }
  return evaluate(trained, ds, split.test, opts);
}

int cmd_eval(const RunConfig& cfg) {
  apply_jobs(cfg);
  if (cfg.dataset.empty())
    throw std::runtime_error("eval: --dataset is required");
  if (cfg.checkpoint.empty())
    throw std::runtime_error("eval: --checkpoint is required");
  const Dataset ds = read_dataset_jsonl(cfg.dataset);
  const TrainedModel trained = load_checkpoint(cfg.checkpoint);
  const EvalReport report = run_eval(cfg, trained, ds);

  write_config_echo(cfg);
  emit_report_csv((fs::path(cfg.out) / "report.csv").string(), {report_row(report)});
  write_instances_csv((fs::path(cfg.out) / "instances.csv").string(), report);
  report_warnings(cfg, report);
  std::cout << "evaluated " << report.rows.size() << " instances: feasible "
            << report.aggregate.feasible_pct << "%, mean max violation "
            << report.aggregate.mean_max_violation << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  apply_jobs(cfg);
  if (cfg.dataset.empty())
    throw std::runtime_error("sweep: --dataset is required");
  if (cfg.sweep_nus.empty())
    throw std::runtime_error("sweep: need at least one nu value");
  for (double nu : cfg.sweep_nus)
    if (!(nu > 0.0)) throw std::runtime_error("sweep: nu values must be > 0");
  const Dataset ds = read_dataset_jsonl(cfg.dataset);

  write_config_echo(cfg);
  std::vector<EvalReport> reports;
  for (double nu : cfg.sweep_nus) {
    RunConfig run = cfg;
    run.nu = nu;
    run.mode = "ssl";
    run.out = (fs::path(cfg.out) / ("nu_" + trim_number(nu))).string();
    fs::create_directories(run.out);
    const TrainConfig tc = train_config_from(run);
    const TrainResult result = train_ssl(tc, ds, policy_for(cfg));
    save_checkpoint(result.best,
                    (fs::path(run.out) / "checkpoint.json").string());
    write_train_log_csv((fs::path(run.out) / "train_log.csv").string(),
                        result.log);
    const EvalReport report = run_eval(run, result.best, ds);
    emit_report_csv((fs::path(run.out) / "report.csv").string(),
                    {report_row(report)});
    write_instances_csv((fs::path(run.out) / "instances.csv").string(), report);
    report_warnings(run, report);
    std::cout << "nu=" << trim_number(nu) << ": feasible "
              << report.aggregate.feasible_pct << "%\n";
    reports.push_back(report);
  }
  emit_report_csv((fs::path(cfg.out) / "sweep.csv").string(),
                  aggregate_sweep(reports));
  std::cout << "wrote " << (fs::path(cfg.out) / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  apply_jobs(cfg);
  const Dataset ds = generate_from_config(cfg);
  std::vector<std::size_t> indices(ds.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  TrainedModel trained;
  if (!cfg.checkpoint.empty()) {
    trained = load_checkpoint(cfg.checkpoint);
    if (trained.model.input_dim() != feature_dim(ds))
      throw std::runtime_error(
          "bench: checkpoint input width does not match the generated "
          "instances");
  } else {
    TrainConfig tc = train_config_from(cfg);
    trained.app = tc.app;
    trained.mode = tc.mode;
    std::vector<std::size_t> dims;
    dims.push_back(feature_dim(ds));
    for (std::size_t h : tc.hidden_dims) dims.push_back(h);
    dims.push_back(decision_dim(ds));
    trained.model = make_mlp(dims, tc.hidden_activation, mix_seed(tc.seed, 1));
    trained.layer = domain_layer_for(tc.app, tc.gamma);
    trained.stats = compute_feature_stats(ds, indices);
    trained.nu = tc.nu;
    trained.seed = tc.seed;
  }

  const BenchResult r =
      bench_proxy_vs_solver(trained, ds, indices, cfg.batch, cfg.reps);
  std::cout << "instances:            " << r.instances << "\n"
            << "proxy single (s):     " << r.proxy_single_s << "\n"
            << "proxy batch-" << r.batch_size << " (s):  " << r.proxy_batch_s
            << "\n"
            << "solver (s):           " << r.solver_s << "\n"
            << "speedup single:       " << r.speedup_single << "x\n"
            << "speedup batched:      " << r.speedup_batch << "x\n";

  write_config_echo(cfg);
  std::ofstream os(fs::path(cfg.out) / "bench.csv");
  if (!os) throw std::runtime_error("cannot write bench.csv in " + cfg.out);
  os.precision(17);
  os << "instances,batch_size,proxy_single_s,proxy_batch_s,solver_s,"
        "speedup_single,speedup_batch\n"
     << r.instances << ',' << r.batch_size << ',' << r.proxy_single_s << ','
     << r.proxy_batch_s << ',' << r.solver_s << ',' << r.speedup_single << ','
     << r.speedup_batch << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  bool seed_in_config = false;
  bool nu_in_config = false;

  // Load --config before CLI11 runs so later flag assignments override it.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    try {
      if (arg == "--config" && i + 1 < argc) {
        apply_config_file(argv[i + 1], cfg, seed_in_config, nu_in_config);
      } else if (arg.rfind("--config=", 0) == 0) {
        apply_config_file(arg.substr(9), cfg, seed_in_config, nu_in_config);
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App app{"Learned proxies for robust optimization with exact solvers "
               "for reference"};
  app.require_subcommand(1);
  std::string config_path;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override");
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--jobs", cfg.jobs, "max parallel instance workers");
    sub->add_flag("--serial", cfg.serial, "force the serial reference path");
  };
  const auto add_app = [&](CLI::App* sub) {
    sub->add_option("--app", cfg.app, "application")
        ->check(CLI::IsMember(
            {"knapsack-cont", "knapsack-bin", "inventory", "knapsack"}));
  };
  const auto add_gen_shape = [&](CLI::App* sub) {
    sub->add_option("--dx", cfg.dx, "knapsack decision dimension");
    sub->add_option("--m", cfg.m, "knapsack constraint rows");
    sub->add_option("--nretail", cfg.nretail, "inventory retailers");
    sub->add_option("--k", cfg.k, "inventory uncertainty factors");
    sub->add_option("--rho", cfg.rho, "uncertainty radius");
    sub->add_option("--norm", cfg.norm, "uncertainty ball norm")
        ->check(CLI::IsMember({"box", "ellipsoid"}));
    sub->add_option("--count", cfg.count, "instance count");
  };

  CLI::Option* seed_opts[6] = {};
  CLI::Option* nu_opts[2] = {};

  CLI::App* gen = app.add_subcommand("gen", "generate a dataset");
  add_common(gen);
  add_app(gen);
  add_gen_shape(gen);
  seed_opts[0] = gen->add_option("--seed", cfg.seed, "RNG seed");

  CLI::App* solve = app.add_subcommand("solve", "solve a dataset exactly");
  add_common(solve);
  solve->add_option("--dataset", cfg.dataset, "dataset JSONL")->required();

  CLI::App* train = app.add_subcommand("train", "train a proxy model");
  add_common(train);
  train->add_option("--dataset", cfg.dataset, "dataset JSONL")->required();
  train->add_option("--labels", cfg.labels, "labels JSONL (supervised mode)");
  train->add_option("--mode", cfg.mode, "training mode")
      ->check(CLI::IsMember({"ssl", "supervised"}));
  nu_opts[0] = train->add_option("--nu", cfg.nu, "penalty coefficient");
  train->add_option("--gamma", cfg.gamma, "binary smoothing");
  train->add_option("--epochs", cfg.epochs, "training epochs");
  train->add_option("--batch-size", cfg.batch_size, "minibatch size");
  train->add_option("--lr", cfg.lr, "Adam learning rate");
  train->add_option("--hidden", cfg.hidden, "hidden layer widths");
  seed_opts[1] = train->add_option("--seed", cfg.seed, "RNG seed");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--dataset", cfg.dataset, "dataset JSONL")->required();
  eval->add_option("--checkpoint", cfg.checkpoint, "model checkpoint")
      ->required();
  eval->add_option("--labels", cfg.labels, "precomputed labels JSONL");
  eval->add_flag("--no-oracle", cfg.no_oracle, "skip reference solves");
  eval->add_option("--reps", cfg.reps, "timing repetitions");

  CLI::App* sweep = app.add_subcommand("sweep", "train and evaluate a nu grid");
  add_common(sweep);
  sweep->add_option("--dataset", cfg.dataset, "dataset JSONL")->required();
  sweep->add_option("--sweep-nus", cfg.sweep_nus, "penalty grid");
  sweep->add_option("--gamma", cfg.gamma, "binary smoothing");
  sweep->add_option("--epochs", cfg.epochs, "training epochs");
  sweep->add_option("--batch-size", cfg.batch_size, "minibatch size");
  sweep->add_option("--lr", cfg.lr, "Adam learning rate");
  sweep->add_option("--hidden", cfg.hidden, "hidden layer widths");
  sweep->add_flag("--no-oracle", cfg.no_oracle, "skip reference solves");
  sweep->add_option("--reps", cfg.reps, "timing repetitions");
  seed_opts[2] = sweep->add_option("--seed", cfg.seed, "RNG seed");

  CLI::App* bench = app.add_subcommand("bench", "time proxy vs solver");
  add_common(bench);
  add_app(bench);
  add_gen_shape(bench);
  bench->add_option("--checkpoint", cfg.checkpoint, "optional trained model");
  bench->add_option("--batch", cfg.batch, "batched inference size");
  bench->add_option("--reps", cfg.reps, "timing repetitions");
  bench->add_option("--hidden", cfg.hidden, "hidden layer widths");
  seed_opts[3] = bench->add_option("--seed", cfg.seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  bool seed_given = seed_in_config;
  for (CLI::Option* o : seed_opts)
    if (o != nullptr && o->count() > 0) seed_given = true;
  if (!seed_given) {
    if (const char* env = std::getenv("ROBUST_PROXY_SEED"))
      cfg.seed = std::strtoull(env, nullptr, 10);
  }
  bool nu_given = nu_in_config;
  for (CLI::Option* o : nu_opts)
    if (o != nullptr && o->count() > 0) nu_given = true;

  if (cfg.app == "knapsack") cfg.app = "knapsack-cont";
  if (std::isnan(cfg.rho)) cfg.rho = default_rho(cfg.app);

  try {
    if (gen->parsed()) return cmd_gen(cfg);
    if (solve->parsed()) return cmd_solve(cfg);
    if (train->parsed()) return cmd_train(cfg, nu_given);
    if (eval->parsed()) return cmd_eval(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (bench->parsed()) return cmd_bench(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
