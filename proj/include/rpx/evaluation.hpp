#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rpx/batch.hpp"
#include "rpx/dataset_io.hpp"
#include "rpx/training.hpp"

namespace rpx {

// One evaluated test instance.
struct InstanceEval {
  std::size_t id = 0;
  double f_hat = 0.0;
  std::optional<double> f_star;  // present when the oracle ran
  std::optional<double> regret;  // (f_star - f_hat)/f_star, needs |f_star| > 1e-9
  double abs_gap = 0.0;          // f_star - f_hat when the oracle ran
  double max_violation = 0.0;
  bool feasible = false;
  double proxy_time_s = 0.0;
  double solver_time_s = 0.0;
};

struct EvalAggregate {
  std::size_t count = 0;
  std::size_t feasible_count = 0;
  double feasible_pct = 0.0;
  double mean_max_violation = 0.0;
  std::optional<double> mean_regret;      // fraction, over rows with regret
  std::optional<double> mean_regret_pct;  // same, times 100
  double mean_proxy_time_s = 0.0;
  double mean_solver_time_s = 0.0;
};

struct EvalReport {
  Application app = Application::knapsack_cont;
  std::string model_name;  // e.g. "ssl" or "supervised"
  double nu = 0.0;
  std::vector<InstanceEval> rows;
  EvalAggregate aggregate;
  std::vector<std::string> warnings;
};

struct EvalOptions {
  bool use_oracle = true;
  const LabelSet* labels = nullptr;  // precomputed solutions, else solve here
  ExecPolicy policy = ExecPolicy::openmp;
  int timing_reps = 5;  // median over this many proxy timing repetitions
};

// Test-mode decisions, feasibility and (when the oracle is available)
// regret for every listed instance. Ellipsoid datasets get no oracle; the
// report carries a warning and empty regret columns instead.
EvalReport evaluate(const TrainedModel& trained, const Dataset& ds,
                    const std::vector<std::size_t>& indices,
                    const EvalOptions& opts = {});

// One line of the sweep table.
struct ReportRow {
  std::string app;
  std::string model;
  double nu = 0.0;
  double regret_pct_mean = 0.0;  // NaN when regret was unavailable
  double max_violation_mean = 0.0;
  double feasible_pct = 0.0;
  double proxy_time_s = 0.0;
  double solver_time_s = 0.0;
};

ReportRow report_row(const EvalReport& report);

// CSV with header app,model,nu,regret_pct_mean,max_violation_mean,
// feasible_pct,proxy_time_s,solver_time_s. parse(emit(rows)) == rows.
void emit_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);
void emit_report_csv(const std::string& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(std::istream& is);
std::vector<ReportRow> parse_report_csv(const std::string& path);

// One row per report; all reports must share one application.
std::vector<ReportRow> aggregate_sweep(const std::vector<EvalReport>& reports);

// Amortized per-instance seconds of one packed forward+domain-layer pass
// over the given instances, median of `reps` runs.
double time_batch_inference(const TrainedModel& trained, const Dataset& ds,
                            const std::vector<std::size_t>& indices,
                            std::size_t batch_size, int reps = 5);

struct BenchResult {
  std::size_t instances = 0;
  std::size_t batch_size = 0;
  double proxy_single_s = 0.0;  // per instance, one call at a time
  double proxy_batch_s = 0.0;   // per instance, packed batches
  double solver_s = 0.0;        // per instance, reference solve
  double speedup_single = 0.0;  // solver_s / proxy_single_s
  double speedup_batch = 0.0;   // solver_s / proxy_batch_s
};

// Head-to-head timing of the proxy against the reference solver on one
// dataset; drives the bench subcommand.
BenchResult bench_proxy_vs_solver(const TrainedModel& trained, const Dataset& ds,
                                  const std::vector<std::size_t>& indices,
                                  std::size_t batch_size, int reps = 5);

}  // namespace rpx
