#include "rpx/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rpx/solvers.hpp"

namespace rpx {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

// Sink defeating dead-code elimination of timed work.
volatile double g_timing_sink = 0.0;

NormKind dataset_norm(const Dataset& ds) {
  require(ds.size() > 0, "evaluate: empty dataset");
  return ds.is_knapsack() ? ds.knapsack.front().norm_kind
                          : ds.inventory.front().norm_kind;
}

Vec proxy_decision(const TrainedModel& trained, const Dataset& ds,
                   std::size_t idx, const DomainLayer& test_layer) {
  const Vec z = standardize(feature_vector(ds, idx), trained.stats);
  const Vec w = forward(trained.model, z);
  return decision_parameterize(ds, idx, test_layer, w);
}

}  // namespace

EvalReport evaluate(const TrainedModel& trained, const Dataset& ds,
                    const std::vector<std::size_t>& indices,
                    const EvalOptions& opts) {
  require(trained.app == ds.app, "evaluate: model app does not match dataset");
  require(!indices.empty(), "evaluate: empty index set");
  require(opts.timing_reps >= 1, "evaluate: timing_reps must be >= 1");

  EvalReport report;
  report.app = ds.app;
  report.model_name = train_mode_name(trained.mode);
  report.nu = trained.nu;
  report.rows.assign(indices.size(), InstanceEval{});

  const DomainLayer test_layer = trained.layer.with_mode(LayerMode::test);
  const NormKind norm = dataset_norm(ds);
  const bool oracle = opts.use_oracle && norm == NormKind::box;
  if (opts.use_oracle && norm != NormKind::box)
    report.warnings.push_back(
        "oracle unavailable for ellipsoid uncertainty; regret columns empty");

  // Metrics and oracle solves; parallel over instances, outputs slotted by
  // position so the result is independent of scheduling.
  std::vector<std::string> row_warnings(indices.size());
  for_each_index(indices.size(), opts.policy, [&](std::size_t p) {
    const std::size_t idx = indices[p];
    InstanceEval& row = report.rows[p];
    row.id = idx;
    const Vec decision = proxy_decision(trained, ds, idx, test_layer);
    const EvalTerms terms = eval_decision(ds, idx, decision);
    row.f_hat = terms.objective;
    const FeasibilityResult feas = feasibility_check(terms.worst_cases);
    row.max_violation = feas.max_violation;
    row.feasible = feas.feasible;

    if (!oracle) return;
    if (opts.labels != nullptr && opts.labels->has(idx)) {
      const std::size_t pos = opts.labels->position(idx);
      row.f_star = opts.labels->f_star[pos];
      row.solver_time_s = opts.labels->solve_time[pos];
    } else {
      const SolveResult sr = solve_reference(ds, idx);
      if (sr.status != SolveStatus::optimal) {
        row_warnings[p] = "reference solver returned " +
                          status_name(sr.status) + " on instance " +
                          std::to_string(idx);
        return;
      }
      row.f_star = sr.objective;
      row.solver_time_s = sr.solve_time;
    }
    row.abs_gap = *row.f_star - row.f_hat;
    if (std::fabs(*row.f_star) > 1e-9)
      row.regret = (*row.f_star - row.f_hat) / *row.f_star;
  });
  for (const std::string& w : row_warnings)
    if (!w.empty()) report.warnings.push_back(w);

  // Timing pass, single worker: median of timing_reps repetitions of the
  // forward + domain-layer pass per instance, on precomputed features.
  std::vector<double> reps(static_cast<std::size_t>(opts.timing_reps));
  for (std::size_t p = 0; p < indices.size(); ++p) {
    const std::size_t idx = indices[p];
    const Vec z = standardize(feature_vector(ds, idx), trained.stats);
    for (int r = 0; r < opts.timing_reps; ++r) {
      const auto t0 = Clock::now();
      const Vec w = forward(trained.model, z);
      const Vec decision = decision_parameterize(ds, idx, test_layer, w);
      reps[static_cast<std::size_t>(r)] = seconds_since(t0);
      g_timing_sink = g_timing_sink + decision[0];
    }
    report.rows[p].proxy_time_s = median(reps);
  }

  // Aggregate.
  EvalAggregate& agg = report.aggregate;
  agg.count = report.rows.size();
  double viol_sum = 0.0, proxy_sum = 0.0, solver_sum = 0.0;
  double regret_sum = 0.0;
  std::size_t regret_count = 0;
  for (const InstanceEval& row : report.rows) {
    agg.feasible_count += row.feasible ? 1 : 0;
    viol_sum += row.max_violation;
    proxy_sum += row.proxy_time_s;
    solver_sum += row.solver_time_s;
    if (row.regret) {
      regret_sum += *row.regret;
      ++regret_count;
    }
  }
  const double n = static_cast<double>(agg.count);
  agg.feasible_pct = 100.0 * static_cast<double>(agg.feasible_count) / n;
  agg.mean_max_violation = viol_sum / n;
  agg.mean_proxy_time_s = proxy_sum / n;
  agg.mean_solver_time_s = solver_sum / n;
  if (regret_count > 0) {
    agg.mean_regret = regret_sum / static_cast<double>(regret_count);
    agg.mean_regret_pct = 100.0 * *agg.mean_regret;
  }
  return report;
}

ReportRow report_row(const EvalReport& report) {
  ReportRow row;
  row.app = application_name(report.app);
  row.model = report.model_name;
  row.nu = report.nu;
  row.regret_pct_mean = report.aggregate.mean_regret_pct
                            ? *report.aggregate.mean_regret_pct
                            : std::numeric_limits<double>::quiet_NaN();
  row.max_violation_mean = report.aggregate.mean_max_violation;
  row.feasible_pct = report.aggregate.feasible_pct;
  row.proxy_time_s = report.aggregate.mean_proxy_time_s;
  row.solver_time_s = report.aggregate.mean_solver_time_s;
  return row;
}

void emit_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "app,model,nu,regret_pct_mean,max_violation_mean,feasible_pct,"
        "proxy_time_s,solver_time_s\n";
  os.precision(17);
  for (const ReportRow& r : rows) {
    os << r.app << ',' << r.model << ',' << r.nu << ',';
    if (std::isnan(r.regret_pct_mean))
      os << "";  // regret unavailable
    else
      os << r.regret_pct_mean;
    os << ',' << r.max_violation_mean << ',' << r.feasible_pct << ','
       << r.proxy_time_s << ',' << r.solver_time_s << '\n';
  }
}

void emit_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  emit_report_csv(os, rows);
}

std::vector<ReportRow> parse_report_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("report csv: missing header");
  const std::string expected =
      "app,model,nu,regret_pct_mean,max_violation_mean,feasible_pct,"
      "proxy_time_s,solver_time_s";
  if (line != expected)
    throw std::runtime_error("report csv: unexpected header: " + line);

  std::vector<ReportRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 8)
      throw std::runtime_error("report csv: bad row: " + line);
    ReportRow r;
    r.app = fields[0];
    r.model = fields[1];
    r.nu = std::stod(fields[2]);
    r.regret_pct_mean = fields[3].empty()
                            ? std::numeric_limits<double>::quiet_NaN()
                            : std::stod(fields[3]);
    r.max_violation_mean = std::stod(fields[4]);
    r.feasible_pct = std::stod(fields[5]);
    r.proxy_time_s = std::stod(fields[6]);
    r.solver_time_s = std::stod(fields[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportRow> parse_report_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return parse_report_csv(is);
}

std::vector<ReportRow> aggregate_sweep(const std::vector<EvalReport>& reports) {
  require(!reports.empty(), "aggregate_sweep: no reports");
  for (const EvalReport& r : reports)
    if (r.app != reports.front().app)
      throw std::invalid_argument("aggregate_sweep: mixed applications");
  std::vector<ReportRow> rows;
  rows.reserve(reports.size());
  for (const EvalReport& r : reports) rows.push_back(report_row(r));
  return rows;
}

double time_batch_inference(const TrainedModel& trained, const Dataset& ds,
                            const std::vector<std::size_t>& indices,
                            std::size_t batch_size, int reps) {
  require(!indices.empty(), "time_batch_inference: empty batch");
  require(batch_size >= 1, "time_batch_inference: batch size must be >= 1");
  require(reps >= 1, "time_batch_inference: reps must be >= 1");
  const DomainLayer test_layer = trained.layer.with_mode(LayerMode::test);

  // Features are inputs to the proxy, not part of the timed forward pass.
  std::vector<std::vector<Vec>> chunks;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t stop = std::min(start + batch_size, indices.size());
    std::vector<Vec> inputs;
    inputs.reserve(stop - start);
    for (std::size_t p = start; p < stop; ++p)
      inputs.push_back(
          standardize(feature_vector(ds, indices[p]), trained.stats));
    chunks.push_back(std::move(inputs));
  }

  std::vector<double> times(static_cast<std::size_t>(reps));
  Vec w;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    double sink = 0.0;
    std::size_t base = 0;
    for (const std::vector<Vec>& inputs : chunks) {
      const DenseMatrix out =
          packed_forward(trained.model, inputs, ExecPolicy::serial);
      for (std::size_t b = 0; b < out.rows; ++b) {
        w.assign(out.row(b), out.row(b) + out.cols);
        const Vec decision =
            decision_parameterize(ds, indices[base + b], test_layer, w);
        sink += decision[0];
      }
      base += inputs.size();
    }
    times[static_cast<std::size_t>(r)] = seconds_since(t0);
    g_timing_sink = g_timing_sink + sink;
  }
  return median(times) / static_cast<double>(indices.size());
}

BenchResult bench_proxy_vs_solver(const TrainedModel& trained, const Dataset& ds,
                                  const std::vector<std::size_t>& indices,
                                  std::size_t batch_size, int reps) {
  require(!indices.empty(), "bench: empty index set");
  require(reps >= 1, "bench: reps must be >= 1");
  require(dataset_norm(ds) == NormKind::box,
          "bench: reference solver needs box uncertainty");

  BenchResult res;
  res.instances = indices.size();
  res.batch_size = batch_size;
  const DomainLayer test_layer = trained.layer.with_mode(LayerMode::test);

  // Single-instance proxy: one forward + domain-layer pass per instance on
  // precomputed features.
  std::vector<Vec> features;
  features.reserve(indices.size());
  for (std::size_t idx : indices)
    features.push_back(standardize(feature_vector(ds, idx), trained.stats));
  std::vector<double> single(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    double sink = 0.0;
    for (std::size_t p = 0; p < indices.size(); ++p) {
      const Vec w = forward(trained.model, features[p]);
      sink += decision_parameterize(ds, indices[p], test_layer, w)[0];
    }
    single[static_cast<std::size_t>(r)] = seconds_since(t0);
    g_timing_sink = g_timing_sink + sink;
  }
  res.proxy_single_s = median(single) / static_cast<double>(indices.size());

  res.proxy_batch_s = time_batch_inference(trained, ds, indices, batch_size, reps);

  // Reference solver, one pass, single worker.
  const auto t0 = Clock::now();
  for (std::size_t idx : indices) {
    const SolveResult sr = solve_reference(ds, idx);
    g_timing_sink = g_timing_sink + sr.objective;
  }
  res.solver_s = seconds_since(t0) / static_cast<double>(indices.size());

  res.speedup_single = res.solver_s / res.proxy_single_s;
  res.speedup_batch = res.solver_s / res.proxy_batch_s;
  return res;
}

}  // namespace rpx
