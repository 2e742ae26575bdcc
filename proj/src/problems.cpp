#include "rpx/problems.hpp"

#include <cmath>
#include <stdexcept>

#include "rpx/rng.hpp"

namespace rpx {

std::string application_name(Application a) {
  switch (a) {
    case Application::knapsack_cont: return "knapsack-cont";
    case Application::knapsack_bin: return "knapsack-bin";
    case Application::inventory: return "inventory";
  }
  throw std::logic_error("unreachable");
}

Application application_from_name(const std::string& name) {
  if (name == "knapsack-cont") return Application::knapsack_cont;
  if (name == "knapsack-bin") return Application::knapsack_bin;
  if (name == "inventory") return Application::inventory;
  throw std::invalid_argument("unknown application: " + name);
}

// ---------------------------------------------------------------------------
// Generators

namespace {

KnapsackInstance make_knapsack_instance(const KnapsackGenConfig& cfg,
                                        std::uint64_t instance_seed) {
  Rng rng(instance_seed);
  KnapsackInstance inst;
  inst.rho = cfg.rho;
  inst.norm_kind = cfg.norm_kind;
  inst.values.resize(cfg.dim);
  for (double& v : inst.values) v = rng.uniform(1.0, 10.0);
  inst.nominal_weights = DenseMatrix(cfg.rows, cfg.dim);
  for (double& w : inst.nominal_weights.data) w = rng.uniform(0.5, 1.5);
  inst.capacities.resize(cfg.rows);
  for (std::size_t j = 0; j < cfg.rows; ++j) {
    double row_sum = 0.0;
    for (std::size_t i = 0; i < cfg.dim; ++i) row_sum += inst.nominal_weights.at(j, i);
    inst.capacities[j] = rng.uniform(0.2, 0.4) * row_sum;
  }
  return inst;
}

InventoryInstance make_inventory_instance(const InventoryGenConfig& cfg,
                                          std::uint64_t instance_seed) {
  Rng rng(instance_seed);
  InventoryInstance inst;
  inst.rho = cfg.rho;
  inst.norm_kind = cfg.norm_kind;
  const std::size_t n = cfg.retailers;
  inst.revenue.resize(n);
  for (double& r : inst.revenue) r = rng.uniform(5.0, 10.0);
  inst.unit_cost.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double c = rng.uniform(1.0, 4.0);
    while (c >= inst.revenue[i]) c = rng.uniform(1.0, 4.0);
    inst.unit_cost[i] = c;
  }
  inst.base_demand.resize(n);
  for (double& d : inst.base_demand) d = rng.uniform(10.0, 30.0);
  inst.sensitivity = DenseMatrix(n, cfg.factors);
  for (double& q : inst.sensitivity.data) q = rng.uniform(-2.0, 2.0);
  inst.nominal_u.resize(cfg.factors);
  for (double& u : inst.nominal_u) u = rng.uniform(-1.0, 1.0);
  double demand_sum = 0.0;
  for (double d : inst.base_demand) demand_sum += d;
  inst.capacity = 0.8 * demand_sum;
  inst.x_upper.resize(n);
  for (std::size_t i = 0; i < n; ++i) inst.x_upper[i] = 2.0 * inst.base_demand[i];
  return inst;
}

}  // namespace

Dataset generate_knapsack(const KnapsackGenConfig& cfg) {
  require(cfg.dim >= 1 && cfg.rows >= 1 && cfg.count >= 1,
          "generate_knapsack: sizes must be >= 1");
  require(cfg.rho >= 0.0, "generate_knapsack: rho must be >= 0");
  Dataset ds;
  ds.app = cfg.binary_domain ? Application::knapsack_bin : Application::knapsack_cont;
  ds.seed = cfg.seed;
  ds.knapsack.resize(cfg.count);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(cfg.count); ++i)
    ds.knapsack[i] = make_knapsack_instance(cfg, mix_seed(cfg.seed, i));
  return ds;
}

Dataset generate_inventory(const InventoryGenConfig& cfg) {
  require(cfg.retailers >= 1 && cfg.factors >= 1 && cfg.count >= 1,
          "generate_inventory: sizes must be >= 1");
  require(cfg.rho >= 0.0, "generate_inventory: rho must be >= 0");
  Dataset ds;
  ds.app = Application::inventory;
  ds.seed = cfg.seed;
  ds.inventory.resize(cfg.count);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(cfg.count); ++i)
    ds.inventory[i] = make_inventory_instance(cfg, mix_seed(cfg.seed, i));
  return ds;
}

// ---------------------------------------------------------------------------
// Knapsack evaluation

EvalTerms knapsack_eval(const KnapsackInstance& inst, const Vec& x) {
  require(x.size() == inst.dim(), "knapsack_eval: decision dimension mismatch");
  EvalTerms out;
  out.objective = dot(inst.values, x);
  out.objective_grad = inst.values;

  const double robust_term = inst.rho * dual_norm(x, inst.norm_kind);
  const Vec x_sub = dual_norm_subgradient(x, inst.norm_kind);
  const std::size_t m = inst.rows();
  out.worst_cases.resize(m);
  out.worst_case_grads.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double* wj = inst.nominal_weights.row(j);
    double nominal = 0.0;
    for (std::size_t i = 0; i < inst.dim(); ++i) nominal += wj[i] * x[i];
    out.worst_cases[j] = nominal + robust_term - inst.capacities[j];
    Vec g(inst.dim());
    for (std::size_t i = 0; i < inst.dim(); ++i) g[i] = wj[i] + inst.rho * x_sub[i];
    out.worst_case_grads[j] = std::move(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inventory evaluation

Vec InventoryDecision::flatten() const {
  Vec flat;
  flat.reserve(x.size() + Y.data.size() + y0.size());
  flat.insert(flat.end(), x.begin(), x.end());
  flat.insert(flat.end(), Y.data.begin(), Y.data.end());
  flat.insert(flat.end(), y0.begin(), y0.end());
  return flat;
}

InventoryDecision InventoryDecision::unflatten(const Vec& flat, std::size_t retailers,
                                               std::size_t factors) {
  require(flat.size() == retailers + retailers * factors + retailers,
          "InventoryDecision: flat size mismatch");
  InventoryDecision d;
  d.x.assign(flat.begin(), flat.begin() + retailers);
  d.Y = DenseMatrix(retailers, factors);
  std::copy(flat.begin() + retailers, flat.begin() + retailers + retailers * factors,
            d.Y.data.begin());
  d.y0.assign(flat.begin() + retailers + retailers * factors, flat.end());
  return d;
}

EvalTerms inventory_eval(const InventoryInstance& inst, const InventoryDecision& d) {
  const std::size_t n = inst.retailers();
  const std::size_t k = inst.factors();
  require(d.x.size() == n && d.Y.rows == n && d.Y.cols == k && d.y0.size() == n,
          "inventory_eval: decision shape mismatch");
  const std::size_t flat_dim = n + n * k + n;
  const auto x_off = [](std::size_t i) { return i; };
  const auto y_off = [&](std::size_t i, std::size_t l) { return n + i * k + l; };
  const auto y0_off = [&](std::size_t i) { return n + n * k + i; };

  EvalTerms out;

  // Objective: worst case over u of r^T(Yu + y0) - c^o^T x, with the profit
  // variable already at its optimum.
  Vec yt_r = matvec_t(d.Y, inst.revenue);  // Y^T r, length k
  const Vec yt_r_sub = dual_norm_subgradient(yt_r, inst.norm_kind);
  double f = -inst.rho * dual_norm(yt_r, inst.norm_kind);
  for (std::size_t i = 0; i < n; ++i) {
    double yu = 0.0;
    for (std::size_t l = 0; l < k; ++l) yu += d.Y.at(i, l) * inst.nominal_u[l];
    f += inst.revenue[i] * (yu + d.y0[i]) - inst.unit_cost[i] * d.x[i];
  }
  out.objective = f;
  out.objective_grad.assign(flat_dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.objective_grad[x_off(i)] = -inst.unit_cost[i];
    out.objective_grad[y0_off(i)] = inst.revenue[i];
    for (std::size_t l = 0; l < k; ++l)
      out.objective_grad[y_off(i, l)] =
          inst.revenue[i] * (inst.nominal_u[l] - inst.rho * yt_r_sub[l]);
  }

  out.worst_cases.assign(2 * n + 1, 0.0);
  out.worst_case_grads.assign(2 * n + 1, Vec());

  // Stock rows: Y_i u + y0_i <= x_i for all u.
  for (std::size_t i = 0; i < n; ++i) {
    Vec yi(d.Y.row(i), d.Y.row(i) + k);
    double val = dot(yi, inst.nominal_u) + d.y0[i] - d.x[i] +
                 inst.rho * dual_norm(yi, inst.norm_kind);
    out.worst_cases[i] = val;
    Vec g(flat_dim, 0.0);
    g[x_off(i)] = -1.0;
    g[y0_off(i)] = 1.0;
    const Vec sub = dual_norm_subgradient(yi, inst.norm_kind);
    for (std::size_t l = 0; l < k; ++l)
      g[y_off(i, l)] = inst.nominal_u[l] + inst.rho * sub[l];
    out.worst_case_grads[i] = std::move(g);
  }

  // Demand rows: Y_i u + y0_i <= d^0_i + Q_i u for all u.
  for (std::size_t i = 0; i < n; ++i) {
    Vec diff(k);
    for (std::size_t l = 0; l < k; ++l) diff[l] = d.Y.at(i, l) - inst.sensitivity.at(i, l);
    double val = dot(diff, inst.nominal_u) + d.y0[i] - inst.base_demand[i] +
                 inst.rho * dual_norm(diff, inst.norm_kind);
    out.worst_cases[n + i] = val;
    Vec g(flat_dim, 0.0);
    g[y0_off(i)] = 1.0;
    const Vec sub = dual_norm_subgradient(diff, inst.norm_kind);
    for (std::size_t l = 0; l < k; ++l)
      g[y_off(i, l)] = inst.nominal_u[l] + inst.rho * sub[l];
    out.worst_case_grads[n + i] = std::move(g);
  }

  // Capacity: 1^T x <= C (certain, no uncertainty exposure).
  double x_sum = 0.0;
  for (double xi : d.x) x_sum += xi;
  out.worst_cases[2 * n] = x_sum - inst.capacity;
  Vec g(flat_dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) g[x_off(i)] = 1.0;
  out.worst_case_grads[2 * n] = std::move(g);

  return out;
}

std::size_t decision_dim(const Dataset& ds) {
  if (ds.is_knapsack()) {
    require(!ds.knapsack.empty(), "decision_dim: empty dataset");
    return ds.knapsack.front().dim();
  }
  require(!ds.inventory.empty(), "decision_dim: empty dataset");
  const auto& inst = ds.inventory.front();
  return inst.retailers() + inst.retailers() * inst.factors() + inst.retailers();
}

EvalTerms eval_decision(const Dataset& ds, std::size_t index, const Vec& decision) {
  if (ds.is_knapsack()) return knapsack_eval(ds.knapsack.at(index), decision);
  const auto& inst = ds.inventory.at(index);
  return inventory_eval(
      inst, InventoryDecision::unflatten(decision, inst.retailers(), inst.factors()));
}

// ---------------------------------------------------------------------------
// Network output -> decision variables

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Vec decision_parameterize(const Dataset& ds, std::size_t index,
                          const DomainLayer& layer, const Vec& w) {
  if (ds.is_knapsack()) {
    require(w.size() == ds.knapsack.at(index).dim(),
            "decision_parameterize: output width mismatch");
    return apply(layer, w);
  }
  const auto& inst = ds.inventory.at(index);
  const std::size_t n = inst.retailers();
  const std::size_t dim = n + n * inst.factors() + n;
  require(w.size() == dim, "decision_parameterize: output width mismatch");
  Vec decision = w;
  for (std::size_t i = 0; i < n; ++i)
    decision[i] = inst.x_upper[i] * sigmoid(w[i]);
  return decision;
}

Vec decision_parameterize_grad(const Dataset& ds, std::size_t index,
                               const DomainLayer& layer, const Vec& w,
                               const Vec& dL_ddecision) {
  require(dL_ddecision.size() == w.size(),
          "decision_parameterize_grad: gradient size mismatch");
  if (ds.is_knapsack()) return apply_grad(layer, w, dL_ddecision);
  const auto& inst = ds.inventory.at(index);
  const std::size_t n = inst.retailers();
  Vec g = dL_ddecision;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sigmoid(w[i]);
    g[i] = dL_ddecision[i] * inst.x_upper[i] * s * (1.0 - s);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Features

Vec feature_vector(const KnapsackInstance& inst) {
  Vec z;
  z.reserve(inst.dim() + inst.rows() * inst.dim() + inst.rows());
  z.insert(z.end(), inst.values.begin(), inst.values.end());
  z.insert(z.end(), inst.nominal_weights.data.begin(), inst.nominal_weights.data.end());
  z.insert(z.end(), inst.capacities.begin(), inst.capacities.end());
  return z;
}

Vec feature_vector(const InventoryInstance& inst) {
  Vec z;
  z.reserve(3 * inst.retailers() + inst.sensitivity.data.size() + inst.factors());
  z.insert(z.end(), inst.revenue.begin(), inst.revenue.end());
  z.insert(z.end(), inst.unit_cost.begin(), inst.unit_cost.end());
  z.insert(z.end(), inst.base_demand.begin(), inst.base_demand.end());
  z.insert(z.end(), inst.sensitivity.data.begin(), inst.sensitivity.data.end());
  z.insert(z.end(), inst.nominal_u.begin(), inst.nominal_u.end());
  return z;
}

Vec feature_vector(const Dataset& ds, std::size_t index) {
  return ds.is_knapsack() ? feature_vector(ds.knapsack.at(index))
                          : feature_vector(ds.inventory.at(index));
}

std::size_t feature_dim(const Dataset& ds) {
  require(ds.size() > 0, "feature_dim: empty dataset");
  return feature_vector(ds, 0).size();
}

FeatureStats compute_feature_stats(const Dataset& ds,
                                   const std::vector<std::size_t>& indices) {
  require(!indices.empty(), "compute_feature_stats: empty index set");
  const std::size_t d = feature_dim(ds);
  FeatureStats stats;
  stats.mean.assign(d, 0.0);
  stats.stddev.assign(d, 0.0);
  for (std::size_t idx : indices) {
    const Vec z = feature_vector(ds, idx);
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += z[j];
  }
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  for (double& m : stats.mean) m *= inv_n;
  for (std::size_t idx : indices) {
    const Vec z = feature_vector(ds, idx);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = z[j] - stats.mean[j];
      stats.stddev[j] += c * c;
    }
  }
  for (double& s : stats.stddev) s = std::sqrt(s * inv_n);
  return stats;
}

Vec standardize(const Vec& z, const FeatureStats& stats) {
  require(z.size() == stats.mean.size(), "standardize: dimension mismatch");
  Vec out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double s = stats.stddev[j] < 1e-12 ? 1.0 : stats.stddev[j];
    out[j] = (z[j] - stats.mean[j]) / s;
  }
  return out;
}

}  // namespace rpx
