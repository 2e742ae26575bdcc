#include "rpx/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace rpx {

namespace {

constexpr double kBigBound = 1e6;
// Internal branch-and-bound tolerances, tighter than the reporting
// tolerance so the result matches exhaustive enumeration.
constexpr double kBnbFeasTol = 1e-9;
constexpr double kBnbPruneTol = 1e-9;
constexpr double kIntegralityTol = 1e-6;

void require_box(NormKind kind) {
  if (kind != NormKind::box)
    throw std::invalid_argument(
        "reference solver supports box uncertainty only; ellipsoid instances "
        "can be evaluated for feasibility but not solved");
}

}  // namespace

StandardFormLP build_counterpart_lp(const KnapsackInstance& inst) {
  require_box(inst.norm_kind);
  const std::size_t n = inst.dim();
  const std::size_t m = inst.rows();
  StandardFormLP lp;
  lp.objective = inst.values;
  lp.constraint = DenseMatrix(m, n);
  lp.rhs = inst.capacities;
  // x >= 0 makes the dual-norm term rho * ||x||_1 = rho * 1^T x.
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i)
      lp.constraint.at(j, i) = inst.nominal_weights.at(j, i) + inst.rho;
  lp.lower.assign(n, 0.0);
  lp.upper.assign(n, 1.0);
  return lp;
}

InventoryLpLayout inventory_lp_layout(const InventoryInstance& inst) {
  const std::size_t n = inst.retailers();
  const std::size_t k = inst.factors();
  InventoryLpLayout lay;
  lay.profit = 0;
  lay.x = 1;
  lay.Y = lay.x + n;
  lay.y0 = lay.Y + n * k;
  lay.t_profit = lay.y0 + n;
  lay.T = lay.t_profit + k;
  lay.S = lay.T + n * k;
  lay.total = lay.S + n * k;
  return lay;
}

StandardFormLP build_counterpart_lp(const InventoryInstance& inst) {
  require_box(inst.norm_kind);
  const std::size_t n = inst.retailers();
  const std::size_t k = inst.factors();
  const InventoryLpLayout lay = inventory_lp_layout(inst);
  const std::size_t rows = 1 + 2 * k + n + 2 * n * k + n + 2 * n * k + 1;

  StandardFormLP lp;
  lp.objective.assign(lay.total, 0.0);
  lp.objective[lay.profit] = 1.0;
  lp.constraint = DenseMatrix(rows, lay.total);
  lp.rhs.assign(rows, 0.0);
  lp.lower.assign(lay.total, -kBigBound);
  lp.upper.assign(lay.total, kBigBound);

  lp.lower[lay.profit] = -kBigBound;
  for (std::size_t i = 0; i < n; ++i) {
    lp.lower[lay.x + i] = 0.0;
    lp.upper[lay.x + i] = inst.x_upper[i];
  }
  for (std::size_t j = 0; j < k; ++j) lp.lower[lay.t_profit + j] = 0.0;
  for (std::size_t e = 0; e < n * k; ++e) {
    lp.lower[lay.T + e] = 0.0;
    lp.lower[lay.S + e] = 0.0;
  }

  std::size_t row = 0;

  // P <= r^T (Y u_hat + y0) - c^o^T x - rho 1^T tP
  lp.constraint.at(row, lay.profit) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    lp.constraint.at(row, lay.x + i) = inst.unit_cost[i];
    lp.constraint.at(row, lay.y0 + i) = -inst.revenue[i];
    for (std::size_t l = 0; l < k; ++l)
      lp.constraint.at(row, lay.Y + i * k + l) = -inst.revenue[i] * inst.nominal_u[l];
  }
  for (std::size_t l = 0; l < k; ++l)
    lp.constraint.at(row, lay.t_profit + l) = inst.rho;
  lp.rhs[row] = 0.0;
  ++row;

  // tP_l >= +-(Y^T r)_l
  for (std::size_t l = 0; l < k; ++l) {
    for (double sign : {1.0, -1.0}) {
      for (std::size_t i = 0; i < n; ++i)
        lp.constraint.at(row, lay.Y + i * k + l) = sign * inst.revenue[i];
      lp.constraint.at(row, lay.t_profit + l) = -1.0;
      lp.rhs[row] = 0.0;
      ++row;
    }
  }

  // Stock rows: Y_i u_hat + y0_i - x_i + rho 1^T T_i <= 0
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      lp.constraint.at(row, lay.Y + i * k + l) = inst.nominal_u[l];
      lp.constraint.at(row, lay.T + i * k + l) = inst.rho;
    }
    lp.constraint.at(row, lay.y0 + i) = 1.0;
    lp.constraint.at(row, lay.x + i) = -1.0;
    lp.rhs[row] = 0.0;
    ++row;
  }

  // T_il >= +-Y_il
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      for (double sign : {1.0, -1.0}) {
        lp.constraint.at(row, lay.Y + i * k + l) = sign;
        lp.constraint.at(row, lay.T + i * k + l) = -1.0;
        lp.rhs[row] = 0.0;
        ++row;
      }
    }
  }

  // Demand rows: (Y_i - Q_i) u_hat + y0_i - d0_i + rho 1^T S_i <= 0,
  // with the Q_i u_hat constant folded into the right-hand side.
  for (std::size_t i = 0; i < n; ++i) {
    double qi_uhat = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
      lp.constraint.at(row, lay.Y + i * k + l) = inst.nominal_u[l];
      lp.constraint.at(row, lay.S + i * k + l) = inst.rho;
      qi_uhat += inst.sensitivity.at(i, l) * inst.nominal_u[l];
    }
    lp.constraint.at(row, lay.y0 + i) = 1.0;
    lp.rhs[row] = inst.base_demand[i] + qi_uhat;
    ++row;
  }

  // S_il >= +-(Y_il - Q_il)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      for (double sign : {1.0, -1.0}) {
        lp.constraint.at(row, lay.Y + i * k + l) = sign;
        lp.constraint.at(row, lay.S + i * k + l) = -1.0;
        lp.rhs[row] = sign * inst.sensitivity.at(i, l);
        ++row;
      }
    }
  }

  // 1^T x <= C
  for (std::size_t i = 0; i < n; ++i) lp.constraint.at(row, lay.x + i) = 1.0;
  lp.rhs[row] = inst.capacity;
  ++row;

  require(row == rows, "inventory counterpart: row count mismatch");
  return lp;
}

FeasibilityResult feasibility_check(const Vec& worst_cases) {
  FeasibilityResult r;
  double worst = -std::numeric_limits<double>::infinity();
  for (double g : worst_cases) worst = std::max(worst, g);
  r.feasible = worst <= kFeasibilityTol;
  r.max_violation = std::max(0.0, worst);
  return r;
}

FeasibilityResult feasibility_check(const KnapsackInstance& inst, const Vec& x) {
  return feasibility_check(knapsack_eval(inst, x).worst_cases);
}

FeasibilityResult feasibility_check(const InventoryInstance& inst,
                                    const InventoryDecision& d) {
  return feasibility_check(inventory_eval(inst, d).worst_cases);
}

// ---------------------------------------------------------------------------
// Branch and bound

namespace {

struct BnbNode {
  double bound;
  std::vector<signed char> fixing;  // -1 free, 0 or 1 fixed

  bool operator<(const BnbNode& o) const { return bound < o.bound; }  // max-heap
};

// gbar_j of a candidate binary vector, evaluated directly from instance data.
bool binary_feasible(const KnapsackInstance& inst, const Vec& x) {
  const EvalTerms terms = knapsack_eval(inst, x);
  for (double g : terms.worst_cases)
    if (g > kBnbFeasTol) return false;
  return true;
}

}  // namespace

SolveResult branch_and_bound_binary(const KnapsackInstance& inst,
                                    std::size_t max_nodes) {
  require_box(inst.norm_kind);
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = inst.dim();
  const StandardFormLP base_lp = build_counterpart_lp(inst);

  SolveResult result;
  result.node_count = 0;

  bool have_incumbent = false;
  Vec incumbent;
  double incumbent_obj = -std::numeric_limits<double>::infinity();

  // x = 0 is robust-feasible whenever capacities are positive.
  {
    Vec zero(n, 0.0);
    if (binary_feasible(inst, zero)) {
      have_incumbent = true;
      incumbent = zero;
      incumbent_obj = 0.0;
    }
  }

  std::priority_queue<BnbNode> heap;
  heap.push(BnbNode{std::numeric_limits<double>::infinity(),
                    std::vector<signed char>(n, -1)});

  while (!heap.empty()) {
    if (result.node_count >= max_nodes) {
      result.status = SolveStatus::node_limit;
      if (have_incumbent) {
        result.x = incumbent;
        result.objective = incumbent_obj;
      }
      result.solve_time = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count();
      return result;
    }
    BnbNode node = heap.top();
    heap.pop();
    if (have_incumbent && node.bound <= incumbent_obj + kBnbPruneTol) break;
    ++result.node_count;

    StandardFormLP lp = base_lp;
    for (std::size_t i = 0; i < n; ++i) {
      if (node.fixing[i] == 0) lp.upper[i] = 0.0;
      if (node.fixing[i] == 1) lp.lower[i] = 1.0;
    }
    const SolveResult relax = simplex_solve(lp);
    if (relax.status != SolveStatus::optimal) continue;  // infeasible subtree
    if (have_incumbent && relax.objective <= incumbent_obj + kBnbPruneTol) continue;

    // Integral relaxation: round and verify against the instance directly.
    std::size_t frac_var = n;
    double frac_dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::fabs(relax.x[i] - std::round(relax.x[i]));
      if (d > frac_dist) {
        frac_dist = d;
        frac_var = i;
      }
    }
    if (frac_dist <= kIntegralityTol) {
      Vec rounded(n);
      for (std::size_t i = 0; i < n; ++i) rounded[i] = std::round(relax.x[i]);
      if (binary_feasible(inst, rounded)) {
        const double obj = dot(inst.values, rounded);
        if (!have_incumbent || obj > incumbent_obj) {
          have_incumbent = true;
          incumbent = std::move(rounded);
          incumbent_obj = obj;
        }
      }
      continue;
    }

    // Branch on the most fractional variable.
    for (signed char v : {static_cast<signed char>(0), static_cast<signed char>(1)}) {
      BnbNode child;
      child.bound = relax.objective;
      child.fixing = node.fixing;
      child.fixing[frac_var] = v;
      heap.push(std::move(child));
    }
  }

  if (have_incumbent) {
    result.status = SolveStatus::optimal;
    result.x = incumbent;
    result.objective = incumbent_obj;
  } else {
    result.status = SolveStatus::infeasible;
  }
  result.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

// ---------------------------------------------------------------------------

SolveResult solve_reference(const Dataset& ds, std::size_t index) {
  if (ds.app == Application::knapsack_bin)
    return branch_and_bound_binary(ds.knapsack.at(index));
  if (ds.app == Application::knapsack_cont) {
    const auto& inst = ds.knapsack.at(index);
    return simplex_solve(build_counterpart_lp(inst));
  }
  const auto& inst = ds.inventory.at(index);
  const InventoryLpLayout lay = inventory_lp_layout(inst);
  SolveResult r = simplex_solve(build_counterpart_lp(inst));
  if (r.status == SolveStatus::optimal) {
    // Repack [P | x | Y | y0 | aux] into the flat decision layout.
    const std::size_t n = inst.retailers();
    const std::size_t k = inst.factors();
    Vec flat;
    flat.reserve(n + n * k + n);
    flat.insert(flat.end(), r.x.begin() + lay.x, r.x.begin() + lay.x + n);
    flat.insert(flat.end(), r.x.begin() + lay.Y, r.x.begin() + lay.Y + n * k);
    flat.insert(flat.end(), r.x.begin() + lay.y0, r.x.begin() + lay.y0 + n);
    r.x = std::move(flat);
  }
  return r;
}

}  // namespace rpx
