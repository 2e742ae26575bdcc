#pragma once

#include "rpx/lp.hpp"
#include "rpx/problems.hpp"

namespace rpx {

// Robust counterpart LP for box uncertainty. Knapsack (continuous
// relaxation): max v^T x s.t. (W_hat_j + rho 1^T) x <= C_j, 0 <= x <= 1.
// Throws for ellipsoid sets; the loss supports them, the LP oracle does not.
StandardFormLP build_counterpart_lp(const KnapsackInstance& inst);

// Inventory counterpart. Columns [P | x | Y | y0 | tP | T | S] where tP, T
// and S linearize the absolute values of Y^T r, Y rows and (Y - Q) rows.
StandardFormLP build_counterpart_lp(const InventoryInstance& inst);

// Column offsets into the inventory counterpart solution.
struct InventoryLpLayout {
  std::size_t profit, x, Y, y0, t_profit, T, S, total;
};
InventoryLpLayout inventory_lp_layout(const InventoryInstance& inst);

// Best-first branch and bound over x in {0,1}^d_x using the counterpart LP
// relaxation for bounds. Exact optimum, or node_limit with the incumbent.
SolveResult branch_and_bound_binary(const KnapsackInstance& inst,
                                    std::size_t max_nodes = 1000000);

struct FeasibilityResult {
  double max_violation = 0.0;  // max_j gbar_j, clamped below at 0
  bool feasible = false;       // all gbar_j <= 1e-6
};

FeasibilityResult feasibility_check(const Vec& worst_cases);
FeasibilityResult feasibility_check(const KnapsackInstance& inst, const Vec& x);
FeasibilityResult feasibility_check(const InventoryInstance& inst,
                                    const InventoryDecision& d);

// Reference solve of one instance; returns the optimal decision in the
// application's flat layout. Continuous knapsack and inventory solve the
// counterpart LP, binary knapsack runs branch and bound.
SolveResult solve_reference(const Dataset& ds, std::size_t index);

constexpr double kFeasibilityTol = 1e-6;

}  // namespace rpx
