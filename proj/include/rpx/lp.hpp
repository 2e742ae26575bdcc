#pragma once

#include <limits>
#include <string>

#include "rpx/linalg.hpp"

namespace rpx {

// max c^T x  s.t.  A x <= b,  lower <= x <= upper.
// Builders emit finite bounds; infinite bounds are accepted but a variable
// free on both sides is rejected.
struct StandardFormLP {
  Vec objective;
  DenseMatrix constraint;
  Vec rhs;
  Vec lower;
  Vec upper;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return rhs.size(); }
};

enum class SolveStatus { optimal, infeasible, unbounded, iteration_limit, node_limit };

std::string status_name(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::iteration_limit;
  Vec x;  // solution if optimal; incumbent if node_limit
  double objective = std::numeric_limits<double>::quiet_NaN();
  double solve_time = 0.0;  // seconds
  std::size_t iterations = 0;
  std::size_t node_count = 0;  // branch and bound only
};

// Two-phase bounded-variable primal simplex with Bland's anti-cycling rule.
// Optimal results satisfy primal feasibility within 1e-7 and reduced-cost
// optimality within 1e-9.
SolveResult simplex_solve(const StandardFormLP& lp, std::size_t max_iters = 100000);

// Fixed-layout text dump (objective row, constraint rows, bounds) for
// manual inspection; not a stable format.
std::string lp_debug_dump(const StandardFormLP& lp);

}  // namespace rpx
