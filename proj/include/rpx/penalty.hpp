#pragma once

#include "rpx/linalg.hpp"

namespace rpx {

struct PenaltyConfig {
  double nu = 1.0;  // penalty coefficient, must be > 0
};

// One loss evaluation: total = objective_term + penalty_term where
// objective_term = -f and penalty_term = nu * sum_j max(0, gbar_j).
struct LossBreakdown {
  double objective_term = 0.0;
  double penalty_term = 0.0;
  double total = 0.0;
  Vec per_constraint_violation;  // max(0, gbar_j), always >= 0
};

LossBreakdown ssl_loss(double objective_value, const Vec& worst_cases,
                       const PenaltyConfig& cfg);

// Gradient of ssl_loss w.r.t. the decision variables. Constraints with
// gbar_j <= 0 contribute nothing (subgradient 0 at the kink).
Vec ssl_loss_grad_x(const Vec& grad_f, const std::vector<Vec>& worst_case_grads,
                    const Vec& worst_cases, const PenaltyConfig& cfg);

// Supervised baseline ||x_pred - x_star||_2^2; writes 2(x_pred - x_star)
// into grad when non-null.
double sl_loss(const Vec& x_pred, const Vec& x_star, Vec* grad = nullptr);

}  // namespace rpx
