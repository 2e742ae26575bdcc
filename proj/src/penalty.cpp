#include "rpx/penalty.hpp"

#include <cmath>
#include <stdexcept>

namespace rpx {

namespace {

void check_cfg(const PenaltyConfig& cfg) {
  require(cfg.nu > 0.0 && std::isfinite(cfg.nu), "penalty: nu must be > 0");
}

}  // namespace

LossBreakdown ssl_loss(double objective_value, const Vec& worst_cases,
                       const PenaltyConfig& cfg) {
  check_cfg(cfg);
  if (!std::isfinite(objective_value) || !all_finite(worst_cases))
    throw std::runtime_error("ssl_loss: non-finite input");

  LossBreakdown out;
  out.objective_term = -objective_value;
  out.per_constraint_violation.resize(worst_cases.size());
  double viol_sum = 0.0;
  for (std::size_t j = 0; j < worst_cases.size(); ++j) {
    out.per_constraint_violation[j] = std::max(0.0, worst_cases[j]);
    viol_sum += out.per_constraint_violation[j];
  }
  out.penalty_term = cfg.nu * viol_sum;
  out.total = out.objective_term + out.penalty_term;
  return out;
}

Vec ssl_loss_grad_x(const Vec& grad_f, const std::vector<Vec>& worst_case_grads,
                    const Vec& worst_cases, const PenaltyConfig& cfg) {
  check_cfg(cfg);
  require(worst_case_grads.size() == worst_cases.size(),
          "ssl_loss_grad_x: constraint count mismatch");

  Vec g(grad_f.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -grad_f[i];
  for (std::size_t j = 0; j < worst_cases.size(); ++j) {
    if (worst_cases[j] <= 0.0) continue;
    require(worst_case_grads[j].size() == g.size(),
            "ssl_loss_grad_x: gradient dimension mismatch");
    axpy(cfg.nu, worst_case_grads[j], g);
  }
  return g;
}

double sl_loss(const Vec& x_pred, const Vec& x_star, Vec* grad) {
  require(x_pred.size() == x_star.size(), "sl_loss: length mismatch");
  double s = 0.0;
  if (grad) grad->resize(x_pred.size());
  for (std::size_t i = 0; i < x_pred.size(); ++i) {
    const double d = x_pred[i] - x_star[i];
    s += d * d;
    if (grad) (*grad)[i] = 2.0 * d;
  }
  return s;
}

}  // namespace rpx
