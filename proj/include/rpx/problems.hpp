#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpx/domain_layer.hpp"
#include "rpx/linalg.hpp"
#include "rpx/uncertainty.hpp"

namespace rpx {

enum class Application { knapsack_cont, knapsack_bin, inventory };

std::string application_name(Application a);
Application application_from_name(const std::string& name);

// ---------------------------------------------------------------------------
// Instance types

// Multidimensional knapsack; each constraint row's weights perturb
// independently within a radius-rho ball around the nominal row.
struct KnapsackInstance {
  Vec values;                   // v, length d_x
  DenseMatrix nominal_weights;  // W_hat, m x d_x, entries >= 0
  Vec capacities;               // C, length m, > 0
  double rho = 0.0;
  NormKind norm_kind = NormKind::box;

  std::size_t dim() const { return values.size(); }
  std::size_t rows() const { return capacities.size(); }
};

// Multi-retailer newsvendor with linear decision rules; demand
// d = base_demand + sensitivity * u with u in a ball around nominal_u.
struct InventoryInstance {
  Vec revenue;              // r, length N
  Vec unit_cost;            // c^o, length N, 0 <= c^o < r
  Vec base_demand;          // d^0, length N, >= 0
  DenseMatrix sensitivity;  // Q, N x k
  Vec nominal_u;            // u_hat, length k
  double rho = 0.0;
  NormKind norm_kind = NormKind::box;
  double capacity = 0.0;    // C > 0, stock budget 1^T x <= C
  Vec x_upper;              // c, length N, > 0; domain X = [0, c]

  std::size_t retailers() const { return revenue.size(); }
  std::size_t factors() const { return nominal_u.size(); }
};

// Tagged dataset; exactly one instance vector is populated.
struct Dataset {
  Application app = Application::knapsack_cont;
  std::uint64_t seed = 0;
  std::string gen_version = "1";
  std::vector<KnapsackInstance> knapsack;
  std::vector<InventoryInstance> inventory;

  bool is_knapsack() const { return app != Application::inventory; }
  std::size_t size() const { return is_knapsack() ? knapsack.size() : inventory.size(); }
};

// ---------------------------------------------------------------------------
// Generators

struct KnapsackGenConfig {
  std::size_t dim = 20;   // d_x
  std::size_t rows = 5;   // m
  std::size_t count = 1;
  double rho = 0.1;
  NormKind norm_kind = NormKind::box;
  std::uint64_t seed = 0;
  bool binary_domain = false;
};

struct InventoryGenConfig {
  std::size_t retailers = 10;  // N
  std::size_t factors = 3;     // k
  std::size_t count = 1;
  double rho = 0.5;
  NormKind norm_kind = NormKind::box;
  std::uint64_t seed = 0;
};

// v ~ U[1,10], W_hat ~ U[0.5,1.5], C_j = beta_j * sum_i W_hat_ji with
// beta_j ~ U[0.2,0.4]. Deterministic per (seed, index); parallel-safe.
Dataset generate_knapsack(const KnapsackGenConfig& cfg);

// r ~ U[5,10], c^o ~ U[1,4] (resampled until < r), d^0 ~ U[10,30],
// Q ~ U[-2,2], u_hat ~ U[-1,1], C = 0.8 * sum d^0, x_upper = 2 d^0.
Dataset generate_inventory(const InventoryGenConfig& cfg);

// ---------------------------------------------------------------------------
// Decision evaluation

// Objective, per-constraint worst-case values and all gradients, in the
// flat decision layout of the application.
struct EvalTerms {
  double objective = 0.0;
  Vec objective_grad;
  Vec worst_cases;                   // gbar_j per constraint
  std::vector<Vec> worst_case_grads;
};

// f = v^T x; gbar_j = W_hat_j^T x + rho * dual_norm(x) - C_j.
EvalTerms knapsack_eval(const KnapsackInstance& inst, const Vec& x);

// Decision variables (x, Y, y0); flat layout [x | Y row-major | y0].
struct InventoryDecision {
  Vec x;           // N
  DenseMatrix Y;   // N x k
  Vec y0;          // N

  Vec flatten() const;
  static InventoryDecision unflatten(const Vec& flat, std::size_t retailers,
                                     std::size_t factors);
};

// Profit variable eliminated at its optimum:
//   f = r^T(Y u_hat + y0) - rho * dual_norm(Y^T r) - c^o^T x.
// Constraints: N stock rows, N demand rows, then the capacity row.
EvalTerms inventory_eval(const InventoryInstance& inst, const InventoryDecision& d);

std::size_t decision_dim(const Dataset& ds);
EvalTerms eval_decision(const Dataset& ds, std::size_t index, const Vec& decision);

// ---------------------------------------------------------------------------
// Network output -> decision variables

// Knapsack: the domain layer maps all of w. Inventory: x = c * sigmoid(w_x)
// blockwise, Y and y0 pass through raw.
Vec decision_parameterize(const Dataset& ds, std::size_t index,
                          const DomainLayer& layer, const Vec& w);

// Chain rule dL/d(decision) -> dL/dw; train-mode layers only.
Vec decision_parameterize_grad(const Dataset& ds, std::size_t index,
                               const DomainLayer& layer, const Vec& w,
                               const Vec& dL_ddecision);

// ---------------------------------------------------------------------------
// Features

// Deterministic flattening of instance parameters.
Vec feature_vector(const KnapsackInstance& inst);
Vec feature_vector(const InventoryInstance& inst);
Vec feature_vector(const Dataset& ds, std::size_t index);
std::size_t feature_dim(const Dataset& ds);

// Per-coordinate standardization statistics, computed on the training
// split only. Coordinates with stddev < 1e-12 are passed through unscaled.
struct FeatureStats {
  Vec mean;
  Vec stddev;
};

FeatureStats compute_feature_stats(const Dataset& ds,
                                   const std::vector<std::size_t>& indices);
Vec standardize(const Vec& z, const FeatureStats& stats);

}  // namespace rpx
