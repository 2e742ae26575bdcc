#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rpx/dataset_io.hpp"
#include "rpx/domain_layer.hpp"
#include "rpx/mlp.hpp"
#include "rpx/penalty.hpp"
#include "rpx/problems.hpp"

namespace rpx {

// Execution policy for the batch kernels. serial is the reference
// implementation; openmp parallelizes over instances. The two produce
// bitwise-identical results: per-instance work is independent and the
// reduction into the batch gradient always runs sequentially in index order.
enum class ExecPolicy { serial, openmp };

// Runs fn(i) for i in [0, n), serial or OpenMP-parallel. Exceptions thrown
// by any iteration are captured and rethrown on the calling thread; OpenMP
// would otherwise terminate the process.
namespace detail {
void parallel_run(std::size_t n, ExecPolicy policy,
                  const std::function<void(std::size_t)>& fn);
}

template <typename Fn>
void for_each_index(std::size_t n, ExecPolicy policy, Fn&& fn) {
  detail::parallel_run(n, policy, std::function<void(std::size_t)>(fn));
}

// Raw network outputs for a batch of already-standardized inputs.
std::vector<Vec> batch_forward(const MlpModel& model,
                               const std::vector<Vec>& inputs,
                               ExecPolicy policy);

// Packed inference: the batch flows through each layer as one matrix
// product with the inner loop over contiguous output slots, so the
// compiler can vectorize where the per-instance dot products cannot.
// Row b equals forward(model, inputs[b]) up to floating-point contraction.
DenseMatrix packed_forward(const MlpModel& model, const std::vector<Vec>& inputs,
                           ExecPolicy policy);

// One batch of the self-supervised pipeline over dataset indices:
// standardize -> forward -> domain layer (train mode) -> decision
// parameterization -> problem eval -> penalty loss, with reverse-mode
// accumulation of the mean-loss parameter gradient.
struct SslBatchResult {
  double mean_loss = 0.0;
  Vec per_instance_total;  // loss totals in batch order
  MlpGrad grad;
};

SslBatchResult ssl_loss_batch(const MlpModel& model, const Dataset& ds,
                              const std::vector<std::size_t>& indices,
                              const FeatureStats& stats,
                              const DomainLayer& layer,
                              const PenaltyConfig& penalty, ExecPolicy policy);

// Supervised counterpart: squared error between the train-mode decision and
// the solved label, same gradient plumbing.
struct SlBatchResult {
  double mean_loss = 0.0;
  Vec per_instance_total;
  MlpGrad grad;
};

SlBatchResult sl_loss_batch(const MlpModel& model, const Dataset& ds,
                            const std::vector<std::size_t>& indices,
                            const FeatureStats& stats, const DomainLayer& layer,
                            const LabelSet& labels, ExecPolicy policy);

// Deployment-map metrics for a set of instances: decisions through the
// test-mode layer, objective and worst-case feasibility per instance.
struct BatchMetrics {
  Vec objective;               // f_hat per instance
  Vec max_violation;           // max_j gbar_j clamped at 0
  std::vector<char> feasible;  // 1 iff all gbar_j within tolerance
  Vec loss_total;              // penalty-loss totals under the train-mode map

  double feasible_pct() const;
  double mean_max_violation() const;
  double mean_loss() const;
};

BatchMetrics batch_metrics(const MlpModel& model, const Dataset& ds,
                           const std::vector<std::size_t>& indices,
                           const FeatureStats& stats, const DomainLayer& layer,
                           const PenaltyConfig& penalty, ExecPolicy policy);

}  // namespace rpx
