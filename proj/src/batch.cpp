#include "rpx/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>

#include "rpx/solvers.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rpx {

namespace {

// Shared per-instance pipeline up to the decision vector. The tape is kept
// so callers can push gradients back through the network.
struct InstancePass {
  Vec w;         // raw network output
  Vec decision;  // after the domain layer / parameterization
  ForwardTape tape;
};

InstancePass run_instance(const MlpModel& model, const Dataset& ds,
                          std::size_t index, const FeatureStats& stats,
                          const DomainLayer& layer) {
  InstancePass pass;
  const Vec z = standardize(feature_vector(ds, index), stats);
  pass.w = forward(model, z, &pass.tape);
  pass.decision = decision_parameterize(ds, index, layer, pass.w);
  return pass;
}

MlpGrad instance_grad(const MlpModel& model, const Dataset& ds,
                      std::size_t index, const DomainLayer& layer,
                      const InstancePass& pass, const Vec& dL_ddecision) {
  const Vec dL_dw =
      decision_parameterize_grad(ds, index, layer, pass.w, dL_ddecision);
  return backward(model, pass.tape, dL_dw);
}

}  // namespace

namespace detail {

void parallel_run(std::size_t n, ExecPolicy policy,
                  const std::function<void(std::size_t)>& fn) {
  std::exception_ptr error = nullptr;
  std::atomic<bool> failed{false};
  const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (policy == ExecPolicy::openmp)
  for (std::int64_t i = 0; i < nn; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(rpx_batch_error)
      {
        if (!error) error = std::current_exception();
      }
      failed.store(true, std::memory_order_relaxed);
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

std::vector<Vec> batch_forward(const MlpModel& model,
                               const std::vector<Vec>& inputs,
                               ExecPolicy policy) {
  std::vector<Vec> out(inputs.size());
  for_each_index(inputs.size(), policy,
                 [&](std::size_t i) { out[i] = forward(model, inputs[i]); });
  return out;
}

DenseMatrix packed_forward(const MlpModel& model, const std::vector<Vec>& inputs,
                           ExecPolicy policy) {
  require(!inputs.empty(), "packed_forward: empty batch");
  const std::size_t batch = inputs.size();
  DenseMatrix cur(batch, model.input_dim());
  for (std::size_t b = 0; b < batch; ++b) {
    require(inputs[b].size() == model.input_dim(),
            "packed_forward: input dimension mismatch");
    std::copy(inputs[b].begin(), inputs[b].end(), cur.row(b));
  }

  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const DenseMatrix& w = model.weights[l];  // out x in
    const Vec& bias = model.biases[l];
    const std::size_t in = w.cols;
    const std::size_t out = w.rows;
    // Transposed weights make the inner j loop contiguous in both factors.
    DenseMatrix wt(in, out);
    for (std::size_t j = 0; j < out; ++j)
      for (std::size_t k = 0; k < in; ++k) wt.at(k, j) = w.at(j, k);

    DenseMatrix next(batch, out);
    const bool last = (l + 1 == model.layer_count());
    const bool relu = model.hidden_activation == Activation::relu;
    // Instances advance through k in blocks so each transposed weight row is
    // fetched once per block instead of once per instance. Every output
    // element still accumulates in ascending k order, so the result matches
    // the unblocked loop bit for bit.
    constexpr std::size_t kBlock = 8;
    const std::size_t blocks = (batch + kBlock - 1) / kBlock;
    for_each_index(blocks, policy, [&](std::size_t blk) {
      const std::size_t b0 = blk * kBlock;
      const std::size_t b1 = std::min(b0 + kBlock, batch);
      for (std::size_t b = b0; b < b1; ++b)
        std::copy(bias.begin(), bias.end(), next.row(b));
      for (std::size_t k = 0; k < in; ++k) {
        const double* __restrict wk = wt.row(k);
        for (std::size_t b = b0; b < b1; ++b) {
          const double xk = cur.at(b, k);
          double* __restrict y = next.row(b);
          for (std::size_t j = 0; j < out; ++j) y[j] += xk * wk[j];
        }
      }
      if (!last)
        for (std::size_t b = b0; b < b1; ++b) {
          double* y = next.row(b);
          for (std::size_t j = 0; j < out; ++j)
            y[j] = relu ? (y[j] > 0.0 ? y[j] : 0.0) : std::tanh(y[j]);
        }
    });
    cur = std::move(next);
  }
  return cur;
}

SslBatchResult ssl_loss_batch(const MlpModel& model, const Dataset& ds,
                              const std::vector<std::size_t>& indices,
                              const FeatureStats& stats,
                              const DomainLayer& layer,
                              const PenaltyConfig& penalty, ExecPolicy policy) {
  require(!indices.empty(), "ssl_loss_batch: empty batch");
  const std::size_t n = indices.size();
  std::vector<MlpGrad> slots(n);
  SslBatchResult res;
  res.per_instance_total.assign(n, 0.0);

  for_each_index(n, policy, [&](std::size_t b) {
    const std::size_t idx = indices[b];
    const InstancePass pass = run_instance(model, ds, idx, stats, layer);
    const EvalTerms terms = eval_decision(ds, idx, pass.decision);
    const LossBreakdown loss =
        ssl_loss(terms.objective, terms.worst_cases, penalty);
    const Vec dL_ddecision =
        ssl_loss_grad_x(terms.objective_grad, terms.worst_case_grads,
                        terms.worst_cases, penalty);
    slots[b] = instance_grad(model, ds, idx, layer, pass, dL_ddecision);
    res.per_instance_total[b] = loss.total;
  });

  // Reduction stays sequential and in batch order so results do not depend
  // on the thread count.
  res.grad = MlpGrad::zeros_like(model);
  double sum = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    res.grad.accumulate(slots[b]);
    sum += res.per_instance_total[b];
  }
  res.grad.scale(1.0 / static_cast<double>(n));
  res.mean_loss = sum / static_cast<double>(n);
  return res;
}

SlBatchResult sl_loss_batch(const MlpModel& model, const Dataset& ds,
                            const std::vector<std::size_t>& indices,
                            const FeatureStats& stats, const DomainLayer& layer,
                            const LabelSet& labels, ExecPolicy policy) {
  require(!indices.empty(), "sl_loss_batch: empty batch");
  const std::size_t n = indices.size();
  for (std::size_t idx : indices)
    if (!labels.has(idx))
      throw std::runtime_error(
          "supervised training needs labels for every training instance; "
          "instance " +
          std::to_string(idx) +
          " is missing. Run the solve command on this dataset first.");

  std::vector<MlpGrad> slots(n);
  SlBatchResult res;
  res.per_instance_total.assign(n, 0.0);

  for_each_index(n, policy, [&](std::size_t b) {
    const std::size_t idx = indices[b];
    const InstancePass pass = run_instance(model, ds, idx, stats, layer);
    const Vec& target = labels.x_star[labels.position(idx)];
    Vec dL_ddecision;
    res.per_instance_total[b] = sl_loss(pass.decision, target, &dL_ddecision);
    slots[b] = instance_grad(model, ds, idx, layer, pass, dL_ddecision);
  });

  res.grad = MlpGrad::zeros_like(model);
  double sum = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    res.grad.accumulate(slots[b]);
    sum += res.per_instance_total[b];
  }
  res.grad.scale(1.0 / static_cast<double>(n));
  res.mean_loss = sum / static_cast<double>(n);
  return res;
}

double BatchMetrics::feasible_pct() const {
  if (feasible.empty()) return 0.0;
  std::size_t c = 0;
  for (char f : feasible) c += f ? 1 : 0;
  return 100.0 * static_cast<double>(c) / static_cast<double>(feasible.size());
}

double BatchMetrics::mean_max_violation() const {
  if (max_violation.empty()) return 0.0;
  double s = 0.0;
  for (double v : max_violation) s += v;
  return s / static_cast<double>(max_violation.size());
}

double BatchMetrics::mean_loss() const {
  if (loss_total.empty()) return 0.0;
  double s = 0.0;
  for (double v : loss_total) s += v;
  return s / static_cast<double>(loss_total.size());
}

BatchMetrics batch_metrics(const MlpModel& model, const Dataset& ds,
                           const std::vector<std::size_t>& indices,
                           const FeatureStats& stats, const DomainLayer& layer,
                           const PenaltyConfig& penalty, ExecPolicy policy) {
  const std::size_t n = indices.size();
  BatchMetrics m;
  m.objective.assign(n, 0.0);
  m.max_violation.assign(n, 0.0);
  m.feasible.assign(n, 0);
  m.loss_total.assign(n, 0.0);
  const DomainLayer test_layer = layer.with_mode(LayerMode::test);
  const DomainLayer train_layer = layer.with_mode(LayerMode::train);

  for_each_index(n, policy, [&](std::size_t b) {
    const std::size_t idx = indices[b];
    const Vec z = standardize(feature_vector(ds, idx), stats);
    const Vec w = forward(model, z);
    // Deployed decision: test-mode map, feasibility of what we would ship.
    const Vec decision = decision_parameterize(ds, idx, test_layer, w);
    const EvalTerms terms = eval_decision(ds, idx, decision);
    const FeasibilityResult feas = feasibility_check(terms.worst_cases);
    m.objective[b] = terms.objective;
    m.max_violation[b] = feas.max_violation;
    m.feasible[b] = feas.feasible ? 1 : 0;
    // Loss under the train-mode surrogate, the quantity training minimizes.
    const Vec train_decision = decision_parameterize(ds, idx, train_layer, w);
    const EvalTerms train_terms = eval_decision(ds, idx, train_decision);
    m.loss_total[b] =
        ssl_loss(train_terms.objective, train_terms.worst_cases, penalty).total;
  });
  return m;
}

}  // namespace rpx
