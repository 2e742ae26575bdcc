#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpx/linalg.hpp"

namespace rpx {

enum class Activation { relu, tanh_ };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully connected network with linear output layer. weights[l] has shape
// layer_dims[l+1] x layer_dims[l]. Immutable once built except through
// adam_step; safe to share across threads for inference.
struct MlpModel {
  std::vector<std::size_t> layer_dims;
  std::vector<DenseMatrix> weights;
  std::vector<Vec> biases;
  Activation hidden_activation = Activation::tanh_;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t layer_count() const { return weights.size(); }
};

// Xavier-uniform weights (|W_ij| <= sqrt(6/(fan_in+fan_out))), zero biases.
MlpModel make_mlp(const std::vector<std::size_t>& layer_dims, Activation hidden,
                  std::uint64_t seed);

// Activation cache from one forward pass; consumed by backward().
struct ForwardTape {
  Vec input;
  std::vector<Vec> pre;   // pre-activation per layer
  std::vector<Vec> post;  // post-activation per layer; post.back() is the output
};

Vec forward(const MlpModel& model, const Vec& z, ForwardTape* tape = nullptr);

// Parameter gradient with the same shape as the model.
struct MlpGrad {
  std::vector<DenseMatrix> weights;
  std::vector<Vec> biases;

  static MlpGrad zeros_like(const MlpModel& model);
  void accumulate(const MlpGrad& other);
  void scale(double s);
};

// Reverse-mode chain rule through the tape. dL_dw is the loss gradient with
// respect to the network output.
MlpGrad backward(const MlpModel& model, const ForwardTape& tape, const Vec& dL_dw);

struct AdamState {
  std::vector<DenseMatrix> m_w, v_w;
  std::vector<Vec> m_b, v_b;
  std::size_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(const MlpModel& model, double learning_rate);
};

// In-place Adam update with bias correction. Throws on non-finite gradient
// entries, naming the offending layer.
void adam_step(MlpModel& model, const MlpGrad& grad, AdamState& state);

}  // namespace rpx
