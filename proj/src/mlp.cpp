#include "rpx/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "rpx/rng.hpp"

namespace rpx {

std::string activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh_;
  throw std::invalid_argument("unknown activation: " + name);
}

MlpModel make_mlp(const std::vector<std::size_t>& layer_dims, Activation hidden,
                  std::uint64_t seed) {
  require(layer_dims.size() >= 2, "make_mlp: need input and output dims");
  for (std::size_t d : layer_dims) require(d >= 1, "make_mlp: zero layer dim");

  MlpModel m;
  m.layer_dims = layer_dims;
  m.hidden_activation = hidden;
  m.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t fan_in = layer_dims[l];
    const std::size_t fan_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseMatrix w(fan_out, fan_in);
    for (double& x : w.data) x = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

namespace {

double act(double x, Activation a) {
  return a == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

// Derivative given pre-activation x and post-activation y.
double act_deriv(double x, double y, Activation a) {
  return a == Activation::relu ? (x > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

}  // namespace

Vec forward(const MlpModel& model, const Vec& z, ForwardTape* tape) {
  require(z.size() == model.input_dim(), "forward: input dimension mismatch");
  if (tape) {
    tape->input = z;
    tape->pre.assign(model.layer_count(), {});
    tape->post.assign(model.layer_count(), {});
  }
  Vec cur = z;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    Vec pre = matvec(model.weights[l], cur);
    axpy(1.0, model.biases[l], pre);
    const bool last = (l + 1 == model.layer_count());
    Vec post(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i)
      post[i] = last ? pre[i] : act(pre[i], model.hidden_activation);
    if (tape) {
      tape->pre[l] = pre;
      tape->post[l] = post;
    }
    cur = std::move(post);
  }
  return cur;
}

MlpGrad MlpGrad::zeros_like(const MlpModel& model) {
  MlpGrad g;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    g.weights.emplace_back(model.weights[l].rows, model.weights[l].cols);
    g.biases.emplace_back(model.biases[l].size(), 0.0);
  }
  return g;
}

void MlpGrad::accumulate(const MlpGrad& other) {
  require(weights.size() == other.weights.size(), "MlpGrad: layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require(weights[l].shape_equals(other.weights[l]), "MlpGrad: shape mismatch");
    for (std::size_t i = 0; i < weights[l].data.size(); ++i)
      weights[l].data[i] += other.weights[l].data[i];
    for (std::size_t i = 0; i < biases[l].size(); ++i)
      biases[l][i] += other.biases[l][i];
  }
}

void MlpGrad::scale(double s) {
  for (auto& w : weights)
    for (double& x : w.data) x *= s;
  for (auto& b : biases)
    for (double& x : b) x *= s;
}

MlpGrad backward(const MlpModel& model, const ForwardTape& tape, const Vec& dL_dw) {
  const std::size_t n_layers = model.layer_count();
  if (tape.pre.size() != n_layers || tape.post.size() != n_layers ||
      tape.input.size() != model.input_dim())
    throw std::invalid_argument("backward: tape does not match model");
  for (std::size_t l = 0; l < n_layers; ++l)
    if (tape.pre[l].size() != model.layer_dims[l + 1])
      throw std::invalid_argument("backward: tape does not match model");
  require(dL_dw.size() == model.output_dim(), "backward: output gradient mismatch");

  MlpGrad g = MlpGrad::zeros_like(model);
  Vec delta = dL_dw;  // dL/d(pre-activation of current layer); output is linear
  for (std::size_t li = n_layers; li-- > 0;) {
    const Vec& layer_in = (li == 0) ? tape.input : tape.post[li - 1];
    DenseMatrix& gw = g.weights[li];
    for (std::size_t i = 0; i < gw.rows; ++i) {
      const double d = delta[i];
      double* row = gw.row(i);
      for (std::size_t j = 0; j < gw.cols; ++j) row[j] = d * layer_in[j];
    }
    g.biases[li] = delta;
    if (li > 0) {
      Vec prev = matvec_t(model.weights[li], delta);
      for (std::size_t j = 0; j < prev.size(); ++j)
        prev[j] *= act_deriv(tape.pre[li - 1][j], tape.post[li - 1][j],
                             model.hidden_activation);
      delta = std::move(prev);
    }
  }
  return g;
}

AdamState AdamState::init(const MlpModel& model, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    s.m_w.emplace_back(model.weights[l].rows, model.weights[l].cols);
    s.v_w.emplace_back(model.weights[l].rows, model.weights[l].cols);
    s.m_b.emplace_back(model.biases[l].size(), 0.0);
    s.v_b.emplace_back(model.biases[l].size(), 0.0);
  }
  return s;
}

namespace {

void adam_update(Vec& param, const Vec& grad, Vec& m, Vec& v, const AdamState& s,
                 double bc1, double bc2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
  }
}

}  // namespace

void adam_step(MlpModel& model, const MlpGrad& grad, AdamState& state) {
  require(grad.weights.size() == model.layer_count(), "adam_step: shape mismatch");
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    if (!all_finite(grad.weights[l]) || !all_finite(grad.biases[l]))
      throw std::runtime_error("adam_step: non-finite gradient in layer " +
                               std::to_string(l));
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    adam_update(model.weights[l].data, grad.weights[l].data, state.m_w[l].data,
                state.v_w[l].data, state, bc1, bc2);
    adam_update(model.biases[l], grad.biases[l], state.m_b[l], state.v_b[l], state,
                bc1, bc2);
  }
}

}  // namespace rpx
