#include "rpx/domain_layer.hpp"

#include <cmath>
#include <stdexcept>

namespace rpx {

std::string domain_kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::unit_box_sigmoid: return "unit_box_sigmoid";
    case DomainKind::scaled_box_sigmoid: return "scaled_box_sigmoid";
    case DomainKind::binary: return "binary";
  }
  throw std::logic_error("unreachable");
}

DomainKind domain_kind_from_name(const std::string& name) {
  if (name == "unit_box_sigmoid") return DomainKind::unit_box_sigmoid;
  if (name == "scaled_box_sigmoid") return DomainKind::scaled_box_sigmoid;
  if (name == "binary") return DomainKind::binary;
  throw std::invalid_argument("unknown domain layer kind: " + name);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_layer(const DomainLayer& layer, const Vec& w) {
  require(all_finite(w), "domain layer: non-finite input");
  if (layer.kind == DomainKind::binary)
    require(layer.gamma > 0.0, "domain layer: gamma must be > 0");
  if (layer.kind == DomainKind::scaled_box_sigmoid) {
    require(layer.upper.size() == w.size(), "domain layer: upper-bound size mismatch");
    for (double c : layer.upper) require(c > 0.0, "domain layer: upper bounds must be > 0");
  }
}

}  // namespace

Vec apply(const DomainLayer& layer, const Vec& w) {
  check_layer(layer, w);
  Vec x(w.size());
  switch (layer.kind) {
    case DomainKind::unit_box_sigmoid:
      for (std::size_t i = 0; i < w.size(); ++i) x[i] = sigmoid(w[i]);
      break;
    case DomainKind::scaled_box_sigmoid:
      for (std::size_t i = 0; i < w.size(); ++i) x[i] = layer.upper[i] * sigmoid(w[i]);
      break;
    case DomainKind::binary:
      if (layer.mode == LayerMode::test) {
        // step with strict inequality: a tie at 0 maps to 0
        for (std::size_t i = 0; i < w.size(); ++i) x[i] = w[i] > 0.0 ? 1.0 : 0.0;
      } else {
        for (std::size_t i = 0; i < w.size(); ++i)
          x[i] = std::min(1.0, std::max(0.0, w[i] / layer.gamma));
      }
      break;
  }
  return x;
}

Vec apply_grad(const DomainLayer& layer, const Vec& w, const Vec& dL_dx) {
  if (layer.mode != LayerMode::train)
    throw std::logic_error("apply_grad: test-mode domain layer is not differentiable");
  check_layer(layer, w);
  require(dL_dx.size() == w.size(), "apply_grad: gradient size mismatch");

  Vec g(w.size(), 0.0);
  switch (layer.kind) {
    case DomainKind::unit_box_sigmoid:
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double s = sigmoid(w[i]);
        g[i] = dL_dx[i] * s * (1.0 - s);
      }
      break;
    case DomainKind::scaled_box_sigmoid:
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double s = sigmoid(w[i]);
        g[i] = dL_dx[i] * layer.upper[i] * s * (1.0 - s);
      }
      break;
    case DomainKind::binary:
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = w[i] / layer.gamma;
        g[i] = (t > 0.0 && t < 1.0) ? dL_dx[i] / layer.gamma : 0.0;
      }
      break;
  }
  return g;
}

}  // namespace rpx
