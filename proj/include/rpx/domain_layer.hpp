#pragma once

#include <string>

#include "rpx/linalg.hpp"

namespace rpx {

enum class DomainKind { unit_box_sigmoid, scaled_box_sigmoid, binary };
enum class LayerMode { train, test };

std::string domain_kind_name(DomainKind k);
DomainKind domain_kind_from_name(const std::string& name);

// Final-layer map guaranteeing outputs in the decision domain. For binary
// domains the train map is the clipped surrogate argmax over [0,1]^d of
// w^T x - (gamma/2)||x||^2, i.e. clip(w/gamma, 0, 1); the test map is the
// exact argmax over {0,1}^d, the step function 1(w_i > 0).
struct DomainLayer {
  DomainKind kind = DomainKind::unit_box_sigmoid;
  LayerMode mode = LayerMode::train;
  double gamma = 0.1;  // binary smoothing, > 0
  Vec upper;           // scaled_box upper bounds, entries > 0

  DomainLayer with_mode(LayerMode m) const {
    DomainLayer copy = *this;
    copy.mode = m;
    return copy;
  }
};

Vec apply(const DomainLayer& layer, const Vec& w);

// Chain rule w -> x -> loss. Train mode only; the test map for binary
// domains is a step function and has no usable derivative.
Vec apply_grad(const DomainLayer& layer, const Vec& w, const Vec& dL_dx);

}  // namespace rpx
