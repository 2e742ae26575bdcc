#pragma once

#include <string>

#include "rpx/linalg.hpp"

namespace rpx {

// Norm ball around nominal parameters: box = l_inf ball, ellipsoid = l_2 ball.
enum class NormKind { box, ellipsoid };

std::string norm_name(NormKind k);
NormKind norm_from_name(const std::string& name);

struct UncertaintySet {
  NormKind norm_kind = NormKind::box;
  Vec nominal;         // u_hat
  double radius = 0.0;  // rho
};

// Function affine in the uncertain parameters: u -> coeff^T u + offset.
struct AffineInU {
  Vec coeff;
  double offset = 0.0;
};

// Dual norm of the ball norm: l_1 for box, l_2 for ellipsoid.
double dual_norm(const Vec& a, NormKind kind);

// A.e. gradient of a -> dual_norm(a). Box: componentwise sign with
// sign(0) = 0. Ellipsoid: a/||a||_2, or 0 when ||a||_2 < 1e-12.
Vec dual_norm_subgradient(const Vec& a, NormKind kind);

// max over the ball of coeff^T u + offset:
//   coeff^T u_hat + radius * dual_norm(coeff) + offset
double worst_case_max(const AffineInU& c, const UncertaintySet& set);

// min over the ball: coeff^T u_hat - radius * dual_norm(coeff) + offset.
double worst_case_min(const AffineInU& c, const UncertaintySet& set);

}  // namespace rpx
