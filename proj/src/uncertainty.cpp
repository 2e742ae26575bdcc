#include "rpx/uncertainty.hpp"

#include <cmath>
#include <stdexcept>

namespace rpx {

std::string norm_name(NormKind k) {
  return k == NormKind::box ? "box" : "ellipsoid";
}

NormKind norm_from_name(const std::string& name) {
  if (name == "box") return NormKind::box;
  if (name == "ellipsoid") return NormKind::ellipsoid;
  throw std::invalid_argument("unknown norm kind: " + name);
}

double dual_norm(const Vec& a, NormKind kind) {
  return kind == NormKind::box ? norm1(a) : norm2(a);
}

Vec dual_norm_subgradient(const Vec& a, NormKind kind) {
  Vec g(a.size(), 0.0);
  if (kind == NormKind::box) {
    for (std::size_t i = 0; i < a.size(); ++i)
      g[i] = a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0);
  } else {
    const double n = norm2(a);
    if (n >= 1e-12)
      for (std::size_t i = 0; i < a.size(); ++i) g[i] = a[i] / n;
  }
  return g;
}

namespace {

void check_inputs(const AffineInU& c, const UncertaintySet& set) {
  require(c.coeff.size() == set.nominal.size(),
          "worst_case: coeff/nominal dimension mismatch");
  require(set.radius >= 0.0 && std::isfinite(set.radius),
          "worst_case: radius must be finite and nonnegative");
  require(all_finite(c.coeff) && std::isfinite(c.offset) && all_finite(set.nominal),
          "worst_case: non-finite input");
}

}  // namespace

double worst_case_max(const AffineInU& c, const UncertaintySet& set) {
  check_inputs(c, set);
  return dot(c.coeff, set.nominal) + set.radius * dual_norm(c.coeff, set.norm_kind) +
         c.offset;
}

double worst_case_min(const AffineInU& c, const UncertaintySet& set) {
  check_inputs(c, set);
  return dot(c.coeff, set.nominal) - set.radius * dual_norm(c.coeff, set.norm_kind) +
         c.offset;
}

}  // namespace rpx
