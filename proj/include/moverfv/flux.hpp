#pragma once

// Tangential flux fields f((x,t),u) on the moving surface, with their
// u-derivatives. Every model records how it depends on u (linear, pure
// quadratic, or general) so the Engquist-Osher splitting can take an
// analytic path.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "moverfv/errors.hpp"
#include "moverfv/mesh.hpp"
#include "moverfv/motion.hpp"
#include "moverfv/vec3.hpp"

namespace moverfv {

enum class FluxKind { rotation_linear, projected_burgers, potential_divfree, custom };

/// u-dependence of f: linear means f = u A(x,t) (plus a u-independent part),
/// quadratic means f = u^2 B(x,t) (plus a u-independent part).
enum class UShape { linear, quadratic, general };

inline const char* to_string(FluxKind k) {
  switch (k) {
    case FluxKind::rotation_linear: return "rotation_linear";
    case FluxKind::projected_burgers: return "projected_burgers";
    case FluxKind::potential_divfree: return "potential_divfree";
    case FluxKind::custom: return "custom";
  }
  return "?";
}

/// (point, time, u) -> tangent vector.
using FluxField = std::function<Vec3(const Vec3&, double, double)>;

class FluxModel {
 public:
  /// Upper bound of |d f / d u| for u in [u_min, u_max].
  using DerivativeBound = std::function<double(double, double)>;

  FluxModel(FluxKind kind, UShape shape, FluxField eval, FluxField eval_du, PointField normal,
            DerivativeBound bound)
      : kind_(kind),
        shape_(shape),
        eval_(std::move(eval)),
        eval_du_(std::move(eval_du)),
        normal_(std::move(normal)),
        bound_(std::move(bound)) {}

  FluxKind kind() const { return kind_; }
  UShape shape() const { return shape_; }

  Vec3 eval(const Vec3& x, double t, double u) const { return eval_(x, t, u); }
  Vec3 eval_du(const Vec3& x, double t, double u) const { return eval_du_(x, t, u); }
  Vec3 surface_normal(const Vec3& x, double t) const { return normal_(x, t); }

  double lipschitz_bound(double u_min, double u_max) const { return bound_(u_min, u_max); }

 private:
  FluxKind kind_;
  UShape shape_;
  FluxField eval_;
  FluxField eval_du_;
  PointField normal_;
  DerivativeBound bound_;
};

/// f = 0.
inline FluxModel zero_flux(PointField normal = radial_normal) {
  auto zero = [](const Vec3&, double, double) { return Vec3{}; };
  return FluxModel(FluxKind::custom, UShape::linear, zero, zero, std::move(normal),
                   [](double, double) { return 0.0; });
}

/// f(x,t,u) = 2 pi u (-x2, x1, 0) evaluated at the radial projection x / |x|:
/// rigid rotation about the x3 axis, tangent to every centred sphere.
inline FluxModel rotation_linear() {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto direction = [](const Vec3& x) {
    const double r = norm(x);
    if (r == 0.0) throw DomainError("rotation flux undefined at the origin");
    return Vec3{-x.y / r, x.x / r, 0.0};
  };
  return FluxModel(
      FluxKind::rotation_linear, UShape::linear,
      [direction](const Vec3& x, double, double u) { return (two_pi * u) * direction(x); },
      [direction](const Vec3& x, double, double) { return two_pi * direction(x); }, radial_normal,
      [](double, double) { return two_pi; });
}

/// Tangential projection P a = a - (a . nu) nu.
inline Vec3 project_tangent(const Vec3& a, const Vec3& nu) { return a - dot(a, nu) * nu; }

/// f(x,t,u) = strength * (u^2 / 2) * P(x,t) direction, P = I - nu nu^T.
inline FluxModel projected_burgers(const Vec3& direction, double strength, PointField normal) {
  const double len = norm(direction);
  if (!(std::abs(len - 1.0) <= 1e-12)) {
    throw ConfigError("flux.direction must be a unit vector");
  }
  const Vec3 a = direction;
  auto eval = [a, strength, normal](const Vec3& x, double t, double u) {
    return (strength * 0.5 * u * u) * project_tangent(a, normal(x, t));
  };
  auto eval_du = [a, strength, normal](const Vec3& x, double t, double u) {
    return (strength * u) * project_tangent(a, normal(x, t));
  };
  return FluxModel(FluxKind::projected_burgers, UShape::quadratic, eval, eval_du, normal,
                   [strength](double lo, double hi) {
                     return std::abs(strength) * std::max(std::abs(lo), std::abs(hi));
                   });
}

/// Scalar potential h(x,t,u) given through its ambient gradients.
struct Potential {
  FluxField grad;     // grad_x h
  FluxField grad_du;  // grad_x (dh/du)
  UShape shape = UShape::general;
  FluxModel::DerivativeBound grad_du_bound;  // bound of |grad_x dh/du| on [lo, hi]
};

/// h(x,t,u) = -20 x3 u^2, so grad h = (0, 0, -20 u^2).
inline Potential default_potential() {
  Potential p;
  p.grad = [](const Vec3&, double, double u) { return Vec3{0.0, 0.0, -20.0 * u * u}; };
  p.grad_du = [](const Vec3&, double, double u) { return Vec3{0.0, 0.0, -40.0 * u}; };
  p.shape = UShape::quadratic;
  p.grad_du_bound = [](double lo, double hi) { return 40.0 * std::max(std::abs(lo), std::abs(hi)); };
  return p;
}

/// f(x,t,u) = nu(x,t) x grad h(x,t,u): tangent and surface divergence free
/// for every frozen u.
inline FluxModel potential_divfree(Potential h, PointField normal) {
  auto eval = [grad = h.grad, normal](const Vec3& x, double t, double u) {
    return cross(normal(x, t), grad(x, t, u));
  };
  auto eval_du = [grad_du = h.grad_du, normal](const Vec3& x, double t, double u) {
    return cross(normal(x, t), grad_du(x, t, u));
  };
  return FluxModel(FluxKind::potential_divfree, h.shape, eval, eval_du, normal,
                   h.grad_du_bound);
}

inline FluxModel custom_flux(UShape shape, FluxField eval, FluxField eval_du, PointField normal,
                             FluxModel::DerivativeBound bound) {
  return FluxModel(FluxKind::custom, shape, std::move(eval), std::move(eval_du),
                   std::move(normal), std::move(bound));
}

/// Per-cell outflow sum_e |e| f(midpoint_e, t, u) . nu_e for a frozen value u,
/// using the shared edge conormals the scheme uses. Vanishes in the limit for
/// surface divergence-free fields.
inline std::vector<double> discrete_divergence_check(const FluxModel& model,
                                                     const MeshSnapshot& snap, double u,
                                                     double t) {
  const ReferenceMesh& mesh = snap.mesh();
  std::vector<double> edge_flux(mesh.num_edges());
  for (std::size_t i = 0; i < mesh.num_edges(); ++i) {
    const EdgeGeometry& g = snap.edge(i);
    edge_flux[i] = g.length * dot(model.eval(g.midpoint, t, u), g.conormal);
  }
  std::vector<double> residual(snap.num_cells(), 0.0);
  for (std::size_t i = 0; i < mesh.num_edges(); ++i) {
    const Edge& edge = mesh.edges()[i];
    residual[edge.sides[0].cell] += edge_flux[i];
    if (edge.sides[1].cell != npos) residual[edge.sides[1].cell] -= edge_flux[i];
  }
  return residual;
}

}  // namespace moverfv
