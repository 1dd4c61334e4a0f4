#pragma once

// Prescribed surface motions x(t) = Phi(x0, t) with Phi(., 0) = Id.
//
// A motion also carries the analytic unit normal of the moved surface, since
// flux fields are built from the smooth normal rather than from the flat
// triangles. The normal evaluators accept points slightly off the surface
// (edge midpoints of the flat mesh) and return the normal of the level set
// through that point.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "moverfv/errors.hpp"
#include "moverfv/vec3.hpp"

namespace moverfv {

enum class MotionKind { identity, shrinking_sphere, pinching_ellipsoid, custom };

inline const char* to_string(MotionKind k) {
  switch (k) {
    case MotionKind::identity: return "identity";
    case MotionKind::shrinking_sphere: return "shrinking_sphere";
    case MotionKind::pinching_ellipsoid: return "pinching_ellipsoid";
    case MotionKind::custom: return "custom";
  }
  return "?";
}

/// (point, time) -> point or vector in R^3.
using PointField = std::function<Vec3(const Vec3&, double)>;

/// Radial unit normal of any sphere centred at the origin.
inline Vec3 radial_normal(const Vec3& x, double /*t*/) {
  const double r = norm(x);
  if (r == 0.0) throw DomainError("radial normal undefined at the origin");
  return x / r;
}

class MotionMap {
 public:
  MotionMap(MotionKind kind, PointField evaluator, PointField normal,
            double t_max = std::numeric_limits<double>::infinity(),
            std::map<std::string, double> parameters = {})
      : kind_(kind),
        evaluator_(std::move(evaluator)),
        normal_(std::move(normal)),
        t_max_(t_max),
        parameters_(std::move(parameters)) {}

  MotionKind kind() const { return kind_; }
  double t_max() const { return t_max_; }
  const std::map<std::string, double>& parameters() const { return parameters_; }

  /// Phi(x0, t). Throws DomainError for t outside [0, t_max].
  Vec3 evaluate(const Vec3& x0, double t) const {
    if (!(t >= 0.0 && t <= t_max_)) {
      std::ostringstream os;
      os << to_string(kind_) << " motion evaluated at t=" << t << " outside [0, " << t_max_ << "]";
      throw DomainError(os.str());
    }
    return evaluator_(x0, t);
  }

  /// Unit normal of Gamma(t) at (or near) x.
  Vec3 normal(const Vec3& x, double t) const { return normal_(x, t); }

  const PointField& normal_field() const { return normal_; }

 private:
  MotionKind kind_;
  PointField evaluator_;
  PointField normal_;
  double t_max_;
  std::map<std::string, double> parameters_;
};

/// Phi(x, t) = x. The normal defaults to the unit-sphere normal.
inline MotionMap identity_motion(PointField normal = radial_normal) {
  return MotionMap(MotionKind::identity, [](const Vec3& x, double) { return x; }, std::move(normal));
}

/// Phi(x, t) = exp(-t) x.
inline MotionMap shrinking_sphere() {
  return MotionMap(
      MotionKind::shrinking_sphere, [](const Vec3& x, double t) { return std::exp(-t) * x; },
      radial_normal);
}

struct PinchParameters {
  Vec3 axes{2.0, 1.0, 1.0};
  double amplitude = 0.6;  // beta_max
  double width = 0.5;      // w
  double end_time = 1.0;   // T
};

/// Waist scaling s(x1, t) = 1 - beta_max (t/T) exp(-x1^2 / w^2).
inline double pinch_factor(const PinchParameters& p, double x1, double t) {
  return 1.0 - p.amplitude * (t / p.end_time) * std::exp(-(x1 * x1) / (p.width * p.width));
}

/// Ellipsoid with semi-axes p.axes whose waist around x1 = 0 narrows linearly
/// in time. Reference points live on the ellipsoid itself (scale a unit
/// icosphere by the axes first); a reference point y moves to
/// (y1, s(y1,t) y2, s(y1,t) y3).
inline MotionMap pinching_ellipsoid(const PinchParameters& p) {
  if (!(p.amplitude >= 0.0 && p.amplitude < 1.0)) {
    throw ConfigError("motion.pinch_amplitude must lie in [0, 1)");
  }
  if (!(p.width > 0.0)) throw ConfigError("motion.pinch_width must be positive");
  if (!(p.end_time > 0.0)) throw ConfigError("pinching ellipsoid needs a positive end time");
  if (!(p.axes.x > 0.0 && p.axes.y > 0.0 && p.axes.z > 0.0)) {
    throw ConfigError("motion.axes must be positive");
  }
  auto evaluator = [p](const Vec3& y, double t) {
    const double s = pinch_factor(p, y.x, t);
    return Vec3{y.x, s * y.y, s * y.z};
  };
  // Moved surface is the zero set of
  //   F(z,t) = (z1/a1)^2 + ((z2/a2)^2 + (z3/a3)^2) / s(z1,t)^2 - 1.
  auto normal = [p](const Vec3& z, double t) {
    const double a1 = p.axes.x, a2 = p.axes.y, a3 = p.axes.z;
    const double w2 = p.width * p.width;
    const double g = std::exp(-(z.x * z.x) / w2);
    const double s = 1.0 - p.amplitude * (t / p.end_time) * g;
    const double ds = p.amplitude * (t / p.end_time) * g * 2.0 * z.x / w2;
    const double q = (z.y * z.y) / (a2 * a2) + (z.z * z.z) / (a3 * a3);
    const Vec3 grad{2.0 * z.x / (a1 * a1) - 2.0 * q * ds / (s * s * s),
                    2.0 * z.y / (a2 * a2 * s * s), 2.0 * z.z / (a3 * a3 * s * s)};
    const double n = norm(grad);
    if (n == 0.0) throw DomainError("ellipsoid normal undefined at the centre");
    return grad / n;
  };
  return MotionMap(MotionKind::pinching_ellipsoid, evaluator, normal, p.end_time,
                   {{"a1", p.axes.x},
                    {"a2", p.axes.y},
                    {"a3", p.axes.z},
                    {"beta_max", p.amplitude},
                    {"width", p.width},
                    {"end_time", p.end_time}});
}

/// User-supplied motion. The evaluator must satisfy Phi(x, 0) = x and be pure.
inline MotionMap custom_motion(PointField evaluator, PointField normal,
                               double t_max = std::numeric_limits<double>::infinity()) {
  return MotionMap(MotionKind::custom, std::move(evaluator), std::move(normal), t_max);
}

}  // namespace moverfv
