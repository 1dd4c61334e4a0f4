#pragma once

// Finite volume scheme on a moving flat triangulation, in mass form:
//
//   m_j^{k+1} = m_j^k - tau * sum_{e in dT_j} g_e(u_j^k, u_{l(j,e)}^k),
//   u_j^{k+1} = m_j^{k+1} / V_j^{k+1},
//
// with edge flux functions c_e(u) = int_e f(., t^k, u) . nu_e built on the
// geometry of step k and g either Engquist-Osher or local Lax-Friedrichs.
// Each global edge is evaluated once with its shared conormal; the result is
// subtracted from sides[0] and added to sides[1], so mass moves between
// neighbors without loss.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "moverfv/errors.hpp"
#include "moverfv/flux.hpp"
#include "moverfv/mesh.hpp"
#include "moverfv/motion.hpp"
#include "moverfv/parallel.hpp"
#include "moverfv/vec3.hpp"

namespace moverfv {

enum class NumericalFluxKind { engquist_osher, local_lax_friedrichs };
enum class EdgeQuadrature { midpoint, gauss2 };

inline const char* to_string(NumericalFluxKind k) {
  return k == NumericalFluxKind::engquist_osher ? "engquist_osher" : "local_lax_friedrichs";
}
inline const char* to_string(EdgeQuadrature q) {
  return q == EdgeQuadrature::midpoint ? "midpoint" : "gauss2";
}

namespace detail {

// 4-point Gauss-Legendre on [0, 1].
inline constexpr std::array<double, 4> kGaussNodes = {
    0.5 - 0.5 * 0.8611363115940526, 0.5 - 0.5 * 0.3399810435848563,
    0.5 + 0.5 * 0.3399810435848563, 0.5 + 0.5 * 0.8611363115940526};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.5 * 0.3478548451374538, 0.5 * 0.6521451548625461, 0.5 * 0.6521451548625461,
    0.5 * 0.3478548451374538};

// Points 0 = x_0, ..., x_n = u splitting [0, u] where c' changes sign. Sign
// changes are bracketed on 32 equal subintervals and bisected to full
// precision. Only comparisons are used, so c -> -c yields the same points.
inline std::vector<double> sign_breaks(const std::function<double(double)>& dc, double u) {
  constexpr int kSamples = 32;
  std::vector<double> x(kSamples + 1), d(kSamples + 1);
  for (int i = 0; i <= kSamples; ++i) {
    x[i] = i == kSamples ? u : u * (static_cast<double>(i) / kSamples);
    d[i] = dc(x[i]);
    if (!std::isfinite(d[i])) throw NumericalError("Engquist-Osher splitting: c' is not finite");
  }
  std::vector<double> breaks{0.0};
  for (int i = 0; i < kSamples; ++i) {
    if (i > 0 && d[i] == 0.0) breaks.push_back(x[i]);
    if ((d[i] < 0.0 && d[i + 1] > 0.0) || (d[i] > 0.0 && d[i + 1] < 0.0)) {
      double lo = x[i], hi = x[i + 1];
      const bool left_positive = d[i] > 0.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double dm = dc(mid);
        if (dm == 0.0) {
          lo = hi = mid;
          break;
        }
        ((dm > 0.0) == left_positive ? lo : hi) = mid;
      }
      breaks.push_back(0.5 * (lo + hi));
    }
  }
  if (u != 0.0) breaks.push_back(u);
  return breaks;
}

// Sum of c(q) - c(p) over the segments of [0, u] on which c' has the wanted
// sign: the exact integral of the clipped derivative between sign changes.
inline double split_integral(const std::function<double(double)>& c,
                             const std::function<double(double)>& dc, double u, bool positive) {
  const std::vector<double> x = sign_breaks(dc, u);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double dm = dc(0.5 * (x[i] + x[i + 1]));
    if (positive ? dm > 0.0 : dm < 0.0) sum += c(x[i + 1]) - c(x[i]);
  }
  if (!std::isfinite(sum)) throw NumericalError("Engquist-Osher splitting integral is not finite");
  return sum;
}

}  // namespace detail

/// Scalar edge flux function c(u) with its derivative. Linear and pure
/// quadratic functions are stored by coefficients; anything else through
/// callables.
class EdgeFluxFunction {
 public:
  static EdgeFluxFunction linear(double c0, double slope) {
    EdgeFluxFunction f;
    f.shape_ = UShape::linear;
    f.c0_ = c0;
    f.coeff_ = slope;
    return f;
  }
  /// c(u) = c0 + gamma u^2.
  static EdgeFluxFunction quadratic(double c0, double gamma) {
    EdgeFluxFunction f;
    f.shape_ = UShape::quadratic;
    f.c0_ = c0;
    f.coeff_ = gamma;
    return f;
  }
  static EdgeFluxFunction general(std::function<double(double)> c,
                                  std::function<double(double)> dc) {
    EdgeFluxFunction f;
    f.shape_ = UShape::general;
    f.c0_ = c(0.0);
    f.c_ = std::move(c);
    f.dc_ = std::move(dc);
    return f;
  }

  UShape shape() const { return shape_; }
  double at_zero() const { return c0_; }
  double coefficient() const { return coeff_; }

  double value(double u) const {
    switch (shape_) {
      case UShape::linear: return c0_ + coeff_ * u;
      case UShape::quadratic: return c0_ + coeff_ * u * u;
      case UShape::general: return c_(u);
    }
    return 0.0;
  }

  double derivative(double u) const {
    switch (shape_) {
      case UShape::linear: return coeff_;
      case UShape::quadratic: return 2.0 * coeff_ * u;
      case UShape::general: return dc_(u);
    }
    return 0.0;
  }

  /// int_0^u max(c'(s), 0) ds
  double positive_part(double u) const {
    switch (shape_) {
      case UShape::linear: return coeff_ > 0.0 ? coeff_ * u : 0.0;
      case UShape::quadratic: {
        const double r = coeff_ > 0.0 ? std::max(u, 0.0) : std::min(u, 0.0);
        return coeff_ * r * r;
      }
      case UShape::general:
        return detail::split_integral(c_, dc_, u, true);
    }
    return 0.0;
  }

  /// int_0^u min(c'(s), 0) ds
  double negative_part(double u) const {
    switch (shape_) {
      case UShape::linear: return coeff_ < 0.0 ? coeff_ * u : 0.0;
      case UShape::quadratic: {
        const double r = coeff_ > 0.0 ? std::min(u, 0.0) : std::max(u, 0.0);
        return coeff_ * r * r;
      }
      case UShape::general:
        return detail::split_integral(c_, dc_, u, false);
    }
    return 0.0;
  }

  /// The same edge seen from the neighboring cell: c -> -c.
  EdgeFluxFunction negated() const {
    EdgeFluxFunction f = *this;
    f.c0_ = -c0_;
    f.coeff_ = -coeff_;
    if (shape_ == UShape::general) {
      f.c_ = [c = c_](double u) { return -c(u); };
      f.dc_ = [dc = dc_](double u) { return -dc(u); };
    }
    return f;
  }

  /// max |c'(s)| for s in [lo, hi]; sampled for general functions.
  double max_abs_derivative(double lo, double hi) const {
    switch (shape_) {
      case UShape::linear: return std::abs(coeff_);
      case UShape::quadratic: return 2.0 * std::abs(coeff_) * std::max(std::abs(lo), std::abs(hi));
      case UShape::general: {
        double m = 0.0;
        constexpr int kSamples = 32;
        for (int i = 0; i <= kSamples; ++i) {
          m = std::max(m, std::abs(dc_(lo + (hi - lo) * i / kSamples)));
        }
        return m;
      }
    }
    return 0.0;
  }

 private:
  EdgeFluxFunction() = default;

  UShape shape_ = UShape::linear;
  double c0_ = 0.0;
  double coeff_ = 0.0;
  std::function<double(double)> c_;
  std::function<double(double)> dc_;
};

/// Quadrature nodes along a straight edge; weights sum to 1.
struct EdgeNodes {
  std::array<Vec3, 2> points;
  std::array<double, 2> weights{};
  int count = 0;
};

inline EdgeNodes edge_nodes(const EdgeGeometry& g, EdgeQuadrature q) {
  if (q == EdgeQuadrature::midpoint) return {{g.midpoint, Vec3{}}, {1.0, 0.0}, 1};
  const double off = 0.5 * g.length / std::sqrt(3.0);
  return {{g.midpoint - off * g.direction, g.midpoint + off * g.direction}, {0.5, 0.5}, 2};
}

/// c(u) = int_e f(., t, u) . nu_e by the chosen rule. For general models the
/// returned function refers to `model`, which must outlive it.
inline EdgeFluxFunction edge_flux_function(const FluxModel& model, const EdgeGeometry& g, double t,
                                           EdgeQuadrature q = EdgeQuadrature::midpoint) {
  const EdgeNodes nodes = edge_nodes(g, q);
  const double length = g.length;
  const Vec3 conormal = g.conormal;
  auto c = [&model, nodes, length, conormal, t](double u) {
    double s = 0.0;
    for (int i = 0; i < nodes.count; ++i) {
      s += nodes.weights[i] * dot(model.eval(nodes.points[i], t, u), conormal);
    }
    return length * s;
  };
  auto dc = [&model, nodes, length, conormal, t](double u) {
    double s = 0.0;
    for (int i = 0; i < nodes.count; ++i) {
      s += nodes.weights[i] * dot(model.eval_du(nodes.points[i], t, u), conormal);
    }
    return length * s;
  };
  switch (model.shape()) {
    case UShape::linear: return EdgeFluxFunction::linear(c(0.0), dc(0.0));
    case UShape::quadratic: return EdgeFluxFunction::quadratic(c(0.0), 0.5 * dc(1.0));
    case UShape::general: return EdgeFluxFunction::general(c, dc);
  }
  return EdgeFluxFunction::linear(0.0, 0.0);
}

struct EoSplit {
  double c_plus = 0.0;   // nondecreasing part, carries c(0)
  double c_minus = 0.0;  // nonincreasing part
};

inline EoSplit eo_split(const EdgeFluxFunction& c, double u) {
  return {c.at_zero() + c.positive_part(u), c.negative_part(u)};
}

/// Engquist-Osher flux g(u, v) = c+(u) + c-(v). Evaluated as
/// c(0) + (P(u) + M(v)) so that the neighbor's value with c -> -c is the exact
/// negative.
inline double numerical_flux_eo(const EdgeFluxFunction& c, double u_inside, double u_outside) {
  return c.at_zero() + (c.positive_part(u_inside) + c.negative_part(u_outside));
}

/// Local Lax-Friedrichs flux with dissipation coefficient `local_bound`.
inline double numerical_flux_llf(const EdgeFluxFunction& c, double u_inside, double u_outside,
                                 double local_bound) {
  return 0.5 * (c.value(u_inside) + c.value(u_outside)) -
         0.5 * local_bound * (u_outside - u_inside);
}

struct CellState {
  std::size_t step_index = 0;
  double time = 0.0;
  std::vector<double> values;  // u_j
  std::vector<double> masses;  // m_j = V_j u_j
};

/// Neumaier-compensated sum of the cell masses in cell order.
inline double mass_total(const CellState& state) {
  double sum = 0.0, comp = 0.0;
  for (double m : state.masses) {
    const double t = sum + m;
    comp += std::abs(sum) >= std::abs(m) ? (sum - t) + m : (m - t) + sum;
    sum = t;
  }
  return sum + comp;
}

struct SolverConfig {
  double t_end = 1.0;
  double cfl_number = 0.45;
  NumericalFluxKind numerical_flux = NumericalFluxKind::engquist_osher;
  EdgeQuadrature quadrature = EdgeQuadrature::midpoint;
  double max_dt = 0.0;           // <= 0 selects t_end / 100
  std::size_t keep_every = 0;    // retain every n-th state in the trajectory; 0: first and last
  std::size_t max_steps = 50'000'000;
  bool check_max_principle = false;  // only evaluated for identity motion

  double effective_max_dt() const { return max_dt > 0.0 ? max_dt : t_end / 100.0; }

  void validate() const {
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("solver.t_end must be >= 0");
    if (!(cfl_number > 0.0 && cfl_number <= 1.0)) {
      throw ConfigError("solver.cfl must lie in (0, 1]");
    }
    if (!(max_dt >= 0.0)) throw ConfigError("solver.max_dt must be >= 0");
  }
};

/// Sample u0 at the three edge midpoints of each flat triangle (exact for
/// quadratic u0) and store cell averages and masses.
inline CellState init_cell_averages(const std::function<double(const Vec3&)>& u0,
                                    const MeshSnapshot& snap) {
  CellState s;
  s.time = snap.time();
  const std::size_t n = snap.num_cells();
  s.values.resize(n);
  s.masses.resize(n);
  const auto& tri = snap.mesh().triangles();
  const auto& x = snap.vertices();
  for (std::size_t j = 0; j < n; ++j) {
    const Vec3& a = x[tri[j][0]];
    const Vec3& b = x[tri[j][1]];
    const Vec3& c = x[tri[j][2]];
    s.values[j] = (u0(0.5 * (a + b)) + u0(0.5 * (b + c)) + u0(0.5 * (c + a))) / 3.0;
    s.masses[j] = snap.cell_measure()[j] * s.values[j];
  }
  return s;
}

/// Edge flux functions of every global edge, oriented out of sides[0].
inline std::vector<EdgeFluxFunction> build_edge_functions(const MeshSnapshot& snap,
                                                          const FluxModel& model,
                                                          EdgeQuadrature q) {
  const std::size_t ne = snap.mesh().num_edges();
  std::vector<EdgeFluxFunction> out(ne, EdgeFluxFunction::linear(0.0, 0.0));
  parallel_for(ne, [&](std::size_t i) {
    out[i] = edge_flux_function(model, snap.edge(i), snap.time(), q);
  });
  return out;
}

/// CFL time step from prebuilt edge flux functions.
inline double cfl_dt(const CellState& state, const MeshSnapshot& snap,
                     const std::vector<EdgeFluxFunction>& edge_functions,
                     const SolverConfig& config) {
  const auto [mn, mx] = std::minmax_element(state.values.begin(), state.values.end());
  const double delta = 0.1 * (*mx - *mn);
  const double lo = *mn - delta, hi = *mx + delta;
  const ReferenceMesh& mesh = snap.mesh();

  std::vector<double> speed(mesh.num_edges());
  for (std::size_t i = 0; i < mesh.num_edges(); ++i) {
    speed[i] = edge_functions[i].max_abs_derivative(lo, hi);
  }
  double tau = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < mesh.num_cells(); ++j) {
    const double out = speed[mesh.edge_index(j, 0)] + speed[mesh.edge_index(j, 1)] +
                       speed[mesh.edge_index(j, 2)];
    if (out > 0.0) tau = std::min(tau, snap.cell_measure()[j] / out);
  }
  tau = std::min(config.cfl_number * tau, config.effective_max_dt());
  return std::min(tau, config.t_end - state.time);
}

inline double cfl_dt(const CellState& state, const MeshSnapshot& snap, const FluxModel& model,
                     const SolverConfig& config) {
  return cfl_dt(state, snap, build_edge_functions(snap, model, config.quadrature), config);
}

/// One explicit step in mass form from prebuilt edge flux functions.
inline CellState step(const CellState& state, const MeshSnapshot& snap_k,
                      const MeshSnapshot& snap_k1,
                      const std::vector<EdgeFluxFunction>& edge_functions, double tau,
                      NumericalFluxKind flux_kind) {
  const ReferenceMesh& mesh = snap_k.mesh();
  if (std::abs(snap_k.time() + tau - snap_k1.time()) > 1e-12 * std::max(1.0, snap_k1.time())) {
    throw ConfigError("step: snapshot times do not differ by tau");
  }
  if (state.values.size() != mesh.num_cells() || snap_k1.num_cells() != mesh.num_cells()) {
    throw ConfigError("step: state and snapshots disagree on the cell count");
  }

  const std::size_t ne = mesh.num_edges();
  std::vector<double> g(ne);
  parallel_for(ne, [&](std::size_t i) {
    const Edge& edge = mesh.edges()[i];
    const double u = state.values[edge.sides[0].cell];
    const double v = state.values[edge.sides[1].cell];
    const EdgeFluxFunction& c = edge_functions[i];
    if (flux_kind == NumericalFluxKind::engquist_osher) {
      g[i] = numerical_flux_eo(c, u, v);
    } else {
      g[i] = numerical_flux_llf(c, u, v, c.max_abs_derivative(std::min(u, v), std::max(u, v)));
    }
  });

  CellState next;
  next.step_index = state.step_index + 1;
  next.time = snap_k1.time();
  next.values.resize(mesh.num_cells());
  next.masses.resize(mesh.num_cells());
  parallel_for(mesh.num_cells(), [&](std::size_t j) {
    std::array<std::size_t, 3> ids = {mesh.edge_index(j, 0), mesh.edge_index(j, 1),
                                      mesh.edge_index(j, 2)};
    std::sort(ids.begin(), ids.end());
    double outflow = 0.0;
    for (std::size_t i : ids) {
      outflow += mesh.edges()[i].sides[0].cell == j ? g[i] : -g[i];
    }
    next.masses[j] = state.masses[j] - tau * outflow;
    next.values[j] = next.masses[j] / snap_k1.cell_measure()[j];
  });

  for (std::size_t j = 0; j < mesh.num_cells(); ++j) {
    if (!std::isfinite(next.values[j])) {
      std::ostringstream os;
      os << "blow-up at step " << next.step_index << " (t=" << next.time << "): cell " << j
         << " became non-finite";
      throw BlowUpError(next.step_index, j, os.str());
    }
  }
  return next;
}

inline CellState step(const CellState& state, const MeshSnapshot& snap_k,
                      const MeshSnapshot& snap_k1, const FluxModel& model, double tau,
                      NumericalFluxKind flux_kind,
                      EdgeQuadrature q = EdgeQuadrature::midpoint) {
  return step(state, snap_k, snap_k1, build_edge_functions(snap_k, model, q), tau, flux_kind);
}

struct Frame {
  MeshSnapshot snapshot;
  CellState state;
};

struct RunReport {
  std::size_t steps = 0;
  double t_final = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double initial_mass = 0.0;
  double final_mass = 0.0;
  double mass_drift = 0.0;  // |final - initial| / |initial| (absolute if initial == 0)
  double min_dt = 0.0;
  double max_dt = 0.0;
  std::size_t max_principle_violations = 0;
  std::optional<std::string> failure;
};

struct RunResult {
  std::vector<Frame> trajectory;
  RunReport report;
};

using StepObserver = std::function<void(const MeshSnapshot&, const CellState&)>;

inline bool within_local_bounds(const CellState& before, const CellState& after,
                                const ReferenceMesh& mesh, std::size_t j) {
  double lo = before.values[j], hi = before.values[j];
  for (int e = 0; e < 3; ++e) {
    const double v = before.values[mesh.neighbor(j, e).cell];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  return after.values[j] >= lo - tol && after.values[j] <= hi + tol;
}

/// Advance from t = 0 to config.t_end. The observer sees every state,
/// including the initial one. A blow-up or geometry collapse ends the run
/// early; the partial trajectory is returned with report.failure set.
inline RunResult run(std::shared_ptr<const ReferenceMesh> mesh, const MotionMap& motion,
                     const FluxModel& model, const std::function<double(const Vec3&)>& u0,
                     const SolverConfig& config, const StepObserver& observer = {}) {
  config.validate();
  if (const ManifoldReport m = check_manifold(*mesh); !m.ok) {
    throw ConfigError("mesh is not a closed oriented surface: " + m.first_violation);
  }
  RunResult result;
  RunReport& rep = result.report;

  MeshSnapshot snap = snapshot(mesh, motion, 0.0);
  CellState state = init_cell_averages(u0, snap);
  const auto [mn, mx] = std::minmax_element(state.values.begin(), state.values.end());
  rep.min_u = *mn;
  rep.max_u = *mx;
  rep.initial_mass = mass_total(state);
  rep.min_dt = std::numeric_limits<double>::infinity();
  if (observer) observer(snap, state);

  const bool check_bounds = config.check_max_principle && motion.kind() == MotionKind::identity;
  bool kept_last = true;
  result.trajectory.push_back({snap, state});

  try {
    while (state.time < config.t_end) {
      if (rep.steps >= config.max_steps) {
        throw NumericalError("step limit reached before t_end");
      }
      const auto edge_functions = build_edge_functions(snap, model, config.quadrature);
      const double tau_cfl = cfl_dt(state, snap, edge_functions, config);
      // Land exactly on t_end; absorb a remainder below round-off.
      double t_next = state.time + tau_cfl;
      if (t_next >= config.t_end * (1.0 - 1e-14)) t_next = config.t_end;
      const double tau = t_next - state.time;

      MeshSnapshot next_snap = snapshot(mesh, motion, t_next);
      CellState next = step(state, snap, next_snap, edge_functions, tau, config.numerical_flux);

      if (check_bounds) {
        for (std::size_t j = 0; j < next.values.size(); ++j) {
          if (!within_local_bounds(state, next, *mesh, j)) ++rep.max_principle_violations;
        }
      }
      ++rep.steps;
      rep.min_dt = std::min(rep.min_dt, tau);
      rep.max_dt = std::max(rep.max_dt, tau);
      const auto [lo, hi] = std::minmax_element(next.values.begin(), next.values.end());
      rep.min_u = std::min(rep.min_u, *lo);
      rep.max_u = std::max(rep.max_u, *hi);

      state = std::move(next);
      snap = std::move(next_snap);
      if (observer) observer(snap, state);
      kept_last = config.keep_every > 0 && rep.steps % config.keep_every == 0;
      if (kept_last) result.trajectory.push_back({snap, state});
    }
  } catch (const BlowUpError& e) {
    rep.failure = e.what();
  } catch (const GeometryCollapseError& e) {
    rep.failure = e.what();
  } catch (const NumericalError& e) {
    rep.failure = e.what();
  }
  if (!kept_last) result.trajectory.push_back({snap, state});

  if (!std::isfinite(rep.min_dt)) rep.min_dt = 0.0;
  rep.t_final = state.time;
  rep.final_mass = mass_total(state);
  const double scale = std::abs(rep.initial_mass) > 0.0 ? std::abs(rep.initial_mass) : 1.0;
  rep.mass_drift = std::abs(rep.final_mass - rep.initial_mass) / scale;
  return result;
}

}  // namespace moverfv
