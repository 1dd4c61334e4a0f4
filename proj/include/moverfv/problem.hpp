#pragma once

// Run configuration (TOML), the built-in problems, and the orchestration used
// by the command line tool: single runs with VTK output and refinement
// studies producing EOC tables.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "moverfv/errors.hpp"
#include "moverfv/flux.hpp"
#include "moverfv/io.hpp"
#include "moverfv/mesh.hpp"
#include "moverfv/motion.hpp"
#include "moverfv/solver.hpp"
#include "moverfv/validate.hpp"

namespace moverfv {

enum class ProblemKind { tp1, tp2_projected, tp2_divfree, custom };

inline const char* to_string(ProblemKind p) {
  switch (p) {
    case ProblemKind::tp1: return "tp1";
    case ProblemKind::tp2_projected: return "tp2_projected";
    case ProblemKind::tp2_divfree: return "tp2_divfree";
    case ProblemKind::custom: return "custom";
  }
  return "?";
}

/// Flux families selectable from a configuration; `zero` is f = 0.
enum class FluxChoice { rotation_linear, projected_burgers, potential_divfree, zero };

enum class InitialChoice { tp1, tp2, constant };

/// Default end time of the ellipsoid problems.
inline constexpr double kTp2EndTime = 1.0;
/// Default Burgers strength for tp2_projected. With unit strength the wave
/// barely leaves the cap before the waist has closed; at 16 it crosses the
/// waist while the pinch is under way.
inline constexpr double kTp2ProjectedStrength = 16.0;

struct RunConfiguration {
  ProblemKind problem = ProblemKind::tp1;
  int mesh_level = 3;

  MotionKind motion = MotionKind::shrinking_sphere;
  Vec3 axes{2.0, 1.0, 1.0};
  double pinch_amplitude = 0.6;
  double pinch_width = 0.5;

  FluxChoice flux = FluxChoice::rotation_linear;
  Vec3 flux_direction{1.0, 0.0, 0.0};
  double flux_strength = 1.0;

  InitialChoice initial = InitialChoice::tp1;
  double initial_value = 1.0;

  SolverConfig solver;

  std::filesystem::path output_dir = "out";
  std::size_t vtk_every = 0;
};

namespace detail {

template <typename Enum>
Enum parse_enum(const std::string& key, const std::string& value,
                const std::map<std::string, Enum>& names) {
  auto it = names.find(value);
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [n, _] : names) allowed += (allowed.empty() ? "" : ", ") + n;
    throw ConfigError(key + ": unknown value '" + value + "' (allowed: " + allowed + ")");
  }
  return it->second;
}

class TomlReader {
 public:
  explicit TomlReader(const toml::table& root) { flatten(root, ""); }

  const std::map<std::string, const toml::node*>& keys() const { return keys_; }
  bool has(const std::string& key) const { return keys_.count(key) != 0; }

  std::optional<std::string> string(const std::string& key) const {
    const toml::node* n = find(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<std::string>()) return *v;
    throw ConfigError(key + ": expected a string");
  }

  std::optional<double> number(const std::string& key) const {
    const toml::node* n = find(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<double>()) return *v;
    if (auto v = n->value_exact<int64_t>()) return static_cast<double>(*v);
    throw ConfigError(key + ": expected a number");
  }

  std::optional<int64_t> integer(const std::string& key) const {
    const toml::node* n = find(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<int64_t>()) return *v;
    throw ConfigError(key + ": expected an integer");
  }

  std::optional<Vec3> vector3(const std::string& key) const {
    const toml::node* n = find(key);
    if (!n) return std::nullopt;
    const toml::array* arr = n->as_array();
    if (!arr || arr->size() != 3) throw ConfigError(key + ": expected an array of 3 numbers");
    double c[3];
    for (std::size_t i = 0; i < 3; ++i) {
      const toml::node& e = *arr->get(i);
      if (auto v = e.value_exact<double>()) {
        c[i] = *v;
      } else if (auto w = e.value_exact<int64_t>()) {
        c[i] = static_cast<double>(*w);
      } else {
        throw ConfigError(key + ": expected an array of 3 numbers");
      }
    }
    return Vec3{c[0], c[1], c[2]};
  }

 private:
  const toml::node* find(const std::string& key) const {
    auto it = keys_.find(key);
    return it == keys_.end() ? nullptr : it->second;
  }

  void flatten(const toml::table& t, const std::string& prefix) {
    for (const auto& [k, v] : t) {
      const std::string key = prefix + std::string(k.str());
      if (const toml::table* sub = v.as_table()) {
        flatten(*sub, key + ".");
      } else {
        keys_[key] = &v;
      }
    }
  }

  std::map<std::string, const toml::node*> keys_;
};

}  // namespace detail

/// Parse and validate a TOML run configuration, filling documented defaults.
/// Every error names the offending key.
inline RunConfiguration parse_config(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "configuration is not valid TOML: " << e.description() << " (line "
       << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
  const detail::TomlReader r(root);

  static const std::set<std::string> known = {
      "problem",        "mesh.level",      "motion.kind",           "motion.axes",
      "motion.pinch_amplitude", "motion.pinch_width", "flux.kind",   "flux.direction",
      "flux.strength",  "initial.kind",    "initial.value",         "solver.t_end",
      "solver.cfl",     "solver.numerical_flux", "solver.quadrature", "solver.max_dt",
      "output.dir",     "output.vtk_every"};
  for (const auto& [key, _] : r.keys()) {
    if (!known.count(key)) throw ConfigError(key + ": unknown key");
  }

  RunConfiguration c;
  c.problem = detail::parse_enum<ProblemKind>(
      "problem", r.string("problem").value_or("tp1"),
      {{"tp1", ProblemKind::tp1},
       {"tp2_projected", ProblemKind::tp2_projected},
       {"tp2_divfree", ProblemKind::tp2_divfree},
       {"custom", ProblemKind::custom}});

  if (auto level = r.integer("mesh.level")) {
    if (*level < 0 || *level > 8) throw ConfigError("mesh.level: must lie in [0, 8]");
    c.mesh_level = static_cast<int>(*level);
  }

  const std::map<std::string, MotionKind> motion_names = {
      {"identity", MotionKind::identity},
      {"shrinking_sphere", MotionKind::shrinking_sphere},
      {"pinching_ellipsoid", MotionKind::pinching_ellipsoid}};
  const std::map<std::string, FluxChoice> flux_names = {
      {"rotation_linear", FluxChoice::rotation_linear},
      {"projected_burgers", FluxChoice::projected_burgers},
      {"potential_divfree", FluxChoice::potential_divfree},
      {"zero", FluxChoice::zero}};

  std::optional<MotionKind> motion;
  if (auto m = r.string("motion.kind")) motion = detail::parse_enum("motion.kind", *m, motion_names);
  std::optional<FluxChoice> flux;
  if (auto f = r.string("flux.kind")) flux = detail::parse_enum("flux.kind", *f, flux_names);

  // Built-in problems fix motion, flux and initial data.
  auto fixed = [&](MotionKind m, FluxChoice f, InitialChoice i) {
    if (motion && *motion != m) {
      throw ConfigError(std::string("motion.kind: problem ") + to_string(c.problem) +
                        " requires " + to_string(m));
    }
    if (flux && *flux != f) {
      throw ConfigError(std::string("flux.kind: fixed by problem ") + to_string(c.problem));
    }
    if (r.has("initial.kind") || r.has("initial.value")) {
      throw ConfigError("initial.kind: only configurable for problem = custom");
    }
    c.motion = m;
    c.flux = f;
    c.initial = i;
  };
  switch (c.problem) {
    case ProblemKind::tp1:
      fixed(MotionKind::shrinking_sphere, FluxChoice::rotation_linear, InitialChoice::tp1);
      c.solver.t_end = std::log(2.0);
      break;
    case ProblemKind::tp2_projected:
      fixed(MotionKind::pinching_ellipsoid, FluxChoice::projected_burgers, InitialChoice::tp2);
      c.solver.t_end = kTp2EndTime;
      c.flux_strength = kTp2ProjectedStrength;
      break;
    case ProblemKind::tp2_divfree:
      fixed(MotionKind::pinching_ellipsoid, FluxChoice::potential_divfree, InitialChoice::tp2);
      c.solver.t_end = kTp2EndTime;
      break;
    case ProblemKind::custom:
      if (!motion) throw ConfigError("motion.kind: required for problem = custom");
      if (!flux) throw ConfigError("flux.kind: required for problem = custom");
      c.motion = *motion;
      c.flux = *flux;
      c.initial = detail::parse_enum<InitialChoice>(
          "initial.kind", r.string("initial.kind").value_or("constant"),
          {{"tp1", InitialChoice::tp1}, {"tp2", InitialChoice::tp2},
           {"constant", InitialChoice::constant}});
      c.initial_value = r.number("initial.value").value_or(1.0);
      if (!r.has("solver.t_end")) throw ConfigError("solver.t_end: required for problem = custom");
      break;
  }

  if (auto a = r.vector3("motion.axes")) c.axes = *a;
  if (auto v = r.number("motion.pinch_amplitude")) c.pinch_amplitude = *v;
  if (auto v = r.number("motion.pinch_width")) c.pinch_width = *v;
  if (!(c.axes.x > 0 && c.axes.y > 0 && c.axes.z > 0)) {
    throw ConfigError("motion.axes: semi-axes must be positive");
  }
  if (!(c.pinch_amplitude >= 0.0 && c.pinch_amplitude < 1.0)) {
    throw ConfigError("motion.pinch_amplitude: must lie in [0, 1)");
  }
  if (!(c.pinch_width > 0.0)) throw ConfigError("motion.pinch_width: must be positive");

  if (auto d = r.vector3("flux.direction")) {
    if (!(norm(*d) > 0.0)) throw ConfigError("flux.direction: must be nonzero");
    c.flux_direction = normalized(*d);
  }
  if (auto v = r.number("flux.strength")) c.flux_strength = *v;

  if (auto v = r.number("solver.t_end")) c.solver.t_end = *v;
  if (!(c.solver.t_end > 0.0) || !std::isfinite(c.solver.t_end)) {
    throw ConfigError("solver.t_end: must be positive");
  }
  if (auto v = r.number("solver.cfl")) c.solver.cfl_number = *v;
  if (!(c.solver.cfl_number > 0.0 && c.solver.cfl_number <= 1.0)) {
    throw ConfigError("solver.cfl: must lie in (0, 1]");
  }
  if (auto v = r.string("solver.numerical_flux")) {
    c.solver.numerical_flux = detail::parse_enum<NumericalFluxKind>(
        "solver.numerical_flux", *v,
        {{"engquist_osher", NumericalFluxKind::engquist_osher},
         {"local_lax_friedrichs", NumericalFluxKind::local_lax_friedrichs}});
  }
  if (auto v = r.string("solver.quadrature")) {
    c.solver.quadrature = detail::parse_enum<EdgeQuadrature>(
        "solver.quadrature", *v,
        {{"midpoint", EdgeQuadrature::midpoint}, {"gauss2", EdgeQuadrature::gauss2}});
  }
  if (auto v = r.number("solver.max_dt")) {
    if (!(*v > 0.0)) throw ConfigError("solver.max_dt: must be positive");
    c.solver.max_dt = *v;
  }
  if (auto v = r.string("output.dir")) c.output_dir = *v;
  if (auto v = r.integer("output.vtk_every")) {
    if (*v < 0) throw ConfigError("output.vtk_every: must be >= 0");
    c.vtk_every = static_cast<std::size_t>(*v);
  }
  return c;
}

/// Everything a run needs, assembled from a configuration.
struct Problem {
  std::shared_ptr<const ReferenceMesh> mesh;
  MotionMap motion;
  FluxModel flux;
  ScalarField u0;
  /// Exact solution u(x, t) for x on Gamma(t), when known.
  std::function<double(const Vec3&, double)> exact;
  /// Projection of flat-mesh points onto Gamma(t).
  PointField lift;
};

inline Problem build_problem(const RunConfiguration& c, int level) {
  const ReferenceMesh sphere = build_icosphere(level);
  std::shared_ptr<const ReferenceMesh> mesh;
  std::optional<MotionMap> motion;
  PointField lift;
  switch (c.motion) {
    case MotionKind::identity:
      mesh = std::make_shared<const ReferenceMesh>(sphere);
      motion = identity_motion();
      lift = radial_lift(1.0);
      break;
    case MotionKind::shrinking_sphere:
      mesh = std::make_shared<const ReferenceMesh>(sphere);
      motion = shrinking_sphere();
      lift = [](const Vec3& x, double t) { return (std::exp(-t) / norm(x)) * x; };
      break;
    case MotionKind::pinching_ellipsoid: {
      mesh = std::make_shared<const ReferenceMesh>(scale_axes(sphere, c.axes));
      motion = pinching_ellipsoid({c.axes, c.pinch_amplitude, c.pinch_width, c.solver.t_end});
      lift = [](const Vec3& x, double) { return x; };
      break;
    }
    case MotionKind::custom:
      throw ConfigError("motion.kind: custom motions are only available through the library");
  }

  const PointField normal = motion->normal_field();
  std::optional<FluxModel> flux;
  switch (c.flux) {
    case FluxChoice::rotation_linear: flux = rotation_linear(); break;
    case FluxChoice::projected_burgers:
      flux = projected_burgers(c.flux_direction, c.flux_strength, normal);
      break;
    case FluxChoice::potential_divfree: flux = potential_divfree(default_potential(), normal); break;
    case FluxChoice::zero: flux = zero_flux(normal); break;
  }

  ScalarField u0;
  std::function<double(const Vec3&, double)> exact;
  switch (c.initial) {
    case InitialChoice::tp1:
      u0 = tp1_initial;
      if (c.problem == ProblemKind::tp1) {
        exact = [](const Vec3& x, double t) {
          const auto a = spherical_angles(x);
          return exact_tp1(a.azimuth, a.polar, t);
        };
      }
      break;
    case InitialChoice::tp2: u0 = tp2_initial; break;
    case InitialChoice::constant: {
      const double v = c.initial_value;
      u0 = [v](const Vec3&) { return v; };
      break;
    }
  }
  return Problem{std::move(mesh), std::move(*motion), std::move(*flux), std::move(u0),
                 std::move(exact), std::move(lift)};
}

inline Problem build_problem(const RunConfiguration& c) { return build_problem(c, c.mesh_level); }

/// Runs the configured problem, writing VTK frames every `vtk_every` steps
/// (plus the initial and final frame), a ParaView .series index and
/// report.txt into `out_dir`.
inline RunResult run_to_directory(const RunConfiguration& c, const std::filesystem::path& out_dir) {
  Problem p = build_problem(c);
  nlohmann::json series = {{"file-series-version", "1.0"}, {"files", nlohmann::json::array()}};
  std::size_t last_written = npos;
  auto write_frame = [&](const MeshSnapshot& s, const CellState& u) {
    std::ostringstream name;
    name << "u_" << std::setw(7) << std::setfill('0') << u.step_index << ".vtk";
    write_vtk(s, u, out_dir / name.str());
    series["files"].push_back({{"name", name.str()}, {"time", u.time}});
    last_written = u.step_index;
  };
  StepObserver observer;
  if (c.vtk_every > 0) {
    observer = [&](const MeshSnapshot& s, const CellState& u) {
      if (u.step_index % c.vtk_every == 0) write_frame(s, u);
    };
  }
  SolverConfig solver = c.solver;
  RunResult result = run(p.mesh, p.motion, p.flux, p.u0, solver, observer);
  if (c.vtk_every > 0) {
    const Frame& f = result.trajectory.back();
    if (last_written != f.state.step_index) write_frame(f.snapshot, f.state);
    write_text(series.dump(1) + "\n", out_dir / "u.vtk.series");
  }
  std::ostringstream head;
  head << "problem: " << to_string(c.problem) << "\nlevel: " << c.mesh_level
       << "\ncells: " << p.mesh->num_cells() << "\nnumerical_flux: "
       << to_string(c.solver.numerical_flux) << "\nquadrature: " << to_string(c.solver.quadrature)
       << "\ncfl: " << c.solver.cfl_number << '\n';
  write_text(head.str() + format_run_report(result.report), out_dir / "report.txt");
  return result;
}

/// Refinement study over icosphere levels [level_lo, level_hi]; needs a
/// problem with a known exact solution. h_bar is measured on Gamma_0 and the
/// L1 error at t_end.
inline std::vector<EocRecord> eoc_study(const RunConfiguration& c, int level_lo, int level_hi) {
  if (level_lo > level_hi) throw ConfigError("--levels: empty range");
  std::vector<std::pair<double, double>> rows;
  std::vector<std::size_t> elements;
  for (int level = level_lo; level <= level_hi; ++level) {
    Problem p = build_problem(c, level);
    if (!p.exact) throw ConfigError("problem: eoc needs a problem with an exact solution (tp1)");
    const double h = mean_diameter(snapshot(p.mesh, p.motion, 0.0));
    RunResult r = run(p.mesh, p.motion, p.flux, p.u0, c.solver);
    if (r.report.failure) throw NumericalError(*r.report.failure);
    const Frame& f = r.trajectory.back();
    const double t = f.state.time;
    const auto exact = p.exact;
    const double err = l1_error(f.state, f.snapshot, [&](const Vec3& y) { return exact(y, t); },
                                p.lift);
    rows.emplace_back(h, err);
    elements.push_back(p.mesh->num_cells());
  }
  return eoc_table(rows, elements);
}

}  // namespace moverfv
