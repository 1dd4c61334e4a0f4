// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Artifacts go to the directory given as the first argument
// (default: ./acceptance_output).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "moverfv/flux.hpp"
#include "moverfv/io.hpp"
#include "moverfv/mesh.hpp"
#include "moverfv/motion.hpp"
#include "moverfv/problem.hpp"
#include "moverfv/solver.hpp"
#include "moverfv/validate.hpp"

using namespace moverfv;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1. Reference refinement table fed through eoc_table, +-0.005 per entry.
Verdict table_eoc() {
  const std::vector<std::pair<double, double>> rows = {
      {0.21605, 1.86}, {0.10613, 1.53}, {0.05145, 1.16},
      {0.02557, 0.76}, {0.01251, 0.49}, {0.00627, 0.30}};
  const auto t = eoc_table(rows, {632, 2628, 11164, 45102, 187682, 747416});
  const double expect[] = {0.27, 0.39, 0.59, 0.61, 0.68};
  Verdict v{true, "computed"};
  for (int i = 0; i < 5; ++i) {
    const double got = *t[i + 1].eoc;
    const bool ok = std::abs(got - expect[i]) <= 0.005;
    v.pass = v.pass && ok;
    v.detail += " " + fmt(got) + (ok ? "" : "(want " + fmt(expect[i], 2) + ")");
  }
  return v;
}

// 2. Rotating cap on the shrinking sphere, levels 2..5.
Verdict tp1_trend(const fs::path& out) {
  const auto cfg = parse_config("problem = \"tp1\"");
  const auto rec = eoc_study(cfg, 2, 5);
  write_eoc_csv(rec, out / "tp1_eoc.csv");
  Verdict v{true, "L1"};
  for (std::size_t i = 0; i < rec.size(); ++i) {
    v.detail += " " + fmt(rec[i].l1_error);
    if (i > 0 && !(rec[i].l1_error < rec[i - 1].l1_error)) v.pass = false;
  }
  v.detail += "; EOC";
  for (std::size_t i = 1; i < rec.size(); ++i) {
    v.detail += " " + fmt(*rec[i].eoc, 3);
    if (i > 1 && *rec[i].eoc < *rec[i - 1].eoc - 0.1) v.pass = false;
  }
  const double last = *rec.back().eoc;
  v.pass = v.pass && last >= 0.4 && last <= 1.1;
  return v;
}

// 3. Mass drift of the built-in problems at level 3.
Verdict conservation() {
  Verdict v{true, ""};
  for (const char* name : {"tp1", "tp2_projected", "tp2_divfree"}) {
    auto cfg = parse_config(std::string("problem = \"") + name + "\"\nmesh.level = 3\n");
    const auto p = build_problem(cfg);
    const auto r = run(p.mesh, p.motion, p.flux, p.u0, cfg.solver);
    const bool ok = !r.report.failure && r.report.mass_drift <= 1e-10 &&
                    r.report.t_final == cfg.solver.t_end;
    v.pass = v.pass && ok;
    v.detail += std::string(name) + " drift=" + fmt(r.report.mass_drift, 3) + " steps=" +
                std::to_string(r.report.steps) + (r.report.failure ? " FAILED" : "") + "; ";
  }
  return v;
}

// 4. Zero flux on the shrinking sphere: u_j(t) = exp(2t) u_j(0) at every step.
Verdict homothety() {
  auto mesh = std::make_shared<const ReferenceMesh>(build_icosphere(3));
  SolverConfig cfg;
  cfg.t_end = 1.0;
  std::vector<double> u0;
  double worst = 0.0;
  std::size_t states = 0;
  const auto r = run(mesh, shrinking_sphere(), zero_flux(), tp1_initial, cfg,
                     [&](const MeshSnapshot&, const CellState& s) {
                       if (u0.empty()) u0 = s.values;
                       ++states;
                       const double a = std::exp(2.0 * s.time);
                       for (std::size_t j = 0; j < u0.size(); ++j) {
                         if (u0[j] != 0.0) worst = std::max(worst, std::abs(s.values[j] / (a * u0[j]) - 1.0));
                         else if (s.values[j] != 0.0) worst = std::numeric_limits<double>::infinity();
                       }
                     });
  return {!r.report.failure && worst <= 1e-12,
          "max relative deviation " + fmt(worst, 3) + " over " + std::to_string(states) + " states"};
}

// 5. Flux-layer properties on real edges of the moving ellipsoid.
Verdict flux_layer() {
  const PinchParameters pp;
  const auto motion = pinching_ellipsoid(pp);
  const auto normal = motion.normal_field();
  const FluxModel models[] = {projected_burgers({1, 0, 0}, 1.0, normal),
                              potential_divfree(default_potential(), normal)};
  auto mesh = std::make_shared<const ReferenceMesh>(scale_axes(build_icosphere(3), pp.axes));
  const auto snap = snapshot(mesh, motion, 0.5);

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uu(-2.0, 2.0), du(0.0, 0.5);
  std::uniform_int_distribution<std::size_t> edge(0, mesh->num_edges() - 1);
  double consistency = 0.0;
  std::size_t monotone_fail = 0, antisym_fail = 0;
  const auto general = EdgeFluxFunction::general([](double u) { return std::sin(u) + 0.1 * u * u * u; },
                                                 [](double u) { return std::cos(u) + 0.3 * u * u; });
  for (int i = 0; i < 10000; ++i) {
    const auto& model = models[i % 2];
    const auto c = i % 5 == 4 ? general : edge_flux_function(model, snap.edge(edge(rng)), 0.5);
    const double u = uu(rng), w = uu(rng), d = du(rng);
    consistency = std::max(consistency, std::abs(numerical_flux_eo(c, u, u) - c.value(u)));
    const double g = numerical_flux_eo(c, u, w);
    if (numerical_flux_eo(c, u + d, w) < g - 1e-13 || numerical_flux_eo(c, u, w + d) > g + 1e-13) {
      ++monotone_fail;
    }
    if (c.shape() != UShape::general && numerical_flux_eo(c.negated(), w, u) != -g) ++antisym_fail;
  }

  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> ut(0.0, pp.end_time);
  double tangency = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 s = normalized(Vec3{gauss(rng), gauss(rng), gauss(rng)});
    const double t = ut(rng);
    const Vec3 x = motion.evaluate({pp.axes.x * s.x, pp.axes.y * s.y, pp.axes.z * s.z}, t);
    const double u = uu(rng);
    for (const auto& f : models) tangency = std::max(tangency, std::abs(dot(f.eval(x, t, u), normal(x, t))));
  }

  std::vector<double> residual;
  const auto divfree = potential_divfree(default_potential(), radial_normal);
  for (int l = 2; l <= 5; ++l) {
    auto m = std::make_shared<const ReferenceMesh>(build_icosphere(l));
    double worst = 0.0;
    for (double r : discrete_divergence_check(divfree, snapshot(m, identity_motion(), 0.0), 1.0, 0.0)) {
      worst = std::max(worst, std::abs(r));
    }
    residual.push_back(worst);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < residual.size(); ++i) decreasing = decreasing && residual[i] < residual[i - 1];

  std::string res;
  for (double r : residual) res += " " + fmt(r, 3);
  return {consistency <= 1e-10 && monotone_fail == 0 && antisym_fail == 0 && tangency <= 1e-12 &&
              decreasing,
          "consistency " + fmt(consistency, 3) + ", monotonicity failures " +
              std::to_string(monotone_fail) + "/10000, antisymmetry failures " +
              std::to_string(antisym_fail) + ", tangency " + fmt(tangency, 3) +
              ", divergence residual levels 2-5:" + res};
}

// 6. Reduced periodic model.
Verdict one_d_suite() {
  Verdict v{true, ""};
  // Smooth linear transport.
  {
    const double t_end = 0.3;
    auto u0 = [](double phi) { return std::sin(phi) * std::sin(phi); };
    std::vector<double> errs;
    for (std::size_t n = 64; n <= 1024; n *= 2) {
      Reduced1DOptions opt{n, t_end, 0.0, 0.45};
      const auto s = reduced_1d_run(opt, EdgeFluxFunction::linear(0.0, kTwoPi), reduced_1d_averages(n, u0));
      const double shift = kTwoPi * (std::exp(t_end) - 1.0);
      const auto ex = reduced_1d_averages(n, [&](double phi) { return std::exp(2 * t_end) * u0(phi - shift); });
      double e = 0.0;
      for (std::size_t i = 0; i < n; ++i) e += std::abs(s.values[i] - ex[i]) * s.dphi();
      errs.push_back(e);
    }
    double min_eoc = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < errs.size(); ++i) min_eoc = std::min(min_eoc, std::log2(errs[i - 1] / errs[i]));
    v.pass = v.pass && min_eoc >= 0.8;
    v.detail += "smooth EOC min " + fmt(min_eoc, 3);
  }
  // Constant state.
  {
    Reduced1DOptions opt{128, 1.0, 0.0, 0.45};
    const auto traj = reduced_1d_trajectory(opt, EdgeFluxFunction::linear(0.0, kTwoPi),
                                            std::vector<double>(128, 1.7));
    double worst = 0.0;
    for (const auto& s : traj) {
      for (double x : s.values) worst = std::max(worst, std::abs(x / (1.7 * std::exp(2 * s.time)) - 1.0));
    }
    v.pass = v.pass && worst <= 1e-14;
    v.detail += "; constant-state deviation " + fmt(worst, 3);
  }
  // Entropy residual for Burgers shock data against tol(n) = 1e-10 dphi.
  const auto burgers = EdgeFluxFunction::quadratic(0.0, 0.5);
  auto step_data = [](double phi) { return phi < std::numbers::pi ? 1.0 : 0.0; };
  {
    bool ok = true;
    std::string txt;
    for (std::size_t n : {128u, 256u, 512u}) {
      Reduced1DOptions opt{n, 0.5, 0.0, 0.45};
      const auto traj = reduced_1d_trajectory(opt, burgers, reduced_1d_averages(n, step_data));
      const double r = entropy_residual_1d(traj, burgers, kruzkov_constants(traj));
      const double tol = 1e-10 * traj.front().dphi();
      ok = ok && r <= tol;
      txt += " " + fmt(r, 3) + "<=" + fmt(tol, 3);
    }
    v.pass = v.pass && ok;
    v.detail += "; entropy residual n=128/256/512:" + txt;
  }
  // Vanishing viscosity at n = 512.
  {
    const std::size_t n = 512;
    Reduced1DOptions base{n, 0.5, 0.0, 0.45};
    const auto inviscid = reduced_1d_run(base, burgers, reduced_1d_averages(n, step_data));
    std::vector<double> dist;
    for (double eps : {0.1, 0.05, 0.02, 0.01, 0.005}) {
      Reduced1DOptions opt = base;
      opt.viscosity = eps;
      const auto s = reduced_1d_run(opt, burgers, reduced_1d_averages(n, step_data));
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += std::abs(s.values[i] - inviscid.values[i]) * s.dphi();
      dist.push_back(d);
    }
    bool mono = true;
    std::string txt;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      txt += " " + fmt(dist[i], 3);
      if (i > 0) mono = mono && dist[i] < dist[i - 1];
    }
    v.pass = v.pass && mono;
    v.detail += "; viscous distances eps=0.1..0.005:" + txt;
  }
  return v;
}

// 7. Ellipsoid problems at level 4 with VTK series.
Verdict ellipsoid_runs(const fs::path& out) {
  Verdict v{true, ""};
  for (const char* name : {"tp2_projected", "tp2_divfree"}) {
    auto cfg = parse_config(std::string("problem = \"") + name +
                            "\"\nmesh.level = 4\noutput.vtk_every = 25\n");
    const fs::path dir = out / name;
    fs::remove_all(dir);
    const auto r = run_to_directory(cfg, dir);
    const auto p = build_problem(cfg);
    const auto init = init_cell_averages(p.u0, snapshot(p.mesh, p.motion, 0.0));
    const auto [lo0, hi0] = std::minmax_element(init.values.begin(), init.values.end());
    const double T = cfg.solver.t_end;
    const double lo = *lo0 - 0.05, hi = std::exp(2 * T) * *hi0 + 0.05;
    std::size_t frames = 0;
    if (fs::exists(dir / "u.vtk.series")) {
      frames = nlohmann::json::parse(slurp(dir / "u.vtk.series"))["files"].size();
    }
    const bool ok = !r.report.failure && r.report.mass_drift <= 1e-10 && r.report.min_u >= lo &&
                    r.report.max_u <= hi && r.report.t_final == T && frames >= 2;
    v.pass = v.pass && ok;
    v.detail += std::string(name) + ": steps " + std::to_string(r.report.steps) + ", u in [" +
                fmt(r.report.min_u) + ", " + fmt(r.report.max_u) + "] within [" + fmt(lo) + ", " +
                fmt(hi) + "], drift " + fmt(r.report.mass_drift, 3) + ", " + std::to_string(frames) +
                " frames" + (r.report.failure ? ", FAILED: " + *r.report.failure : "") + "; ";
  }
  return v;
}

// 8. Same configuration twice under a fixed thread cap.
Verdict determinism(const fs::path& out) {
  setenv("MOVERFV_THREADS", "2", 1);
  auto cfg = parse_config("problem = \"tp2_divfree\"\nmesh.level = 3\nsolver.t_end = 0.1\noutput.vtk_every = 10\n");
  const fs::path a = out / "determinism_a", b = out / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  run_to_directory(cfg, a);
  run_to_directory(cfg, b);
  const auto tp1 = parse_config("problem = \"tp1\"");
  write_eoc_csv(eoc_study(tp1, 1, 3), a / "eoc.csv");
  write_eoc_csv(eoc_study(tp1, 1, 3), b / "eoc.csv");
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    if (slurp(e.path()) != slurp(b / e.path().filename())) ++differ;
  }
  return {differ == 0 && files > 3,
          std::to_string(files) + " files compared, " + std::to_string(differ) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_output");
  fs::create_directories(out);

  struct Criterion {
    const char* title;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria = {
      {"1 reference table EOC arithmetic (+-0.005)", table_eoc},
      {"2 rotating cap refinement trend, levels 2-5", [&] { return tp1_trend(out); }},
      {"3 discrete conservation at level 3 (<= 1e-10 relative)", conservation},
      {"4 homothety under zero flux (<= 1e-12 relative)", homothety},
      {"5 flux-layer properties", flux_layer},
      {"6 reduced 1D oracle suite", one_d_suite},
      {"7 ellipsoid problems at level 4", [&] { return ellipsoid_runs(out); }},
      {"8 bitwise determinism of output files", [&] { return determinism(out); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << c.title << "  [" << v.detail
              << "] (" << fmt(secs, 3) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
