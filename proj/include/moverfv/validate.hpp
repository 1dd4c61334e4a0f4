#pragma once

// Reference solutions and error measurement: the rotating-cap problem on the
// shrinking sphere, the ellipsoid initial bump, the reduced periodic 1D model
// (inviscid and viscous), a discrete Kruzkov entropy check, L1 errors and
// EOC tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "moverfv/errors.hpp"
#include "moverfv/mesh.hpp"
#include "moverfv/solver.hpp"
#include "moverfv/vec3.hpp"

namespace moverfv {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SphericalAngles {
  double azimuth;  // phi in [0, 2 pi)
  double polar;    // theta in [0, pi], measured from +x3
};

inline SphericalAngles spherical_angles(const Vec3& x) {
  double phi = std::atan2(x.y, x.x);
  if (phi < 0.0) phi += kTwoPi;
  const double r = norm(x);
  const double c = r > 0.0 ? std::clamp(x.z / r, -1.0, 1.0) : 1.0;
  return {phi, std::acos(c)};
}

/// Polar profile sin^2(3 theta) on |theta - pi/2| < pi/6, zero elsewhere.
inline double tp1_polar_profile(double theta) {
  if (!(std::abs(theta - 0.5 * std::numbers::pi) < std::numbers::pi / 6.0)) return 0.0;
  const double s = std::sin(3.0 * theta);
  return s * s;
}

/// Azimuthal profile: indicator of phi < pi on [0, 2 pi).
inline double tp1_azimuthal_profile(double phi) { return phi < std::numbers::pi ? 1.0 : 0.0; }

/// Exact solution of the rotating-cap problem on the shrinking sphere:
/// exp(2t) * indicator((phi - 2 pi (exp(t) - 1)) mod 2 pi < pi) * profile(theta).
inline double exact_tp1(double phi, double theta, double t) {
  double shifted = std::fmod(phi - kTwoPi * (std::exp(t) - 1.0), kTwoPi);
  if (shifted < 0.0) shifted += kTwoPi;
  return std::exp(2.0 * t) * tp1_azimuthal_profile(shifted) * tp1_polar_profile(theta);
}

inline double tp1_initial(const Vec3& x) {
  const auto a = spherical_angles(x);
  return exact_tp1(a.azimuth, a.polar, 0.0);
}

/// cos^2(pi (x1 + 2)) for x1 < -3/2, else 0.
inline double tp2_initial(const Vec3& x) {
  if (!(x.x < -1.5)) return 0.0;
  const double c = std::cos(std::numbers::pi * (x.x + 2.0));
  return c * c;
}

// ---------------------------------------------------------------------------
// Reduced periodic model  u_t - 2u + exp(t) (f(u))_phi = eps u_phiphi  on [0, 2 pi).

struct Reduced1DState {
  std::size_t n_cells = 0;
  std::vector<double> values;
  double time = 0.0;
  double viscosity = 0.0;
  std::size_t step = 0;

  double dphi() const { return kTwoPi / static_cast<double>(n_cells); }
};

struct Reduced1DOptions {
  std::size_t n_cells = 128;
  double t_end = 0.0;
  double viscosity = 0.0;
  double cfl = 0.45;
};

/// Cell averages of u0 on the uniform periodic grid (4-point Gauss per cell).
inline std::vector<double> reduced_1d_averages(std::size_t n,
                                               const std::function<double(double)>& u0) {
  const double h = kTwoPi / static_cast<double>(n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t q = 0; q < detail::kGaussNodes.size(); ++q) {
      s += detail::kGaussWeights[q] * u0((static_cast<double>(i) + detail::kGaussNodes[q]) * h);
    }
    out[i] = s;
  }
  return out;
}

/// Explicit integrating-factor scheme:
///   u_i^{k+1} = e^{2 tau} [u_i - tau e^{t^k}/dphi (g_{i+1/2} - g_{i-1/2})
///                          + tau eps/dphi^2 (u_{i+1} - 2 u_i + u_{i-1})]
/// with the Engquist-Osher flux of `flux`. Returns every state, initial first.
inline std::vector<Reduced1DState> reduced_1d_trajectory(const Reduced1DOptions& opt,
                                                         const EdgeFluxFunction& flux,
                                                         std::vector<double> initial) {
  if (opt.n_cells < 8) throw ConfigError("reduced model needs at least 8 cells");
  if (!(opt.viscosity >= 0.0)) throw ConfigError("viscosity must be >= 0");
  if (!(opt.cfl > 0.0 && opt.cfl <= 1.0)) {
    throw ConfigError("reduced model cfl must lie in (0, 1]; larger steps exceed both the "
                      "convective and the diffusive limit");
  }
  if (initial.size() != opt.n_cells) throw ConfigError("initial data size != n_cells");

  std::vector<Reduced1DState> traj;
  Reduced1DState s{opt.n_cells, std::move(initial), 0.0, opt.viscosity, 0};
  traj.push_back(s);
  const std::size_t n = opt.n_cells;
  const double h = s.dphi();
  std::vector<double> g(n);
  while (s.time < opt.t_end) {
    const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
    const double speed = std::exp(s.time) * flux.max_abs_derivative(*mn, *mx) / h;
    const double rate = speed + 2.0 * opt.viscosity / (h * h);
    double tau = rate > 0.0 ? opt.cfl / rate : opt.t_end - s.time;
    double t_next = s.time + tau;
    if (t_next >= opt.t_end * (1.0 - 1e-14)) t_next = opt.t_end;
    tau = t_next - s.time;

    // g[i] sits at the right face of cell i.
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = numerical_flux_eo(flux, s.values[i], s.values[(i + 1) % n]);
    }
    const double lambda = tau * std::exp(s.time) / h;
    const double mu = tau * opt.viscosity / (h * h);
    const double amp = std::exp(2.0 * tau);
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t l = (i + n - 1) % n, r = (i + 1) % n;
      const double diffusion = mu > 0.0 ? mu * (s.values[r] - 2.0 * s.values[i] + s.values[l]) : 0.0;
      next[i] = amp * (s.values[i] - lambda * (g[i] - g[l]) + diffusion);
      if (!std::isfinite(next[i])) {
        std::ostringstream os;
        os << "reduced model blow-up at step " << s.step + 1 << ", cell " << i;
        throw BlowUpError(s.step + 1, i, os.str());
      }
    }
    s.values = std::move(next);
    s.time = t_next;
    ++s.step;
    traj.push_back(s);
  }
  return traj;
}

inline Reduced1DState reduced_1d_run(const Reduced1DOptions& opt, const EdgeFluxFunction& flux,
                                     std::vector<double> initial) {
  return reduced_1d_trajectory(opt, flux, std::move(initial)).back();
}

/// sum_i u_i e^{-2t} dphi, conserved by the inviscid and viscous scheme alike.
inline double reduced_1d_mass(const Reduced1DState& s) {
  double sum = 0.0;
  for (double v : s.values) sum += v;
  return sum * std::exp(-2.0 * s.time) * s.dphi();
}

/// Nine equispaced Kruzkov constants spanning the value range of a trajectory.
inline std::vector<double> kruzkov_constants(const std::vector<Reduced1DState>& traj,
                                             int count = 9) {
  double lo = traj.front().values.front(), hi = lo;
  for (const auto& s : traj) {
    const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  std::vector<double> k(count);
  for (int i = 0; i < count; ++i) k[i] = lo + (hi - lo) * i / (count - 1);
  return k;
}

/// Largest positive part, over cells, steps and k, of the discrete Kruzkov
/// inequality
///   |u1 - k| - |u0 - k| - (e^{2 tau} - 1) sign(u1 - k) u0
///     + e^{2 tau} lambda (G_{i+1/2} - G_{i-1/2}) <= 0,
/// where G(a, b) = g(a v k, b v k) - g(a ^ k, b ^ k) is the Engquist-Osher
/// flux applied to the entropy pair and lambda = tau e^{t} / dphi. The
/// source term carries sign(u - k) u div v with div v = -2.
inline double entropy_residual_1d(const std::vector<Reduced1DState>& traj,
                                  const EdgeFluxFunction& flux,
                                  const std::vector<double>& k_values) {
  double worst = 0.0;
  for (std::size_t s = 0; s + 1 < traj.size(); ++s) {
    const auto& a = traj[s];
    const auto& b = traj[s + 1];
    if (a.viscosity != 0.0) throw ConfigError("entropy residual needs an inviscid trajectory");
    const std::size_t n = a.n_cells;
    const double tau = b.time - a.time;
    const double amp = std::exp(2.0 * tau);
    const double lambda = tau * std::exp(a.time) / a.dphi();
    std::vector<double> G(n);
    for (double k : k_values) {
      for (std::size_t i = 0; i < n; ++i) {
        const double u = a.values[i], v = a.values[(i + 1) % n];
        G[i] = numerical_flux_eo(flux, std::max(u, k), std::max(v, k)) -
               numerical_flux_eo(flux, std::min(u, k), std::min(v, k));
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double u0 = a.values[i], u1 = b.values[i];
        const double sign = u1 > k ? 1.0 : (u1 < k ? -1.0 : 0.0);
        const double r = std::abs(u1 - k) - std::abs(u0 - k) - (amp - 1.0) * sign * u0 +
                         amp * lambda * (G[i] - G[(i + n - 1) % n]);
        worst = std::max(worst, r);
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Errors on the surface.

using ScalarField = std::function<double(const Vec3&)>;

/// Radial projection onto the centred sphere of the given radius.
inline PointField radial_lift(double radius) {
  return [radius](const Vec3& x, double) { return (radius / norm(x)) * x; };
}

/// sum_j V_j |u_j - exact(lift(b_j))| with b_j the flat barycenter.
inline double l1_error(const CellState& state, const MeshSnapshot& snap, const ScalarField& exact,
                       const PointField& lift) {
  double sum = 0.0;
  for (std::size_t j = 0; j < snap.num_cells(); ++j) {
    const Vec3 y = lift(snap.barycenter()[j], snap.time());
    sum += snap.cell_measure()[j] * std::abs(state.values[j] - exact(y));
  }
  return sum;
}

struct EocRecord {
  std::size_t elements = 0;
  double h_bar = 0.0;
  double l1_error = 0.0;
  std::optional<double> eoc;  // absent on the first row
};

/// EOC_i = ln(E_{i-1}/E_i) / ln(h_{i-1}/h_i).
inline std::vector<EocRecord> eoc_table(const std::vector<std::pair<double, double>>& h_and_error,
                                        const std::vector<std::size_t>& elements) {
  if (h_and_error.size() != elements.size()) {
    throw DomainError("eoc_table: element list and (h, error) list differ in length");
  }
  std::vector<EocRecord> out;
  for (std::size_t i = 0; i < h_and_error.size(); ++i) {
    const auto [h, err] = h_and_error[i];
    if (!(h > 0.0) || !(err > 0.0)) {
      std::ostringstream os;
      os << "eoc_table: row " << i << " has non-positive h_bar or error";
      throw DomainError(os.str());
    }
    EocRecord r{elements[i], h, err, std::nullopt};
    if (i > 0) {
      const auto [hp, ep] = h_and_error[i - 1];
      r.eoc = std::log(ep / err) / std::log(hp / h);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace moverfv
