#pragma once

// File output: legacy ASCII VTK polydata with one cell scalar, EOC tables as
// CSV, and plain-text run reports. Readers for the first two exist so that
// emitted files can be checked by the tests.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ios>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "moverfv/mesh.hpp"
#include "moverfv/solver.hpp"
#include "moverfv/validate.hpp"

namespace moverfv {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

/// Polydata from raw arrays. `values` must hold one scalar per triangle.
inline void write_vtk(const std::vector<Vec3>& points, const std::vector<Triangle>& triangles,
                      const std::vector<double>& values, const std::filesystem::path& path,
                      const std::string& title = "moverfv cell data") {
  if (values.size() != triangles.size()) {
    throw ConfigError("write_vtk: one value per triangle required");
  }
  auto out = detail::open_for_write(path);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << points.size() << " double\n";
  for (const auto& p : points) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
  out << "POLYGONS " << triangles.size() << ' ' << 4 * triangles.size() << '\n';
  for (const auto& t : triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_DATA " << triangles.size() << "\nSCALARS u double 1\nLOOKUP_TABLE default\n";
  for (double v : values) out << v << '\n';
  detail::finish(out, path);
}

inline void write_vtk(const MeshSnapshot& snap, const CellState& state,
                      const std::filesystem::path& path) {
  if (state.values.size() != snap.num_cells()) {
    throw ConfigError("write_vtk: state does not match the snapshot");
  }
  std::ostringstream title;
  title << std::setprecision(17) << "moverfv t=" << snap.time() << " step=" << state.step_index;
  write_vtk(snap.vertices(), snap.mesh().triangles(), state.values, path, title.str());
}

struct VtkPolyData {
  std::vector<Vec3> points;
  std::vector<Triangle> triangles;
  std::vector<double> cell_values;
};

/// Reads back files produced by write_vtk (triangular polygons, one scalar).
inline VtkPolyData read_vtk(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  VtkPolyData d;
  std::string line;
  std::getline(in, line);
  if (line.rfind("# vtk DataFile", 0) != 0) throw IoError(path.string() + ": not a VTK file");
  std::getline(in, line);  // title
  std::string word;
  auto expect = [&](const std::string& w) {
    if (!(in >> word) || word != w) throw IoError(path.string() + ": expected " + w);
  };
  expect("ASCII");
  expect("DATASET");
  expect("POLYDATA");
  std::size_t n = 0, m = 0, size = 0;
  expect("POINTS");
  in >> n >> word;
  d.points.resize(n);
  for (auto& p : d.points) in >> p.x >> p.y >> p.z;
  expect("POLYGONS");
  in >> m >> size;
  d.triangles.resize(m);
  for (auto& t : d.triangles) {
    std::size_t k = 0;
    in >> k >> t[0] >> t[1] >> t[2];
    if (k != 3) throw IoError(path.string() + ": only triangles are supported");
  }
  expect("CELL_DATA");
  in >> m;
  expect("SCALARS");
  in >> word >> word >> word;
  expect("LOOKUP_TABLE");
  in >> word;
  d.cell_values.resize(m);
  for (auto& v : d.cell_values) in >> v;
  if (!in) throw IoError(path.string() + ": truncated file");
  return d;
}

/// elements,h_bar,l1_error,eoc with eoc rounded to two decimals and blank on
/// the first row.
inline std::string format_eoc_csv(const std::vector<EocRecord>& records) {
  std::ostringstream out;
  out << std::setprecision(17) << "elements,h_bar,l1_error,eoc\n";
  for (const auto& r : records) {
    out << r.elements << ',' << r.h_bar << ',' << r.l1_error << ',';
    if (r.eoc) {
      std::ostringstream e;
      e << std::fixed << std::setprecision(2) << *r.eoc;
      out << e.str();
    }
    out << '\n';
  }
  return out.str();
}

inline void write_eoc_csv(const std::vector<EocRecord>& records,
                          const std::filesystem::path& path) {
  if (records.empty()) throw ConfigError("write_eoc_csv: no records");
  auto out = detail::open_for_write(path);
  out << format_eoc_csv(records);
  detail::finish(out, path);
}

inline std::vector<EocRecord> read_eoc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "elements,h_bar,l1_error,eoc") throw IoError(path.string() + ": bad header");
  std::vector<EocRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 3) f.emplace_back();
    if (f.size() != 4) throw IoError(path.string() + ": malformed row '" + line + "'");
    EocRecord r;
    r.elements = std::stoull(f[0]);
    r.h_bar = std::stod(f[1]);
    r.l1_error = std::stod(f[2]);
    if (!f[3].empty()) r.eoc = std::stod(f[3]);
    out.push_back(r);
  }
  return out;
}

/// Stable "key: value" lines.
inline std::string format_run_report(const RunReport& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "status: " << (r.failure ? "failed" : "ok") << '\n';
  if (r.failure) out << "failure: " << *r.failure << '\n';
  out << "steps: " << r.steps << '\n';
  out << "t_final: " << r.t_final << '\n';
  out << "dt_min: " << r.min_dt << '\n';
  out << "dt_max: " << r.max_dt << '\n';
  out << "dt_rule: cfl-selected (max local wave speed bound per cell)\n";
  out << "u_min: " << r.min_u << '\n';
  out << "u_max: " << r.max_u << '\n';
  out << "mass_initial: " << r.initial_mass << '\n';
  out << "mass_final: " << r.final_mass << '\n';
  out << "mass_drift_relative: " << r.mass_drift << '\n';
  out << "mass drift: " << (r.mass_drift <= 1e-10 ? "\u2264 1e-10 (relative)" : "> 1e-10 (relative)")
      << '\n';
  out << "max_principle_violations: " << r.max_principle_violations << '\n';
  return out.str();
}

inline void write_text(const std::string& text, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << text;
  detail::finish(out, path);
}

}  // namespace moverfv
