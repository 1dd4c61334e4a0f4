// moverfv: command line front end.
//
//   moverfv mesh     [--config FILE] [--level N] [--out DIR]
//   moverfv run      [--config FILE] [--out DIR] [--quiet]
//   moverfv eoc      [--config FILE] [--levels A..B] [--out DIR] [--quiet]
//   moverfv validate [--quiet]
//
// Exit codes: 0 success, 1 run or validation failure, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "moverfv/io.hpp"
#include "moverfv/problem.hpp"
#include "moverfv/selfcheck.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

moverfv::RunConfiguration load_config(const std::string& path) {
  if (path.empty()) return moverfv::parse_config("problem = \"tp1\"");
  std::ifstream in(path);
  if (!in) throw moverfv::ConfigError("--config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return moverfv::parse_config(ss.str());
}

std::pair<int, int> parse_levels(const std::string& text) {
  static const std::regex re(R"(^\s*(\d+)\s*\.\.\s*(\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw moverfv::ConfigError("--levels: expected A..B");
  const int lo = std::stoi(m[1]), hi = std::stoi(m[2]);
  if (lo > hi || hi > 8) throw moverfv::ConfigError("--levels: need A <= B <= 8");
  return {lo, hi};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite volume solver for scalar conservation laws on moving surfaces"};
  app.require_subcommand(1);

  std::string config_path, out_dir, levels = "2..5";
  int level = -1;
  bool quiet = false;

  auto* mesh_cmd = app.add_subcommand("mesh", "write the initial mesh and data as VTK");
  mesh_cmd->add_option("--config", config_path, "run configuration (TOML)");
  mesh_cmd->add_option("--level", level, "icosphere level (overrides mesh.level)");
  mesh_cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");

  auto* run_cmd = app.add_subcommand("run", "simulate one configuration");
  run_cmd->add_option("--config", config_path, "run configuration (TOML)");
  run_cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run_cmd->add_flag("--quiet", quiet, "suppress the report on stdout");

  auto* eoc_cmd = app.add_subcommand("eoc", "refinement study, writes eoc.csv");
  eoc_cmd->add_option("--config", config_path, "run configuration (TOML)");
  eoc_cmd->add_option("--levels", levels, "icosphere level range A..B")->capture_default_str();
  eoc_cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
  eoc_cmd->add_flag("--quiet", quiet, "suppress the table on stdout");

  auto* validate_cmd = app.add_subcommand("validate", "run the built-in invariant checks");
  validate_cmd->add_flag("--quiet", quiet, "print failures only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*validate_cmd) {
      const auto results = moverfv::run_self_checks();
      bool ok = true;
      for (const auto& r : results) {
        ok = ok && r.passed;
        if (!quiet || !r.passed) {
          std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
          if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
          std::cout << '\n';
        }
      }
      return ok ? 0 : kExitFailure;
    }

    moverfv::RunConfiguration cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;

    if (*mesh_cmd) {
      if (level >= 0) cfg.mesh_level = level;
      const auto p = moverfv::build_problem(cfg);
      const auto snap = moverfv::snapshot(p.mesh, p.motion, 0.0);
      const auto state = moverfv::init_cell_averages(p.u0, snap);
      const auto path = cfg.output_dir / "mesh.vtk";
      moverfv::write_vtk(snap, state, path);
      std::cout << path.string() << ": " << p.mesh->num_vertices() << " points, "
                << p.mesh->num_cells() << " triangles\n";
      return 0;
    }

    if (*run_cmd) {
      const auto result = moverfv::run_to_directory(cfg, cfg.output_dir);
      if (!quiet) std::cout << moverfv::format_run_report(result.report);
      return result.report.failure ? kExitFailure : 0;
    }

    if (*eoc_cmd) {
      const auto [lo, hi] = parse_levels(levels);
      const auto records = moverfv::eoc_study(cfg, lo, hi);
      const auto path = cfg.output_dir / "eoc.csv";
      moverfv::write_eoc_csv(records, path);
      if (!quiet) std::cout << moverfv::format_eoc_csv(records);
      return 0;
    }
  } catch (const moverfv::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
