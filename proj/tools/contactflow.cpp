#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "contactflow/acceptance.hpp"
#include "contactflow/errors.hpp"
#include "contactflow/gauge2d.hpp"
#include "contactflow/scenario.hpp"
#include "contactflow/snapshot_io.hpp"

namespace fs = std::filesystem;
using namespace contactflow;

namespace {

constexpr int kUsage = 2;

// A path, or the name of a shipped preset.
ScenarioConfig resolve_config(const std::string& arg) {
  if (fs::exists(arg)) return load_config(arg);
  const fs::path preset = preset_dir() / (arg + ".json");
  if (fs::exists(preset)) return load_config(preset);
  throw ConfigError("no config file or preset named '" + arg + "'");
}

int cmd_run(const std::string& config, bool resume) {
  const ScenarioConfig cfg = resolve_config(config);
  const RunOutcome out = run_scenario(cfg, output_root(), resume);
  for (const auto& c : out.checks) {
    if (!c.applicable) continue;
    std::printf("%-28s %s  measured %.6g", c.name.c_str(), c.pass ? "pass" : "FAIL", c.measured);
    if (std::isfinite(c.tolerance)) std::printf("  bound %.6g tol %.3g", c.bound, c.tolerance);
    std::printf("\n");
  }
  if (out.exit_code == 3) std::fprintf(stderr, "solver breakdown: %s\n", out.diagnostics.c_str());
  std::printf("output: %s\n", out.dir.string().c_str());
  return out.exit_code;
}

int cmd_verify(const std::string& tamper) {
  AcceptanceOptions opts;
  if (tamper == "catenoid") opts.catenoid_scale = 1.01;
  else if (!tamper.empty()) throw ConfigError("unknown tamper target '" + tamper + "'");
  const auto results = run_acceptance(opts);
  std::printf("%-4s %-40s %s\n", "id", "criterion", "result");
  for (const auto& r : results)
    std::printf("%-4s %-40s %s\n", r.id.c_str(), r.name.c_str(),
                r.informational ? (r.pass ? "info: holds" : "info: fails") : (r.pass ? "pass" : "FAIL"));
  for (const auto& r : results) std::printf("%s\n", format_line(r).c_str());
  const fs::path root = output_root();
  fs::create_directories(root);
  std::ofstream(root / "verify_report.json") << acceptance_json(results).dump(2) << '\n';
  const bool ok = all_pass(results);
  std::printf("verify: %s (report %s)\n", ok ? "pass" : "FAIL", (root / "verify_report.json").string().c_str());
  return ok ? 0 : 1;
}

int cmd_converge(const std::string& config, int levels) {
  const ScenarioConfig cfg = resolve_config(config);
  const ConvergenceOutcome out = converge_scenario(cfg, levels, output_root());
  std::printf("%-6s %-10s %-12s %-14s %s\n", "level", "resolution", "delta", out.quantity.c_str(), "order");
  for (const auto& r : out.rows) {
    std::printf("%-6d %-10d %-12.6g %-14.6g ", r.level, r.resolution, r.delta, r.error);
    if (r.level == 0) std::printf("-\n");
    else std::printf("%.3f\n", r.order);
  }
  if (!out.report.conclusive) std::printf("inconclusive: %s\n", out.report.note.c_str());
  std::printf("table: %s\n", out.csv.string().c_str());
  return out.report.conclusive ? 0 : 1;
}

// Radial lens snapshots are revolved onto a polar mesh before export.
GaugeField2D revolve(const std::vector<double>& r, const std::vector<double>& u, double t, int Q) {
  const int P = static_cast<int>(r.size()) - 1;
  GaugeField2D f;
  f.mesh = DiskMesh(P, Q);
  f.t = t;
  f.F.resize(f.mesh.node_count());
  for (int p = 0; p <= P; ++p)
    for (int q = 0; q < (p == 0 ? 1 : Q); ++q) {
      const double s = 2.0 * std::numbers::pi * q / Q;
      f.F[f.mesh.index(p, q)] = Eigen::Vector3d(r[p] * std::cos(s), r[p] * std::sin(s), u[p]);
    }
  return f;
}

int cmd_export(const std::string& snapshot, const std::string& out_path, int Q) {
  const Snapshot snap = load_snapshot(snapshot);
  GaugeField2D f;
  if (const auto* g = std::get_if<GaugeField2D>(&snap)) {
    f = *g;
  } else if (const auto* s = std::get_if<RadialGaugeState>(&snap)) {
    if (s->kase != RadialCase::lens) throw ConfigError("export-reflection: exterior snapshots are not supported");
    f = revolve(s->phi, s->u, s->t, Q);
  } else {
    const auto& gs = std::get<RadialGraphState>(snap);
    std::vector<double> r;
    for (int k = 0; k <= gs.M(); ++k) r.push_back(gs.r(k));
    f = revolve(r, gs.w, gs.t, Q);
  }
  const ReflectionMesh mesh = reflection_mesh(f);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write " + out_path);
  write_reflection(mesh, out);
  std::printf("%zu vertices, %zu faces -> %s\n", mesh.vertices.size(), mesh.faces.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contact-angle mean curvature flow solver"};
  app.require_subcommand(1);

  std::string config, snapshot, out_path, tamper;
  bool resume = false;
  int levels = 3, Q = 64;

  auto* run = app.add_subcommand("run", "run a scenario from a config file or preset name");
  run->add_option("config", config, "config JSON or preset name")->required();
  run->add_flag("--resume", resume, "continue from the last snapshot in the manifest");

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--tamper", tamper, "inject a fault (catenoid)");

  auto* converge = app.add_subcommand("converge", "observed convergence orders over refinement levels");
  converge->add_option("config", config, "config JSON or preset name")->required();
  converge->add_option("--levels", levels, "number of levels, >= 3");

  auto* exp = app.add_subcommand("export-reflection", "write the reflected surface as an indexed mesh");
  exp->add_option("snapshot", snapshot)->required();
  exp->add_option("out", out_path)->required();
  exp->add_option("--angles", Q, "angular resolution when revolving radial snapshots")->check(CLI::Range(8, 4096));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(config, resume);
    if (*verify) return cmd_verify(tamper);
    if (*converge) return cmd_converge(config, levels);
    return cmd_export(snapshot, out_path, Q);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "solver breakdown: %s\n", e.what());
    return 3;
  }
}
