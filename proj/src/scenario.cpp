#include "contactflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "contactflow/errors.hpp"
#include "contactflow/gauge2d.hpp"
#include "contactflow/snapshot_io.hpp"

namespace contactflow {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::radial_gauge: return "radial_gauge";
    case ScenarioMode::radial_graph: return "radial_graph";
    default: return "gauge2d";
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// identities for h and H that need the time-differentiated boundary conditions
constexpr double kBoundaryIdentityStart = 0.02;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

bool profile_is_lens(const std::string& n) {
  return n == "paraboloid" || n == "spherical_cap" || n == "perturbed_paraboloid";
}

RadialProfile radial_profile(const ScenarioConfig& c) {
  const AngleParams p(c.beta);
  const auto& n = c.profile.name;
  if (n == "paraboloid") return paraboloid_profile(p);
  if (n == "spherical_cap") return spherical_cap_profile(p);
  if (n == "catenoid") return catenoid_profile(p);
  if (n == "perturbed_catenoid") return perturbed_catenoid_profile(p, c.R_out, c.profile.amplitude, c.seed);
  throw ConfigError("profile '" + n + "' has no radial form");
}

GraphProfile2D disk_profile(const ScenarioConfig& c) {
  const AngleParams p(c.beta);
  if (c.profile.name == "perturbed_paraboloid") return perturbed_paraboloid_2d(p, c.profile.amplitude);
  return profile_from_radial(radial_profile(c));
}

std::vector<double> output_times(const ScenarioConfig& c) {
  std::vector<double> t;
  for (int k = 1;; ++k) {
    const double tk = k * c.output_interval;
    if (tk >= c.T_end * (1.0 - 1e-12)) break;
    t.push_back(tk);
  }
  t.push_back(c.T_end);
  return t;
}

std::string snapshot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%05zu.csv", i);
  return buf;
}

// Solvers for one config, advancing a snapshot to the next output time.
struct Driver {
  ScenarioConfig cfg;
  AngleParams params;
  std::optional<RadialGaugeSolver> gauge;
  std::optional<RadialGraphSolver> graph;
  std::optional<Gauge2DSolver> disk;

  explicit Driver(const ScenarioConfig& c) : cfg(c), params(c.beta) {
    if (c.mode == ScenarioMode::radial_gauge) {
      RadialGaugeOptions o;
      o.cfl = c.cfl;
      o.outer_bc = c.outer_bc;
      gauge.emplace(params, o);
    } else if (c.mode == ScenarioMode::radial_graph) {
      RadialGraphOptions o;
      o.cfl = c.cfl;
      o.scheme = c.scheme == "explicit" ? TimeScheme::explicit_euler : TimeScheme::semi_implicit;
      graph.emplace(params, o);
    } else {
      Gauge2DOptions o;
      o.cfl = c.cfl;
      o.scheme = c.scheme == "imex" ? Gauge2DScheme::imex : Gauge2DScheme::explicit_euler;
      disk.emplace(params, o);
    }
  }

  Snapshot initial() const {
    if (gauge) return gauge->initial_state(radial_profile(cfg), cfg.M, cfg.R_out);
    if (graph) return graph->initial_state(radial_profile(cfg), cfg.M);
    return disk->initial_field(disk_profile(cfg), DiskMesh(cfg.P, cfg.Q));
  }

  struct Chunk {
    Snapshot s;
    bool extinct = false;
    double lo = 0.0, hi = 0.0, estimate = 0.0;
    std::size_t steps = 0;
  };

  Chunk advance(const Snapshot& s, double t_out) const {
    Chunk c;
    auto take = [&](auto run) {
      c.s = run.snapshots.back();
      c.extinct = run.extinct;
      c.steps = run.steps;
      if constexpr (requires { run.extinction_bracket_lo; }) {
        c.lo = run.extinction_bracket_lo;
        c.hi = run.extinction_bracket_hi;
        c.estimate = run.extinction_estimate;
      } else {
        c.lo = c.hi = c.estimate = run.snapshots.back().t;
      }
    };
    if (gauge) take(run_gauge(*gauge, std::get<RadialGaugeState>(s), {t_out}, 1.0));
    if (graph) take(run_graph(*graph, std::get<RadialGraphState>(s), {t_out}, 1.0));
    if (disk) take(run_gauge2d(*disk, std::get<GaugeField2D>(s), {t_out}));
    return c;
  }
};

template <class T>
std::vector<T> typed(const std::vector<Snapshot>& all) {
  std::vector<T> out;
  for (const auto& s : all) out.push_back(std::get<T>(s));
  return out;
}

double junction_radius(const Snapshot& s, const Driver& d) {
  if (auto* g = std::get_if<RadialGaugeState>(&s)) return g->junction_radius();
  if (auto* g = std::get_if<RadialGraphState>(&s)) return g->R;
  return d.disk->image_radius(std::get<GaugeField2D>(s));
}

MonitorReport info_report(std::string name, double measured, std::string note) {
  MonitorReport r;
  r.name = std::move(name);
  r.measured = measured;
  r.tolerance = kInf;
  r.pass = true;
  r.note = std::move(note);
  return r;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct RunState {
  std::vector<Snapshot> snapshots;
  std::vector<std::string> files;
  bool extinct = false;
  double ext_lo = 0.0, ext_hi = 0.0, ext_estimate = 0.0;
  std::size_t steps = 0;
  std::string status = "running";
  std::string diagnostics;
};

json manifest_json(const ScenarioConfig& cfg, const RunState& st, const fs::path& dir,
                   const std::vector<std::string>& extra_files) {
  json m;
  m["config"] = config_to_json(cfg);
  m["status"] = st.status;
  m["t_start"] = snapshot_time(st.snapshots.front());
  m["t_stop"] = snapshot_time(st.snapshots.back());
  m["steps"] = st.steps;
  if (st.extinct)
    m["extinction"] = {{"t_lo", st.ext_lo}, {"t_hi", st.ext_hi}, {"estimate", st.ext_estimate}};
  else
    m["extinction"] = nullptr;
  m["snapshots"] = st.files;
  m["resume"] = {{"snapshot", st.files.back()}, {"t", snapshot_time(st.snapshots.back())}};
  json files = json::array();
  std::vector<std::string> all = st.files;
  all.insert(all.end(), extra_files.begin(), extra_files.end());
  for (const auto& f : all) {
    const fs::path p = dir / f;
    files.push_back({{"name", f}, {"bytes", fs::file_size(p)}, {"crc32", file_crc32(p)}});
  }
  m["files"] = files;
  if (!st.diagnostics.empty()) m["diagnostics"] = st.diagnostics;
  return m;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::vector<MonitorReport> run_monitors(const Driver& d, const RunState& st, const fs::path& dir,
                                        std::vector<std::string>& files) {
  const ScenarioConfig& c = d.cfg;
  std::vector<std::string> selected = c.monitors.empty() ? applicable_monitors(c) : c.monitors;
  auto wants = [&](const char* m) { return std::find(selected.begin(), selected.end(), m) != selected.end(); };

  GraphSeries series;
  for (const auto& s : st.snapshots) series.push_back(std::visit([](const auto& x) { return graph_snapshot(x); }, s));
  const BlowupSeries blow = d.disk ? blowup_tracker(typed<GaugeField2D>(st.snapshots), d.params)
                                   : blowup_tracker(series);
  const bool cat = c.kase == RadialCase::exterior;
  const RadialProfile reference = cat ? catenoid_profile(d.params) : RadialProfile{};

  // plot-ready time series
  {
    std::ostringstream os;
    os << "t,radius,max_v,max_w,sup_H,h_interior,h_boundary,grad_K" << (cat ? ",drift" : "") << '\n';
    for (std::size_t i = 0; i < st.snapshots.size(); ++i) {
      double v = 0.0, w = -kInf;
      for (const auto& g : series[i].samples) {
        v = std::max(v, std::sqrt(1.0 + g.Dw.squaredNorm()));
        w = std::max(w, g.w);
      }
      os << format_double(series[i].t) << ',' << format_double(junction_radius(st.snapshots[i], d)) << ','
         << format_double(v) << ',' << format_double(w) << ',' << format_double(sup_H(series[i])) << ','
         << format_double(blow.raw[i].interior) << ',' << format_double(blow.raw[i].boundary) << ','
         << format_double(blow.raw[i].grad_K);
      if (cat) os << ',' << format_double(catenoid_deviation(std::get<RadialGaugeState>(st.snapshots[i]), reference));
      os << '\n';
    }
    write_text(dir / "series.csv", os.str());
    files.push_back("series.csv");
  }

  std::vector<MonitorReport> out;
  const double delta0 = series.front().delta;
  if (wants("height")) {
    double M0 = -kInf;
    for (const auto& g : series.front().samples) M0 = std::max(M0, g.w);
    out.push_back(check_height_bound(series, M0));
  }
  if (wants("gradient")) out.push_back(check_gradient_bound(series, d.params));
  MonitorReport conc;
  if (wants("concavity") || wants("barrier")) conc = check_concavity(series);
  if (wants("concavity")) out.push_back(conc);
  if (wants("junction_v")) {
    // sampled initial data meets the discrete angle condition only to O(delta^2); the solver enforces it after
    const GraphSeries solved(series.begin() + (series.size() > 1 ? 1 : 0), series.end());
    out.push_back(check_junction_v(solved, d.params, 1e-8));
    out.back().note = "snapshots after the initial one";
  }
  if (wants("barrier")) {
    const double H0 = c.barrier_H0.value_or(sup_H(series.front()));
    const double cn = c.barrier_c_n.value_or(0.5);
    std::vector<MonitorReport> b;
    if (!conc.applicable || !(H0 < 0.0)) {
      b = {info_report("mean_curvature_barrier", 0.0, "not applicable: initial data not concave with H < 0"),
           info_report("extinction_before_t_star", 0.0, "not applicable")};
      for (auto& r : b) r.applicable = false;
    } else {
      b = check_mean_curvature_barrier(series, BarrierParams(H0, cn), st.extinct ? st.ext_hi : kInf, delta0);
      if (!st.extinct && !c.to_extinction) {
        b[1].applicable = false;
        b[1].pass = true;
        b[1].note = "run stopped before extinction";
      }
    }
    out.insert(out.end(), b.begin(), b.end());
  }
  if (wants("boundary_identities")) {
    std::vector<JunctionSample> js;
    std::ostringstream os;
    os << "t,h_n_tau,tangential,neumann_H,nabla_h_nn,euclidean_h_nn\n";
    for (const auto& s : typed<RadialGraphState>(st.snapshots)) {
      if (s.t < kBoundaryIdentityStart || (st.extinct && s.t == st.ext_hi)) continue;
      js.push_back(junction_sample(s));
      const BoundaryResiduals r = boundary_residuals(js.back(), d.params);
      os << format_double(s.t) << ',' << format_double(r.h_nt) << ',' << format_double(r.tangential) << ','
         << format_double(r.neumann_H) << ',' << format_double(r.covariant_nn) << ',' << format_double(r.euclidean_nn)
         << '\n';
    }
    write_text(dir / "boundary_residuals.csv", os.str());
    files.push_back("boundary_residuals.csv");
    if (js.empty()) {
      out.push_back(info_report("boundary_identities", 0.0, "no snapshot with t >= 0.02"));
      out.back().applicable = false;
    } else {
      for (auto r : check_boundary_h_conditions(js, d.params, kInf)) {
        r.note = "residual only; the order is checked by converge";
        out.push_back(r);
      }
    }
  }
  if (wants("kinematics")) {
    std::vector<Snapshot> use = st.snapshots;
    if (st.extinct) use.pop_back();
    if (use.size() < 3) {
      out.push_back(info_report("junction_kinematics", 0.0, "fewer than 3 snapshots"));
      out.back().applicable = false;
    } else {
      const JunctionKinematics k = d.disk ? junction_kinematics(typed<GaugeField2D>(use), d.params)
                                          : junction_kinematics(typed<RadialGaugeState>(use), *d.gauge);
      std::ostringstream os;
      os << "t,normal_velocity,predicted,max_mismatch\n";
      for (std::size_t i = 0; i < k.times.size(); ++i)
        os << format_double(k.times[i]) << ',' << format_double(k.normal_velocity[i]) << ','
           << format_double(k.predicted[i]) << ',' << format_double(k.max_mismatch[i]) << '\n';
      write_text(dir / "kinematics.csv", os.str());
      files.push_back("kinematics.csv");
      out.push_back(info_report("junction_kinematics", k.max, "residual only; the order is checked by converge"));
    }
  }
  if (wants("stationarity")) {
    double drift = 0.0;
    for (const auto& s : typed<RadialGaugeState>(st.snapshots)) drift = std::max(drift, catenoid_deviation(s, reference));
    const double tau = catenoid_operator_residual(reference, c.M, c.R_out);
    MonitorReport r;
    r.name = "catenoid_stationarity";
    r.measured = drift;
    r.tolerance = 10.0 * tau;
    r.pass = r.measured <= r.tolerance;
    r.t = snapshot_time(st.snapshots.back());
    r.note = "tolerance 10 x operator residual of the sampled catenoid";
    out.push_back(r);
  }
  if (wants("drift")) {
    const double drift = catenoid_deviation(std::get<RadialGaugeState>(st.snapshots.back()), reference);
    out.push_back(info_report("catenoid_drift", drift, "distance from the catenoid at the last snapshot; logged only"));
  }
  if (wants("blowup")) {
    const BlowupPoint& last = blow.envelope.back();
    MonitorReport r = info_report("blowup", last.boundary,
                                  std::string("sup |h| on the junction; ") +
                                      (last.boundary_dominates ? "boundary dominates" : "interior dominates"));
    r.t = last.t;
    out.push_back(r);
  }
  return out;
}

}  // namespace

ScenarioConfig parse_config(const json& j) {
  ScenarioConfig c;
  try {
    reject_unknown(j,
                   {"name", "mode", "case", "beta", "profile", "M", "P", "Q", "R_out", "cfl", "scheme", "T_end",
                    "to_extinction", "output_interval", "outer_bc", "output_dir", "monitors", "seed", "barrier"},
                   "config");
    get(j, "name", c.name);
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "radial_gauge") c.mode = ScenarioMode::radial_gauge;
      else if (m == "radial_graph") c.mode = ScenarioMode::radial_graph;
      else if (m == "gauge2d") c.mode = ScenarioMode::gauge2d;
      else throw ConfigError("unknown mode '" + m + "'");
    }
    if (j.contains("case")) {
      const auto k = j.at("case").get<std::string>();
      if (k == "lens") c.kase = RadialCase::lens;
      else if (k == "exterior") c.kase = RadialCase::exterior;
      else throw ConfigError("unknown case '" + k + "'");
    }
    get(j, "beta", c.beta);
    if (j.contains("profile")) {
      const json& p = j.at("profile");
      reject_unknown(p, {"name", "amplitude"}, "profile");
      get(p, "name", c.profile.name);
      get(p, "amplitude", c.profile.amplitude);
    } else {
      c.profile.name = c.kase == RadialCase::lens ? "paraboloid" : "catenoid";
    }
    get(j, "M", c.M);
    get(j, "P", c.P);
    get(j, "Q", c.Q);
    get(j, "R_out", c.R_out);
    get(j, "cfl", c.cfl);
    get(j, "scheme", c.scheme);
    get(j, "T_end", c.T_end);
    get(j, "to_extinction", c.to_extinction);
    get(j, "output_interval", c.output_interval);
    if (j.contains("outer_bc")) {
      const auto b = j.at("outer_bc").get<std::string>();
      if (b == "pinned") c.outer_bc = OuterBc::pinned;
      else if (b == "neumann") c.outer_bc = OuterBc::neumann;
      else throw ConfigError("unknown outer_bc '" + b + "'");
    }
    get(j, "output_dir", c.output_dir);
    get(j, "monitors", c.monitors);
    get(j, "seed", c.seed);
    if (j.contains("barrier")) {
      const json& b = j.at("barrier");
      reject_unknown(b, {"H0", "c_n"}, "barrier");
      if (b.contains("H0")) c.barrier_H0 = b.at("H0").get<double>();
      if (b.contains("c_n")) c.barrier_c_n = b.at("c_n").get<double>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (!(c.beta > 0.0 && c.beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  if (c.mode != ScenarioMode::radial_gauge && c.kase != RadialCase::lens)
    throw ConfigError(std::string(to_string(c.mode)) + " supports the lens case only");
  const bool lens_profile = profile_is_lens(c.profile.name);
  const bool ext_profile = c.profile.name == "catenoid" || c.profile.name == "perturbed_catenoid";
  if (!lens_profile && !ext_profile) throw ConfigError("unknown profile '" + c.profile.name + "'");
  if (lens_profile != (c.kase == RadialCase::lens)) throw ConfigError("profile does not match the case");
  if (c.profile.name == "perturbed_paraboloid" && c.mode != ScenarioMode::gauge2d)
    throw ConfigError("perturbed_paraboloid needs mode gauge2d");
  if (c.M < 8) throw ConfigError("M must be >= 8");
  if (c.mode == ScenarioMode::gauge2d && (c.P < 4 || c.Q < 8)) throw ConfigError("need P >= 4 and Q >= 8");
  if (!(c.cfl > 0.0 && c.cfl <= 0.5)) throw ConfigError("cfl must lie in (0, 0.5]");
  if (!(c.T_end > 0.0)) throw ConfigError("T_end must be positive");
  if (!(c.output_interval > 0.0)) throw ConfigError("output_interval must be positive");
  if (c.kase == RadialCase::exterior && !(c.R_out > 1.0)) throw ConfigError("R_out must exceed 1");
  const std::set<std::string> schemes =
      c.mode == ScenarioMode::radial_graph ? std::set<std::string>{"default", "semi_implicit", "explicit"}
      : c.mode == ScenarioMode::gauge2d    ? std::set<std::string>{"default", "explicit", "imex"}
                                           : std::set<std::string>{"default", "explicit"};
  if (!schemes.count(c.scheme)) throw ConfigError("scheme '" + c.scheme + "' not available in this mode");
  const auto ok = applicable_monitors(c);
  for (const auto& m : c.monitors)
    if (std::find(ok.begin(), ok.end(), m) == ok.end()) throw ConfigError("monitor '" + m + "' does not apply");
  if (c.barrier_H0 && !(*c.barrier_H0 < 0.0)) throw ConfigError("barrier H0 must be negative");
  if (c.barrier_c_n && !(*c.barrier_c_n > 0.0)) throw ConfigError("barrier c_n must be positive");
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["mode"] = to_string(c.mode);
  j["case"] = to_string(c.kase);
  j["beta"] = c.beta;
  j["profile"] = {{"name", c.profile.name}, {"amplitude", c.profile.amplitude}};
  j["M"] = c.M;
  j["P"] = c.P;
  j["Q"] = c.Q;
  j["R_out"] = c.R_out;
  j["cfl"] = c.cfl;
  j["scheme"] = c.scheme;
  j["T_end"] = c.T_end;
  j["to_extinction"] = c.to_extinction;
  j["output_interval"] = c.output_interval;
  j["outer_bc"] = c.outer_bc == OuterBc::pinned ? "pinned" : "neumann";
  j["output_dir"] = c.output_dir;
  j["monitors"] = c.monitors;
  j["seed"] = c.seed;
  if (c.barrier_H0 || c.barrier_c_n) {
    j["barrier"] = json::object();
    if (c.barrier_H0) j["barrier"]["H0"] = *c.barrier_H0;
    if (c.barrier_c_n) j["barrier"]["c_n"] = *c.barrier_c_n;
  }
  return j;
}

std::vector<std::string> applicable_monitors(const ScenarioConfig& c) {
  switch (c.mode) {
    case ScenarioMode::radial_graph:
      return {"height", "gradient", "concavity", "junction_v", "barrier", "boundary_identities", "blowup"};
    case ScenarioMode::gauge2d:
      return {"height", "gradient", "concavity", "junction_v", "kinematics", "blowup"};
    case ScenarioMode::radial_gauge:
      if (c.kase == RadialCase::lens)
        return {"height", "gradient", "concavity", "junction_v", "barrier", "kinematics", "blowup"};
      return {"gradient", "junction_v", c.profile.name == "catenoid" ? "stationarity" : "drift", "kinematics",
              "blowup"};
  }
  return {};
}

fs::path output_root() {
  if (const char* env = std::getenv("CONTACTFLOW_OUT"); env && *env) return env;
  return "contactflow_out";
}

fs::path preset_dir() { return CONTACTFLOW_PRESET_DIR; }

json report_json(const std::vector<MonitorReport>& checks, const json& manifest) {
  json arr = json::array();
  for (const auto& r : checks)
    arr.push_back({{"name", r.name},
                   {"measured", number_or_null(r.measured)},
                   {"bound", number_or_null(r.bound)},
                   {"tolerance", number_or_null(r.tolerance)},
                   {"pass", r.pass},
                   {"applicable", r.applicable},
                   {"location", {{"node", r.node}, {"t", r.t}}},
                   {"note", r.note}});
  return {{"checks", arr}, {"manifest", manifest}};
}

RunOutcome run_scenario(const ScenarioConfig& cfg, const fs::path& root, bool resume) {
  const Driver d(cfg);
  RunOutcome outcome;
  outcome.dir = root / (cfg.output_dir.empty() ? cfg.name : cfg.output_dir);
  const fs::path& dir = outcome.dir;
  fs::create_directories(dir);

  RunState st;
  if (resume && fs::exists(dir / "manifest.json")) {
    std::ifstream in(dir / "manifest.json");
    const json m = json::parse(in);
    if (m.at("config") != config_to_json(cfg)) throw ConfigError("resume: config differs from the manifest");
    for (const auto& f : m.at("snapshots")) {
      st.files.push_back(f.get<std::string>());
      st.snapshots.push_back(load_snapshot(dir / st.files.back()));
    }
    st.steps = m.at("steps").get<std::size_t>();
    if (!m.at("extinction").is_null()) {
      st.extinct = true;
      st.ext_lo = m["extinction"]["t_lo"];
      st.ext_hi = m["extinction"]["t_hi"];
      st.ext_estimate = m["extinction"]["estimate"];
    }
    if (m.at("status") == "breakdown") throw ConfigError("resume: the run ended in a solver breakdown");
  } else {
    try {
      st.snapshots.push_back(d.initial());
    } catch (const ConstructionError& e) {
      throw ConfigError(std::string("initial data rejected: ") + e.what());
    }
    st.files.push_back(snapshot_name(0));
    save_snapshot(dir / st.files.back(), st.snapshots.back());
  }

  for (double t_out : output_times(cfg)) {
    if (st.extinct) break;
    if (!(t_out > snapshot_time(st.snapshots.back()))) continue;
    try {
      const Driver::Chunk c = d.advance(st.snapshots.back(), t_out);
      st.snapshots.push_back(c.s);
      st.steps += c.steps;
      if (c.extinct) {
        st.extinct = true;
        st.ext_lo = c.lo;
        st.ext_hi = c.hi;
        st.ext_estimate = c.estimate;
      }
    } catch (const Error& e) {
      if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) throw;
      st.status = "breakdown";
      st.diagnostics = e.what();
      break;
    }
    st.files.push_back(snapshot_name(st.snapshots.size() - 1));
    save_snapshot(dir / st.files.back(), st.snapshots.back());
    write_json(dir / "manifest.json", manifest_json(cfg, st, dir, {}));
  }

  std::vector<std::string> extra;
  if (st.status == "breakdown") {
    outcome.exit_code = 3;
    outcome.diagnostics = st.diagnostics;
  } else {
    st.status = "complete";
    outcome.checks = run_monitors(d, st, dir, extra);
    outcome.exit_code = std::all_of(outcome.checks.begin(), outcome.checks.end(),
                                    [](const MonitorReport& r) { return r.pass; })
                            ? 0
                            : 1;
  }
  const json manifest = manifest_json(cfg, st, dir, extra);
  write_json(dir / "report.json", report_json(outcome.checks, manifest));
  extra.push_back("report.json");
  outcome.manifest = manifest_json(cfg, st, dir, extra);
  write_json(dir / "manifest.json", outcome.manifest);
  return outcome;
}

ConvergenceOutcome converge_scenario(const ScenarioConfig& cfg, int levels, const fs::path& root) {
  if (levels < 3) throw ConfigError("converge needs at least 3 levels");
  const AngleParams params(cfg.beta);
  const int base = cfg.mode == ScenarioMode::gauge2d ? cfg.P : cfg.M;
  std::vector<int> res;
  for (int i = 0; i < levels; ++i) res.push_back(base << i);
  const std::vector<double> outs = output_times(cfg);

  ConvergenceOutcome out;
  std::function<double(int)> error;
  if (cfg.kase == RadialCase::exterior) {
    if (cfg.profile.name != "catenoid") throw ConfigError("converge: no reference solution for this profile");
    out.quantity = "catenoid_deviation";
    error = [=](int M) {
      RadialGaugeOptions o;
      o.cfl = cfg.cfl;
      o.outer_bc = cfg.outer_bc;
      const RadialGaugeSolver s(params, o);
      const RadialProfile cat = catenoid_profile(params);
      const GaugeRun run = run_gauge(s, s.initial_state(cat, M, cfg.R_out), outs, 1.0);
      double e = 0.0;
      for (const auto& st : run.snapshots) e = std::max(e, catenoid_deviation(st, cat));
      return e;
    };
  } else if (cfg.mode != ScenarioMode::gauge2d) {
    out.quantity = "gauge_graph_discrepancy";
    const RadialProfile prof = radial_profile(cfg);
    error = [=](int M) {
      const RadialGaugeSolver gs(params);
      const RadialGraphSolver hs(params);
      const GaugeRun a = run_gauge(gs, gs.initial_state(prof, M), outs, 1.0);
      const GraphRun b = run_graph(hs, hs.initial_state(prof, M), outs, 1.0);
      const CrossValidationReport r = cross_validate(a.snapshots, b.snapshots);
      return std::max(r.max_w, r.max_R);
    };
  } else {
    if (cfg.profile.name == "perturbed_paraboloid")
      throw ConfigError("converge: gauge2d needs rotationally symmetric data");
    out.quantity = "deviation_from_radial";
    const RadialProfile prof = radial_profile(cfg);
    const RadialGaugeSolver rs(params);
    const GaugeRun ref = run_gauge(rs, rs.initial_state(prof, 512), outs, 1.0);
    const double ratio = static_cast<double>(cfg.Q) / cfg.P;
    error = [=](int P) {
      Gauge2DOptions o;
      o.cfl = cfg.cfl;
      o.scheme = cfg.scheme == "imex" ? Gauge2DScheme::imex : Gauge2DScheme::explicit_euler;
      const Gauge2DSolver s(params, o);
      const int Q = static_cast<int>(std::lround(ratio * P));
      const Gauge2DRun run = run_gauge2d(s, s.initial_field(profile_from_radial(prof), DiskMesh(P, Q)), outs);
      double e = 0.0;
      for (std::size_t i = 0; i < run.snapshots.size() && i < ref.snapshots.size(); ++i) {
        const GaugeField2D& f = run.snapshots[i];
        e = std::max(e, std::abs(s.image_radius(f) - ref.snapshots[i].junction_radius()));
        for (const auto& F : f.F) {
          const double w = reconstruct_w(ref.snapshots[i], F.head<2>().norm());
          if (std::isfinite(w)) e = std::max(e, std::abs(F(2) - w));
        }
      }
      return e;
    };
  }
  out.report = convergence_study(error, res, true);

  const fs::path dir = root / (cfg.output_dir.empty() ? cfg.name : cfg.output_dir);
  fs::create_directories(dir);
  out.csv = dir / "convergence.csv";
  std::ostringstream os;
  os << "level,resolution,delta," << out.quantity << ",order\n";
  for (int i = 0; i < levels; ++i) {
    ConvergenceRow row{i, res[i], out.report.deltas[i], out.report.errors[i], 0.0};
    os << i << ',' << res[i] << ',' << format_double(row.delta) << ',' << format_double(row.error) << ',';
    if (i > 0 && static_cast<std::size_t>(i - 1) < out.report.orders.size()) {
      row.order = out.report.orders[i - 1];
      os << format_double(row.order);
    }
    os << '\n';
    out.rows.push_back(row);
  }
  write_text(out.csv, os.str());
  return out;
}

}  // namespace contactflow
