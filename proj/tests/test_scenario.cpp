#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "contactflow/errors.hpp"
#include "contactflow/scenario.hpp"
#include "contactflow/snapshot_io.hpp"

using namespace contactflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("contactflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_lens() {
  return {{"name", "lens"}, {"mode", "radial_graph"}, {"M", 32}, {"T_end", 0.05}, {"output_interval", 0.01}};
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and invalid combinations") {
  CHECK_NOTHROW(parse_config(small_lens()));
  auto bad = [](json j) { CHECK_THROWS_AS(parse_config(j), ConfigError); };
  json j = small_lens();
  j["Mx"] = 3;
  bad(j);
  j = small_lens();
  j["profile"] = {{"name", "paraboloid"}, {"amp", 0.1}};
  bad(j);
  j = small_lens();
  j["case"] = "exterior";
  j["profile"] = {{"name", "catenoid"}};
  bad(j);  // graph mode is lens-only
  j = small_lens();
  j["beta"] = 1.0;
  bad(j);
  j = small_lens();
  j["M"] = "many";
  bad(j);
  j = small_lens();
  j["profile"] = {{"name", "catenoid"}};
  bad(j);  // exterior data on a lens
  j = small_lens();
  j["scheme"] = "imex";
  bad(j);
  j = small_lens();
  j["monitors"] = {"stationarity"};
  bad(j);
  j = small_lens();
  j["mode"] = "gauge2d";
  j["P"] = 2;
  bad(j);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"mode": "radial_gauge", "case": "exterior", "R_out": 0.5})")),
                  ConfigError);
}

TEST_CASE("every preset parses and echoes through config_to_json") {
  int n = 0;
  for (const auto& e : fs::directory_iterator(preset_dir())) {
    const ScenarioConfig c = load_config(e.path());
    CHECK(parse_config(config_to_json(c)).name == c.name);
    ++n;
  }
  CHECK(n >= 3);
  CHECK(fs::exists(preset_dir() / "lens_paraboloid.json"));
  CHECK(fs::exists(preset_dir() / "exterior_catenoid.json"));
  CHECK(fs::exists(preset_dir() / "exterior_catenoid_perturbed.json"));
}

TEST_CASE("snapshots round-trip bitwise") {
  const AngleParams p(0.5);
  const RadialGaugeSolver gauge(p);
  const RadialGraphSolver graph(p);
  const Gauge2DSolver disk(p);
  const std::vector<Snapshot> snaps{
      gauge.step(gauge.initial_state(paraboloid_profile(p), 16), 1e-3),
      gauge.initial_state(catenoid_profile(p), 16, 4.0),
      graph.step(graph.initial_state(spherical_cap_profile(p), 16), 1e-3),
      disk.initial_field(perturbed_paraboloid_2d(p, 0.1), DiskMesh(6, 12)),
  };
  for (const auto& s : snaps) {
    std::ostringstream a;
    std::visit([&](const auto& x) { write_snapshot(a, x); }, s);
    std::istringstream in(a.str());
    const Snapshot back = read_snapshot(in);
    CHECK(back.index() == s.index());
    CHECK(snapshot_time(back) == snapshot_time(s));
    std::ostringstream b;
    std::visit([&](const auto& x) { write_snapshot(b, x); }, back);
    CHECK(a.str() == b.str());
  }
  std::istringstream garbage("# t=0 mode=radial_graph\nnode_index,r,w\n0,0,x\n");
  CHECK_THROWS_AS(read_snapshot(garbage), ConfigError);
}

TEST_CASE("a small lens run writes a complete, deterministic record") {
  const ScenarioConfig cfg = parse_config(small_lens());
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const RunOutcome ra = run_scenario(cfg, a);
  const RunOutcome rb = run_scenario(cfg, b);
  CHECK(ra.exit_code == 0);
  for (const auto& c : ra.checks) CHECK_MESSAGE(c.pass, c.name);

  const json m = ra.manifest;
  CHECK(m.at("status") == "complete");
  CHECK(m.at("snapshots").size() == 6);
  for (const auto& f : m.at("files")) {
    const fs::path p = ra.dir / f.at("name").get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(f.at("bytes").get<std::uintmax_t>() == fs::file_size(p));
    CHECK(f.at("crc32").get<std::uint32_t>() == file_crc32(p));
    CHECK(slurp(p) == slurp(rb.dir / f.at("name").get<std::string>()));
  }
  CHECK(slurp(ra.dir / "report.json") == slurp(rb.dir / "report.json"));

  const json report = json::parse(slurp(ra.dir / "report.json"));
  for (const auto& c : report.at("checks")) {
    CHECK(c.contains("name"));
    CHECK(c.contains("measured"));
    CHECK(c.contains("tolerance"));
    CHECK(c.contains("location"));
  }
}

TEST_CASE("an interrupted run resumes to the same outputs") {
  const ScenarioConfig cfg = parse_config(small_lens());
  const fs::path full = scratch("full"), cut = scratch("cut");
  const RunOutcome ref = run_scenario(cfg, full);

  run_scenario(cfg, cut);
  // cut the record back to the third snapshot, as if the run had been killed there
  const fs::path dir = cut / cfg.name;
  json m = json::parse(slurp(dir / "manifest.json"));
  json kept = json::array();
  for (int i = 0; i < 3; ++i) kept.push_back(m["snapshots"][i]);
  for (std::size_t i = 3; i < m["snapshots"].size(); ++i) fs::remove(dir / m["snapshots"][i].get<std::string>());
  m["snapshots"] = kept;
  m["status"] = "running";
  fs::remove(dir / "report.json");
  std::ofstream(dir / "manifest.json") << m.dump(2);

  const RunOutcome resumed = run_scenario(cfg, cut, true);
  CHECK(resumed.exit_code == 0);
  for (const auto& f : ref.manifest.at("snapshots")) {
    const std::string name = f.get<std::string>();
    CHECK(slurp(dir / name) == slurp(ref.dir / name));
  }

  ScenarioConfig other = cfg;
  other.M = 64;
  CHECK_THROWS_AS(run_scenario(other, cut, true), ConfigError);
}

TEST_CASE("exit codes follow the monitors") {
  // an impossible barrier makes the extinction monitor fail
  json j = small_lens();
  j["T_end"] = 1.0;
  j["output_interval"] = 0.05;
  j["to_extinction"] = true;
  j["barrier"] = {{"H0", -10.0}, {"c_n", 1.0}};
  const RunOutcome out = run_scenario(parse_config(j), scratch("fail"));
  CHECK(out.exit_code == 1);
  bool named = false;
  for (const auto& c : out.checks)
    if (c.name == "extinction_before_t_star") named = !c.pass;
  CHECK(named);
  CHECK(out.manifest.at("extinction").is_object());
}

TEST_CASE("presets run at small resolution") {
  const fs::path root = scratch("presets");
  for (const char* name : {"lens_paraboloid", "lens_spherical_cap", "lens_paraboloid_gauge", "exterior_catenoid"}) {
    ScenarioConfig c = load_config(preset_dir() / (std::string(name) + ".json"));
    c.M = 32;
    c.T_end = std::min(c.T_end, 0.05);
    c.to_extinction = false;
    const RunOutcome out = run_scenario(c, root);
    CHECK_MESSAGE(out.exit_code == 0, name);
    for (const auto& r : out.checks) CHECK_MESSAGE(r.pass, name << ": " << r.name);
  }
  ScenarioConfig p = load_config(preset_dir() / "exterior_catenoid_perturbed.json");
  p.M = 32;
  p.T_end = 0.1;
  const RunOutcome out = run_scenario(p, root);
  CHECK(out.exit_code == 0);
  bool drift = false;
  for (const auto& r : out.checks) drift = drift || r.name == "catenoid_drift";
  CHECK(drift);
  CHECK(slurp(out.dir / "series.csv").find("drift") != std::string::npos);
}

TEST_CASE("converge needs three levels and reports orders") {
  ScenarioConfig c = parse_config(small_lens());
  CHECK_THROWS_AS(converge_scenario(c, 1, scratch("conv1")), ConfigError);
  c = load_config(preset_dir() / "exterior_catenoid.json");
  c.M = 32;
  c.T_end = 0.02;
  const ConvergenceOutcome out = converge_scenario(c, 3, scratch("conv"));
  CHECK(out.report.conclusive);
  CHECK(out.report.order > 1.5);
  CHECK(out.rows.size() == 3);
  CHECK(fs::exists(out.csv));
}
