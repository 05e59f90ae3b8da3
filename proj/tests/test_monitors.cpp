#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "contactflow/monitors.hpp"

using namespace contactflow;
using doctest::Approx;

namespace {

const AngleParams kHalf(0.5);

GraphRun lens_graph_run(int M, const std::vector<double>& times) {
  RadialGraphSolver solver(kHalf);
  return run_graph(solver, solver.initial_state(paraboloid_profile(kHalf), M), times, 1.0);
}

// Three consecutive steps starting at the first step past t0.
std::array<RadialGraphState, 3> consecutive(int M, double t0) {
  RadialGraphSolver solver(kHalf);
  RadialGraphState s = solver.initial_state(paraboloid_profile(kHalf), M);
  while (s.t < t0) s = solver.step(s, solver.stable_dt(s));
  const double dt = solver.stable_dt(s);
  RadialGraphState b = solver.step(s, dt);
  return {s, b, solver.step(b, dt)};
}

}  // namespace

TEST_CASE("barrier function") {
  const BarrierParams b(-2.0, 0.5);
  CHECK(b.t_star() == Approx(0.25));
  CHECK(b.value(0.0) == -2.0);
  CHECK(b.value(0.125) == Approx(-2.0 / std::sqrt(0.5)));
  CHECK(b.value(0.25) == -std::numeric_limits<double>::infinity());
  CHECK(BarrierParams(-1.0, 1.0).value(0.375) == Approx(-2.0));
  CHECK_THROWS_AS(BarrierParams(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(BarrierParams(-1.0, 0.0), DomainError);
}

TEST_CASE("graph snapshots agree between radial modes and the 2D solver") {
  const RadialProfile prof = paraboloid_profile(kHalf);
  RadialGraphSolver graph(kHalf);
  RadialGaugeSolver gauge(kHalf);
  const GraphSnapshot a = graph_snapshot(graph.initial_state(prof, 128));
  const GraphSnapshot b = graph_snapshot(gauge.initial_state(prof, 128));
  Gauge2DSolver solver2(kHalf);
  const GraphSnapshot c = graph_snapshot(solver2.initial_field(profile_from_radial(prof), DiskMesh(32, 64)));
  const double H0 = graph_radial_H(1.0, prof.w_r(1.0), prof.w_rr(1.0));
  CHECK(sup_H(a) == Approx(H0).epsilon(1e-6));
  // the projected initial junction node leaves a first-order error in H there
  CHECK(sup_H(b) == Approx(H0).epsilon(2e-2));
  CHECK(sup_H(c) == Approx(H0).epsilon(0.1));
  for (const auto* s : {&a, &b, &c}) {
    int junctions = 0;
    for (const auto& g : s->samples) junctions += g.junction;
    CHECK(junctions == (s == &c ? 64 : 1));
  }
}

TEST_CASE("bound monitors on a shrinking lens") {
  const GraphRun run = lens_graph_run(64, {0.05, 0.1, 0.15, 0.2});
  const GraphSeries series = graph_series(run.snapshots);
  const double M = run.snapshots.front().w.front();
  CHECK(check_height_bound(series, M).pass);
  const MonitorReport grad = check_gradient_bound(series, kHalf);
  CHECK(grad.pass);
  CHECK(grad.bound == Approx(2.0));
  const MonitorReport conc = check_concavity(series);
  CHECK(conc.applicable);
  CHECK(conc.pass);
  CHECK(check_junction_v(series, kHalf).pass);

  GraphSeries raised = series;
  raised.back().samples[3].w = M + 0.1;
  const MonitorReport bad = check_height_bound(raised, M);
  CHECK_FALSE(bad.pass);
  CHECK(bad.node == 3);
  GraphSeries sunk = series;
  sunk.back().samples[3].w = -0.1;
  CHECK_FALSE(check_height_bound(sunk, M).pass);
  CHECK(check_height_bound({series.front()}, M).pass);
}

TEST_CASE("concavity is not applicable outside a disk") {
  RadialGaugeSolver solver(kHalf);
  const auto s = solver.initial_state(perturbed_catenoid_profile(kHalf, 4.0, 0.05, 7), 64);
  const MonitorReport r = check_concavity({graph_snapshot(s)});
  CHECK_FALSE(r.applicable);
  CHECK(r.pass);
}

TEST_CASE("barrier reports on the lens") {
  const GraphRun run = lens_graph_run(64, {0.05, 0.1});
  const GraphSeries series = graph_series(run.snapshots);
  CHECK(barrier_constant(series, 2) == Approx(0.5 + 3.0).epsilon(1e-6));
  const BarrierParams weak(-5.0 * std::sqrt(3.0) / 8.0, 0.5);
  const auto ok = check_mean_curvature_barrier(series, weak, 0.255, 1e-3);
  REQUIRE(ok.size() == 2);
  CHECK(ok[0].pass);
  CHECK(ok[1].pass);
  const auto none = check_mean_curvature_barrier(series, weak, std::numeric_limits<double>::infinity(), 1e-3);
  CHECK_FALSE(none[1].pass);
  const BarrierParams strong(-2.0 * std::sqrt(3.0), 3.5);
  CHECK_FALSE(check_mean_curvature_barrier(series, strong, 0.255, 1e-3)[0].pass);
}

TEST_CASE("boundary identities: exact at the initial junction, converge for t > 0") {
  for (const RadialProfile& prof : {paraboloid_profile(kHalf), spherical_cap_profile(kHalf), catenoid_profile(kHalf)}) {
    const BoundaryResiduals r = boundary_residuals(junction_sample(prof), kHalf);
    CHECK(std::abs(r.h_nt) < 1e-14);
    CHECK(std::abs(r.tangential) < 1e-12);
  }
  std::vector<double> errs;
  for (int M : {64, 128, 256}) {
    std::vector<JunctionSample> samples;
    for (const auto& s : lens_graph_run(M, {0.02, 0.04, 0.06}).snapshots)
      if (s.t > 0.0) samples.push_back(junction_sample(s));
    const auto reps = check_boundary_h_conditions(samples, kHalf, 0.0);
    REQUIRE(reps.size() == 5);
    CHECK(reps[0].measured < 1e-14);
    CHECK(reps[1].measured < 1e-12);
    double e = 0.0;
    for (int k = 2; k < 5; ++k) e = std::max(e, reps[k].measured);
    errs.push_back(e);
  }
  const ConvergenceReport c = observed_orders({1.0 / 64, 1.0 / 128, 1.0 / 256}, errs);
  CHECK(c.conclusive);
  CHECK(c.order > 1.5);
}

TEST_CASE("evolution identities converge at second order") {
  std::vector<double> errs;
  for (int M : {32, 64, 128}) {
    const auto s = consecutive(M, 0.03);
    const auto reps = check_evolution_identities({jet_snapshot(s[0]), jet_snapshot(s[1]), jet_snapshot(s[2])});
    REQUIRE(reps.size() == 7);
    double e = 0.0;
    for (int k = 0; k < 6; ++k) e = std::max(e, reps[k].measured);
    CHECK(reps[6].measured < 1e-12);
    errs.push_back(e);
  }
  const ConvergenceReport c = observed_orders({1.0 / 32, 1.0 / 64, 1.0 / 128}, errs);
  CHECK(c.conclusive);
  CHECK(c.order > 1.7);
  CHECK_THROWS_AS(check_evolution_identities({}), DomainError);
}

TEST_CASE("blow-up tracker envelope") {
  const GraphRun run = lens_graph_run(64, {0.05, 0.1, 0.15, 0.2, 0.24});
  const BlowupSeries b = blowup_tracker(graph_series(run.snapshots));
  REQUIRE(b.envelope.size() == run.snapshots.size());
  for (std::size_t i = 1; i < b.envelope.size(); ++i) {
    CHECK(b.envelope[i].interior >= b.envelope[i - 1].interior);
    CHECK(b.envelope[i].boundary >= b.raw[i].boundary);
  }
  CHECK(b.raw.back().boundary > 3.0 * b.raw.front().boundary);

  Gauge2DSolver solver(kHalf, {.scheme = Gauge2DScheme::imex});
  const DiskMesh mesh(16, 32);
  const auto run2 = run_gauge2d(solver, solver.initial_field(profile_from_radial(paraboloid_profile(kHalf)), mesh),
                                {0.01, 0.02});
  const BlowupSeries b2 = blowup_tracker(run2.snapshots, kHalf);
  REQUIRE(b2.raw.size() == 3);
  CHECK(b2.raw.front().grad_K < 1e-8);
}

TEST_CASE("observed orders") {
  const ConvergenceReport r = observed_orders({0.1, 0.05, 0.025}, {0.02, 0.005, 0.00125});
  CHECK(r.conclusive);
  CHECK(r.order == Approx(2.0));
  REQUIRE(r.orders.size() == 2);
  const ConvergenceReport bad = observed_orders({0.1, 0.05, 0.025}, {0.02, 0.03, 0.001});
  CHECK_FALSE(bad.conclusive);
  CHECK_FALSE(observed_orders({0.1, 0.05}, {0.0, 0.0}).conclusive);
  CHECK_THROWS_AS(observed_orders({0.1}, {0.1}), DomainError);

  const ConvergenceReport rich = richardson_order({0.1, 0.05, 0.025}, {1.01, 1.0025, 1.000625});
  CHECK(rich.conclusive);
  CHECK(rich.order == Approx(2.0));

  auto err = [](int n) { return 3.0 / (double(n) * n * n); };
  const ConvergenceReport par = convergence_study(err, {8, 16, 32}, true);
  const ConvergenceReport ser = convergence_study(err, {8, 16, 32}, false);
  CHECK(par.errors == ser.errors);
  CHECK(par.order == Approx(3.0));
  CHECK_THROWS_AS(convergence_study(err, {8, 16}), DomainError);
}
