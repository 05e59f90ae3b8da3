#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "contactflow/radial.hpp"

using namespace contactflow;
using doctest::Approx;

namespace {

const AngleParams kHalf(0.5);

double max_catenoid_error(const RadialGaugeState& s) {
  double e = 0.0;
  for (int k = 0; k <= s.M(); ++k) e = std::max(e, std::abs(s.u[k] - catenoid(s.r[k])));
  return e;
}

}  // namespace

TEST_CASE("radial_H examples") {
  CHECK(radial_H(0.7, 0.3, 1.0, 0.0, 0.0, 0.0) == 0.0);
  for (double r : {0.1, 0.5, 0.9}) {
    const double u = std::sqrt(1 - r * r);
    CHECK(radial_H(r, u, 1.0, -r / u, 0.0, -1.0 / (u * u * u)) == Approx(-2.0).epsilon(1e-13));
  }
  const RadialProfile cat = catenoid_profile(kHalf);
  for (double r : {1.0, 1.3, 2.5}) CHECK(std::abs(graph_radial_H(r, cat.w_r(r), cat.w_rr(r))) < 1e-14);
  CHECK_THROWS_AS(radial_H(0.0, 0.0, 1.0, 0.5, 0.0, 0.0), DomainError);
  // a reparametrized sphere still has H = -2: phi = r^2 on the hemisphere
  const double r = 0.6, y = r * r, u = std::sqrt(1 - y * y);
  const double wy = -y / u, wyy = -1.0 / (u * u * u);
  CHECK(radial_H(y, u, 2 * r, wy * 2 * r, 2.0, wyy * 4 * r * r + wy * 2.0) == Approx(-2.0).epsilon(1e-13));
}

TEST_CASE("catenoid examples") {
  CHECK(catenoid(1.0) == Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(catenoid(std::sqrt(3.0)) == Approx(0.6648059190032465).epsilon(1e-14));
  CHECK_THROWS_AS(catenoid(std::sqrt(3.0) / 2.0), DomainError);
  CHECK_THROWS_AS(catenoid(0.5), DomainError);
  const RadialProfile cat = catenoid_profile(kHalf);
  for (double r : {1.0, 1.7, 3.9}) CHECK(cat.w(r) == Approx(catenoid(r)).epsilon(1e-14).scale(1.0));

  // one-sided second-order u_r at r = 1 converges to sqrt(3) at order 2
  double prev = 0.0;
  for (int M : {128, 256, 512}) {
    const double h = 1.0 / M;
    const double ur = (-3 * catenoid(1.0) + 4 * catenoid(1 + h) - catenoid(1 + 2 * h)) / (2 * h);
    const double err = std::abs(ur - std::sqrt(3.0));
    if (prev > 0.0) CHECK(prev / err == Approx(4.0).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("profiles satisfy contact and angle conditions") {
  for (double beta : {0.3, 0.5, 0.8}) {
    const AngleParams p(beta);
    CHECK_NOTHROW(validate_profile(paraboloid_profile(p, 1.3), p));
    CHECK_NOTHROW(validate_profile(spherical_cap_profile(p, 0.7), p));
    CHECK_NOTHROW(validate_profile(catenoid_profile(p), p));
    CHECK_NOTHROW(validate_profile(perturbed_catenoid_profile(p, 4.0, 0.01, 42), p));
  }
  RadialProfile flat = paraboloid_profile(kHalf);
  flat.w = [](double) { return 0.0; };
  flat.w_r = [](double) { return 0.0; };
  CHECK_THROWS_AS(validate_profile(flat, kHalf), ConstructionError);
  RadialGaugeSolver solver(kHalf);
  CHECK_THROWS_AS(solver.initial_state(flat, 64), ConstructionError);
  RadialGraphSolver graph(kHalf);
  CHECK_THROWS_AS(graph.initial_state(catenoid_profile(kHalf), 64), ConstructionError);

  const RadialProfile par = paraboloid_profile(kHalf);
  CHECK(par.w(0.0) == Approx(std::sqrt(3.0) / 2.0));
  CHECK(graph_radial_H(1e-9, par.w_r(1e-9), par.w_rr(1e-9)) == Approx(-2.0 * std::sqrt(3.0)).epsilon(1e-6));
  CHECK(graph_radial_H(1.0, par.w_r(1.0), par.w_rr(1.0)) == Approx(-5.0 * std::sqrt(3.0) / 8.0).epsilon(1e-14));
}

TEST_CASE("perturbed catenoid is reproducible per seed") {
  const RadialProfile a = perturbed_catenoid_profile(kHalf, 4.0, 0.01, 7);
  const RadialProfile b = perturbed_catenoid_profile(kHalf, 4.0, 0.01, 7);
  const RadialProfile c = perturbed_catenoid_profile(kHalf, 4.0, 0.01, 8);
  CHECK(a.w(2.2) == b.w(2.2));
  CHECK(a.w(2.2) != c.w(2.2));
  double peak = 0.0;
  for (int i = 0; i <= 300; ++i) {
    const double r = 1.0 + 3.0 * i / 300.0;
    peak = std::max(peak, std::abs(a.w(r) - catenoid(r)));
  }
  CHECK(peak == Approx(0.01).epsilon(0.01));
  // derivative closed forms against differences
  const double r = 2.3, e = 1e-5;
  CHECK(a.w_r(r) == Approx((a.w(r + e) - a.w(r - e)) / (2 * e)).epsilon(1e-8));
  CHECK(a.w_rr(r) == Approx((a.w_r(r + e) - a.w_r(r - e)) / (2 * e)).epsilon(1e-7));
}

TEST_CASE("gauge lens initial state is compatible") {
  RadialGaugeSolver solver(kHalf);
  const RadialGaugeState s = solver.initial_state(paraboloid_profile(kHalf), 128);
  CHECK(s.phi.front() == 0.0);
  CHECK(s.phi.back() == Approx(1.0).epsilon(1e-4));
  CHECK(s.u.back() == 0.0);
  for (int k = 0; k < s.M(); ++k) CHECK(s.phi[k + 1] > s.phi[k]);
  CHECK(std::abs(solver.angle_residual(s)) < 1e-13);
  // phi_rr(1) = -h with h = -H0/(beta^2 beta0) = 5
  const double h = s.dr();
  const int M = s.M();
  const double prr = (2 * s.phi[M] - 5 * s.phi[M - 1] + 4 * s.phi[M - 2] - s.phi[M - 3]) / (h * h);
  CHECK(prr == Approx(-5.0).epsilon(0.02));
  CHECK(solver.origin_phi_r(s) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gauge lens run: shrinking, angle exact, v = 1/beta on the junction") {
  RadialGaugeSolver solver(kHalf);
  RadialGaugeState s = solver.initial_state(paraboloid_profile(kHalf), 64);
  double R = s.junction_radius();
  for (int n = 0; n < 400; ++n) {
    s = solver.step(s, solver.stable_dt(s));
    CHECK(std::abs(solver.angle_residual(s)) < 1e-12);
    CHECK(solver.junction_v(s) == Approx(2.0).epsilon(1e-12));
    CHECK(s.u.back() == 0.0);
    CHECK(s.junction_radius() < R);
    R = s.junction_radius();
  }
  CHECK(solver.junction_H(s) < 0.0);
}

TEST_CASE("exterior catenoid stays stationary at second order") {
  RadialGaugeSolver solver(kHalf);
  const RadialProfile cat = catenoid_profile(kHalf);
  double prev = 0.0;
  for (int M : {64, 128, 256}) {
    const GaugeRun run = run_gauge(solver, solver.initial_state(cat, M, 4.0), {0.1}, 1.0);
    const RadialGaugeState& s = run.snapshots.back();
    CHECK(s.t == 0.1);
    CHECK(std::abs(solver.angle_residual(s)) < 1e-12);
    CHECK(!run.extinct);
    const double e = max_catenoid_error(s);
    if (prev > 0.0) CHECK(prev / e > 3.0);
    prev = e;
  }
  CHECK(prev < 1e-4);

  RadialGaugeOptions neu;
  neu.outer_bc = OuterBc::neumann;
  RadialGaugeSolver nsolver(kHalf, neu);
  const GaugeRun run = run_gauge(nsolver, nsolver.initial_state(cat, 64, 4.0), {0.05}, 1.0);
  const RadialGaugeState& s = run.snapshots.back();
  const double h = s.dr();
  CHECK(std::abs((3 * s.u[64] - 4 * s.u[63] + s.u[62]) / (2 * h)) < 0.3);  // relaxing toward u_r = 0
  CHECK(s.phi.back() == 4.0);
}

TEST_CASE("graph mode: explicit pole step and front law") {
  // spherical cap: H = -2 beta0 everywhere, v = 1 at the pole
  RadialGraphOptions ex;
  ex.scheme = TimeScheme::explicit_euler;
  RadialGraphSolver solver(kHalf, ex);
  const RadialProfile cap = spherical_cap_profile(kHalf);
  const RadialGraphState s0 = solver.initial_state(cap, 400);
  const double dt = 1e-7;
  const RadialGraphState s1 = solver.step(s0, dt);
  CHECK((s1.w[0] - s0.w[0]) / dt == Approx(-std::sqrt(3.0)).epsilon(1e-4));

  RadialGraphSolver semi(kHalf);
  RadialGraphState s = semi.initial_state(paraboloid_profile(kHalf), 256);
  for (int n = 0; n < 50; ++n) s = semi.step(s, semi.stable_dt(s));
  const double dt2 = 1e-4 * semi.stable_dt(s);
  const RadialGraphState t = semi.step(s, dt2);
  const double Rdot = (t.R - s.R) / dt2;
  CHECK(Rdot == Approx(semi.junction_H(s) / kHalf.beta0()).epsilon(2e-3));
  CHECK(semi.junction_w_r(t) == Approx(-std::sqrt(3.0)).epsilon(1e-12));
  CHECK(t.w.back() == 0.0);
}

TEST_CASE("graph and gauge modes agree; t = 0 gives interpolation error only") {
  const RadialProfile par = paraboloid_profile(kHalf);
  RadialGaugeSolver ga(kHalf);
  RadialGraphSolver gr(kHalf);
  const CrossValidationReport r0 = cross_validate({ga.initial_state(par, 64)}, {gr.initial_state(par, 64)});
  REQUIRE(r0.samples.size() == 1);
  CHECK(r0.max_R < 1e-4);
  CHECK(r0.max_w < 1e-4);

  std::vector<double> prev;
  for (int M : {32, 64, 128}) {
    const GaugeRun a = run_gauge(ga, ga.initial_state(par, M), {0.01, 0.02}, 1.0);
    const GraphRun b = run_graph(gr, gr.initial_state(par, M), {0.01, 0.02}, 1.0);
    const CrossValidationReport rep = cross_validate(a.snapshots, b.snapshots);
    CHECK(rep.samples.size() == 3);
    if (!prev.empty()) {
      CHECK(prev[0] / rep.max_w > 3.0);
      CHECK(prev[1] / rep.max_R > 3.0);
    }
    prev = {rep.max_w, rep.max_R};
  }

  // non-overlapping horizons are truncated, not fatal
  const GraphRun b = run_graph(gr, gr.initial_state(par, 32), {0.01}, 1.0);
  const CrossValidationReport rep = cross_validate({ga.initial_state(par, 32)}, {b.snapshots.back()});
  CHECK(rep.samples.empty());
  CHECK(rep.truncated);
}

TEST_CASE("runs are deterministic and hit output times exactly") {
  RadialGraphSolver gr(kHalf);
  const RadialProfile par = paraboloid_profile(kHalf);
  const GraphRun a = run_graph(gr, gr.initial_state(par, 48), {0.003, 0.0071}, 1.0);
  const GraphRun b = run_graph(gr, gr.initial_state(par, 48), {0.003, 0.0071}, 1.0);
  REQUIRE(a.snapshots.size() == 3);
  CHECK(a.snapshots[1].t == 0.003);
  CHECK(a.snapshots[2].t == 0.0071);
  CHECK(a.snapshots[2].w == b.snapshots[2].w);
  CHECK(a.snapshots[2].R == b.snapshots[2].R);
}

TEST_CASE("lens extinction is detected and bracketed") {
  RadialGraphSolver gr(kHalf);
  const GraphRun run = run_graph(gr, gr.initial_state(spherical_cap_profile(kHalf), 48), {1.0}, 1.0);
  CHECK(run.extinct);
  CHECK(run.extinction_bracket_lo < run.extinction_bracket_hi);
  CHECK(run.extinction_estimate >= run.extinction_bracket_hi);
  CHECK(run.snapshots.back().R < 10.0 / 48);
}
