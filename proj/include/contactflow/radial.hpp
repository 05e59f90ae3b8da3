#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "contactflow/geometry.hpp"

namespace contactflow {

enum class RadialCase { lens, exterior };
enum class OuterBc { pinned, neumann };

const char* to_string(RadialCase c);

// Initial graph w0(r) of a rotationally symmetric surface with its junction at r = R0.
struct RadialProfile {
  std::string name;
  RadialCase kase = RadialCase::lens;
  double R0 = 1.0;
  std::function<double(double)> w, w_r, w_rr;
};

// w0 = (beta0/(2 beta R0)) (R0^2 - r^2)
RadialProfile paraboloid_profile(const AngleParams& p, double R0 = 1.0);
// sphere of radius R0/beta0 cut at the contact angle
RadialProfile spherical_cap_profile(const AngleParams& p, double R0 = 1.0);
// u = beta0 (acosh(r/beta0) - acosh(1/beta0)); the beta = 1/2 case is catenoid()
RadialProfile catenoid_profile(const AngleParams& p);
// catenoid + amplitude * s^2 sum_k c_k sin(k pi s), s = (r-1)/(R_out-1), c_k seeded
RadialProfile perturbed_catenoid_profile(const AngleParams& p, double R_out, double amplitude,
                                         std::uint64_t seed);

// (sqrt3/2)(ln(2r + sqrt(4r^2 - 3)) - ln 3), r > sqrt3/2
double catenoid(double r);

// Mean curvature of r -> (phi(r) e_r, u(r)), sign convention H = -2 on the upper hemisphere.
double radial_H(double phi, double u, double phi_r, double u_r, double phi_rr, double u_rr);

// Mean curvature of the graph w(r) at r > 0.
inline double graph_radial_H(double r, double w_r, double w_rr) {
  return radial_H(r, 0.0, 1.0, w_r, 0.0, w_rr);
}

// Throws ConstructionError unless w(R0) = 0 and the contact angle holds at R0.
void validate_profile(const RadialProfile& profile, const AngleParams& p, double tol = 1e-9);

struct RadialGaugeState {
  RadialCase kase = RadialCase::lens;
  std::vector<double> r, phi, u;
  double t = 0.0;
  double outer_u = 0.0;    // exterior: pinned data at R_out
  double outer_phi = 0.0;

  int M() const { return static_cast<int>(r.size()) - 1; }
  double dr() const { return r[1] - r[0]; }
  int junction_index() const { return kase == RadialCase::lens ? M() : 0; }
  double junction_radius() const { return phi[junction_index()]; }
};

struct RadialGraphState {
  double R = 1.0;
  std::vector<double> xi, w;
  double t = 0.0;

  int M() const { return static_cast<int>(xi.size()) - 1; }
  double dxi() const { return xi[1] - xi[0]; }
  double r(int k) const { return xi[k] * R; }
};

// Centered interior / second-order one-sided end derivatives on a uniform grid.
std::vector<double> first_derivative(const std::vector<double>& f, double h);
std::vector<double> second_derivative(const std::vector<double>& f, double h);

struct RadialGaugeOptions {
  double cfl = 0.4;
  OuterBc outer_bc = OuterBc::pinned;
  double v_guard = 1e6;
  double rho0 = 0.3;  // tubular width of the compatible initial map, relative to R0
};

class RadialGaugeSolver {
 public:
  RadialGaugeSolver(AngleParams params, RadialGaugeOptions opts = {});

  // Lens: r in [0, R0] with the compatible phi0; exterior: r in [R0, R_out], phi0 compatible (identity when H0 = 0).
  RadialGaugeState initial_state(const RadialProfile& profile, int M, double R_out = 4.0) const;
  RadialGaugeState step(const RadialGaugeState& s, double dt) const;
  double stable_dt(const RadialGaugeState& s) const;

  double angle_residual(const RadialGaugeState& s) const;  // beta u_r +/- beta0 phi_r at the junction
  double junction_v(const RadialGaugeState& s) const;
  double max_v(const RadialGaugeState& s) const;
  double junction_H(const RadialGaugeState& s) const;
  double origin_phi_r(const RadialGaugeState& s) const;   // diagnostic only
  // Junction radius below 10 R0/M, or v above the guard.
  bool extinct(const RadialGaugeState& s, double R0) const;

  const AngleParams& params() const { return params_; }
  const RadialGaugeOptions& options() const { return opts_; }

 private:
  AngleParams params_;
  RadialGaugeOptions opts_;
};

enum class TimeScheme { semi_implicit, explicit_euler };

struct RadialGraphOptions {
  double cfl = 0.4;
  TimeScheme scheme = TimeScheme::semi_implicit;
  double v_guard = 1e6;
};

class RadialGraphSolver {
 public:
  RadialGraphSolver(AngleParams params, RadialGraphOptions opts = {});

  RadialGraphState initial_state(const RadialProfile& profile, int M) const;
  // Interior update in xi = r/R with the rescaling advection term; R advanced
  // together with the interior so contact and angle hold exactly each step.
  RadialGraphState step(const RadialGraphState& s, double dt) const;
  double stable_dt(const RadialGraphState& s) const;

  double junction_w_r(const RadialGraphState& s) const;
  double junction_H(const RadialGraphState& s) const;
  double max_v(const RadialGraphState& s) const;
  bool extinct(const RadialGraphState& s, double R0) const;

  const AngleParams& params() const { return params_; }

 private:
  AngleParams params_;
  RadialGraphOptions opts_;
};

// Time-ordered snapshots of a run.
template <class State>
struct RadialRun {
  std::vector<State> snapshots;
  bool extinct = false;
  double extinction_bracket_lo = 0.0, extinction_bracket_hi = 0.0;
  double extinction_estimate = 0.0;  // R^2 extrapolated to zero
  std::size_t steps = 0;
};

using GaugeRun = RadialRun<RadialGaugeState>;
using GraphRun = RadialRun<RadialGraphState>;

// Advance to each output time in turn (dt clipped to hit them exactly); stops
// early on extinction. Output times must be increasing and > s0.t.
GaugeRun run_gauge(const RadialGaugeSolver& solver, RadialGaugeState s0, const std::vector<double>& out_times,
                   double R0, bool stop_at_extinction = true);
GraphRun run_graph(const RadialGraphSolver& solver, RadialGraphState s0, const std::vector<double>& out_times,
                   double R0, bool stop_at_extinction = true);

// w = u o phi^{-1} by cubic Hermite interpolation in phi with slopes u_r/phi_r.
double reconstruct_w(const RadialGaugeState& s, double r);
// Graph mode height at physical radius r (cubic Hermite in xi).
double graph_w_at(const RadialGraphState& s, double r);

struct CrossValidationSample {
  double t = 0.0;
  double w_discrepancy = 0.0;
  double R_gauge = 0.0, R_graph = 0.0;
  double R_discrepancy = 0.0;
  double common_support = 0.0;
};

struct CrossValidationReport {
  std::vector<CrossValidationSample> samples;
  double max_w = 0.0, max_R = 0.0;
  bool truncated = false;
};

CrossValidationReport cross_validate(const std::vector<RadialGaugeState>& gauge_run,
                                     const std::vector<RadialGraphState>& graph_run);

}  // namespace contactflow
