#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contactflow/gauge2d.hpp"
#include "contactflow/geometry.hpp"
#include "contactflow/radial.hpp"
#include "contactflow/taylor.hpp"

namespace contactflow {

struct MonitorReport {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool applicable = true;
  int node = -1;  // worst-case location
  double t = 0.0;
  std::string note;
};

// Graph jet of the surface at one node, in the image coordinates.
struct GraphSample {
  Eigen::Vector2d y = Eigen::Vector2d::Zero();
  double w = 0.0;
  Eigen::Vector2d Dw = Eigen::Vector2d::Zero();
  Eigen::Matrix2d D2w = Eigen::Matrix2d::Zero();
  bool junction = false;
};

struct GraphSnapshot {
  double t = 0.0;
  double delta = 0.0;  // mesh spacing
  std::vector<GraphSample> samples;
};

using GraphSeries = std::vector<GraphSnapshot>;

GraphSnapshot graph_snapshot(const RadialGraphState& s);
GraphSnapshot graph_snapshot(const RadialGaugeState& s);
GraphSnapshot graph_snapshot(const GaugeField2D& f);

template <class State>
GraphSeries graph_series(const std::vector<State>& states) {
  GraphSeries out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(graph_snapshot(s));
  return out;
}

// 0 < w < M at interior samples, tolerance 1e-8 + delta^2 M.
MonitorReport check_height_bound(const GraphSeries& series, double M);
// max v <= max(initial sup v, 1/beta) + C delta
MonitorReport check_gradient_bound(const GraphSeries& series, const AngleParams& params, double C = 1.0);
// max eigenvalue of h, relative to 1 + |h|_g, <= C delta; not applicable unless h <= 0 initially
MonitorReport check_concavity(const GraphSeries& series, double C = 1.0);
// |v - 1/beta| at junction samples
MonitorReport check_junction_v(const GraphSeries& series, const AngleParams& params, double tol = 1e-9);

class BarrierParams {
 public:
  BarrierParams(double H0, double c_n);
  double H0() const { return H0_; }
  double c_n() const { return c_n_; }
  double t_star() const { return 1.0 / (2.0 * H0_ * H0_ * c_n_); }
  // H0 (1 - 2 c_n H0^2 t)^{-1/2}; -inf from t_star on
  double value(double t) const;

 private:
  double H0_, c_n_;
};

// c_n = 1/n + max over the series of (v^2 - 1)
double barrier_constant(const GraphSeries& series, int n = 2);
double sup_H(const GraphSnapshot& snap);

// [0]: max H - barrier over snapshots with t < t_star; [1]: extinction time <= t_star.
std::vector<MonitorReport> check_mean_curvature_barrier(const GraphSeries& series, const BarrierParams& barrier,
                                                        double extinction_time, double tol);

// Quantities on the junction needed by the boundary identities. n is the inner
// unit normal of the domain, tau the unit tangent; derivatives are euclidean.
struct JunctionSample {
  double t = 0.0;
  double curvature = 0.0;  // of the domain boundary with respect to n
  double H = 0.0, H_n = 0.0;
  double h_nn = 0.0, h_tt = 0.0, h_nt = 0.0;
  double dn_h_nn = 0.0;  // n(h(n, n))
  double omega_n = 0.0;  // <omega, n>
  double hnorm2 = 0.0;
};

// Second-order one-sided derivatives of the discrete solution at the junction.
JunctionSample junction_sample(const RadialGraphState& s);
// Exact values from the closed-form profile at its junction.
JunctionSample junction_sample(const RadialProfile& profile);

struct BoundaryResiduals {
  double h_nt = 0.0;         // h(n, tau)
  double tangential = 0.0;   // h(tau, tau) + beta0 K
  double neumann_H = 0.0;    // H_n - (beta^2/beta0) H h_nn
  double covariant_nn = 0.0; // beta0 (nabla_n h)(n, n) - |h|^2/beta^2
  double euclidean_nn = 0.0; // beta0 n(h_nn) - |h|^2/beta^2 - 2 beta0^2 h_nn^2
  double max() const;
};

BoundaryResiduals boundary_residuals(const JunctionSample& j, const AngleParams& params);
// One report per identity, max over samples.
std::vector<MonitorReport> check_boundary_h_conditions(const std::vector<JunctionSample>& samples,
                                                       const AngleParams& params, double tol = 0.0);

// Degree-4 jet of w about y (node-following across snapshots).
struct JetSample {
  Eigen::Vector2d y = Eigen::Vector2d::Zero();
  Taylor2<4> w;
};

struct JetSnapshot {
  double t = 0.0;
  std::vector<JetSample> samples;  // same node order in every snapshot
};

// Jets at the graph-mode nodes with xi in [xi_lo, xi_hi], from 5-point radial stencils.
JetSnapshot jet_snapshot(const RadialGraphState& s, double xi_lo = 0.1, double xi_hi = 0.9);

struct IdentityResiduals {
  double omega = 0.0, ginv = 0.0, H = 0.0, hnorm2 = 0.0, h = 0.0, v = 0.0;
  double H_alternate = 0.0;  // direct vs alternate assembly of L[H]
};

// L[f] = d_t f - tr_g d^2 f at the middle snapshot (3-point time derivative with
// the node motion removed) against the closed-form right-hand sides.
IdentityResiduals identity_residuals(const JetSnapshot& a, const JetSnapshot& b, const JetSnapshot& c);
// Max over consecutive triples; one report per identity (measured only).
std::vector<MonitorReport> check_evolution_identities(const std::vector<JetSnapshot>& series);

// Max of |w_rr/(1 + w_r^2) + w_r/r| for the catenoid sampled on M uniform
// intervals of [R0, R_out], centered differences. With every > 0 only the
// nodes of the grid with M/every intervals count (fixed points under refinement).
double catenoid_operator_residual(const RadialProfile& catenoid, int M, double R_out, int every = 1);
// max |u - w_cat(phi)| over the nodes of an exterior state
double catenoid_deviation(const RadialGaugeState& s, const RadialProfile& catenoid);

struct BlowupPoint {
  double t = 0.0;
  double interior = 0.0;  // sup |h|_g away from the junction
  double boundary = 0.0;  // sup |h|_g on the junction
  double grad_K = 0.0;    // sup |d K / ds| along the junction
  bool boundary_dominates = false;
};

struct BlowupSeries {
  std::vector<BlowupPoint> raw, envelope;  // envelope: running maximum
};

BlowupSeries blowup_tracker(const GraphSeries& series);
BlowupSeries blowup_tracker(const std::vector<GaugeField2D>& series, const AngleParams& params);

struct ConvergenceReport {
  std::vector<double> deltas, errors, orders;
  double order = 0.0;  // smallest pairwise order
  bool conclusive = false;
  std::string note;
};

// Pairwise orders log(e_i/e_{i+1}) / log(d_i/d_{i+1}); errors must decrease.
ConvergenceReport observed_orders(const std::vector<double>& deltas, const std::vector<double>& errors);
// Richardson estimate from three values of a quantity with no exact reference.
ConvergenceReport richardson_order(const std::vector<double>& deltas, const std::vector<double>& values);
// Runs error(resolution) for each resolution concurrently; deltas are 1/resolution.
ConvergenceReport convergence_study(const std::function<double(int)>& error, const std::vector<int>& resolutions,
                                    bool parallel = true);

}  // namespace contactflow
