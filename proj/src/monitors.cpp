#include "contactflow/monitors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "contactflow/errors.hpp"

namespace contactflow {

using Eigen::Matrix2d;
using Eigen::Vector2d;

namespace {

GraphSample radial_sample(double r, double w, double w_r, double w_rr) {
  GraphSample s;
  s.y = Vector2d(r, 0.0);
  s.w = w;
  s.Dw = Vector2d(w_r, 0.0);
  s.D2w = Matrix2d::Zero();
  s.D2w(0, 0) = w_rr;
  s.D2w(1, 1) = r > 0.0 ? w_r / r : w_rr;
  return s;
}

ShapeData shape_of(const GraphSample& s) {
  Vec Dw = s.Dw;
  Mat D2w = s.D2w;
  return compute_shape(Dw, D2w);
}

double v_of(const GraphSample& s) { return std::sqrt(1.0 + s.Dw.squaredNorm()); }

double max_delta(const GraphSeries& series) {
  double d = 0.0;
  for (const auto& s : series) d = std::max(d, s.delta);
  return d;
}

MonitorReport make_report(std::string name, double measured, double bound, double tol) {
  MonitorReport r;
  r.name = std::move(name);
  r.measured = measured;
  r.bound = bound;
  r.tolerance = tol;
  r.pass = measured <= bound + tol;
  return r;
}

}  // namespace

GraphSnapshot graph_snapshot(const RadialGraphState& s) {
  const int M = s.M();
  const double h = s.dxi(), R = s.R;
  std::vector<double> Wx = first_derivative(s.w, h);
  std::vector<double> Wxx = second_derivative(s.w, h);
  Wx[0] = 0.0;
  Wxx[0] = 2.0 * (s.w[1] - s.w[0]) / (h * h);
  GraphSnapshot snap;
  snap.t = s.t;
  snap.delta = h * R;
  for (int k = 0; k <= M; ++k) {
    GraphSample g = radial_sample(s.r(k), s.w[k], Wx[k] / R, Wxx[k] / (R * R));
    g.junction = k == M;
    snap.samples.push_back(g);
  }
  return snap;
}

GraphSnapshot graph_snapshot(const RadialGaugeState& s) {
  const int M = s.M();
  const double h = s.dr();
  std::vector<double> pr = first_derivative(s.phi, h), ur = first_derivative(s.u, h);
  std::vector<double> prr = second_derivative(s.phi, h), urr = second_derivative(s.u, h);
  if (s.kase == RadialCase::lens) {
    // phi odd and u even through the axis
    pr[0] = s.phi[1] / h;
    prr[0] = 0.0;
    ur[0] = 0.0;
    urr[0] = 2.0 * (s.u[1] - s.u[0]) / (h * h);
  }
  GraphSnapshot snap;
  snap.t = s.t;
  snap.delta = h;
  for (int k = 0; k <= M; ++k) {
    const double wr = ur[k] / pr[k];
    const double wrr = (urr[k] - wr * prr[k]) / (pr[k] * pr[k]);
    GraphSample g = radial_sample(s.phi[k], s.u[k], wr, wrr);
    g.junction = k == s.junction_index();
    snap.samples.push_back(g);
  }
  return snap;
}

GraphSnapshot graph_snapshot(const GaugeField2D& f) {
  const DiskMesh& m = f.mesh;
  GraphSnapshot snap;
  snap.t = f.t;
  snap.delta = m.drho();
  for (int p = 0; p <= m.P(); ++p)
    for (int q = 0; q < (p == 0 ? 1 : m.Q()); ++q) {
      Vec Dw;
      Mat D2w;
      graph_jet_from_gauge(node_jet(f, p, q), Dw, D2w);
      GraphSample g;
      g.y = f.at(p, q).head<2>();
      g.w = f.at(p, q)(2);
      g.Dw = Dw;
      g.D2w = D2w;
      g.junction = p == m.P();
      snap.samples.push_back(g);
    }
  return snap;
}

MonitorReport check_height_bound(const GraphSeries& series, double M) {
  const double d = max_delta(series);
  const double tol = 1e-8 + d * d * M;
  double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
  int node = -1, lo_node = -1;
  double t = 0.0, lo_t = 0.0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      const GraphSample& g = s.samples[i];
      if (g.junction) continue;
      if (g.w > hi) {
        hi = g.w;
        node = static_cast<int>(i);
        t = s.t;
      }
      if (g.w < lo) {
        lo = g.w;
        lo_node = static_cast<int>(i);
        lo_t = s.t;
      }
    }
  MonitorReport r = make_report("height_bound", hi, M, tol);
  std::ostringstream os;
  os << "min w = " << lo << " at node " << lo_node << ", t = " << lo_t;
  r.note = os.str();
  r.node = node;
  r.t = t;
  if (lo < -tol) {
    r.pass = false;
    r.node = lo_node;
    r.t = lo_t;
  }
  return r;
}

MonitorReport check_gradient_bound(const GraphSeries& series, const AngleParams& params, double C) {
  if (series.empty()) throw DomainError("empty series");
  double v0 = 0.0;
  for (const auto& g : series.front().samples) v0 = std::max(v0, v_of(g));
  const double bound = std::max(v0, 1.0 / params.beta());
  MonitorReport r = make_report("gradient_bound", 0.0, bound, C * max_delta(series));
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      const double v = v_of(s.samples[i]);
      if (v > r.measured) {
        r.measured = v;
        r.node = static_cast<int>(i);
        r.t = s.t;
      }
    }
  r.pass = r.measured <= r.bound + r.tolerance;
  return r;
}

MonitorReport check_concavity(const GraphSeries& series, double C) {
  if (series.empty()) throw DomainError("empty series");
  auto relative_eig = [](const GraphSample& g) {
    const ShapeData sh = shape_of(g);
    return symmetric_eigenvalues(sh.h).maxCoeff() / (1.0 + std::sqrt(sh.h_norm2));
  };
  MonitorReport r = make_report("concavity", -std::numeric_limits<double>::infinity(), 0.0, C * max_delta(series));
  double initial = -std::numeric_limits<double>::infinity();
  for (const auto& g : series.front().samples) initial = std::max(initial, relative_eig(g));
  if (initial > 1e-12) {
    r.applicable = false;
    r.pass = true;
    r.measured = initial;
    r.note = "initial data not weakly concave";
    return r;
  }
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      const double e = relative_eig(s.samples[i]);
      if (e > r.measured) {
        r.measured = e;
        r.node = static_cast<int>(i);
        r.t = s.t;
      }
    }
  r.pass = r.measured <= r.bound + r.tolerance;
  r.note = "largest eigenvalue of h over (1 + |h|_g)";
  return r;
}

MonitorReport check_junction_v(const GraphSeries& series, const AngleParams& params, double tol) {
  MonitorReport r = make_report("junction_v", 0.0, 0.0, tol);
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      if (!s.samples[i].junction) continue;
      const double e = std::abs(v_of(s.samples[i]) - 1.0 / params.beta());
      if (e > r.measured) {
        r.measured = e;
        r.node = static_cast<int>(i);
        r.t = s.t;
      }
    }
  r.pass = r.measured <= tol;
  return r;
}

BarrierParams::BarrierParams(double H0, double c_n) : H0_(H0), c_n_(c_n) {
  if (!(H0 < 0.0)) throw DomainError("barrier needs H0 < 0");
  if (!(c_n > 0.0)) throw DomainError("barrier needs c_n > 0");
}

double BarrierParams::value(double t) const {
  const double s = 1.0 - 2.0 * c_n_ * H0_ * H0_ * t;
  if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
  return H0_ / std::sqrt(s);
}

double barrier_constant(const GraphSeries& series, int n) {
  double q = 0.0;
  for (const auto& s : series)
    for (const auto& g : s.samples) q = std::max(q, g.Dw.squaredNorm());
  return 1.0 / n + q;
}

double sup_H(const GraphSnapshot& snap) {
  double H = -std::numeric_limits<double>::infinity();
  for (const auto& g : snap.samples) H = std::max(H, shape_of(g).H);
  return H;
}

std::vector<MonitorReport> check_mean_curvature_barrier(const GraphSeries& series, const BarrierParams& barrier,
                                                        double extinction_time, double tol) {
  MonitorReport b = make_report("mean_curvature_barrier", -std::numeric_limits<double>::infinity(), 0.0, tol);
  for (const auto& s : series) {
    if (!(s.t < barrier.t_star())) continue;
    const double gap = sup_H(s) - barrier.value(s.t);
    if (gap > b.measured) {
      b.measured = gap;
      b.t = s.t;
    }
  }
  b.pass = b.measured <= tol;
  std::ostringstream os;
  os << "H0 = " << barrier.H0() << ", c_n = " << barrier.c_n() << ", t_star = " << barrier.t_star();
  b.note = os.str();
  MonitorReport e = make_report("extinction_before_t_star", extinction_time, barrier.t_star(), 0.0);
  if (!std::isfinite(extinction_time)) {
    e.pass = false;
    e.note = "no extinction observed";
  }
  return {b, e};
}

namespace {

// sgn = -1 for a lens (n = -e_r), +1 outside a disk (n = +e_r).
JunctionSample junction_from_radial(double t, double r, double w1, double w2, double w3, double sgn) {
  const double v = std::sqrt(1.0 + w1 * w1);
  const double v3 = v * v * v;
  JunctionSample j;
  j.t = t;
  j.curvature = -sgn / r;
  j.H = w2 / v3 + w1 / (r * v);
  const double H_r = (-3.0 * w1 * w2 / (v3 * v * v) + 1.0 / (r * v3)) * w2 + w3 / v3 - w1 / (r * r * v);
  j.H_n = sgn * H_r;
  j.h_nn = w2 / v;
  j.h_tt = w1 / (r * v);
  j.h_nt = 0.0;
  j.dn_h_nn = sgn * (w3 / v - w1 * w2 * w2 / v3);
  j.omega_n = sgn * w1 / v;
  j.hnorm2 = (w2 / v3) * (w2 / v3) + j.h_tt * j.h_tt;
  return j;
}

}  // namespace

JunctionSample junction_sample(const RadialGraphState& s) {
  const int M = s.M();
  if (M < 5) throw DomainError("boundary stencils need M >= 5");
  const double h = s.dxi(), R = s.R;
  const auto& f = s.w;
  const double W1 = (3 * f[M] - 4 * f[M - 1] + f[M - 2]) / (2 * h);
  const double W2 = (2 * f[M] - 5 * f[M - 1] + 4 * f[M - 2] - f[M - 3]) / (h * h);
  const double W3 = (5 * f[M] - 18 * f[M - 1] + 24 * f[M - 2] - 14 * f[M - 3] + 3 * f[M - 4]) / (2 * h * h * h);
  return junction_from_radial(s.t, R, W1 / R, W2 / (R * R), W3 / (R * R * R), -1.0);
}

JunctionSample junction_sample(const RadialProfile& p) {
  const double R = p.R0;
  const double e = 1e-3 * R;
  // w_rrr is only used by the derivative identities, which initial data need not satisfy
  const double w3 = (-p.w_rr(R + 2 * e) + 8 * p.w_rr(R + e) - 8 * p.w_rr(R - e) + p.w_rr(R - 2 * e)) / (12 * e);
  return junction_from_radial(0.0, R, p.w_r(R), p.w_rr(R), w3, p.kase == RadialCase::lens ? -1.0 : 1.0);
}

double BoundaryResiduals::max() const {
  return std::max({std::abs(h_nt), std::abs(tangential), std::abs(neumann_H), std::abs(covariant_nn),
                   std::abs(euclidean_nn)});
}

BoundaryResiduals boundary_residuals(const JunctionSample& j, const AngleParams& p) {
  const double b2 = p.beta() * p.beta(), b0 = p.beta0();
  BoundaryResiduals r;
  r.h_nt = j.h_nt;
  r.tangential = j.h_tt + b0 * j.curvature;
  r.neumann_H = j.H_n - b2 / b0 * j.H * j.h_nn;
  r.covariant_nn = b0 * (j.dn_h_nn - 2.0 * j.omega_n * j.h_nn * j.h_nn) - j.hnorm2 / b2;
  r.euclidean_nn = b0 * j.dn_h_nn - j.hnorm2 / b2 - 2.0 * b0 * b0 * j.h_nn * j.h_nn;
  return r;
}

std::vector<MonitorReport> check_boundary_h_conditions(const std::vector<JunctionSample>& samples,
                                                       const AngleParams& params, double tol) {
  if (samples.empty()) throw DomainError("no junction samples");
  const char* names[5] = {"boundary_h_n_tau", "boundary_h_tangential", "boundary_H_neumann", "boundary_nabla_h_nn",
                          "boundary_euclidean_h_nn"};
  std::vector<MonitorReport> out;
  for (const char* n : names) out.push_back(make_report(n, 0.0, 0.0, tol));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const BoundaryResiduals r = boundary_residuals(samples[i], params);
    const double v[5] = {r.h_nt, r.tangential, r.neumann_H, r.covariant_nn, r.euclidean_nn};
    for (int k = 0; k < 5; ++k)
      if (std::abs(v[k]) > out[k].measured) {
        out[k].measured = std::abs(v[k]);
        out[k].node = static_cast<int>(i);
        out[k].t = samples[i].t;
      }
  }
  for (auto& r : out) r.pass = r.measured <= r.bound + r.tolerance;
  return out;
}

double catenoid_operator_residual(const RadialProfile& cat, int M, double R_out, int every) {
  if (every < 1 || M % every != 0) throw DomainError("M must be a multiple of the node stride");
  const double h = (R_out - cat.R0) / M;
  std::vector<double> w(M + 1);
  for (int k = 0; k <= M; ++k) w[k] = cat.w(cat.R0 + k * h);
  double res = 0.0;
  for (int k = every; k < M; k += every) {
    const double r = cat.R0 + k * h;
    const double wr = (w[k + 1] - w[k - 1]) / (2 * h);
    const double wrr = (w[k + 1] - 2 * w[k] + w[k - 1]) / (h * h);
    res = std::max(res, std::abs(wrr / (1.0 + wr * wr) + wr / r));
  }
  return res;
}

double catenoid_deviation(const RadialGaugeState& s, const RadialProfile& cat) {
  double d = 0.0;
  for (int k = 0; k <= s.M(); ++k) d = std::max(d, std::abs(s.u[k] - cat.w(s.phi[k])));
  return d;
}

namespace {

void finish_envelope(BlowupSeries& b) {
  BlowupPoint run;
  for (const auto& p : b.raw) {
    run.t = p.t;
    run.interior = std::max(run.interior, p.interior);
    run.boundary = std::max(run.boundary, p.boundary);
    run.grad_K = std::max(run.grad_K, p.grad_K);
    run.boundary_dominates = run.boundary >= run.interior;
    b.envelope.push_back(run);
  }
}

}  // namespace

BlowupSeries blowup_tracker(const GraphSeries& series) {
  BlowupSeries b;
  for (const auto& s : series) {
    BlowupPoint p;
    p.t = s.t;
    for (const auto& g : s.samples) {
      const double a = std::sqrt(shape_of(g).h_norm2);
      if (g.junction)
        p.boundary = std::max(p.boundary, a);
      else
        p.interior = std::max(p.interior, a);
    }
    p.boundary_dominates = p.boundary >= p.interior;
    b.raw.push_back(p);
  }
  finish_envelope(b);
  return b;
}

BlowupSeries blowup_tracker(const std::vector<GaugeField2D>& series, const AngleParams& params) {
  BlowupSeries b;
  for (const auto& f : series) {
    const GraphSeries one{graph_snapshot(f)};
    BlowupPoint p = blowup_tracker(one).raw.front();
    const auto ring = boundary_ring(f, params);
    const int Q = static_cast<int>(ring.size());
    for (int q = 0; q < Q; ++q) {
      const auto& a = ring[(q + Q - 1) % Q];
      const auto& c = ring[(q + 1) % Q];
      p.grad_K = std::max(p.grad_K, std::abs(c.curvature - a.curvature) / (c.y - a.y).norm());
    }
    b.raw.push_back(p);
  }
  finish_envelope(b);
  return b;
}

}  // namespace contactflow
