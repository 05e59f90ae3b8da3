#include "contactflow/gauge2d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "contactflow/diffeo.hpp"
#include "contactflow/errors.hpp"

namespace contactflow {

using Eigen::Matrix2d;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector2d ray(double sigma) { return {std::cos(sigma), std::sin(sigma)}; }

GaugeJet empty_jet() {
  GaugeJet jet;
  jet.DF = Mat::Zero(2, 3);
  for (int k = 0; k < 3; ++k) jet.D2F[k] = Mat::Zero(2, 2);
  return jet;
}

// Fill a frame jet from polar derivatives at radius rho.
GaugeJet polar_jet(double rho, const Vector3d& Fr, const Vector3d& Fs, const Vector3d& Frr, const Vector3d& Fss,
                   const Vector3d& Frs) {
  GaugeJet jet = empty_jet();
  for (int k = 0; k < 3; ++k) {
    jet.DF(0, k) = Fr(k);
    jet.DF(1, k) = Fs(k) / rho;
    jet.D2F[k](0, 0) = Frr(k);
    jet.D2F[k](1, 1) = Fss(k) / (rho * rho) + Fr(k) / rho;
    jet.D2F[k](0, 1) = jet.D2F[k](1, 0) = Frs(k) / rho - Fs(k) / (rho * rho);
  }
  return jet;
}

// Cartesian jet at the pole from the Fourier modes 0..2 of ring 1.
GaugeJet pole_jet(const GaugeField2D& f) {
  const DiskMesh& m = f.mesh;
  const int Q = m.Q();
  const double r = m.drho();
  Vector3d mean = Vector3d::Zero(), a1 = mean, b1 = mean, a2 = mean, b2 = mean;
  for (int q = 0; q < Q; ++q) {
    const double s = m.sigma(q);
    const Vector3d& F = f.at(1, q);
    mean += F;
    a1 += F * std::cos(s);
    b1 += F * std::sin(s);
    a2 += F * std::cos(2 * s);
    b2 += F * std::sin(2 * s);
  }
  mean /= Q;
  a1 *= 2.0 / Q;
  b1 *= 2.0 / Q;
  a2 *= 2.0 / Q;
  b2 *= 2.0 / Q;
  const Vector3d& F0 = f.F[0];
  GaugeJet jet = empty_jet();
  for (int k = 0; k < 3; ++k) {
    jet.DF(0, k) = a1(k) / r;
    jet.DF(1, k) = b1(k) / r;
    jet.D2F[k](0, 0) = 2.0 * (mean(k) - F0(k) + a2(k)) / (r * r);
    jet.D2F[k](1, 1) = 2.0 * (mean(k) - F0(k) - a2(k)) / (r * r);
    jet.D2F[k](0, 1) = jet.D2F[k](1, 0) = 2.0 * b2(k) / (r * r);
  }
  return jet;
}

Vector3d ring_rho_derivative(const GaugeField2D& f, int q) {
  const int P = f.mesh.P();
  return (3.0 * f.at(P, q) - 4.0 * f.at(P - 1, q) + f.at(P - 2, q)) / (2.0 * f.mesh.drho());
}

double det2(const Mat& DF) { return DF(0, 0) * DF(1, 1) - DF(0, 1) * DF(1, 0); }

std::string node_name(int p, int q) {
  std::ostringstream os;
  os << "(p=" << p << ", q=" << q << ")";
  return os.str();
}

struct RingResidual {
  double B = 0.0, O = 0.0, Jphi = 0.0;
  Matrix2d jac;
};

// Conditions at ring node q as functions of its image point z, with the
// tangent from the neighbours and u_rho from the interior held fixed.
RingResidual ring_residual(const Vector2d& z, const Vector3d& Fm1, const Vector3d& Fm2, const Vector3d& t, double drho,
                           const AngleParams& params) {
  const double k = 3.0 / (2.0 * drho);
  const Vector3d Fr = (3.0 * Vector3d(z(0), z(1), 0.0) - 4.0 * Fm1 + Fm2) / (2.0 * drho);
  const Vector3d N = Fr.cross(t);
  const double b2 = params.beta() * params.beta();
  const double c2 = params.beta0() * params.beta0();
  RingResidual r;
  r.Jphi = N(2);
  r.B = b2 * (N(0) * N(0) + N(1) * N(1)) - c2 * N(2) * N(2);
  r.O = -(t(0) * Fr(0) + t(1) * Fr(1));
  for (int j = 0; j < 2; ++j) {
    const Vector3d dN = Vector3d::Unit(j).cross(t) * k;
    r.jac(0, j) = 2.0 * b2 * (N(0) * dN(0) + N(1) * dN(1)) - 2.0 * c2 * N(2) * dN(2);
    r.jac(1, j) = -t(j) * k;
  }
  return r;
}

}  // namespace

DiskMesh::DiskMesh(int P, int Q) : P_(P), Q_(Q) {
  if (P < 4 || Q < 8) throw ConstructionError("disk mesh needs P >= 4 and Q >= 8");
}

double DiskMesh::dsigma() const { return kTwoPi / Q_; }

GraphProfile2D profile_from_radial(const RadialProfile& radial) {
  if (radial.kase != RadialCase::lens || std::abs(radial.R0 - 1.0) > 1e-14)
    throw ConstructionError("2D profiles live on the unit disk");
  GraphProfile2D g;
  g.name = radial.name;
  g.w = [radial](const Vector2d& y) { return radial.w(y.norm()); };
  g.Dw = [radial](const Vector2d& y) -> Vector2d {
    const double r = y.norm();
    if (r == 0.0) return Vector2d::Zero();
    return radial.w_r(r) / r * y;
  };
  g.D2w = [radial](const Vector2d& y) -> Matrix2d {
    const double r = y.norm();
    if (r == 0.0) return radial.w_rr(0.0) * Matrix2d::Identity();
    const Vector2d e = y / r;
    const Matrix2d P = e * e.transpose();
    return radial.w_rr(r) * P + radial.w_r(r) / r * (Matrix2d::Identity() - P);
  };
  return g;
}

GraphProfile2D perturbed_paraboloid_2d(const AngleParams& params, double eps) {
  const double k = params.junction_slope();
  GraphProfile2D g;
  g.name = "paraboloid_perturbed";
  // w = k s/2 + eps s^2 q with s = 1 - |y|^2, q = y1^2 - y2^2
  g.w = [k, eps](const Vector2d& y) {
    const double s = 1.0 - y.squaredNorm();
    const double q = y(0) * y(0) - y(1) * y(1);
    return 0.5 * k * s + eps * s * s * q;
  };
  g.Dw = [k, eps](const Vector2d& y) -> Vector2d {
    const double s = 1.0 - y.squaredNorm();
    const double q = y(0) * y(0) - y(1) * y(1);
    const Vector2d ds = -2.0 * y;
    const Vector2d dq(2.0 * y(0), -2.0 * y(1));
    return 0.5 * k * ds + eps * (2.0 * s * q * ds + s * s * dq);
  };
  g.D2w = [k, eps](const Vector2d& y) -> Matrix2d {
    const double s = 1.0 - y.squaredNorm();
    const double q = y(0) * y(0) - y(1) * y(1);
    const Vector2d ds = -2.0 * y;
    const Vector2d dq(2.0 * y(0), -2.0 * y(1));
    const Matrix2d dds = -2.0 * Matrix2d::Identity();
    Matrix2d ddq = Matrix2d::Zero();
    ddq(0, 0) = 2.0;
    ddq(1, 1) = -2.0;
    const Matrix2d cross = ds * dq.transpose();
    return 0.5 * k * dds +
           eps * (2.0 * q * ds * ds.transpose() + 2.0 * s * q * dds + 2.0 * s * (cross + cross.transpose()) + s * s * ddq);
  };
  return g;
}

DiffeoBuild build_initial_diffeo_h(const std::vector<double>& boundary_h, const DiskMesh& mesh, double rho0) {
  const int P = mesh.P(), Q = mesh.Q();
  if (static_cast<int>(boundary_h.size()) != Q) throw ConstructionError("one target per boundary angle expected");
  for (double h : boundary_h)
    if (!std::isfinite(h)) throw ConstructionError("non-finite boundary target");
  if (!(rho0 > 0.0 && rho0 <= 1.0)) throw ConstructionError("tubular width must lie in (0, 1]");

  // Each normal line maps into itself, so the map is injective iff every radial
  // profile is strictly increasing in rho.
  auto injective = [&](double width) {
    for (double h : boundary_h) {
      const NormalLineMap map{1.0, h, width, false};
      for (int i = 0; i <= 400; ++i)
        if (!(-map.radius_derivative_s(i / 400.0) > 0.05)) return false;
    }
    return true;
  };
  int tries = 0;
  while (!injective(rho0)) {
    if (++tries > 4) throw ConstructionError("compatible initial map is not injective");
    rho0 *= 0.5;
  }

  DiffeoBuild out;
  out.rho0 = rho0;
  out.phi.assign(mesh.node_count(), Vector2d::Zero());
  out.min_jacobian = 1.0;  // the map is the identity near the pole
  for (int q = 0; q < Q; ++q) {
    const NormalLineMap map{1.0, boundary_h[q], rho0, false};
    const Vector2d e = ray(mesh.sigma(q));
    for (int p = 1; p <= P; ++p) out.phi[mesh.index(p, q)] = map.radius(1.0 - mesh.rho(p)) * e;
    // det Dphi0 = m_rho m / rho, sampled across the cutoff band
    for (int i = 0; i <= 400; ++i) {
      const double s = rho0 * i / 400.0;
      out.min_jacobian = std::min(out.min_jacobian, -map.radius_derivative_s(s) * map.radius(s) / (1.0 - s));
    }
  }
  return out;
}

DiffeoBuild build_initial_diffeo(const std::vector<double>& boundary_H0, const AngleParams& params,
                                 const DiskMesh& mesh, double rho0) {
  std::vector<double> h(boundary_H0.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = compatibility_target(boundary_H0[i], params);
  return build_initial_diffeo_h(h, mesh, rho0);
}

DiffeoJetErrors diffeo_jet_errors(const std::vector<Vector2d>& phi, const DiskMesh& mesh,
                                  const std::vector<double>& boundary_h) {
  const int P = mesh.P(), Q = mesh.Q();
  const double dr = mesh.drho(), ds = mesh.dsigma();
  auto at = [&](int p, int q) { return phi[mesh.index(p, q)]; };
  DiffeoJetErrors e;
  for (int q = 0; q < Q; ++q) {
    const Vector2d er = ray(mesh.sigma(q));
    e.value = std::max(e.value, (at(P, q) - er).norm());
    // same stencils applied to the identity, so only the map's deviation is measured
    const Vector2d Fr = (3.0 * at(P, q) - 4.0 * at(P - 1, q) + at(P - 2, q)) / (2.0 * dr);
    const Vector2d Fs = (at(P, q + 1) - at(P, q - 1)) / (2.0 * ds);
    const Vector2d Ir = (3.0 - 4.0 * mesh.rho(P - 1) + mesh.rho(P - 2)) / (2.0 * dr) * er;
    const Vector2d Is = (ray(mesh.sigma(q + 1)) - ray(mesh.sigma(q - 1))) / (2.0 * ds);
    e.jacobian = std::max({e.jacobian, (Fr - Ir).cwiseAbs().maxCoeff(), (Fs - Is).cwiseAbs().maxCoeff()});
    const Vector2d Frr = (2.0 * at(P, q) - 5.0 * at(P - 1, q) + 4.0 * at(P - 2, q) - at(P - 3, q)) / (dr * dr);
    e.normal_second = std::max(e.normal_second, std::abs(-er.dot(Frr) - boundary_h[q]));
  }
  return e;
}

double angle_residual(const GaugeJet& jet, const AngleParams& params) {
  const NormalData nd = cross_normal(jet.DF);
  const double b = params.beta(), c = params.beta0();
  return b * b * nd.Jvec.squaredNorm() - c * c * nd.Jphi * nd.Jphi;
}

double orthogonality_residual(const GaugeJet& jet, const Vec& tau, const Vec& n) {
  const int dim = jet.dim();
  const Vec Dt = jet.DF.leftCols(dim).transpose() * tau;
  const Vec Dn = jet.DF.leftCols(dim).transpose() * n;
  return Dt.dot(Dn);
}

GaugeJet node_jet(const GaugeField2D& f, int p, int q) {
  const DiskMesh& m = f.mesh;
  const int P = m.P();
  if (p < 0 || p > P) throw DomainError("node outside the mesh");
  if (p == 0) return pole_jet(f);
  const double dr = m.drho(), ds = m.dsigma();
  const double rho = m.rho(p);
  const Vector3d& F = f.at(p, q);
  const Vector3d Fs = (f.at(p, q + 1) - f.at(p, q - 1)) / (2.0 * ds);
  const Vector3d Fss = (f.at(p, q + 1) - 2.0 * F + f.at(p, q - 1)) / (ds * ds);
  if (p < P) {
    const Vector3d Fr = (f.at(p + 1, q) - f.at(p - 1, q)) / (2.0 * dr);
    const Vector3d Frr = (f.at(p + 1, q) - 2.0 * F + f.at(p - 1, q)) / (dr * dr);
    const Vector3d Frs =
        (f.at(p + 1, q + 1) - f.at(p + 1, q - 1) - f.at(p - 1, q + 1) + f.at(p - 1, q - 1)) / (4.0 * dr * ds);
    return polar_jet(rho, Fr, Fs, Frr, Fss, Frs);
  }
  const Vector3d Fr = ring_rho_derivative(f, q);
  const Vector3d Frr = (2.0 * F - 5.0 * f.at(P - 1, q) + 4.0 * f.at(P - 2, q) - f.at(P - 3, q)) / (dr * dr);
  const Vector3d Frs = (ring_rho_derivative(f, q + 1) - ring_rho_derivative(f, q - 1)) / (2.0 * ds);
  return polar_jet(rho, Fr, Fs, Frr, Fss, Frs);
}

std::vector<BoundaryNode> boundary_ring(const GaugeField2D& f, const AngleParams& params) {
  const DiskMesh& m = f.mesh;
  const int P = m.P(), Q = m.Q();
  const double ds = m.dsigma();
  Vec tau_frame(2), n_frame(2);
  tau_frame << 0.0, 1.0;
  n_frame << -1.0, 0.0;
  std::vector<BoundaryNode> ring(Q);
  for (int q = 0; q < Q; ++q) {
    BoundaryNode& b = ring[q];
    const GaugeJet jet = node_jet(f, P, q);
    b.y = f.at(P, q).head<2>();
    const Vector2d x1 = (f.at(P, q + 1).head<2>() - f.at(P, q - 1).head<2>()) / (2.0 * ds);
    const Vector2d x2 = (f.at(P, q + 1).head<2>() - 2.0 * b.y + f.at(P, q - 1).head<2>()) / (ds * ds);
    b.tau = x1.normalized();
    b.n = Vector2d(-b.tau(1), b.tau(0));
    b.curvature = (x1(0) * x2(1) - x1(1) * x2(0)) / std::pow(x1.norm(), 3);
    Vec Dw;
    Mat D2w;
    graph_jet_from_gauge(jet, Dw, D2w);
    const ShapeData shape = compute_shape(Dw, D2w);
    b.H = shape.H;
    const Eigen::Matrix2d h = shape.h;
    b.h_nn = b.n.dot(h * b.n);
    b.h_tt = b.tau.dot(h * b.tau);
    b.h_nt = b.n.dot(h * b.tau);
    b.angle = angle_residual(jet, params);
    b.orthogonality = orthogonality_residual(jet, tau_frame, n_frame);
  }
  return ring;
}

Gauge2DSolver::Gauge2DSolver(AngleParams params, Gauge2DOptions opts) : params_(params), opts_(opts) {
  if (!(opts_.cfl > 0.0)) throw ConstructionError("cfl must be positive");
}

GaugeField2D Gauge2DSolver::initial_field(const GraphProfile2D& prof, const DiskMesh& mesh) const {
  const int Q = mesh.Q();
  std::vector<double> H0(Q);
  for (int q = 0; q < Q; ++q) {
    const Vector2d y = ray(mesh.sigma(q));
    const double w = prof.w(y);
    const double slope = prof.Dw(y).norm();
    if (std::abs(w) > 1e-9 || std::abs(slope - params_.junction_slope()) > 1e-9) {
      std::ostringstream os;
      os << "initial graph violates contact/angle at sigma = " << mesh.sigma(q) << ": w = " << w
         << ", |Dw| = " << slope << " (need " << params_.junction_slope() << ")";
      throw ConstructionError(os.str());
    }
    Vec Dw = prof.Dw(y);
    Mat D2w = prof.D2w(y);
    H0[q] = compute_shape(Dw, D2w).H;
  }
  const DiffeoBuild phi0 = build_initial_diffeo(H0, params_, mesh, opts_.rho0);
  GaugeField2D f;
  f.mesh = mesh;
  f.F.resize(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) {
    const Vector2d y = phi0.phi[i];
    f.F[i] = Vector3d(y(0), y(1), mesh.on_boundary(i) ? 0.0 : prof.w(y));
  }
  solve_ring(f);
  return f;
}

RingSolveStats Gauge2DSolver::solve_ring(GaugeField2D& f) const {
  const DiskMesh& m = f.mesh;
  const int P = m.P(), Q = m.Q();
  const double dr = m.drho(), ds = m.dsigma();
  RingSolveStats stats;
  for (int q = 0; q < Q; ++q) f.F[m.index(P, q)](2) = 0.0;

  auto tangent = [&](int q) -> Vector3d { return (f.at(P, q + 1) - f.at(P, q - 1)) / (2.0 * ds); };
  auto residual_at = [&](int q) {
    return ring_residual(f.at(P, q).head<2>(), f.at(P - 1, q), f.at(P - 2, q), tangent(q), dr, params_);
  };
  auto converged = [&](const RingResidual& r) {
    return r.Jphi > 0.0 && std::abs(r.B) <= opts_.newton_tol && std::abs(r.O) <= opts_.newton_tol;
  };
  auto norm = [](const RingResidual& r) { return std::hypot(r.B, r.O); };

  for (int sweep = 0; sweep < opts_.max_sweeps; ++sweep) {
    bool all_ok = true;
    stats.max_angle = stats.max_orthogonality = 0.0;
    for (int q = 0; q < Q; ++q) {
      const RingResidual r = residual_at(q);
      stats.max_angle = std::max(stats.max_angle, std::abs(r.B));
      stats.max_orthogonality = std::max(stats.max_orthogonality, std::abs(r.O));
      if (!converged(r)) all_ok = false;
    }
    if (all_ok) {
      stats.sweeps = sweep;
      last_ = stats;
      return stats;
    }
    for (int q = 0; q < Q; ++q) {
      Vector3d& node = f.F[m.index(P, q)];
      const Vector3d t = tangent(q);
      const Vector3d& Fm1 = f.at(P - 1, q);
      const Vector3d& Fm2 = f.at(P - 2, q);
      Vector2d z = node.head<2>();
      RingResidual r = ring_residual(z, Fm1, Fm2, t, dr, params_);
      int it = 0;
      for (; it < opts_.newton_max_iter && !converged(r); ++it) {
        const Vector2d step = r.jac.fullPivLu().solve(Vector2d(-r.B, -r.O));
        if (!step.allFinite()) break;
        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, lambda *= 0.5) {
          const RingResidual trial = ring_residual(z + lambda * step, Fm1, Fm2, t, dr, params_);
          if (trial.Jphi > 0.0 && norm(trial) < norm(r)) {
            z += lambda * step;
            r = trial;
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
      }
      stats.max_newton_iterations = std::max(stats.max_newton_iterations, it);
      if (!converged(r)) {
        std::ostringstream os;
        os << "ring Newton failed at " << node_name(P, q) << " after " << it << " iterations: B = " << r.B
           << ", O = " << r.O << ", J_phi = " << r.Jphi;
        throw BoundarySolveError(os.str());
      }
      node(0) = z(0);
      node(1) = z(1);
    }
  }
  std::ostringstream os;
  os << "ring sweeps did not settle: max |B| = " << stats.max_angle << ", max |O| = " << stats.max_orthogonality;
  throw BoundarySolveError(os.str());
}

namespace {

// g^{ij} in the node frame, with breakdown diagnostics.
Mat frame_ginv(const GaugeJet& jet, int p, int q) {
  if (!(det2(jet.DF) > 0.0)) {
    throw DiffeomorphismBreakdown("det Dphi = " + std::to_string(det2(jet.DF)) + " at " + node_name(p, q));
  }
  try {
    return gauge_metric(jet.DF).ginv;
  } catch (const Error& e) {
    throw DiffeomorphismBreakdown(std::string(e.what()) + " at " + node_name(p, q));
  }
}

}  // namespace

double Gauge2DSolver::stable_dt(const GaugeField2D& f) const {
  const DiskMesh& m = f.mesh;
  double lam = 0.0;
  for (int p = 0; p < m.P(); ++p)
    for (int q = 0; q < (p == 0 ? 1 : m.Q()); ++q) {
      const Mat gi = frame_ginv(node_jet(f, p, q), p, q);
      lam = std::max(lam, symmetric_eigenvalues(gi)(1));
    }
  const double dr = m.drho();
  double h2 = dr * dr;
  if (opts_.scheme == Gauge2DScheme::explicit_euler) {
    const double arc = m.rho(1) * m.dsigma();
    h2 = std::min(h2, arc * arc);
  }
  return opts_.cfl * h2 / lam;
}

GaugeField2D Gauge2DSolver::step(const GaugeField2D& f, double dt) const {
  const DiskMesh& m = f.mesh;
  const int P = m.P(), Q = m.Q();
  GaugeField2D out = f;
  out.t = f.t + dt;

  if (opts_.scheme == Gauge2DScheme::explicit_euler) {
    for (int p = 0; p < P; ++p)
      for (int q = 0; q < (p == 0 ? 1 : Q); ++q) {
        const GaugeJet jet = node_jet(f, p, q);
        const Mat gi = frame_ginv(jet, p, q);
        Vector3d rhs;
        for (int k = 0; k < 3; ++k) rhs(k) = gi.cwiseProduct(jet.D2F[k]).sum();
        out.F[m.index(p, q)] += dt * rhs;
      }
  } else {
    // (I - dt L_old) F_new = F_old over pole + rings 1..P-1, ring P lagged
    const int NI = 1 + (P - 1) * Q;
    const double dr = m.drho(), ds = m.dsigma();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(NI) * 10 + 3 * Q);
    Eigen::MatrixXd rhs(NI, 3);
    for (int i = 0; i < NI; ++i) rhs.row(i) = f.F[i].transpose();
    struct RingTerm {
      int row, node;
      double coef;
    };
    std::vector<RingTerm> ring_terms;
    auto emit = [&](int i, int p2, int q2, double coef) {
      const int j = m.index(p2, q2);
      if (p2 == P) {
        rhs.row(i) += dt * coef * f.F[j].transpose();
        ring_terms.push_back({i, j, dt * coef});
      } else {
        trip.emplace_back(i, j, -dt * coef);
      }
    };
    {
      // pole row: g^{ij} F_ij of the pole jet, linear in the pole and ring 1
      const Mat gi = frame_ginv(node_jet(f, 0, 0), 0, 0);
      const double r2 = dr * dr;
      emit(0, 0, 0, -2.0 * (gi(0, 0) + gi(1, 1)) / r2);
      for (int q = 0; q < Q; ++q) {
        const double s2 = 2.0 * m.sigma(q);
        emit(0, 1, q,
             2.0 / (r2 * Q) *
                 (gi(0, 0) + gi(1, 1) + 2.0 * (gi(0, 0) - gi(1, 1)) * std::cos(s2) + 4.0 * gi(0, 1) * std::sin(s2)));
      }
    }
    for (int p = 1; p < P; ++p) {
      const double rho = m.rho(p);
      for (int q = 0; q < Q; ++q) {
        const int i = m.index(p, q);
        const Mat gi = frame_ginv(node_jet(f, p, q), p, q);
        const double a = gi(0, 0), b = gi(1, 1), c = gi(0, 1);
        // L F = a F_rr + b (F_ss/rho^2 + F_r/rho) + 2c (F_rs/rho - F_s/rho^2)
        const double cr = b / rho / (2.0 * dr);
        const double cs = 2.0 * c / (rho * rho) / (2.0 * ds);
        const double crs = 2.0 * c / rho / (4.0 * dr * ds);
        const double crr = a / (dr * dr);
        const double css = b / (rho * rho) / (ds * ds);
        emit(i, p, q, -2.0 * crr - 2.0 * css);
        emit(i, p + 1, q, crr + cr);
        emit(i, p - 1, q, crr - cr);
        emit(i, p, q + 1, css - cs);
        emit(i, p, q - 1, css + cs);
        emit(i, p + 1, q + 1, crs);
        emit(i, p + 1, q - 1, -crs);
        emit(i, p - 1, q + 1, -crs);
        emit(i, p - 1, q - 1, crs);
      }
    }
    for (int i = 0; i < NI; ++i) trip.emplace_back(i, i, 1.0);
    Eigen::SparseMatrix<double> A(NI, NI);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw DiffeomorphismBreakdown("implicit interior matrix is singular");
    // ring values enter the right-hand side; re-solve once they are updated
    const Eigen::MatrixXd base = rhs;
    for (int pass = 0; pass < 2; ++pass) {
      if (pass > 0) {
        rhs = base;
        for (const auto& [i, j, c] : ring_terms) rhs.row(i) += c * (out.F[j] - f.F[j]).transpose();
      }
      const Eigen::MatrixXd sol = lu.solve(rhs);
      for (int i = 0; i < NI; ++i) out.F[i] = sol.row(i).transpose();
      solve_ring(out);
    }
    return out;
  }
  solve_ring(out);
  return out;
}

double Gauge2DSolver::min_jacobian(const GaugeField2D& f) const {
  double J = std::numeric_limits<double>::infinity();
  for (int p = 0; p <= f.mesh.P(); ++p)
    for (int q = 0; q < (p == 0 ? 1 : f.mesh.Q()); ++q) J = std::min(J, det2(node_jet(f, p, q).DF));
  return J;
}

double Gauge2DSolver::max_v(const GaugeField2D& f) const {
  double v = 0.0;
  for (int p = 0; p <= f.mesh.P(); ++p)
    for (int q = 0; q < (p == 0 ? 1 : f.mesh.Q()); ++q) v = std::max(v, gauge_v(node_jet(f, p, q).DF));
  return v;
}

double Gauge2DSolver::image_radius(const GaugeField2D& f) const {
  double acc = 0.0;
  for (int q = 0; q < f.mesh.Q(); ++q) acc += f.at(f.mesh.P(), q).head<2>().norm();
  return acc / f.mesh.Q();
}

bool Gauge2DSolver::extinct(const GaugeField2D& f) const {
  if (image_radius(f) < 3.0 / f.mesh.P()) return true;
  return max_v(f) > opts_.v_guard;
}

Gauge2DRun run_gauge2d(const Gauge2DSolver& solver, GaugeField2D f, const std::vector<double>& out_times,
                       bool stop_at_extinction) {
  Gauge2DRun run;
  run.snapshots.push_back(f);
  for (double t_out : out_times) {
    if (!(t_out > f.t)) continue;
    while (f.t < t_out) {
      const double remaining = t_out - f.t;
      const double n = std::ceil(remaining / solver.stable_dt(f) * (1.0 - 1e-12));
      const double dt = remaining / std::max(1.0, n);
      f = solver.step(f, dt);
      if (n <= 1.0) f.t = t_out;
      ++run.steps;
      if (solver.extinct(f)) {
        run.extinct = true;
        if (stop_at_extinction) {
          run.snapshots.push_back(f);
          return run;
        }
      }
    }
    run.snapshots.push_back(f);
  }
  return run;
}

namespace {

// Weights of the 3-point derivative at the middle of (t0, t1, t2).
std::array<double, 3> middle_derivative_weights(double t0, double t1, double t2) {
  const double h1 = t1 - t0, h2 = t2 - t1;
  if (!(h1 > 0.0 && h2 > 0.0)) throw DomainError("snapshot times must increase strictly");
  return {-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))};
}

}  // namespace

JunctionKinematics junction_kinematics(const std::vector<GaugeField2D>& history, const AngleParams& params) {
  if (history.size() < 3) throw DomainError("junction kinematics needs at least 3 snapshots");
  JunctionKinematics k;
  const int P = history.front().mesh.P(), Q = history.front().mesh.Q();
  for (std::size_t s = 1; s + 1 < history.size(); ++s) {
    const auto w = middle_derivative_weights(history[s - 1].t, history[s].t, history[s + 1].t);
    const auto ring = boundary_ring(history[s], params);
    double worst = 0.0, vel = 0.0, pred = 0.0;
    for (int q = 0; q < Q; ++q) {
      const Vector2d v = w[0] * history[s - 1].at(P, q).head<2>() + w[1] * history[s].at(P, q).head<2>() +
                         w[2] * history[s + 1].at(P, q).head<2>();
      const double vn = v.dot(ring[q].n);
      const double target = -ring[q].H / params.beta0();
      worst = std::max(worst, std::abs(vn - target));
      vel += vn / Q;
      pred += target / Q;
    }
    k.times.push_back(history[s].t);
    k.max_mismatch.push_back(worst);
    k.normal_velocity.push_back(vel);
    k.predicted.push_back(pred);
    k.max = std::max(k.max, worst);
  }
  return k;
}

JunctionKinematics junction_kinematics(const std::vector<RadialGaugeState>& history, const RadialGaugeSolver& solver) {
  if (history.size() < 3) throw DomainError("junction kinematics needs at least 3 snapshots");
  JunctionKinematics k;
  const double beta0 = solver.params().beta0();
  for (std::size_t s = 1; s + 1 < history.size(); ++s) {
    const auto w = middle_derivative_weights(history[s - 1].t, history[s].t, history[s + 1].t);
    const double rdot = w[0] * history[s - 1].junction_radius() + w[1] * history[s].junction_radius() +
                        w[2] * history[s + 1].junction_radius();
    // inner normal of the domain: -e_r for a lens, +e_r outside a disk
    const double vn = history[s].kase == RadialCase::lens ? -rdot : rdot;
    const double target = -solver.junction_H(history[s]) / beta0;
    k.times.push_back(history[s].t);
    k.max_mismatch.push_back(std::abs(vn - target));
    k.normal_velocity.push_back(vn);
    k.predicted.push_back(target);
    k.max = std::max(k.max, std::abs(vn - target));
  }
  return k;
}

namespace {

std::vector<std::array<int, 3>> disk_triangles(const DiskMesh& m) {
  std::vector<std::array<int, 3>> tris;
  const int P = m.P(), Q = m.Q();
  for (int q = 0; q < Q; ++q) tris.push_back({0, m.index(1, q), m.index(1, q + 1)});
  for (int p = 1; p < P; ++p)
    for (int q = 0; q < Q; ++q) {
      const int a = m.index(p, q), b = m.index(p + 1, q), c = m.index(p + 1, q + 1), d = m.index(p, q + 1);
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  return tris;
}

}  // namespace

std::vector<std::optional<double>> extract_graph(const GaugeField2D& f, const std::vector<Vector2d>& targets) {
  const auto tris = disk_triangles(f.mesh);
  Vector2d lo = f.F[0].head<2>(), hi = lo;
  for (const auto& F : f.F) {
    lo = lo.cwiseMin(F.head<2>());
    hi = hi.cwiseMax(F.head<2>());
  }
  const int G = std::max(4, f.mesh.P());
  const Vector2d cell = (hi - lo) / G;
  auto cell_of = [&](const Vector2d& y) {
    const int i = std::clamp(static_cast<int>(std::floor((y(0) - lo(0)) / cell(0))), 0, G - 1);
    const int j = std::clamp(static_cast<int>(std::floor((y(1) - lo(1)) / cell(1))), 0, G - 1);
    return std::pair<int, int>(i, j);
  };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(G) * G);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    Vector2d a = f.F[tris[t][0]].head<2>(), b = a;
    for (int v : tris[t]) {
      a = a.cwiseMin(f.F[v].head<2>());
      b = b.cwiseMax(f.F[v].head<2>());
    }
    const auto [i0, j0] = cell_of(a);
    const auto [i1, j1] = cell_of(b);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) buckets[static_cast<std::size_t>(i) * G + j].push_back(static_cast<int>(t));
  }
  std::vector<std::optional<double>> out(targets.size());
  const double eps = 1e-12;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Vector2d& y = targets[k];
    if ((y.array() < lo.array() - eps).any() || (y.array() > hi.array() + eps).any()) continue;
    const auto [i, j] = cell_of(y);
    for (int t : buckets[static_cast<std::size_t>(i) * G + j]) {
      const Vector3d& A = f.F[tris[t][0]];
      const Vector3d& B = f.F[tris[t][1]];
      const Vector3d& C = f.F[tris[t][2]];
      Matrix2d T;
      T.col(0) = (B - A).head<2>();
      T.col(1) = (C - A).head<2>();
      const double det = T.determinant();
      if (!(std::abs(det) > 0.0)) throw DomainError("degenerate image triangle; phi is not invertible");
      const Vector2d l = T.inverse() * (y - A.head<2>());
      if (l(0) >= -eps && l(1) >= -eps && l(0) + l(1) <= 1.0 + eps) {
        out[k] = A(2) + l(0) * (B(2) - A(2)) + l(1) * (C(2) - A(2));
        break;
      }
    }
  }
  return out;
}

ReflectionMesh reflection_mesh(const GaugeField2D& f, int exterior_rings, double width) {
  const DiskMesh& m = f.mesh;
  const int P = m.P(), Q = m.Q();
  const int NI = 1 + (P - 1) * Q;
  if (exterior_rings < 1 || !(width > 0.0)) throw DomainError("exterior annulus needs rings >= 1 and width > 0");
  for (int i = 0; i < NI; ++i)
    if (!(f.F[i](2) > 0.0))
      throw DomainError("reflection needs u > 0 in the interior; u = " + std::to_string(f.F[i](2)) + " at node " +
                        std::to_string(i));
  ReflectionMesh out;
  out.interior = NI;
  out.boundary = Q;
  out.exterior = exterior_rings * Q;
  for (int i = 0; i < NI; ++i) out.vertices.push_back(f.F[i]);
  for (int i = 0; i < NI; ++i) out.vertices.emplace_back(f.F[i](0), f.F[i](1), -f.F[i](2));
  Vector2d c = Vector2d::Zero();
  for (int q = 0; q < Q; ++q) c += f.at(P, q).head<2>() / Q;
  for (int q = 0; q < Q; ++q) out.vertices.emplace_back(f.at(P, q)(0), f.at(P, q)(1), 0.0);
  for (int k = 1; k <= exterior_rings; ++k)
    for (int q = 0; q < Q; ++q) {
      const Vector2d y = c + (1.0 + k * width / exterior_rings) * (f.at(P, q).head<2>() - c);
      out.vertices.emplace_back(y(0), y(1), 0.0);
    }
  const int ring0 = 2 * NI;
  auto top = [&](int idx) { return idx < NI ? idx : ring0 + (idx - NI); };
  auto bottom = [&](int idx) { return idx < NI ? NI + idx : ring0 + (idx - NI); };
  for (const auto& t : disk_triangles(m)) {
    out.faces.push_back({top(t[0]), top(t[1]), top(t[2])});
    out.faces.push_back({bottom(t[0]), bottom(t[2]), bottom(t[1])});
  }
  auto ext = [&](int k, int q) { return ring0 + k * Q + ((q % Q) + Q) % Q; };
  for (int k = 0; k < exterior_rings; ++k)
    for (int q = 0; q < Q; ++q) {
      out.faces.push_back({ext(k, q), ext(k + 1, q), ext(k + 1, q + 1)});
      out.faces.push_back({ext(k, q), ext(k + 1, q + 1), ext(k, q + 1)});
    }
  return out;
}

void write_reflection(const ReflectionMesh& mesh, std::ostream& out) {
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v(0), v(1), v(2));
    out << buf;
  }
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

}  // namespace contactflow
