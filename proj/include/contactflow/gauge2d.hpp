#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contactflow/geometry.hpp"
#include "contactflow/radial.hpp"

namespace contactflow {

// Polar chart of the unit disk: ring p = 0..P at rho = p/P, Q periodic angles.
// Node 0 is the pole; ring p >= 1 occupies 1 + (p-1)Q .. pQ.
class DiskMesh {
 public:
  DiskMesh(int P, int Q);
  int P() const { return P_; }
  int Q() const { return Q_; }
  double drho() const { return 1.0 / P_; }
  double dsigma() const;
  double rho(int p) const { return static_cast<double>(p) / P_; }
  double sigma(int q) const { return q * dsigma(); }
  int node_count() const { return 1 + P_ * Q_; }
  int index(int p, int q) const {
    if (p == 0) return 0;
    return 1 + (p - 1) * Q_ + ((q % Q_) + Q_) % Q_;
  }
  bool on_boundary(int idx) const { return idx > (P_ - 1) * Q_; }

 private:
  int P_, Q_;
};

struct GaugeField2D {
  DiskMesh mesh{4, 8};
  std::vector<Eigen::Vector3d> F;  // (phi1, phi2, u) per node
  double t = 0.0;

  const Eigen::Vector3d& at(int p, int q) const { return F[mesh.index(p, q)]; }
};

// Initial surface as a graph over the unit disk.
struct GraphProfile2D {
  std::string name;
  std::function<double(const Eigen::Vector2d&)> w;
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> Dw;
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> D2w;
};

// Rotation of a radial lens profile (R0 must be 1).
GraphProfile2D profile_from_radial(const RadialProfile& radial);
// Paraboloid plus eps (1 - r^2)^2 r^2 cos(2 theta): same boundary jet, no symmetry.
GraphProfile2D perturbed_paraboloid_2d(const AngleParams& params, double eps);

struct DiffeoBuild {
  std::vector<Eigen::Vector2d> phi;
  double rho0 = 0.0;          // tubular width actually used
  double min_jacobian = 0.0;  // sampled det Dphi0 over the disk
};

// phi0 = x + zeta f n with f = s^2 h(sigma)/2 along each normal line, s = 1 - rho.
// boundary_h has one entry per angle (already the target -H0/(beta^2 beta0)).
DiffeoBuild build_initial_diffeo_h(const std::vector<double>& boundary_h, const DiskMesh& mesh, double rho0 = 0.3);
DiffeoBuild build_initial_diffeo(const std::vector<double>& boundary_H0, const AngleParams& params,
                                 const DiskMesh& mesh, double rho0 = 0.3);

struct DiffeoJetErrors {
  double value = 0.0;          // max |phi0 - Id| on the ring
  double jacobian = 0.0;       // max |Dphi0 - I| on the ring
  double normal_second = 0.0;  // max |n . d2phi0(n, n) - h| on the ring
};

DiffeoJetErrors diffeo_jet_errors(const std::vector<Eigen::Vector2d>& phi, const DiskMesh& mesh,
                                  const std::vector<double>& boundary_h);

// beta^2 |J|^2 - beta0^2 J_phi^2; throws OrientationLoss when J_phi <= 0.
double angle_residual(const GaugeJet& jet, const AngleParams& params);
// <D_tau phi, D_n phi>
double orthogonality_residual(const GaugeJet& jet, const Vec& tau, const Vec& n);

// Jet at mesh node (p, q) in the frame (e_rho, e_sigma); the pole uses the
// Cartesian frame. Ring nodes use second-order one-sided rho stencils.
GaugeJet node_jet(const GaugeField2D& f, int p, int q);

struct BoundaryNode {
  Eigen::Vector2d y, n, tau;  // image point, inner normal, tangent
  double curvature = 0.0;     // of the image curve, positive for a convex domain
  double H = 0.0, h_nn = 0.0, h_tt = 0.0, h_nt = 0.0;
  double angle = 0.0, orthogonality = 0.0;
};

std::vector<BoundaryNode> boundary_ring(const GaugeField2D& f, const AngleParams& params);

enum class Gauge2DScheme { explicit_euler, imex };

struct Gauge2DOptions {
  double cfl = 0.4;
  Gauge2DScheme scheme = Gauge2DScheme::explicit_euler;
  double newton_tol = 1e-10;
  int newton_max_iter = 25;
  int max_sweeps = 200;
  double rho0 = 0.3;
  double v_guard = 1e6;
};

struct RingSolveStats {
  int sweeps = 0;
  int max_newton_iterations = 0;
  double max_angle = 0.0, max_orthogonality = 0.0;
};

class Gauge2DSolver {
 public:
  Gauge2DSolver(AngleParams params, Gauge2DOptions opts = {});

  // Validates contact and angle on the unit circle, builds the compatible phi0,
  // samples u0 = w0 o phi0 and solves the ring conditions once.
  GaugeField2D initial_field(const GraphProfile2D& profile, const DiskMesh& mesh) const;
  GaugeField2D step(const GaugeField2D& f, double dt) const;
  double stable_dt(const GaugeField2D& f) const;

  // Enforce u = 0, B = 0, O = 0 on the ring by per-node damped Newton with
  // Gauss-Seidel sweeps; interior values are held fixed.
  RingSolveStats solve_ring(GaugeField2D& f) const;

  double min_jacobian(const GaugeField2D& f) const;
  double max_v(const GaugeField2D& f) const;
  double image_radius(const GaugeField2D& f) const;  // mean |phi| on the ring
  // Image radius below 3/P, or v above the guard.
  bool extinct(const GaugeField2D& f) const;

  const AngleParams& params() const { return params_; }
  const Gauge2DOptions& options() const { return opts_; }
  const RingSolveStats& last_ring_stats() const { return last_; }

 private:
  AngleParams params_;
  Gauge2DOptions opts_;
  mutable RingSolveStats last_;
};

struct Gauge2DRun {
  std::vector<GaugeField2D> snapshots;
  bool extinct = false;
  std::size_t steps = 0;
};

// Same output-time contract as run_gauge.
Gauge2DRun run_gauge2d(const Gauge2DSolver& solver, GaugeField2D f0, const std::vector<double>& out_times,
                       bool stop_at_extinction = true);

struct JunctionKinematics {
  std::vector<double> times;            // interior snapshot times
  std::vector<double> max_mismatch;     // per time, max over junction nodes
  std::vector<double> normal_velocity;  // per time, mean over nodes
  std::vector<double> predicted;        // per time, mean of -H/beta0
  double max = 0.0;
};

// Needs >= 3 snapshots; the velocity is the 3-point (non-uniform) derivative.
JunctionKinematics junction_kinematics(const std::vector<GaugeField2D>& history, const AngleParams& params);
JunctionKinematics junction_kinematics(const std::vector<RadialGaugeState>& history, const RadialGaugeSolver& solver);

// w = u o phi^{-1} by linear interpolation in the image triangulation;
// nullopt outside phi(D0).
std::vector<std::optional<double>> extract_graph(const GaugeField2D& f, const std::vector<Eigen::Vector2d>& targets);

struct ReflectionMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;  // 0-based
  int interior = 0, boundary = 0, exterior = 0;
};

// Sheets graph u, graph -u and a planar annulus of the given width outside the junction.
ReflectionMesh reflection_mesh(const GaugeField2D& f, int exterior_rings = 4, double width = 0.5);
void write_reflection(const ReflectionMesh& mesh, std::ostream& out);

}  // namespace contactflow
