#include "contactflow/radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "contactflow/diffeo.hpp"
#include "contactflow/errors.hpp"
#include "contactflow/tridiag.hpp"

namespace contactflow {

const char* to_string(RadialCase c) { return c == RadialCase::lens ? "lens" : "exterior"; }

RadialProfile paraboloid_profile(const AngleParams& p, double R0) {
  const double k = p.beta0() / (p.beta() * R0);
  RadialProfile prof;
  prof.name = "paraboloid";
  prof.R0 = R0;
  prof.w = [k, R0](double r) { return 0.5 * k * (R0 * R0 - r * r); };
  prof.w_r = [k](double r) { return -k * r; };
  prof.w_rr = [k](double) { return -k; };
  return prof;
}

RadialProfile spherical_cap_profile(const AngleParams& p, double R0) {
  const double rs = R0 / p.beta0();
  const double c = R0 * p.beta() / p.beta0();
  RadialProfile prof;
  prof.name = "spherical_cap";
  prof.R0 = R0;
  prof.w = [rs, c](double r) { return std::sqrt(rs * rs - r * r) - c; };
  prof.w_r = [rs](double r) { return -r / std::sqrt(rs * rs - r * r); };
  prof.w_rr = [rs](double r) {
    const double q = rs * rs - r * r;
    return -rs * rs / (q * std::sqrt(q));
  };
  return prof;
}

RadialProfile catenoid_profile(const AngleParams& p) {
  const double a = p.beta0();
  const double base = std::acosh(1.0 / a);
  RadialProfile prof;
  prof.name = "catenoid";
  prof.kase = RadialCase::exterior;
  prof.R0 = 1.0;
  prof.w = [a, base](double r) { return a * (std::acosh(r / a) - base); };
  prof.w_r = [a](double r) { return a / std::sqrt(r * r - a * a); };
  prof.w_rr = [a](double r) {
    const double q = r * r - a * a;
    return -a * r / (q * std::sqrt(q));
  };
  return prof;
}

RadialProfile perturbed_catenoid_profile(const AngleParams& p, double R_out, double amplitude, std::uint64_t seed) {
  RadialProfile base = catenoid_profile(p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::array<double, 3> c{};
  for (double& ck : c) ck = U(rng);
  const double pi = std::numbers::pi;
  auto shape = [c, pi](double s) {
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) acc += c[k] * std::sin((k + 1) * pi * s);
    return s * s * acc;
  };
  double peak = 0.0;
  for (int i = 0; i <= 2000; ++i) peak = std::max(peak, std::abs(shape(i / 2000.0)));
  const double A = peak > 0.0 ? amplitude / peak : 0.0;
  const double L = R_out - 1.0;
  RadialProfile prof = base;
  prof.name = "catenoid_perturbed";
  prof.w = [base, shape, A, L](double r) { return base.w(r) + A * shape((r - 1.0) / L); };
  prof.w_r = [base, c, A, L, pi](double r) {
    const double s = (r - 1.0) / L;
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double kp = (k + 1) * pi;
      acc += c[k] * (2.0 * s * std::sin(kp * s) + s * s * kp * std::cos(kp * s));
    }
    return base.w_r(r) + A * acc / L;
  };
  prof.w_rr = [base, c, A, L, pi](double r) {
    const double s = (r - 1.0) / L;
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double kp = (k + 1) * pi;
      acc += c[k] * (2.0 * std::sin(kp * s) + 4.0 * s * kp * std::cos(kp * s) - s * s * kp * kp * std::sin(kp * s));
    }
    return base.w_rr(r) + A * acc / (L * L);
  };
  return prof;
}

double catenoid(double r) {
  const double r_min = std::sqrt(3.0) / 2.0;
  if (!(r > r_min)) throw DomainError("catenoid profile needs r > sqrt(3)/2, got " + std::to_string(r));
  return r_min * (std::log(2.0 * r + std::sqrt(4.0 * r * r - 3.0)) - std::log(3.0));
}

double radial_H(double phi, double, double phi_r, double u_r, double phi_rr, double u_rr) {
  const double Q = phi_r * phi_r + u_r * u_r;
  if (!(phi > 0.0)) throw DomainError("radial mean curvature needs phi > 0 off the axis");
  if (!(Q > 0.0)) throw DegenerateImmersion("phi_r = u_r = 0");
  return (phi_r * u_rr - u_r * phi_rr + Q * u_r / phi) / (Q * std::sqrt(Q));
}

void validate_profile(const RadialProfile& prof, const AngleParams& p, double tol) {
  const double R0 = prof.R0;
  const double w0 = prof.w(R0);
  const double slope = prof.w_r(R0);
  const double want = prof.kase == RadialCase::lens ? -p.junction_slope() : p.junction_slope();
  if (std::abs(w0) > tol)
    throw ConstructionError(prof.name + ": contact condition w(R0) = 0 violated (w = " + std::to_string(w0) + ")");
  if (std::abs(slope - want) > tol * std::max(1.0, std::abs(want)))
    throw ConstructionError(prof.name + ": angle condition needs w_r(R0) = " + std::to_string(want) + ", got " +
                            std::to_string(slope));
  if (prof.kase == RadialCase::lens && !(prof.w(0.0) > 0.0))
    throw ConstructionError(prof.name + ": lens height must be positive inside");
}

std::vector<double> first_derivative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return d;
}

std::vector<double> second_derivative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  const double h2 = h * h;
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / h2;
  d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
  d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
  return d;
}

namespace {

// one-sided derivatives at the last node (or the first, with sign flip for odd order)
double end_d1(const std::vector<double>& f, double h, bool at_end) {
  const std::size_t n = f.size();
  if (at_end) return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
}

double end_d2(const std::vector<double>& f, double h, bool at_end) {
  const std::size_t n = f.size();
  if (at_end) return (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (h * h);
  return (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
}

// Lens: odd phi and even u at the axis. Exterior: one-sided at both ends.
void gauge_slopes(const RadialGaugeState& s, std::vector<double>& phi_r, std::vector<double>& u_r) {
  const double h = s.dr();
  phi_r = first_derivative(s.phi, h);
  u_r = first_derivative(s.u, h);
  if (s.kase == RadialCase::lens) {
    phi_r[0] = s.phi[1] / h;
    u_r[0] = 0.0;
  }
}

double hermite(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
}

NormalLineMap compatible_map(const RadialProfile& prof, const AngleParams& p, double rho0) {
  const double H0 = graph_radial_H(prof.R0, prof.w_r(prof.R0), prof.w_rr(prof.R0));
  return NormalLineMap{prof.R0, compatibility_target(H0, p), rho0 * prof.R0, prof.kase == RadialCase::exterior};
}

bool monotone_map(const NormalLineMap& m) {
  for (int i = 0; i <= 4000; ++i) {
    const double s = m.rho0 * i / 4000.0;
    if (std::abs(m.radius_derivative_s(s)) < 0.05) return false;
  }
  return m.radius(m.rho0) > 0.0;
}

}  // namespace

RadialGaugeSolver::RadialGaugeSolver(AngleParams params, RadialGaugeOptions opts) : params_(params), opts_(opts) {}

RadialGaugeState RadialGaugeSolver::initial_state(const RadialProfile& prof, int M, double R_out) const {
  if (M < 6) throw ConstructionError("radial grid needs M >= 6");
  validate_profile(prof, params_);
  NormalLineMap map = compatible_map(prof, params_, opts_.rho0);
  int tries = 0;
  while (!monotone_map(map)) {
    if (++tries > 4) throw ConstructionError("compatible initial parametrization is not monotone");
    map.rho0 *= 0.5;
  }
  RadialGaugeState s;
  s.kase = prof.kase;
  s.r.resize(M + 1);
  s.phi.resize(M + 1);
  s.u.resize(M + 1);
  const double R0 = prof.R0;
  if (prof.kase == RadialCase::lens) {
    for (int k = 0; k <= M; ++k) {
      s.r[k] = R0 * k / M;
      s.phi[k] = k == 0 ? 0.0 : map.radius(R0 - s.r[k]);
      s.u[k] = prof.w(s.phi[k]);
    }
    s.phi[M] = R0;
    s.u[M] = 0.0;
    // move the junction node so the one-sided angle condition holds discretely
    const double h = s.dr();
    const double ur = (-4.0 * s.u[M - 1] + s.u[M - 2]) / (2.0 * h);
    s.phi[M] = (-2.0 * h * ur / params_.junction_slope() + 4.0 * s.phi[M - 1] - s.phi[M - 2]) / 3.0;
  } else {
    if (!(R_out > R0)) throw ConstructionError("exterior case needs R_out > R0");
    for (int k = 0; k <= M; ++k) {
      s.r[k] = R0 + (R_out - R0) * k / M;
      s.phi[k] = map.radius(s.r[k] - R0);
      s.u[k] = prof.w(s.phi[k]);
    }
    s.phi[0] = R0;
    s.u[0] = 0.0;
    const double h = s.dr();
    const double ur = (4.0 * s.u[1] - s.u[2]) / (2.0 * h);
    s.phi[0] = (4.0 * s.phi[1] - s.phi[2] - 2.0 * h * ur / params_.junction_slope()) / 3.0;
    s.outer_u = s.u[M];
    s.outer_phi = s.phi[M];
  }
  return s;
}

double RadialGaugeSolver::stable_dt(const RadialGaugeState& s) const {
  std::vector<double> pr, ur;
  gauge_slopes(s, pr, ur);
  double dmax = 0.0;
  for (std::size_t k = 0; k < s.r.size(); ++k) {
    double a = 1.0 / (pr[k] * pr[k] + ur[k] * ur[k]);
    if (s.kase == RadialCase::lens && k == 0) a *= 2.0;
    dmax = std::max(dmax, a);
  }
  const double h = s.dr();
  return opts_.cfl * h * h / dmax;
}

RadialGaugeState RadialGaugeSolver::step(const RadialGaugeState& s, double dt) const {
  const int M = s.M();
  const double h = s.dr();
  const double h2 = h * h;
  const double beta = params_.beta(), beta0 = params_.beta0();
  std::vector<double> pr, ur;
  gauge_slopes(s, pr, ur);
  std::vector<double> a(M + 1), b(M + 1, 0.0);
  for (int k = 0; k <= M; ++k) {
    a[k] = 1.0 / (pr[k] * pr[k] + ur[k] * ur[k]);
    if (s.phi[k] > 0.0) b[k] = s.r[k] / (s.phi[k] * s.phi[k]);
  }
  auto lo = [&](int k) { return a[k] / h2 - b[k] / (2.0 * h); };
  auto up = [&](int k) { return a[k] / h2 + b[k] / (2.0 * h); };

  RadialGaugeState out = s;
  out.t = s.t + dt;

  if (s.kase == RadialCase::lens) {
    // u on nodes 0..M-1, u_M = 0
    TridiagonalSystem U(M);
    const double K0 = 2.0 * a[0];  // a + 1/phi_r^2 at the axis, phi_r from the odd ghost
    U.diag[0] = 1.0 / dt + 2.0 * K0 / h2;
    U.upper[0] = -2.0 * K0 / h2;
    U.rhs[0] = s.u[0] / dt;
    for (int k = 1; k < M; ++k) {
      U.lower[k] = -lo(k);
      U.diag[k] = 1.0 / dt + 2.0 * a[k] / h2;
      U.upper[k] = k + 1 < M ? -up(k) : 0.0;
      U.rhs[k] = s.u[k] / dt;
    }
    const std::vector<double> u = solve(U);
    for (int k = 0; k < M; ++k) out.u[k] = u[k];
    out.u[M] = 0.0;
    const double u_r_new = end_d1(out.u, h, true);

    // phi on nodes 1..M (index k-1), phi_0 = 0; junction row is the angle condition
    TridiagonalSystem P(M);
    for (int k = 1; k < M; ++k) {
      const int j = k - 1;
      P.lower[j] = k > 1 ? -lo(k) : 0.0;
      P.diag[j] = 1.0 / dt + 2.0 * a[k] / h2 + 1.0 / (s.phi[k] * s.phi[k]);
      P.upper[j] = -up(k);
      P.rhs[j] = s.phi[k] / dt;
    }
    P.diag[M - 1] = 3.0 * beta0 / (2.0 * h);
    P.lower[M - 1] = -4.0 * beta0 / (2.0 * h);
    P.last_extra = beta0 / (2.0 * h);
    P.rhs[M - 1] = -beta * u_r_new;
    const std::vector<double> phi = solve(P);
    out.phi[0] = 0.0;
    for (int k = 1; k <= M; ++k) out.phi[k] = phi[k - 1];
  } else {
    const bool neumann = opts_.outer_bc == OuterBc::neumann;
    const int nu = neumann ? M : M - 1;  // unknowns u_1..u_nu
    TridiagonalSystem U(nu);
    for (int k = 1; k <= nu; ++k) {
      const int j = k - 1;
      if (k == M) {
        U.lower[j] = -2.0 * a[k] / h2;
        U.diag[j] = 1.0 / dt + 2.0 * a[k] / h2;
        U.rhs[j] = s.u[k] / dt;
        continue;
      }
      U.lower[j] = k > 1 ? -lo(k) : 0.0;
      U.diag[j] = 1.0 / dt + 2.0 * a[k] / h2;
      U.upper[j] = -up(k);
      U.rhs[j] = s.u[k] / dt;
      if (k == M - 1 && !neumann) {
        U.upper[j] = 0.0;
        U.rhs[j] += up(k) * s.outer_u;
      }
    }
    const std::vector<double> u = solve(U);
    out.u[0] = 0.0;
    for (int k = 1; k <= nu; ++k) out.u[k] = u[k - 1];
    if (!neumann) out.u[M] = s.outer_u;
    const double u_r_new = end_d1(out.u, h, false);

    // phi on nodes 0..M-1, phi_M pinned to the wall
    TridiagonalSystem P(M);
    P.diag[0] = -3.0 * beta0 / (2.0 * h);
    P.upper[0] = 4.0 * beta0 / (2.0 * h);
    P.first_extra = -beta0 / (2.0 * h);
    P.rhs[0] = beta * u_r_new;
    for (int k = 1; k < M; ++k) {
      P.lower[k] = -lo(k);
      P.diag[k] = 1.0 / dt + 2.0 * a[k] / h2 + 1.0 / (s.phi[k] * s.phi[k]);
      P.upper[k] = k + 1 < M ? -up(k) : 0.0;
      P.rhs[k] = s.phi[k] / dt;
      if (k == M - 1) P.rhs[k] += up(k) * s.outer_phi;
    }
    const std::vector<double> phi = solve(P);
    for (int k = 0; k < M; ++k) out.phi[k] = phi[k];
    out.phi[M] = s.outer_phi;
  }

  for (int k = 0; k < M; ++k)
    if (!(out.phi[k + 1] > out.phi[k]))
      throw DiffeomorphismBreakdown("phi lost monotonicity at node " + std::to_string(k) +
                                    ", t = " + std::to_string(out.t));
  return out;
}

double RadialGaugeSolver::angle_residual(const RadialGaugeState& s) const {
  const bool lens = s.kase == RadialCase::lens;
  const double ur = end_d1(s.u, s.dr(), lens);
  const double pr = end_d1(s.phi, s.dr(), lens);
  return lens ? params_.beta() * ur + params_.beta0() * pr : params_.beta() * ur - params_.beta0() * pr;
}

double RadialGaugeSolver::junction_v(const RadialGaugeState& s) const {
  const bool lens = s.kase == RadialCase::lens;
  const double ur = end_d1(s.u, s.dr(), lens);
  const double pr = end_d1(s.phi, s.dr(), lens);
  return std::sqrt(pr * pr + ur * ur) / pr;
}

double RadialGaugeSolver::max_v(const RadialGaugeState& s) const {
  std::vector<double> pr, ur;
  gauge_slopes(s, pr, ur);
  double vmax = 1.0;
  for (std::size_t k = 0; k < pr.size(); ++k) {
    if (!(pr[k] > 0.0)) return std::numeric_limits<double>::infinity();
    vmax = std::max(vmax, std::sqrt(pr[k] * pr[k] + ur[k] * ur[k]) / pr[k]);
  }
  return vmax;
}

double RadialGaugeSolver::junction_H(const RadialGaugeState& s) const {
  const bool lens = s.kase == RadialCase::lens;
  const double h = s.dr();
  const int j = s.junction_index();
  return radial_H(s.phi[j], s.u[j], end_d1(s.phi, h, lens), end_d1(s.u, h, lens), end_d2(s.phi, h, lens),
                  end_d2(s.u, h, lens));
}

double RadialGaugeSolver::origin_phi_r(const RadialGaugeState& s) const {
  if (s.kase != RadialCase::lens) return std::numeric_limits<double>::quiet_NaN();
  return (8.0 * s.phi[1] - s.phi[2]) / (6.0 * s.dr());
}

bool RadialGaugeSolver::extinct(const RadialGaugeState& s, double R0) const {
  if (max_v(s) > opts_.v_guard) return true;
  return s.kase == RadialCase::lens && s.junction_radius() < 10.0 * R0 / s.M();
}

RadialGraphSolver::RadialGraphSolver(AngleParams params, RadialGraphOptions opts) : params_(params), opts_(opts) {}

RadialGraphState RadialGraphSolver::initial_state(const RadialProfile& prof, int M) const {
  if (prof.kase != RadialCase::lens) throw ConstructionError("graph mode handles the lens case only");
  if (M < 6) throw ConstructionError("radial grid needs M >= 6");
  validate_profile(prof, params_);
  RadialGraphState s;
  s.R = prof.R0;
  s.xi.resize(M + 1);
  s.w.resize(M + 1);
  for (int k = 0; k <= M; ++k) {
    s.xi[k] = static_cast<double>(k) / M;
    s.w[k] = prof.w(s.xi[k] * prof.R0);
  }
  s.w[M] = 0.0;
  return s;
}

double RadialGraphSolver::stable_dt(const RadialGraphState& s) const {
  // largest xi-diffusivity is 2/R^2 at the axis
  const double h = s.dxi();
  return opts_.cfl * h * h * s.R * s.R / 2.0;
}

RadialGraphState RadialGraphSolver::step(const RadialGraphState& s, double dt) const {
  const int M = s.M();
  const double h = s.dxi();
  const double h2 = h * h;
  const double R = s.R;
  const double slope = params_.junction_slope();
  const double theta = opts_.scheme == TimeScheme::semi_implicit ? 1.0 : 0.0;
  std::vector<double> Wx = first_derivative(s.w, h);
  Wx[0] = 0.0;

  // unknowns W_0..W_{M-1} (W_M = 0) and the radius increment delta:
  // T W = b + c delta, closed by the one-sided angle condition at xi = 1
  TridiagonalSystem T(M);
  std::vector<double> c(M, 0.0);
  const double K0 = 4.0 / (R * R * h2);
  T.diag[0] = 1.0 / dt + theta * K0;
  T.upper[0] = -theta * K0;
  T.rhs[0] = s.w[0] / dt + (1.0 - theta) * K0 * (s.w[1] - s.w[0]);
  for (int k = 1; k < M; ++k) {
    const double wr = Wx[k] / R;
    const double A = 1.0 / (R * R * (1.0 + wr * wr));
    const double B = 1.0 / (R * R * s.xi[k]);
    const double L = A / h2 - B / (2.0 * h);
    const double U = A / h2 + B / (2.0 * h);
    const double D = 2.0 * A / h2;
    T.lower[k] = -theta * L;
    T.diag[k] = 1.0 / dt + theta * D;
    T.upper[k] = k + 1 < M ? -theta * U : 0.0;
    T.rhs[k] = s.w[k] / dt + (1.0 - theta) * (L * s.w[k - 1] - D * s.w[k] + U * s.w[k + 1]);
    c[k] = s.xi[k] * Wx[k] / (dt * R);
  }
  const std::vector<double> y = solve(T);
  TridiagonalSystem Tc = T;
  Tc.rhs = c;
  const std::vector<double> z = solve(Tc);
  const double gy = (-4.0 * y[M - 1] + y[M - 2]) / (2.0 * h);
  const double gz = (-4.0 * z[M - 1] + z[M - 2]) / (2.0 * h);
  const double delta = (-slope * R - gy) / (gz + slope);

  RadialGraphState out = s;
  out.t = s.t + dt;
  out.R = R + delta;
  for (int k = 0; k < M; ++k) out.w[k] = y[k] + delta * z[k];
  out.w[M] = 0.0;
  return out;
}

double RadialGraphSolver::junction_w_r(const RadialGraphState& s) const {
  return end_d1(s.w, s.dxi(), true) / s.R;
}

double RadialGraphSolver::junction_H(const RadialGraphState& s) const {
  const double wr = junction_w_r(s);
  const double wrr = end_d2(s.w, s.dxi(), true) / (s.R * s.R);
  return graph_radial_H(s.R, wr, wrr);
}

double RadialGraphSolver::max_v(const RadialGraphState& s) const {
  const std::vector<double> Wx = first_derivative(s.w, s.dxi());
  double vmax = 1.0;
  for (std::size_t k = 1; k < Wx.size(); ++k) {
    const double wr = Wx[k] / s.R;
    vmax = std::max(vmax, std::sqrt(1.0 + wr * wr));
  }
  return vmax;
}

bool RadialGraphSolver::extinct(const RadialGraphState& s, double R0) const {
  if (!(s.R > 10.0 * R0 / s.M())) return true;
  return max_v(s) > opts_.v_guard;
}

namespace {

template <class Solver, class State>
RadialRun<State> run_impl(const Solver& solver, State s, const std::vector<double>& out_times, double R0,
                          bool stop_at_extinction, double (*radius)(const State&)) {
  RadialRun<State> run;
  run.snapshots.push_back(s);
  double t_prev = s.t;
  double R_prev = radius(s);
  for (double t_out : out_times) {
    if (!(t_out > s.t)) continue;
    while (s.t < t_out) {
      const double remaining = t_out - s.t;
      const double dt_max = solver.stable_dt(s);
      const double n = std::ceil(remaining / dt_max * (1.0 - 1e-12));
      const double dt = remaining / std::max(1.0, n);
      t_prev = s.t;
      R_prev = radius(s);
      s = solver.step(s, dt);
      if (n <= 1.0) s.t = t_out;
      ++run.steps;
      if (solver.extinct(s, R0)) {
        run.extinct = true;
        run.extinction_bracket_lo = t_prev;
        run.extinction_bracket_hi = s.t;
        const double R = radius(s);
        const double d = R_prev * R_prev - R * R;
        run.extinction_estimate = d > 0.0 ? s.t + R * R * (s.t - t_prev) / d : s.t;
        if (stop_at_extinction) {
          run.snapshots.push_back(s);
          return run;
        }
      }
    }
    run.snapshots.push_back(s);
  }
  return run;
}

double gauge_radius(const RadialGaugeState& s) { return s.junction_radius(); }
double graph_radius(const RadialGraphState& s) { return s.R; }

}  // namespace

GaugeRun run_gauge(const RadialGaugeSolver& solver, RadialGaugeState s0, const std::vector<double>& out_times,
                   double R0, bool stop_at_extinction) {
  return run_impl(solver, std::move(s0), out_times, R0, stop_at_extinction, &gauge_radius);
}

GraphRun run_graph(const RadialGraphSolver& solver, RadialGraphState s0, const std::vector<double>& out_times,
                   double R0, bool stop_at_extinction) {
  return run_impl(solver, std::move(s0), out_times, R0, stop_at_extinction, &graph_radius);
}

double reconstruct_w(const RadialGaugeState& s, double r) {
  const auto& phi = s.phi;
  if (r < phi.front() || r > phi.back()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> pr, ur;
  gauge_slopes(s, pr, ur);
  std::size_t k = static_cast<std::size_t>(std::upper_bound(phi.begin(), phi.end(), r) - phi.begin());
  k = std::clamp<std::size_t>(k, 1, phi.size() - 1);
  const double d0 = ur[k - 1] / pr[k - 1];
  const double d1 = ur[k] / pr[k];
  return hermite(phi[k - 1], phi[k], s.u[k - 1], s.u[k], d0, d1, r);
}

double graph_w_at(const RadialGraphState& s, double r) {
  const double x = r / s.R;
  if (x < 0.0 || x > 1.0 + 1e-14) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> Wx = first_derivative(s.w, s.dxi());
  Wx[0] = 0.0;
  const int M = s.M();
  const int k = std::clamp(static_cast<int>(std::floor(x * M)), 0, M - 1);
  return hermite(s.xi[k], s.xi[k + 1], s.w[k], s.w[k + 1], Wx[k], Wx[k + 1], std::min(x, 1.0));
}

CrossValidationReport cross_validate(const std::vector<RadialGaugeState>& gauge_run,
                                     const std::vector<RadialGraphState>& graph_run) {
  CrossValidationReport rep;
  for (const auto& g : gauge_run) {
    const auto it = std::find_if(graph_run.begin(), graph_run.end(), [&](const RadialGraphState& w) {
      return std::abs(w.t - g.t) <= 1e-12 * std::max(1.0, std::abs(g.t));
    });
    if (it == graph_run.end()) {
      rep.truncated = true;
      continue;
    }
    CrossValidationSample smp;
    smp.t = g.t;
    smp.R_gauge = g.junction_radius();
    smp.R_graph = it->R;
    smp.R_discrepancy = std::abs(smp.R_gauge - smp.R_graph);
    smp.common_support = std::min(smp.R_gauge, smp.R_graph);
    for (int k = 0; k <= it->M(); ++k) {
      const double r = it->r(k);
      if (r > smp.common_support) {
        rep.truncated = true;
        continue;
      }
      smp.w_discrepancy = std::max(smp.w_discrepancy, std::abs(it->w[k] - reconstruct_w(g, r)));
    }
    rep.max_w = std::max(rep.max_w, smp.w_discrepancy);
    rep.max_R = std::max(rep.max_R, smp.R_discrepancy);
    rep.samples.push_back(smp);
  }
  return rep;
}

}  // namespace contactflow
