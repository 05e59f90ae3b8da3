#include "contactflow/diffeo.hpp"

namespace contactflow {

namespace {

double smoothstep7(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double x4 = x * x * x * x;
  return x4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)));
}

double smoothstep7_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double x3 = x * x * x;
  return 140.0 * x3 * (1.0 - x) * (1.0 - x) * (1.0 - x);
}

}  // namespace

double cutoff(double s, double rho0) {
  const double a = rho0 / 3.0;
  return 1.0 - smoothstep7((s - a) / (rho0 - a));
}

double cutoff_derivative(double s, double rho0) {
  const double a = rho0 / 3.0;
  return -smoothstep7_derivative((s - a) / (rho0 - a)) / (rho0 - a);
}

double compatibility_target(double H0, const AngleParams& p) {
  return -H0 / (p.beta() * p.beta() * p.beta0());
}

double NormalLineMap::radius(double s) const {
  const double f = cutoff(s, rho0) * s * s * h / 2.0;
  return exterior ? boundary_radius + s + f : boundary_radius - s - f;
}

double NormalLineMap::radius_derivative_s(double s) const {
  const double df = cutoff_derivative(s, rho0) * s * s * h / 2.0 + cutoff(s, rho0) * s * h;
  return exterior ? 1.0 + df : -1.0 - df;
}

}  // namespace contactflow
