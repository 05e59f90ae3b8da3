#pragma once

#include <vector>

#include "contactflow/geometry.hpp"

namespace contactflow {

// Cutoff in the boundary distance s: 1 for s <= rho0/3, 0 for s >= rho0,
// septic smoothstep (C^3) in between.
double cutoff(double s, double rho0);
double cutoff_derivative(double s, double rho0);

// Required normal second derivative of phi0 at the junction, h = -H0/(beta^2 beta0).
double compatibility_target(double H0, const AngleParams& params);

// Radius of the compatible map along a normal line of a circular boundary:
// m(s) = R_b -/+ zeta(s) s^2 h / 2 with s the distance to the boundary
// (minus for a disk, plus for the exterior of a disk).
struct NormalLineMap {
  double boundary_radius;
  double h;
  double rho0;
  bool exterior;

  double radius(double s) const;
  double radius_derivative_s(double s) const;  // d m / d s
};

}  // namespace contactflow
