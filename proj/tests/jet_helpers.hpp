#pragma once

// Shared helpers for tests: random polynomial graphs and exact time
// derivatives along graph mean curvature motion via Taylor jets.

#include <random>

#include "contactflow/geometry.hpp"
#include "contactflow/taylor.hpp"

namespace cftest {

using contactflow::Taylor2;

template <int D>
Taylor2<D> random_poly(std::mt19937_64& rng, double gradient_scale) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Taylor2<D> w;
  for (int d = 0; d <= D; ++d)
    for (int j = 0; j <= d; ++j) w(d - j, j) = (d == 1 ? gradient_scale : 0.6) * U(rng);
  return w;
}

template <int D>
contactflow::GraphFields<Taylor2<D>> fields_of(const Taylor2<D + 2>& w) {
  std::array<Taylor2<D>, 3> Dw;
  std::array<std::array<Taylor2<D>, 3>, 3> D2w;
  const auto wa = w.partial_a();
  const auto wb = w.partial_b();
  Dw[0] = wa.template truncate<D>();
  Dw[1] = wb.template truncate<D>();
  D2w[0][0] = wa.partial_a();
  D2w[0][1] = wa.partial_b();
  D2w[1][0] = D2w[0][1];
  D2w[1][1] = wb.partial_b();
  return contactflow::graph_fields<Taylor2<D>>(2, Dw, D2w);
}

// w_t = g^{ij} w_ij as a degree-D jet; needs w to degree D+2.
template <int D>
Taylor2<D> graph_velocity(const Taylor2<D + 2>& w) {
  const auto f = fields_of<D>(w);
  Taylor2<D> wt;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) wt += f.ginv[i][j] * f.h[i][j] * f.v;
  return wt;
}

inline contactflow::ShapeData shape_at(const Taylor2<4>& w) {
  contactflow::Vec Dw(2);
  contactflow::Mat D2w(2, 2);
  Dw << w(1, 0), w(0, 1);
  D2w << 2 * w(2, 0), w(1, 1), w(1, 1), 2 * w(0, 2);
  return contactflow::compute_shape(Dw, D2w);
}

inline contactflow::HDerivatives dh_at(const Taylor2<4>& w) {
  const auto f = fields_of<2>(w);
  contactflow::HDerivatives dh;
  dh[0] = contactflow::Mat(2, 2);
  dh[1] = contactflow::Mat(2, 2);
  dh[2] = contactflow::Mat::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      dh[0](i, j) = f.h[i][j].da();
      dh[1](i, j) = f.h[i][j].db();
    }
  return dh;
}

// Field values (and their Taylor jets) whose L[f] the identities predict.
struct LaggedFields {
  std::array<Taylor2<2>, 2> omega;
  std::array<std::array<Taylor2<2>, 2>, 2> ginv, h;
  Taylor2<2> H, hnorm2, v;
};

inline LaggedFields lagged(const contactflow::GraphFields<Taylor2<2>>& f) {
  LaggedFields o;
  for (int i = 0; i < 2; ++i) {
    o.omega[i] = f.omega[i];
    for (int j = 0; j < 2; ++j) {
      o.ginv[i][j] = f.ginv[i][j];
      o.h[i][j] = f.h[i][j];
    }
  }
  o.H = f.H;
  o.hnorm2 = f.hnorm2;
  o.v = f.v;
  return o;
}

// tr_g d^2 f at the expansion point
inline double trace_hessian(const contactflow::GraphFields<Taylor2<2>>& f, const Taylor2<2>& x) {
  const double g00 = f.ginv[0][0].value(), g01 = f.ginv[0][1].value(), g11 = f.ginv[1][1].value();
  return g00 * x.daa() + 2.0 * g01 * x.dab() + g11 * x.dbb();
}

}  // namespace cftest
