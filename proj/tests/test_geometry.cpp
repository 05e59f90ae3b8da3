#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "contactflow/geometry.hpp"
#include "jet_helpers.hpp"

using namespace contactflow;
using doctest::Approx;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

// hemisphere w = sqrt(1 - x^2 - y^2)
void hemisphere(double x, double y, Vec& Dw, Mat& D2w) {
  const double w = std::sqrt(1.0 - x * x - y * y);
  const double w3 = w * w * w;
  Dw = vec2(-x / w, -y / w);
  D2w = mat2(-(1.0 - y * y) / w3, -x * y / w3, -x * y / w3, -(1.0 - x * x) / w3);
}

GaugeJet random_jet(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  GaugeJet jet;
  jet.DF = Mat(n, n + 1);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k <= n; ++k) jet.DF(i, k) = (i == k ? 1.5 : 0.0) + 0.4 * U(rng);
  for (int k = 0; k <= n; ++k) {
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = U(rng);
    jet.D2F[k] = 0.5 * (A + A.transpose());
  }
  return jet;
}

}  // namespace

TEST_CASE("angle params") {
  const AngleParams p(0.5);
  CHECK(p.beta() * p.beta() + p.beta0() * p.beta0() == Approx(1.0).epsilon(1e-15));
  CHECK(p.junction_slope() == Approx(std::sqrt(3.0)));
  CHECK_THROWS_AS(AngleParams(0.0), DomainError);
  CHECK_THROWS_AS(AngleParams(1.0), DomainError);
}

TEST_CASE("compute_metric examples") {
  const MetricData flat = compute_metric(vec2(0, 0));
  CHECK(flat.v == 1.0);
  CHECK(flat.ginv.isApprox(Mat::Identity(2, 2)));

  const MetricData m = compute_metric(vec2(std::sqrt(3.0), 0));
  CHECK(m.v == Approx(2.0));
  CHECK(m.ginv(0, 0) == Approx(0.25));
  CHECK(m.ginv(1, 1) == Approx(1.0));
  CHECK(std::abs(m.ginv(0, 1)) < 1e-15);

  const AngleParams p(0.3);
  const double s = p.junction_slope();
  const MetricData j = compute_metric(vec2(s / std::sqrt(2.0), -s / std::sqrt(2.0)));
  CHECK(j.v == Approx(1.0 / p.beta()).epsilon(1e-14));

  CHECK(compute_metric(vec2(1e5, 0)).ill_conditioned);
}

TEST_CASE("metric invariants on random gradients, n = 2 and 3") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 200; ++trial) {
      Vec Dw(n);
      for (int i = 0; i < n; ++i) Dw(i) = U(rng);
      const MetricData m = compute_metric(Dw);
      CHECK((m.g * m.ginv - Mat::Identity(n, n)).norm() < 1e-12);
      CHECK(m.v >= 1.0);
      const Vec ev = symmetric_eigenvalues(m.ginv);
      CHECK(ev(0) >= 1.0 / (m.v * m.v) - 1e-12);
      CHECK(ev(n - 1) <= 1.0 + 1e-12);
      Vec X(n);
      for (int i = 0; i < n; ++i) X(i) = U(rng);
      const double e2 = X.squaredNorm();
      const double g2 = X.dot(m.g * X);
      CHECK(e2 <= g2 + 1e-12);
      CHECK(g2 <= m.v * m.v * e2 + 1e-9);
      Mat D2w = Mat::Zero(n, n);
      const ShapeData s = compute_shape(Dw, D2w);
      CHECK(s.omega.squaredNorm() == Approx(1.0 - 1.0 / (m.v * m.v)).epsilon(1e-13));
      CHECK(s.omega.norm() < 1.0);
    }
  }
}

TEST_CASE("compute_shape examples") {
  const ShapeData zero = compute_shape(vec2(0.3, -0.2), Mat::Zero(2, 2));
  CHECK(zero.H == 0.0);
  CHECK(zero.h_norm2 == 0.0);
  CHECK(zero.h.norm() == 0.0);

  Vec Dw;
  Mat D2w;
  for (auto [x, y] : {std::pair{0.3, 0.4}, std::pair{0.0, 0.7}, std::pair{-0.55, 0.1}}) {
    hemisphere(x, y, Dw, D2w);
    const ShapeData s = compute_shape(Dw, D2w);
    CHECK(s.H == Approx(-2.0).epsilon(1e-13));
    CHECK(s.h_norm2 == Approx(2.0).epsilon(1e-13));  // umbilic sphere: |h|^2 = H^2/2
  }

  const ShapeData s = compute_shape(vec2(std::sqrt(3.0), 0.0), Mat::Zero(2, 2));
  CHECK(s.omega.squaredNorm() == Approx(0.75));
}

TEST_CASE("shape invariants on random jets") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 200; ++trial) {
      Vec Dw(n);
      Mat A(n, n);
      for (int i = 0; i < n; ++i) {
        Dw(i) = U(rng);
        for (int j = 0; j < n; ++j) A(i, j) = U(rng);
      }
      const Mat D2w = 0.5 * (A + A.transpose());
      const ShapeData s = compute_shape(Dw, D2w);
      CHECK(s.H == Approx((s.metric.ginv * s.h).trace()).epsilon(1e-12));
      CHECK(s.h_norm2 >= s.H * s.H / n - 1e-12);
      CHECK((s.h2 - s.h * s.metric.ginv * s.h).norm() < 1e-12);
      CHECK((s.h3 - s.h2 * s.metric.ginv * s.h).norm() < 1e-11);
      CHECK((s.h2 - s.h2.transpose()).norm() < 1e-12);
      // Sylvester: metric eigenvalues of h share signs with the euclidean ones
      const Vec ee = symmetric_eigenvalues(s.h);
      const double em = max_metric_eigenvalue(s.h, s.metric.ginv);
      CHECK((ee(n - 1) > 0) == (em > 0));
      CHECK(graph_rhs(Dw, D2w) == Approx(s.metric.v * s.H).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetric eigenvalues closed form") {
  Mat A(3, 3);
  A << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  const Vec ev = symmetric_eigenvalues(A);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(Eigen::Matrix3d(A.topLeftCorner(3, 3)));
  for (int i = 0; i < 3; ++i) CHECK(ev(i) == Approx(es.eigenvalues()(i)).epsilon(1e-12));
}

TEST_CASE("gauge_metric examples") {
  Mat DF(2, 3);
  DF << 1, 0, 0, 0, 1, 0;
  CHECK(gauge_metric(DF).g.isApprox(Mat::Identity(2, 2)));

  DF << 1, 0, 0.7, 0, 1, -1.3;
  const MetricData gm = gauge_metric(DF);
  const MetricData cm = compute_metric(vec2(0.7, -1.3));
  CHECK((gm.g - cm.g).norm() == 0.0);
  CHECK((gm.ginv - cm.ginv).norm() < 1e-15);
  CHECK(gm.v == Approx(cm.v).epsilon(1e-15));

  DF << 2, 0, 0, 0, 2, 0;
  CHECK(gauge_metric(DF).g.isApprox(4.0 * Mat::Identity(2, 2)));

  DF << 1, 2, 3, 2, 4, 6;
  CHECK_THROWS_AS(gauge_metric(DF), DegenerateImmersion);
}

TEST_CASE("cross_normal examples") {
  Mat DF(2, 3);
  DF << 1, 0, 0, 0, 1, 0;
  NormalData nd = cross_normal(DF);
  CHECK(nd.Ntilde.isApprox(Vec::Unit(3, 2)));
  CHECK(nd.N.isApprox(Vec::Unit(3, 2)));

  DF << 1, 0, 0.4, 0, 1, -2.5;
  nd = cross_normal(DF);
  CHECK(nd.Jvec(0) == Approx(-0.4));
  CHECK(nd.Jvec(1) == Approx(2.5));

  DF << 2, 0, 0, 0, 3, 0;
  nd = cross_normal(DF);
  CHECK(nd.Jphi == Approx(6.0));
  CHECK(nd.N.isApprox(Vec::Unit(3, 2)));

  DF << 0, 1, 0, 1, 0, 0;  // orientation reversing
  CHECK_THROWS_AS(cross_normal(DF), OrientationLoss);

  // n = 3: with Dphi = I, J = -Du
  Mat D3(3, 4);
  D3 << 1, 0, 0, 0.2, 0, 1, 0, -0.5, 0, 0, 1, 1.1;
  nd = cross_normal(D3);
  CHECK(nd.Jphi == Approx(1.0));
  CHECK(nd.Jvec(0) == Approx(-0.2));
  CHECK(nd.Jvec(1) == Approx(0.5));
  CHECK(nd.Jvec(2) == Approx(-1.1));
  // normal is orthogonal to every tangent column
  for (int i = 0; i < 3; ++i) CHECK(std::abs(nd.Ntilde.dot(D3.row(i).transpose())) < 1e-14);
}

TEST_CASE("graph_rhs examples") {
  CHECK(graph_rhs(vec2(0.4, 0.1), Mat::Zero(2, 2)) == 0.0);
  CHECK(graph_rhs(vec2(0, 0), -Mat::Identity(2, 2)) == Approx(-2.0));
}

TEST_CASE("gauge_rhs examples") {
  GaugeJet flat;
  flat.DF = Mat(2, 3);
  flat.DF << 1, 0, 0, 0, 1, 0;
  for (auto& m : flat.D2F) m = Mat::Zero(2, 2);
  CHECK(gauge_rhs(flat).norm() == 0.0);

  // phi = identity, u = w(r) at (r, 0) in the polar frame
  const double r = 0.6, wr = -0.8, wrr = -1.7;
  GaugeJet jet = flat;
  jet.DF(0, 2) = wr;
  jet.D2F[2] = mat2(wrr, 0, 0, wr / r);
  const Vec rhs = gauge_rhs(jet);
  CHECK(rhs(2) == Approx(wrr / (1 + wr * wr) + wr / r).epsilon(1e-14));
  CHECK(std::abs(rhs(0)) + std::abs(rhs(1)) == 0.0);
}

TEST_CASE("gauge velocity normal part equals graph mean curvature on random jets") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const GaugeJet jet = random_jet(rng, 2);
    const Vec rhs = gauge_rhs(jet);
    const NormalData nd = cross_normal(jet.DF);
    // graph data of the same surface: Dw = A^{-T} Du, D2w = A^{-T}(D2u - w_c D2phi^c) A^{-1}
    Mat A(2, 2);
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c) A(c, a) = jet.DF(a, c);
    const Mat Ainv = A.inverse();
    const Vec Du = jet.DF.col(2);
    const Vec Dw = Ainv.transpose() * Du;
    const Mat inner = jet.D2F[2] - Dw(0) * jet.D2F[0] - Dw(1) * jet.D2F[1];
    const Mat D2w = Ainv.transpose() * inner * Ainv;
    const ShapeData s = compute_shape(Dw, D2w);
    CHECK(rhs.dot(nd.N) == Approx(s.H).epsilon(1e-11));
    CHECK(gauge_mean_curvature(jet) == Approx(s.H).epsilon(1e-11));
    CHECK(gauge_v(jet.DF) == Approx(s.metric.v).epsilon(1e-12));
  }
}

TEST_CASE("evolution_rhs examples") {
  const ShapeData flat = compute_shape(vec2(0.5, -0.3), Mat::Zero(2, 2));
  HDerivatives dh;
  for (auto& m : dh) m = Mat::Zero(2, 2);
  const EvolutionRhs z = evolution_rhs(flat, &dh);
  CHECK(z.L_omega.norm() == 0.0);
  CHECK(z.L_ginv.norm() == 0.0);
  CHECK(z.L_H == 0.0);
  CHECK(z.C.norm() == 0.0);
  CHECK(z.grad_term->norm() == 0.0);
  CHECK(z.L_v == 0.0);

  const ShapeData pole = compute_shape(vec2(0, 0), -Mat::Identity(2, 2));
  CHECK(evolution_rhs(pole).L_H == Approx(-4.0));
}

TEST_CASE("connection_term conversions") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int n : {2, 3}) {
    Vec Dw(n);
    Mat A(n, n);
    HDerivatives dh;
    for (int i = 0; i < n; ++i) {
      Dw(i) = U(rng);
      for (int j = 0; j < n; ++j) A(i, j) = U(rng);
    }
    for (int m = 0; m < 3; ++m) {
      Mat B(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = U(rng);
      dh[m] = m < n ? Mat(0.5 * (B + B.transpose())) : Mat(Mat::Zero(n, n));
    }
    const ShapeData s = compute_shape(Dw, 0.5 * (A + A.transpose()));
    const HDerivatives back = euclidean_from_covariant(s, covariant_from_euclidean(s, dh));
    for (int m = 0; m < n; ++m) CHECK((back[m] - dh[m]).norm() < 1e-14);

    const ShapeData s0 = compute_shape(Vec::Zero(n), 0.5 * (A + A.transpose()));
    const HDerivatives same = covariant_from_euclidean(s0, dh);
    for (int m = 0; m < n; ++m) CHECK((same[m] - dh[m]).norm() == 0.0);

    const ShapeData sh0 = compute_shape(Dw, Mat::Zero(n, n));
    const ConnectionData c = connection_term(sh0);
    for (int k = 0; k < n; ++k) CHECK(c.christoffel[k].norm() + c.dginv[k].norm() == 0.0);
  }
}

TEST_CASE("inverse metric derivative matches exact jets") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = cftest::random_poly<4>(rng, 1.2);
    const auto f = cftest::fields_of<2>(w);
    const ConnectionData c = connection_term(cftest::shape_at(w));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        CHECK(c.dginv[0](i, j) == Approx(f.ginv[i][j].da()).epsilon(1e-12));
        CHECK(c.dginv[1](i, j) == Approx(f.ginv[i][j].db()).epsilon(1e-12));
      }
  }
}

// Every closed form against an exact time derivative along w_t = g^{ij} w_ij:
// f_t = d/de f[w + e w_t], computed with a fourth-order stencil in e.
TEST_CASE("evolution identities hold on random polynomial graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const auto w6 = cftest::random_poly<6>(rng, 1.0);
    const auto w4 = w6.truncate<4>();
    const auto wt = cftest::graph_velocity<4>(w6);
    const auto f0 = cftest::fields_of<2>(w4);
    const double eps = 1e-3;
    std::array<cftest::LaggedFields, 4> F;
    const std::array<double, 4> es{-2 * eps, -eps, eps, 2 * eps};
    for (int k = 0; k < 4; ++k) F[k] = cftest::lagged(cftest::fields_of<2>(w4 + es[k] * wt));
    auto ddt = [&](auto get) {
      return (8.0 * (get(F[2]) - get(F[1])) - (get(F[3]) - get(F[0]))) / (12.0 * eps);
    };

    const ShapeData s = cftest::shape_at(w4);
    const HDerivatives dh = cftest::dh_at(w4);
    const EvolutionRhs r = evolution_rhs(s, &dh);
    const double tol = 1e-7;

    for (int i = 0; i < 2; ++i) {
      const double L = ddt([i](const cftest::LaggedFields& x) { return x.omega[i].value(); }) -
                       cftest::trace_hessian(f0, f0.omega[i]);
      CHECK(L == Approx(r.L_omega(i)).epsilon(tol).scale(1.0));
      for (int j = 0; j < 2; ++j) {
        const double Lg = ddt([i, j](const cftest::LaggedFields& x) { return x.ginv[i][j].value(); }) -
                          cftest::trace_hessian(f0, f0.ginv[i][j]);
        CHECK(Lg == Approx(r.L_ginv(i, j)).epsilon(tol).scale(1.0));
        const double Lh = ddt([i, j](const cftest::LaggedFields& x) { return x.h[i][j].value(); }) -
                          cftest::trace_hessian(f0, f0.h[i][j]);
        CHECK(Lh == Approx((*r.L_h)(i, j)).epsilon(tol).scale(1.0));
      }
    }
    const double LH = ddt([](const cftest::LaggedFields& x) { return x.H.value(); }) -
                      cftest::trace_hessian(f0, f0.H);
    CHECK(LH == Approx(r.L_H).epsilon(tol).scale(1.0));
    CHECK(*r.L_H_alternate == Approx(r.L_H).epsilon(1e-10).scale(1.0));
    const double Ln = ddt([](const cftest::LaggedFields& x) { return x.hnorm2.value(); }) -
                      cftest::trace_hessian(f0, f0.hnorm2);
    CHECK(Ln == Approx(*r.L_hnorm2).epsilon(tol).scale(1.0));
    CHECK(*r.L_hnorm2 <= r.L_hnorm2_bound + 1e-12);
    const double Lv = ddt([](const cftest::LaggedFields& x) { return x.v.value(); }) -
                      cftest::trace_hessian(f0, f0.v);
    CHECK(Lv == Approx(r.L_v).epsilon(tol).scale(1.0));
  }
}
