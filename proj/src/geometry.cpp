#include "contactflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace contactflow {

namespace {

using Arr = std::array<double, 3>;
using Arr2 = std::array<std::array<double, 3>, 3>;

Mat to_mat(int n, const Arr2& a) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = a[i][j];
  return m;
}

// Closed-form inverse for n <= 3.
Mat small_inverse(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  Mat inv(n, n);
  if (n == 1) {
    inv(0, 0) = 1.0 / A(0, 0);
  } else if (n == 2) {
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    inv << A(1, 1) / det, -A(0, 1) / det, -A(1, 0) / det, A(0, 0) / det;
  } else {
    const double c00 = A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
    const double c01 = A(1, 2) * A(2, 0) - A(1, 0) * A(2, 2);
    const double c02 = A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0);
    const double det = A(0, 0) * c00 + A(0, 1) * c01 + A(0, 2) * c02;
    inv(0, 0) = c00;
    inv(1, 0) = c01;
    inv(2, 0) = c02;
    inv(0, 1) = A(0, 2) * A(2, 1) - A(0, 1) * A(2, 2);
    inv(1, 1) = A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0);
    inv(2, 1) = A(0, 1) * A(2, 0) - A(0, 0) * A(2, 1);
    inv(0, 2) = A(0, 1) * A(1, 2) - A(0, 2) * A(1, 1);
    inv(1, 2) = A(0, 2) * A(1, 0) - A(0, 0) * A(1, 2);
    inv(2, 2) = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    inv /= det;
  }
  return inv;
}

double small_det(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  if (n == 1) return A(0, 0);
  if (n == 2) return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  return A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
         A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
         A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
}

void check_dim(int n) {
  if (n < 1 || n > 3) throw DomainError("dimension must be 1, 2 or 3, got " + std::to_string(n));
}

}  // namespace

AngleParams::AngleParams(double beta) : beta_(beta) {
  if (!(beta > 0.0 && beta < 1.0))
    throw DomainError("contact angle parameter beta must lie in (0,1), got " + std::to_string(beta));
}

MetricData compute_metric(const Vec& Dw) {
  const int n = static_cast<int>(Dw.size());
  check_dim(n);
  MetricData m;
  const double q = Dw.squaredNorm();
  m.v = std::sqrt(1.0 + q);
  m.g = Mat::Identity(n, n) + Dw * Dw.transpose();
  m.ginv = Mat::Identity(n, n) - Dw * Dw.transpose() / (1.0 + q);
  m.ill_conditioned = 1.0 + q > kGradientBlowupV2;
  return m;
}

ShapeData compute_shape(const Vec& Dw, const Mat& D2w) {
  const int n = static_cast<int>(Dw.size());
  check_dim(n);
  Arr dw{};
  Arr2 d2w{};
  for (int i = 0; i < n; ++i) {
    dw[i] = Dw(i);
    for (int j = 0; j < n; ++j) d2w[i][j] = 0.5 * (D2w(i, j) + D2w(j, i));
  }
  const auto f = graph_fields<double>(n, dw, d2w);
  ShapeData s;
  s.metric = compute_metric(Dw);
  s.h = to_mat(n, f.h);
  s.S = to_mat(n, f.weingarten);
  s.h2 = to_mat(n, f.h2);
  s.h3 = to_mat(n, f.h3);
  s.H = f.H;
  s.h_norm2 = f.hnorm2;
  s.omega = Vec(n);
  for (int i = 0; i < n; ++i) s.omega(i) = f.omega[i];
  return s;
}

MetricData gauge_metric(const Mat& DF) {
  const int n = static_cast<int>(DF.rows());
  check_dim(n);
  if (DF.cols() != n + 1) throw DomainError("gauge jet must be n x (n+1)");
  MetricData m;
  m.g = DF * DF.transpose();
  const double det = small_det(m.g);
  double scale = 1.0;
  for (int i = 0; i < n; ++i) scale *= m.g(i, i);
  if (!(det > 1e-14 * scale) || !(scale > 0.0))
    throw DegenerateImmersion("rank-deficient jet: det g = " + std::to_string(det));
  m.ginv = small_inverse(m.g);
  m.v = gauge_v(DF);
  m.ill_conditioned = m.v * m.v > kGradientBlowupV2;
  return m;
}

NormalData cross_normal(const Mat& DF) {
  const int n = static_cast<int>(DF.rows());
  check_dim(n);
  if (DF.cols() != n + 1) throw DomainError("gauge jet must be n x (n+1)");
  NormalData out;
  out.Ntilde = Vec(n + 1);
  for (int k = 0; k <= n; ++k) {
    Mat minor(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0, c = 0; j <= n; ++j)
        if (j != k) minor(i, c++) = DF(i, j);
    // (-1)^n times the cofactor of e_k in the first row; component n is det Dphi
    const double sign = ((n + k) % 2 == 0) ? 1.0 : -1.0;
    out.Ntilde(k) = sign * small_det(minor);
  }
  const double len = out.Ntilde.norm();
  if (!(len > 0.0)) throw DegenerateImmersion("vector-product normal vanishes");
  out.Jphi = out.Ntilde(n);
  if (!(out.Jphi > 0.0))
    throw OrientationLoss("det Dphi = " + std::to_string(out.Jphi) + " <= 0");
  out.Jvec = out.Ntilde.head(n);
  out.N = out.Ntilde / len;
  return out;
}

double gauge_v(const Mat& DF) {
  const NormalData nd = cross_normal(DF);
  return nd.Ntilde.norm() / nd.Jphi;
}

double graph_rhs(const Vec& Dw, const Mat& D2w) {
  const MetricData m = compute_metric(Dw);
  return (m.ginv.cwiseProduct(D2w)).sum();
}

Vec gauge_rhs(const GaugeJet& jet) {
  const int n = jet.dim();
  const MetricData m = gauge_metric(jet.DF);
  Vec out(n + 1);
  for (int k = 0; k <= n; ++k) out(k) = (m.ginv.cwiseProduct(jet.D2F[k].topLeftCorner(n, n))).sum();
  return out;
}

double gauge_mean_curvature(const GaugeJet& jet) {
  const int n = jet.dim();
  const MetricData m = gauge_metric(jet.DF);
  const NormalData nd = cross_normal(jet.DF);
  Mat h = Mat::Zero(n, n);
  for (int k = 0; k <= n; ++k) h += nd.N(k) * jet.D2F[k].topLeftCorner(n, n);
  return (m.ginv.cwiseProduct(h)).sum();
}

void graph_jet_from_gauge(const GaugeJet& jet, Vec& Dw, Mat& D2w) {
  const int n = jet.dim();
  Mat A(n, n);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) A(c, a) = jet.DF(a, c);
  if (!(std::abs(small_det(A)) > 0.0)) throw OrientationLoss("singular Dphi");
  const Mat Ainv = small_inverse(A);
  const Vec Du = jet.DF.col(n);
  Dw = Ainv.transpose() * Du;
  Mat inner = jet.D2F[n].topLeftCorner(n, n);
  for (int c = 0; c < n; ++c) inner -= Dw(c) * jet.D2F[c].topLeftCorner(n, n);
  D2w = Ainv.transpose() * inner * Ainv;
  D2w = (0.5 * (D2w + D2w.transpose())).eval();
}

EvolutionRhs evolution_rhs(const ShapeData& s, const HDerivatives* dh) {
  const int n = s.dim();
  const Mat& ginv = s.metric.ginv;
  const Vec& w = s.omega;
  const double v = s.metric.v;
  const Vec hw = s.h * w;
  const Vec h2w = s.h2 * w;
  const double h_ww = w.dot(hw);
  const double h2_ww = w.dot(h2w);

  EvolutionRhs r;
  r.L_omega = s.h_norm2 * w;
  r.L_ginv = -2.0 * s.h_norm2 * w * w.transpose() + 2.0 * ginv * s.h2 * ginv;
  r.L_H = s.h_norm2 * s.H;
  r.L_hnorm2_bound = 2.0 * s.h_norm2 * s.h_norm2;
  r.L_v = -v * s.h_norm2 - 2.0 * v * h2_ww;
  r.C = -2.0 * (hw * h2w.transpose() + h2w * hw.transpose()) - 2.0 * s.h3 - 2.0 * h_ww * s.h2 +
        s.h_norm2 * s.h;
  if (!dh) return r;

  const HDerivatives nab = covariant_from_euclidean(s, *dh);
  Mat grad = Mat::Zero(n, n);
  for (int m = 0; m < n; ++m) grad += w(m) * (nab[m] * ginv * s.h + s.h * ginv * nab[m]);
  r.grad_term = -2.0 * grad;
  r.L_h = *r.grad_term + r.C;

  double gn2 = 0.0;
  for (int m = 0; m < n; ++m)
    for (int a = 0; a < n; ++a) gn2 += ginv(m, a) * (ginv * nab[m] * ginv).cwiseProduct(nab[a]).sum();
  r.grad_h_norm2 = gn2;
  r.L_hnorm2 = -2.0 * gn2 + 2.0 * s.h_norm2 * s.h_norm2;

  // L[H] = L[g^{ij}] h_ij + g^{ij} L[h_ij] - 2 g^{kl} (d_k g^{ij}) (d_l h_ij)
  const ConnectionData con = connection_term(s);
  double cross = 0.0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) cross += ginv(k, l) * con.dginv[k].cwiseProduct((*dh)[l]).sum();
  r.L_H_alternate = r.L_ginv.cwiseProduct(s.h).sum() + ginv.cwiseProduct(*r.L_h).sum() - 2.0 * cross;
  return r;
}

ConnectionData connection_term(const ShapeData& s) {
  const int n = s.dim();
  ConnectionData c;
  const Mat hup = s.S;  // h_k^i = g^{ia} h_ak, stored as hup(i, k)
  for (int k = 0; k < 3; ++k) {
    c.christoffel[k] = Mat::Zero(n, n);
    c.dginv[k] = Mat::Zero(n, n);
  }
  for (int k = 0; k < n; ++k) {
    c.christoffel[k] = s.h * s.omega(k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c.dginv[k](i, j) = -(hup(i, k) * s.omega(j) + hup(j, k) * s.omega(i));
  }
  return c;
}

namespace {

HDerivatives shift_h(const ShapeData& s, const HDerivatives& in, double sign) {
  const int n = s.dim();
  const Vec hw = s.h * s.omega;
  HDerivatives out;
  for (int m = 0; m < 3; ++m) out[m] = Mat::Zero(n, n);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out[m](i, j) = in[m](i, j) + sign * (s.h(j, m) * hw(i) + s.h(i, m) * hw(j));
  return out;
}

}  // namespace

HDerivatives covariant_from_euclidean(const ShapeData& s, const HDerivatives& dh) {
  return shift_h(s, dh, -1.0);
}

HDerivatives euclidean_from_covariant(const ShapeData& s, const HDerivatives& nabla_h) {
  return shift_h(s, nabla_h, 1.0);
}

Vec symmetric_eigenvalues(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  Vec ev(n);
  if (n == 1) {
    ev(0) = A(0, 0);
  } else if (n == 2) {
    const double m = 0.5 * (A(0, 0) + A(1, 1));
    const double d = 0.5 * (A(0, 0) - A(1, 1));
    const double r = std::hypot(d, 0.5 * (A(0, 1) + A(1, 0)));
    ev << m - r, m + r;
  } else {
    // cyclic Jacobi with closed-form 2x2 rotations; exact to rounding even for
    // repeated eigenvalues, where the trigonometric cubic formula is not
    Eigen::Matrix3d B = A.topLeftCorner(3, 3);
    B = 0.5 * (B + B.transpose()).eval();
    for (int sweep = 0; sweep < 60; ++sweep) {
      const double off = B(0, 1) * B(0, 1) + B(0, 2) * B(0, 2) + B(1, 2) * B(1, 2);
      if (off <= 1e-34 * B.squaredNorm()) break;
      for (int p = 0; p < 2; ++p)
        for (int q = p + 1; q < 3; ++q) {
          if (B(p, q) == 0.0) continue;
          const double theta = (B(q, q) - B(p, p)) / (2.0 * B(p, q));
          const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
          J(p, p) = c;
          J(q, q) = c;
          J(p, q) = t * c;
          J(q, p) = -t * c;
          B = (J.transpose() * B * J).eval();
        }
    }
    ev << B(0, 0), B(1, 1), B(2, 2);
  }
  std::sort(ev.data(), ev.data() + n);
  return ev;
}

double max_metric_eigenvalue(const Mat& h, const Mat& ginv) {
  // eigenvalues of g^{-1}h equal those of L^T h L with ginv = L L^T
  const Eigen::LLT<Mat> llt(ginv);
  const Mat L = llt.matrixL();
  const Mat B = L.transpose() * h * L;
  return symmetric_eigenvalues(0.5 * (B + B.transpose())).maxCoeff();
}

}  // namespace contactflow
