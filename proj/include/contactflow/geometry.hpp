#pragma once

#include <array>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "contactflow/errors.hpp"

namespace contactflow {

// Dense storage for n <= 3 (jets of F are n x (n+1)).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

class AngleParams {
 public:
  explicit AngleParams(double beta);
  double beta() const { return beta_; }
  double beta0() const { return std::sqrt(1.0 - beta_ * beta_); }
  // |Dw| on the junction, = beta0/beta
  double junction_slope() const { return beta0() / beta_; }

 private:
  double beta_;
};

// Above this v^2 the metric inverse is flagged rather than trusted.
inline constexpr double kGradientBlowupV2 = 1e8;

struct MetricData {
  Mat g;
  Mat ginv;
  double v = 1.0;
  bool ill_conditioned = false;
};

struct ShapeData {
  MetricData metric;
  Mat h;
  double H = 0.0;
  double h_norm2 = 0.0;
  Vec omega;
  Mat h2;
  Mat h3;
  Mat S;  // Weingarten map S^i_j = g^{ik} h_kj
  int dim() const { return static_cast<int>(h.rows()); }
};

struct NormalData {
  Vec Ntilde;
  Vec N;
  Vec Jvec;
  double Jphi = 0.0;
};

// First and second derivatives of F = [phi, u] at a node, in an orthonormal
// frame of the parameter domain. DF.row(i) = d_i F; D2F[k](i, j) = d_i d_j F^k.
struct GaugeJet {
  Mat DF;
  std::array<Mat, 4> D2F;
  int dim() const { return static_cast<int>(DF.rows()); }
};

MetricData compute_metric(const Vec& Dw);
ShapeData compute_shape(const Vec& Dw, const Mat& D2w);
MetricData gauge_metric(const Mat& DF);
NormalData cross_normal(const Mat& DF);
double graph_rhs(const Vec& Dw, const Mat& D2w);
Vec gauge_rhs(const GaugeJet& jet);
// h_ij = <F_ij, N> and H = g^{ij} h_ij for a gauge jet
double gauge_mean_curvature(const GaugeJet& jet);
// |N~| / J_phi; equals sqrt(1 + |Dw|^2) of the graph the jet describes
double gauge_v(const Mat& DF);

// Graph jet (Dw, D2w in the image coordinates) of the surface described by an
// n = 2 gauge jet: Dw = A^{-T} Du, D2w = A^{-T}(D2u - w_c D2phi^c) A^{-1}, A = Dphi.
void graph_jet_from_gauge(const GaugeJet& jet, Vec& Dw, Mat& D2w);

// Euclidean derivatives of h: dh[m](i, j) = d_m h_ij.
using HDerivatives = std::array<Mat, 3>;

struct EvolutionRhs {
  Vec L_omega;
  Mat L_ginv;
  double L_H = 0.0;
  double L_hnorm2_bound = 0.0;  // 2|h|^4, dropping the -2|grad h|^2 term
  double L_v = 0.0;
  Mat C;
  // Filled only when spatial derivatives of h are supplied.
  std::optional<Mat> grad_term;  // -2 grad_omega(h^2)
  std::optional<Mat> L_h;
  std::optional<double> L_hnorm2;
  std::optional<double> grad_h_norm2;
  std::optional<double> L_H_alternate;
};

// Closed-form right-hand sides of L[f] = f_t - g^{ij} f_ij along graph mean
// curvature motion.
EvolutionRhs evolution_rhs(const ShapeData& shape, const HDerivatives* dh = nullptr);

struct ConnectionData {
  std::array<Mat, 3> christoffel;  // christoffel[k](i, j): k-th component of nabla_i d_j = h_ij omega^k
  std::array<Mat, 3> dginv;        // dginv[k](i, j) = d_k g^{ij}
};

ConnectionData connection_term(const ShapeData& shape);
// nabla_m h_ij = d_m h_ij - (h_jm h_ik + h_im h_jk) omega^k, and its inverse
HDerivatives covariant_from_euclidean(const ShapeData& shape, const HDerivatives& dh);
HDerivatives euclidean_from_covariant(const ShapeData& shape, const HDerivatives& nabla_h);

// Symmetric 2x2/3x3 eigenvalues, ascending, closed form.
Vec symmetric_eigenvalues(const Mat& A);
// Largest eigenvalue of h relative to g (same sign pattern as the euclidean one).
double max_metric_eigenvalue(const Mat& h, const Mat& ginv);

// Scalar-generic graph geometry. Instantiated with double and with Taylor2 so
// the monitors can differentiate every field exactly through the formulas.
template <class S>
struct GraphFields {
  using M3 = std::array<std::array<S, 3>, 3>;
  int n = 0;
  S v;
  std::array<S, 3> omega;
  M3 g, ginv, h, weingarten, h2, h3;
  S H, hnorm2;
};

template <class S>
GraphFields<S> graph_fields(int n, const std::array<S, 3>& Dw,
                            const std::array<std::array<S, 3>, 3>& D2w) {
  using std::sqrt;
  GraphFields<S> f;
  f.n = n;
  S q(0.0);
  for (int i = 0; i < n; ++i) q += Dw[i] * Dw[i];
  const S v2 = S(1.0) + q;
  f.v = sqrt(v2);
  const S inv_v2 = S(1.0) / v2;
  const S inv_v = S(1.0) / f.v;
  for (int i = 0; i < n; ++i) {
    f.omega[i] = Dw[i] * inv_v;
    for (int j = 0; j < n; ++j) {
      const S d(i == j ? 1.0 : 0.0);
      f.g[i][j] = d + Dw[i] * Dw[j];
      f.ginv[i][j] = d - Dw[i] * Dw[j] * inv_v2;
      f.h[i][j] = D2w[i][j] * inv_v;
    }
  }
  auto mul = [n](const auto& A, const auto& B) {
    typename GraphFields<S>::M3 C;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S s(0.0);
        for (int k = 0; k < n; ++k) s += A[i][k] * B[k][j];
        C[i][j] = s;
      }
    return C;
  };
  f.weingarten = mul(f.ginv, f.h);
  f.h2 = mul(f.h, f.weingarten);
  f.h3 = mul(f.h2, f.weingarten);
  const auto S2 = mul(f.weingarten, f.weingarten);
  f.H = S(0.0);
  f.hnorm2 = S(0.0);
  for (int i = 0; i < n; ++i) {
    f.H += f.weingarten[i][i];
    f.hnorm2 += S2[i][i];
  }
  return f;
}

}  // namespace contactflow
