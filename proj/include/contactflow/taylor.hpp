#pragma once

// Truncated bivariate Taylor polynomials in the displacement (a, b) about a
// point. Used to carry exact spatial jets through nonlinear pointwise formulas.

#include <array>
#include <cmath>

namespace contactflow {

template <int D>
class Taylor2 {
 public:
  static constexpr int kDegree = D;
  static constexpr int kSize = (D + 1) * (D + 2) / 2;

  static constexpr int index(int i, int j) {
    const int d = i + j;
    return d * (d + 1) / 2 + j;
  }

  Taylor2() { c_.fill(0.0); }
  Taylor2(double value) {  // NOLINT: constants promote implicitly
    c_.fill(0.0);
    c_[0] = value;
  }

  static Taylor2 variable_a(double a0) {
    Taylor2 t(a0);
    if constexpr (D >= 1) t(1, 0) = 1.0;
    return t;
  }
  static Taylor2 variable_b(double b0) {
    Taylor2 t(b0);
    if constexpr (D >= 1) t(0, 1) = 1.0;
    return t;
  }

  // coefficient of a^i b^j
  double operator()(int i, int j) const { return c_[index(i, j)]; }
  double& operator()(int i, int j) { return c_[index(i, j)]; }

  double value() const { return c_[0]; }
  double da() const { return coeff(1, 0); }
  double db() const { return coeff(0, 1); }
  double daa() const { return 2.0 * coeff(2, 0); }
  double dab() const { return coeff(1, 1); }
  double dbb() const { return 2.0 * coeff(0, 2); }

  Taylor2& operator+=(const Taylor2& o) {
    for (int k = 0; k < kSize; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Taylor2& operator-=(const Taylor2& o) {
    for (int k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Taylor2& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }
  Taylor2& operator/=(double s) {
    for (auto& x : c_) x /= s;
    return *this;
  }
  Taylor2& operator*=(const Taylor2& o) { return *this = *this * o; }
  Taylor2& operator/=(const Taylor2& o) { return *this = *this / o; }

  friend Taylor2 operator-(Taylor2 a) {
    for (auto& x : a.c_) x = -x;
    return a;
  }
  friend Taylor2 operator+(Taylor2 a, const Taylor2& b) { return a += b; }
  friend Taylor2 operator-(Taylor2 a, const Taylor2& b) { return a -= b; }
  friend Taylor2 operator+(Taylor2 a, double s) { a.c_[0] += s; return a; }
  friend Taylor2 operator+(double s, Taylor2 a) { a.c_[0] += s; return a; }
  friend Taylor2 operator-(Taylor2 a, double s) { a.c_[0] -= s; return a; }
  friend Taylor2 operator-(double s, const Taylor2& a) { return Taylor2(s) - a; }
  friend Taylor2 operator*(Taylor2 a, double s) { return a *= s; }
  friend Taylor2 operator*(double s, Taylor2 a) { return a *= s; }
  friend Taylor2 operator/(Taylor2 a, double s) { return a /= s; }
  friend Taylor2 operator/(double s, const Taylor2& a) { return s * reciprocal(a); }

  friend Taylor2 operator*(const Taylor2& x, const Taylor2& y) {
    Taylor2 r;
    for (int d1 = 0; d1 <= D; ++d1)
      for (int j1 = 0; j1 <= d1; ++j1) {
        const double xc = x(d1 - j1, j1);
        if (xc == 0.0) continue;
        for (int d2 = 0; d1 + d2 <= D; ++d2)
          for (int j2 = 0; j2 <= d2; ++j2) r(d1 - j1 + d2 - j2, j1 + j2) += xc * y(d2 - j2, j2);
      }
    return r;
  }
  friend Taylor2 operator/(const Taylor2& x, const Taylor2& y) { return x * reciprocal(y); }

  // f(x0 + delta) from the scaled derivatives f_k = f^(k)(x0)/k!
  static Taylor2 compose(const std::array<double, D + 1>& f, const Taylor2& x) {
    Taylor2 delta = x;
    delta.c_[0] = 0.0;
    Taylor2 r(f[D]);
    for (int k = D - 1; k >= 0; --k) r = r * delta + f[k];
    return r;
  }

  friend Taylor2 reciprocal(const Taylor2& x) {
    const double x0 = x.value();
    std::array<double, D + 1> f{};
    double p = 1.0 / x0;
    for (int k = 0; k <= D; ++k) {
      f[k] = p;
      p *= -1.0 / x0;
    }
    return compose(f, x);
  }

  friend Taylor2 sqrt(const Taylor2& x) {
    const double x0 = x.value();
    std::array<double, D + 1> f{};
    double binom = 1.0;  // binom(1/2, k)
    for (int k = 0; k <= D; ++k) {
      f[k] = binom * std::sqrt(x0) / std::pow(x0, k);
      binom *= (0.5 - k) / (k + 1);
    }
    return compose(f, x);
  }

  template <int E>
  Taylor2<E> truncate() const {
    static_assert(E <= D);
    Taylor2<E> r;
    for (int d = 0; d <= E; ++d)
      for (int j = 0; j <= d; ++j) r(d - j, j) = (*this)(d - j, j);
    return r;
  }

  Taylor2<D - 1> partial_a() const {
    Taylor2<D - 1> r;
    for (int d = 0; d < D; ++d)
      for (int j = 0; j <= d; ++j) r(d - j, j) = (d - j + 1) * (*this)(d - j + 1, j);
    return r;
  }
  Taylor2<D - 1> partial_b() const {
    Taylor2<D - 1> r;
    for (int d = 0; d < D; ++d)
      for (int j = 0; j <= d; ++j) r(d - j, j) = (j + 1) * (*this)(d - j, j + 1);
    return r;
  }

 private:
  double coeff(int i, int j) const { return i + j <= D ? (*this)(i, j) : 0.0; }
  std::array<double, kSize> c_;
};

}  // namespace contactflow
