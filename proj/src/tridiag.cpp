#include "contactflow/tridiag.hpp"

#include <stdexcept>

namespace contactflow {

std::vector<double> solve(TridiagonalSystem s) {
  const std::size_t n = s.size();
  if (n == 0) return {};
  if (n >= 3 && s.first_extra != 0.0) {
    // eliminate x[2] from row 0 with row 1
    const double f = s.first_extra / s.upper[1];
    s.diag[0] -= f * s.lower[1];
    s.upper[0] -= f * s.diag[1];
    s.rhs[0] -= f * s.rhs[1];
  }
  if (n >= 3 && s.last_extra != 0.0) {
    const std::size_t k = n - 2;
    const double f = s.last_extra / s.lower[k];
    s.lower[n - 1] -= f * s.diag[k];
    s.diag[n - 1] -= f * s.upper[k];
    s.rhs[n - 1] -= f * s.rhs[k];
  }
  std::vector<double> c(n), d(n), x(n);
  double m = s.diag[0];
  if (m == 0.0) throw std::runtime_error("singular tridiagonal system");
  c[0] = s.upper[0] / m;
  d[0] = s.rhs[0] / m;
  for (std::size_t i = 1; i < n; ++i) {
    m = s.diag[i] - s.lower[i] * c[i - 1];
    if (m == 0.0) throw std::runtime_error("singular tridiagonal system");
    c[i] = s.upper[i] / m;
    d[i] = (s.rhs[i] - s.lower[i] * d[i - 1]) / m;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace contactflow
