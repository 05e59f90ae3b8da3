#pragma once

#include <cstddef>
#include <vector>

namespace contactflow {

// Row i: lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
// Optional second-neighbour entries in the first row (x[2]) and last row
// (x[N-3]) carry one-sided boundary stencils and are eliminated first.
struct TridiagonalSystem {
  std::vector<double> lower, diag, upper, rhs;
  double first_extra = 0.0;
  double last_extra = 0.0;

  explicit TridiagonalSystem(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0) {}
  std::size_t size() const { return diag.size(); }
};

std::vector<double> solve(TridiagonalSystem sys);

}  // namespace contactflow
