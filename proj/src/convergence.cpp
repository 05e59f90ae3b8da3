#include <algorithm>
#include <cmath>
#include <future>

#include "contactflow/errors.hpp"
#include "contactflow/monitors.hpp"

namespace contactflow {

ConvergenceReport observed_orders(const std::vector<double>& deltas, const std::vector<double>& errors) {
  if (deltas.size() != errors.size() || deltas.size() < 2) throw DomainError("need matching deltas and errors, >= 2");
  ConvergenceReport r;
  r.deltas = deltas;
  r.errors = errors;
  r.conclusive = true;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) {
      r.conclusive = false;
      r.note = "zero or non-finite error";
    }
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw DomainError("deltas must decrease");
  }
  if (!r.conclusive) return r;
  if (*std::max_element(errors.begin(), errors.end()) < 1e-13) {
    r.conclusive = false;
    r.note = "errors at round-off level";
    return r;
  }
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    r.orders.push_back(std::log(errors[i] / errors[i + 1]) / std::log(deltas[i] / deltas[i + 1]));
    if (!(errors[i + 1] < errors[i])) {
      r.conclusive = false;
      r.note = "errors do not decrease monotonically";
    }
  }
  r.order = *std::min_element(r.orders.begin(), r.orders.end());
  return r;
}

ConvergenceReport richardson_order(const std::vector<double>& deltas, const std::vector<double>& values) {
  if (deltas.size() != 3 || values.size() != 3) throw DomainError("Richardson needs exactly three levels");
  const double ratio = deltas[0] / deltas[1];
  if (std::abs(deltas[1] / deltas[2] - ratio) > 1e-9 * ratio) throw DomainError("Richardson needs a constant ratio");
  ConvergenceReport r = observed_orders({deltas[0], deltas[1]},
                                        {std::abs(values[0] - values[1]), std::abs(values[1] - values[2])});
  r.deltas = deltas;
  if (!r.orders.empty()) {
    // differences shrink by ratio^p, same as the errors themselves
    r.orders = {std::log(r.errors[0] / r.errors[1]) / std::log(ratio)};
    r.order = r.orders[0];
  }
  return r;
}

ConvergenceReport convergence_study(const std::function<double(int)>& error, const std::vector<int>& resolutions,
                                    bool parallel) {
  if (resolutions.size() < 3) throw DomainError("convergence study needs >= 3 resolutions");
  std::vector<double> deltas, errors(resolutions.size());
  for (int n : resolutions) deltas.push_back(1.0 / n);
  if (parallel) {
    std::vector<std::future<double>> jobs;
    for (int n : resolutions) jobs.push_back(std::async(std::launch::async, error, n));
    for (std::size_t i = 0; i < jobs.size(); ++i) errors[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < resolutions.size(); ++i) errors[i] = error(resolutions[i]);
  }
  return observed_orders(deltas, errors);
}

}  // namespace contactflow
