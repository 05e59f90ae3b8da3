#include <cstdio>
#include <cstdlib>

#include "contactflow/acceptance.hpp"

int main() {
  contactflow::AcceptanceOptions opts;
  if (const char* b = std::getenv("CONTACTFLOW_TIME_BUDGET")) opts.time_budget_seconds = std::atof(b);
  const auto results = contactflow::run_acceptance(opts);
  for (const auto& r : results) std::printf("%s\n", contactflow::format_line(r).c_str());
  const bool ok = contactflow::all_pass(results);
  std::printf("%s\n", ok ? "acceptance: all criteria pass" : "acceptance: some criteria fail");
  return ok ? 0 : 1;
}
