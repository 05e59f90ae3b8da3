#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace contactflow {

struct AcceptanceOptions {
  // Fault injection: scales the catenoid used as the reference in criteria 1 and 2.
  double catenoid_scale = 1.0;
  double time_budget_seconds = 300.0;
};

struct CriterionResult {
  std::string id;  // "1".."11"; informational lines carry a suffix
  std::string name;
  bool pass = false;
  bool informational = false;  // reported, never counted
  std::string detail;
};

// Runs every acceptance criterion in order. Deterministic apart from the wall
// time entering criterion 10.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

std::string format_line(const CriterionResult& r);
bool all_pass(const std::vector<CriterionResult>& results);
nlohmann::json acceptance_json(const std::vector<CriterionResult>& results);

}  // namespace contactflow
