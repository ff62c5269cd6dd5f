#pragma once

#include "mrt/scenario.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mrt {

struct CheckResult {
  std::string name;
  bool pass = false;
  double error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

// Cross-checks every computational route against an independent one on the
// given scenario (pulse-dependent checks use a pulse copy of it).
std::vector<CheckResult> run_oracle_suite(const Scenario& s, int threads = 0);

nlohmann::json to_json(const std::vector<CheckResult>& checks);

}  // namespace mrt
