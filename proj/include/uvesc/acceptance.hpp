#pragma once

#include <string>
#include <vector>

#include "uvesc/config.hpp"

namespace uvesc {

struct AcceptanceCheck {
  std::string name;
  double value;
  double limit;
  /// "<=", "<", ">=", ">" or "==".
  std::string relation;
  bool passed;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<AcceptanceCheck> checks;
  double runtime_s = 0.0;
  double runtime_limit_s = 0.0;
  json details;

  bool passed() const;
  /// One line: PASS/FAIL, id, title and every check with its limit.
  std::string summary() const;
  json to_json() const;
};

inline constexpr int kCriterionCount = 6;

/// Criteria are defined on the embedded example configuration.
CriterionResult run_criterion(int id, const ExperimentConfig& cfg);
std::vector<CriterionResult> run_all_criteria(const ExperimentConfig& cfg);

}  // namespace uvesc
