#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "uvesc/acceptance.hpp"
#include "uvesc/errors.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) {
    for (int id = 1; id <= uvesc::kCriterionCount; ++id) ids.push_back(id);
  }
  try {
    const uvesc::ExperimentConfig cfg = uvesc::parse_config(uvesc::example_config_json());
    int failed = 0;
    for (int id : ids) {
      const uvesc::CriterionResult r = uvesc::run_criterion(id, cfg);
      std::cout << r.summary() << '\n';
      if (!r.passed()) ++failed;
    }
    std::cout << (ids.size() - failed) << '/' << ids.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << '\n';
    return 2;
  }
}
