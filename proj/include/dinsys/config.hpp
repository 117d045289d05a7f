#pragma once

#include <string>
#include <vector>

#include "dinsys/problems.hpp"

// Flat INI-style run configuration: sections [problem], [solver],
// [output], [sweep]; '#' or ';' comments; key = value lines.

namespace dinsys {

struct OutputConfig {
  std::string dir = "out";
  bool edi = true;
  bool apriori = true;
  bool audit = true;
  std::vector<double> shift_gaps;  // h values for the shift-gap report
  int audit_samples = 200;
  unsigned seed = 2024;
};

struct SweepConfig {
  bool present = false;
  std::vector<double> taus;  // strictly decreasing
  double reference_tau = 0.0;
};

struct RunConfig {
  ProblemConfig problem;
  SolverConfig solver;
  OutputConfig output;
  SweepConfig sweep;
  std::vector<std::string> warnings;  // unknown keys in lenient mode
};

// Parse and validate; unknown keys are errors when strict, otherwise
// collected into warnings. Throws ContractViolation with a line number
// on parse errors and with the field name on validation errors.
RunConfig parse_config(const std::string& path, bool strict = false);

}  // namespace dinsys
