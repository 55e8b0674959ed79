#pragma once

// End-to-end invariant suite on small grids.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace chb {

struct CheckResult {
  std::string name;    ///< "<module>.<property>"
  bool passed = false;
  std::string detail;  ///< measured quantity against its threshold, or the exception text
  double seconds = 0.0;
};

/// Names of all checks, in execution order.
std::vector<std::string> invariant_names();

/// Runs every check; an exception inside a check counts as a failure.
/// `progress` is called after each check.
std::vector<CheckResult> run_invariants(const std::function<void(const CheckResult&)>& progress = {});

inline constexpr const char* kValidateHeader = "check,passed,seconds,detail";
void write_validate_csv(std::ostream& out, const std::vector<CheckResult>& results);

} // namespace chb
