#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace egoreg {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kSelfcheckFormat = "egoreg-selfcheck v1";

struct SelfcheckOptions {
    /// Test hook: added to every synthesized P before the CARE checks.
    double gain_perturbation = 0.0;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;      // measured error
    double tolerance = 0.0;  // pass threshold
};

/// Runs the numerical oracle suite. Deterministic: fixed seeds, no timing.
std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options = {});

/// Prints the header and one PASS/FAIL line per check. Returns true iff all
/// checks passed.
bool print_selfcheck(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace egoreg
