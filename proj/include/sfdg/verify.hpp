#pragma once

#include "sfdg/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sfdg {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;     ///< measured quantity (error, drift, deviation)
    double tolerance = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool pass() const;
    std::string to_json() const;
    void print(std::ostream& os) const;
};

/// Desk-scale invariant suites: oracle equivalence of the configured problem and
/// of A, B, C; sum-factorization oracle; mass conservation; cost-model exactness.
VerifyReport run_verification(const RunConfig& cfg);

} // namespace sfdg
