#pragma once

#include <string>
#include <vector>

namespace sfdg {

struct AffinityReport {
    bool requested = false;
    bool succeeded = false;
    int threads = 1;
    std::vector<int> cpus; ///< cpu of OpenMP thread i
    std::string detail;
};

/// Pins OpenMP thread i of a team of `threads` to the i-th available cpu (round robin).
AffinityReport pin_threads(int threads);

/// Cpus in the calling thread's affinity mask.
std::vector<int> available_cpus();

} // namespace sfdg
