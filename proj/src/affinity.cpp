#include "sfdg/affinity.hpp"

#include <omp.h>
#include <pthread.h>
#include <sched.h>

namespace sfdg {

std::vector<int> available_cpus() {
    std::vector<int> cpus;
    cpu_set_t set;
    CPU_ZERO(&set);
    if (sched_getaffinity(0, sizeof set, &set) == 0)
        for (int c = 0; c < CPU_SETSIZE; ++c)
            if (CPU_ISSET(c, &set))
                cpus.push_back(c);
    return cpus;
}

AffinityReport pin_threads(int threads) {
    AffinityReport r;
    r.requested = true;
    r.threads = threads;
    const auto cpus = available_cpus();
    if (cpus.empty()) {
        r.detail = "affinity mask unavailable";
        return r;
    }
    r.cpus.assign(static_cast<std::size_t>(threads), -1);
    int failures = 0;
#pragma omp parallel num_threads(threads) reduction(+ : failures)
    {
        const int i = omp_get_thread_num();
        const int cpu = cpus[static_cast<std::size_t>(i) % cpus.size()];
        cpu_set_t set;
        CPU_ZERO(&set);
        CPU_SET(cpu, &set);
        if (pthread_setaffinity_np(pthread_self(), sizeof set, &set) == 0)
            r.cpus[static_cast<std::size_t>(i)] = cpu;
        else
            ++failures;
    }
    r.succeeded = failures == 0;
    r.detail = r.succeeded ? "pinned " + std::to_string(threads) + " thread(s) over " +
                                 std::to_string(cpus.size()) + " cpu(s)"
                           : std::to_string(failures) + " thread(s) could not be pinned";
    if (r.succeeded && static_cast<std::size_t>(threads) > cpus.size())
        r.detail += " (oversubscribed)";
    return r;
}

} // namespace sfdg
