#pragma once

#include "sfdg/problems.hpp"
#include "sfdg/timestep.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sfdg {

enum class Backend { matrix_free, matrix_based };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);

struct RunConfig {
    struct MeshSection {
        int dim = 3;
        DimArray<index_t> cells{4, 4, 4};
        double perturbation = -1.0; ///< multilinear problems: negative keeps the problem default
    } mesh;
    struct ProblemSection {
        std::string id = "a";
        CustomCoefficients custom;
    } problem;
    struct DiscretizationSection {
        int degree = 2;
        int quad_points = 0; ///< 0: the problem's rule
        double alpha = 2.0;
    } discretization;
    struct TimeSection {
        Scheme scheme = Scheme::heun;
        double dt = 0.0; ///< 0: advisory step
        double courant = 0.3;
        index_t steps = 10;
        index_t diagnostics_every = 1;
        index_t snapshot_every = 0;
    } time;
    struct ExecutionSection {
        int threads = 1;
        Backend backend = Backend::matrix_free;
        bool pin = true;
        std::uint64_t matrix_cap_bytes = std::uint64_t{2} << 30;
    } execution;
    struct BenchSection {
        std::vector<int> degrees{1, 2, 3, 4, 5, 6, 7};
        double dof_budget = 2e6;
        int reps = 5;
        int warmup = 1;
    } bench;
    struct OutputSection {
        std::string dir = "out";
        std::string prefix = "run";
    } output;

    /// Throws ConfigError naming the offending key path.
    void validate() const;
};

/// Strict parse: unknown keys and type mismatches raise ConfigError with the
/// JSON path; syntax errors report line and column.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical serialization (every field, fixed key order).
std::string serialize_config(const RunConfig& cfg);
/// FNV-1a 64 of the canonical serialization.
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex64(std::uint64_t v);

/// Problem described by the mesh and problem sections.
Problem make_problem(const RunConfig& cfg);
OperatorOptions operator_options(const RunConfig& cfg, const Problem& problem);

} // namespace sfdg
