#pragma once

#include "sfdg/config.hpp"
#include "sfdg/oracle.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sfdg {

struct BenchRow {
    std::string backend;
    std::string problem;
    int d = 3;
    int p = 1;
    index_t cells = 0;
    index_t dofs = 0;
    double seconds = 0.0; ///< median over the timed repetitions
    double dofs_per_sec = 0.0;
    double modeled_flops = 0.0;
    double flops_per_sec_model = 0.0;
};

struct BenchCase {
    std::string problem = "a";
    int dim = 3;
    int degree = 3;
    DimArray<index_t> cells{4, 4, 4};
    Backend backend = Backend::matrix_free;
    int threads = 1;
    int reps = 5;
    int warmup = 1;
    int assembly_reps = 3;
    std::size_t matrix_cap = kDefaultMatrixCap;
};

/// Cubic mesh with roughly `dof_budget` degrees of freedom (at least 2 cells per direction).
DimArray<index_t> auto_cells(int d, int p, double dof_budget);
/// Largest cubic mesh not above auto_cells whose block matrix fits under `cap` bytes.
DimArray<index_t> fit_matrix_cells(int d, int p, double dof_budget, std::size_t cap);

/// Median of `reps` timed operator applications after `warmup` untimed ones.
/// Matrix-based runs add a "matrix-assembly" row timed once per repetition.
std::vector<BenchRow> run_bench(const BenchCase& c);

void write_bench_header(std::ostream& os);
void write_bench_row(const BenchRow& r, std::ostream& os);

double median(std::vector<double> v);

} // namespace sfdg
