#include "sfdg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace sfdg {

double median(std::vector<double> v) {
    if (v.empty())
        throw std::invalid_argument("median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DimArray<index_t> auto_cells(int d, int p, double dof_budget) {
    if (!(dof_budget > 0.0))
        throw std::invalid_argument("auto_cells: budget must be positive");
    const double per_cell = std::pow(p + 1.0, d);
    const auto n = std::max<index_t>(2, static_cast<index_t>(std::llround(std::pow(dof_budget / per_cell, 1.0 / d))));
    return {n, n, d == 3 ? n : 1};
}

DimArray<index_t> fit_matrix_cells(int d, int p, double dof_budget, std::size_t cap) {
    auto c = auto_cells(d, p, dof_budget);
    const index_t bs = ipow(p + 1, d);
    for (;;) {
        MeshConfig mc;
        mc.dim = d;
        mc.cells = c;
        mc.periodic = {true, true, true};
        if (estimate_matrix_bytes(StructuredMesh(mc), bs) <= cap || c[0] <= 2)
            return c;
        for (int k = 0; k < d; ++k)
            --c[k];
    }
}

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

BenchRow make_row(const BenchCase& c, const StructuredMesh& mesh, index_t dofs, std::string backend, double secs,
                  double flops) {
    BenchRow r;
    r.backend = std::move(backend);
    r.problem = c.problem;
    r.d = c.dim;
    r.p = c.degree;
    r.cells = mesh.num_elements();
    r.dofs = dofs;
    r.seconds = secs;
    r.dofs_per_sec = secs > 0.0 ? static_cast<double>(dofs) / secs : 0.0;
    r.modeled_flops = flops;
    r.flops_per_sec_model = secs > 0.0 ? flops / secs : 0.0;
    return r;
}

} // namespace

std::vector<BenchRow> run_bench(const BenchCase& c) {
    if (c.reps < 1)
        throw std::invalid_argument("bench: repetitions must be positive");
    if (c.warmup < 1)
        throw std::invalid_argument("bench: at least one warmup iteration is required");
    Problem pr = make_problem(c.problem, c.dim, c.cells);
    StructuredMesh mesh(pr.mesh);
    OperatorOptions o;
    o.degree = c.degree;
    o.quad_points = pr.quad_points(c.degree);
    o.threads = c.threads;
    DgOperator op(mesh, pr.coeffs, o);
    DofVector z = op.create_vector(), y = op.create_vector();
    for (index_t i = 0; i < z.size(); ++i)
        z[i] = std::sin(0.001 * static_cast<double>(i));
    std::vector<BenchRow> rows;

    if (c.backend == Backend::matrix_free) {
        for (int w = 0; w < c.warmup; ++w)
            op.apply(z, 0.0, y);
        std::vector<double> t;
        for (int r = 0; r < c.reps; ++r) {
            const auto t0 = clock_type::now();
            op.apply(z, 0.0, y);
            t.push_back(seconds_since(t0));
        }
        rows.push_back(make_row(c, mesh, op.num_dofs(), "matrix-free", median(t),
                                static_cast<double>(op.modeled_flops())));
        return rows;
    }

    const std::size_t need = estimate_matrix_bytes(mesh, op.block_size());
    if (need > c.matrix_cap)
        throw ResourceError("bench: block matrix needs " + std::to_string(need) + " bytes, cap is " +
                                std::to_string(c.matrix_cap),
                            need);
    std::vector<double> ta;
    BlockSparseMatrix a;
    for (int r = 0; r < std::max(1, c.assembly_reps); ++r) {
        a = BlockSparseMatrix{};
        const auto t0 = clock_type::now();
        a = assemble_matrix(op, 0.0, c.matrix_cap);
        ta.push_back(seconds_since(t0));
    }
    const double spmv_flops = 2.0 * static_cast<double>(a.values.size());
    for (int w = 0; w < c.warmup; ++w)
        spmv(a, z, y, c.threads);
    std::vector<double> t;
    for (int r = 0; r < c.reps; ++r) {
        const auto t0 = clock_type::now();
        spmv(a, z, y, c.threads);
        t.push_back(seconds_since(t0));
    }
    rows.push_back(make_row(c, mesh, op.num_dofs(), "matrix-based", median(t), spmv_flops));
    rows.push_back(make_row(c, mesh, op.num_dofs(), "matrix-assembly", median(ta), 0.0));
    return rows;
}

void write_bench_header(std::ostream& os) {
    os << "backend,problem,d,p,cells,dofs,seconds,dofs_per_sec,modeled_flops,flops_per_sec_model\n";
}

void write_bench_row(const BenchRow& r, std::ostream& os) {
    os << r.backend << ',' << r.problem << ',' << r.d << ',' << r.p << ',' << r.cells << ',' << r.dofs << ','
       << shortest(r.seconds) << ',' << shortest(r.dofs_per_sec) << ',' << shortest(r.modeled_flops) << ','
       << shortest(r.flops_per_sec_model) << '\n';
}

} // namespace sfdg
