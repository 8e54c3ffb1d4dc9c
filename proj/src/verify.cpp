#include "sfdg/verify.hpp"

#include "sfdg/oracle.hpp"
#include "sfdg/perfmodel.hpp"

#include "json.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

namespace sfdg {

bool VerifyReport::pass() const {
    for (const auto& c : checks)
        if (!c.pass)
            return false;
    return !checks.empty();
}

std::string VerifyReport::to_json() const {
    nlohmann::json j;
    j["pass"] = pass();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
        j["checks"].push_back(
            {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}, {"detail", c.detail}});
    return j.dump(2) + "\n";
}

void VerifyReport::print(std::ostream& os) const {
    for (const auto& c : checks)
        os << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(28) << c.name << " value=" << std::setprecision(3)
           << std::scientific << c.value << " tol=" << c.tolerance << std::defaultfloat << "  " << c.detail << '\n';
    os << (pass() ? "all checks passed" : "verification FAILED") << '\n';
}

namespace {

CheckResult oracle_check(const std::string& name, const Problem& pr, const OperatorOptions& o, std::size_t cap) {
    StructuredMesh mesh(pr.mesh);
    const std::size_t need = estimate_matrix_bytes(mesh, ipow(o.degree + 1, mesh.dim()));
    if (need > cap)
        throw ResourceError("verify: oracle matrix for " + name + " needs " + std::to_string(need) +
                                " bytes, cap is " + std::to_string(cap),
                            need);
    DgOperator op(mesh, pr.coeffs, o);
    const auto rep = verify_against_oracle(op, 5, 0.0, 7, 1e-10, cap);
    return {name, rep.pass, rep.max_rel_error, 1e-10, std::to_string(rep.dofs) + " dofs, 5 vectors"};
}

CheckResult sumfact_check() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_int_distribution<int> ext(1, 5), dim(1, 3);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const int d = dim(rng);
        DimArray<int> in{1, 1, 1};
        std::vector<SmallMatrix> mats;
        for (int q = 0; q < d; ++q) {
            in[q] = ext(rng);
            SmallMatrix a(ext(rng), in[q]);
            for (int i = 0; i < a.rows; ++i)
                for (int j = 0; j < a.cols; ++j)
                    a(i, j) = u(rng);
            mats.push_back(a);
        }
        CoeffTensor x(d, in, TensorRole::dof_coefficients);
        for (auto& v : x.values)
            v = u(rng);
        KernelStats st;
        const auto y = sumfact_apply(mats, x, st);
        const auto r = naive_tensor_apply(mats, x);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            num = std::max(num, std::abs(y.values[i] - r.values[i]));
            den = std::max(den, std::abs(r.values[i]));
        }
        worst = std::max(worst, den > 0 ? num / den : num);
    }
    return {"sumfact-oracle", worst <= 1e-12, worst, 1e-12, "200 random contractions"};
}

CheckResult conservation_check(int threads) {
    Problem pr = make_problem("taylor-green", 3, {4, 4, 4});
    StructuredMesh mesh(pr.mesh);
    OperatorOptions o;
    o.degree = 1;
    o.quad_points = pr.quad_points(1);
    o.threads = threads;
    DgOperator op(mesh, pr.coeffs, o);
    DgSemiDiscrete sd(op);
    DofVector z;
    project_initial(op, sd.mass(), pr.initial, z);
    RunOptions ro;
    ro.scheme = Scheme::heun;
    ro.steps = 20;
    ro.dt = advisory_dt(mesh.min_width(), 1, pr.max_velocity, pr.max_diffusion);
    const auto tr = run(sd, z, ro);
    double worst = 0.0;
    const double m0 = std::abs(tr.records.front().mass);
    for (std::size_t k = 1; k < tr.records.size(); ++k)
        worst = std::max(worst, std::abs(tr.records[k].mass - tr.records[k - 1].mass) / m0);
    return {"conservation", worst <= 1e-12, worst, 1e-12, "taylor-green 4^3, p=1, 20 Heun steps"};
}

CheckResult cost_check(int d, int p, int threads) {
    Problem pr = make_problem("a", d, {3, 3, d == 3 ? 3 : 1});
    StructuredMesh mesh(pr.mesh);
    OperatorOptions o;
    o.degree = p;
    o.quad_points = p + 1;
    o.threads = threads;
    DgOperator op(mesh, pr.coeffs, o);
    DofVector z = op.create_vector(), y;
    z.fill(1.0);
    KernelStats st;
    op.apply(z, 0.0, y, st);
    const auto rep = reconcile(st, CostModel{d, op.n(), op.m()},
                               static_cast<std::uint64_t>(mesh.num_elements()) * ipow(op.m(), d));
    return {"cost-model/d" + std::to_string(d) + "/p" + std::to_string(p), rep.max_sumfact_deviation_pct == 0.0,
            rep.max_sumfact_deviation_pct, 0.0, "percent deviation of counted sum-factorization flops"};
}

} // namespace

VerifyReport run_verification(const RunConfig& cfg) {
    cfg.validate();
    VerifyReport rep;
    const std::size_t cap = static_cast<std::size_t>(cfg.execution.matrix_cap_bytes);
    {
        const Problem pr = make_problem(cfg);
        rep.checks.push_back(oracle_check("oracle/config/" + cfg.problem.id, pr, operator_options(cfg, pr), cap));
    }
    for (const char* id : {"a", "b", "c"})
        for (int d = 2; d <= 3; ++d) {
            const Problem pr = make_problem(id, d, {3, 3, d == 3 ? 3 : 1});
            OperatorOptions o;
            o.degree = 2;
            o.quad_points = pr.quad_points(2);
            o.threads = cfg.execution.threads;
            rep.checks.push_back(
                oracle_check(std::string("oracle/") + id + "/d" + std::to_string(d) + "/p2", pr, o, cap));
        }
    rep.checks.push_back(sumfact_check());
    rep.checks.push_back(conservation_check(cfg.execution.threads));
    for (int d = 2; d <= 3; ++d)
        rep.checks.push_back(cost_check(d, std::min(cfg.discretization.degree, 4), cfg.execution.threads));
    return rep;
}

} // namespace sfdg
