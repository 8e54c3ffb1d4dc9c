#include "sfdg/timestep.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sfdg {

std::string to_string(Scheme s) {
    switch (s) {
    case Scheme::euler:
        return "euler";
    case Scheme::heun:
        return "heun";
    case Scheme::ssp3:
        return "ssp3";
    }
    return "?";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "euler")
        return Scheme::euler;
    if (s == "heun" || s == "ssp2")
        return Scheme::heun;
    if (s == "ssp3")
        return Scheme::ssp3;
    throw std::invalid_argument("unknown time integration scheme '" + s + "'");
}

int scheme_order(Scheme s) {
    switch (s) {
    case Scheme::euler:
        return 1;
    case Scheme::heun:
        return 2;
    case Scheme::ssp3:
        return 3;
    }
    return 0;
}

DgSemiDiscrete::DgSemiDiscrete(const DgOperator& op) : op_(&op), mass_(op) {
    zero_rhs_ = !op.coefficients().has_source();
    for (const auto& f : op.mesh().faces())
        if (f.cls == BoundaryClass::dirichlet || f.cls == BoundaryClass::neumann)
            zero_rhs_ = false;
}

void DgSemiDiscrete::residual(const DofVector& z, double t, DofVector& r) const {
    op_->apply(z, t, r);
    const index_t n = r.size();
    if (zero_rhs_) {
        for (index_t i = 0; i < n; ++i)
            r[i] = -r[i];
        return;
    }
    op_->assemble_rhs(t, f_);
    for (index_t i = 0; i < n; ++i)
        r[i] = f_[i] - r[i];
}

MatrixSemiDiscrete::MatrixSemiDiscrete(const DgOperator& op, BlockSparseMatrix a)
    : op_(&op), a_(std::move(a)), mass_(op) {
    if (a_.block_rows != op.mesh().num_elements() || a_.block_size != op.block_size())
        throw std::invalid_argument("MatrixSemiDiscrete: matrix does not match the operator");
}

void MatrixSemiDiscrete::residual(const DofVector& z, double t, DofVector& r) const {
    spmv(a_, z, r, op_->threads());
    op_->assemble_rhs(t, f_);
    for (index_t i = 0; i < r.size(); ++i)
        r[i] = f_[i] - r[i];
}

void ScalarSemiDiscrete::residual(const DofVector& z, double, DofVector& r) const {
    if (!r.conforms(z))
        r = create_vector();
    r[0] = source_ + rate_ * z[0];
}

void ScalarSemiDiscrete::mass_solve(const DofVector& r, DofVector& z) const {
    if (!z.conforms(r))
        z = create_vector();
    z[0] = r[0];
}

void ScalarSemiDiscrete::mass_apply(const DofVector& z, DofVector& y) const {
    if (!y.conforms(z))
        y = create_vector();
    y[0] = z[0];
}

void TimeIntegrator::stage(const SemiDiscreteOperator& op, double a, const DofVector& x, const DofVector& y,
                           double ty, double dt, DofVector& out) {
    op.residual(y, ty, r_);
    op.mass_solve(r_, r_);
    if (!out.conforms(y))
        out = op.create_vector();
    const index_t n = y.size();
    const double* xv = x.values().data();
    const double* yv = y.values().data();
    const double* rv = r_.values().data();
    double* ov = out.values().data();
    // out = (1-a) (y + dt r) + a x, written so that x == y + dt r reproduces it exactly
#pragma omp parallel for schedule(static) num_threads(op.threads())
    for (index_t i = 0; i < n; ++i) {
        const double e = yv[i] + dt * rv[i];
        ov[i] = a == 0.0 ? e : e + a * (xv[i] - e);
    }
}

void TimeIntegrator::step(const SemiDiscreteOperator& op, DofVector& z, double t, double dt) {
    switch (scheme_) {
    case Scheme::euler:
        stage(op, 0.0, z, z, t, dt, z);
        break;
    case Scheme::heun:
        stage(op, 0.0, z, z, t, dt, z1_);
        stage(op, 0.5, z, z1_, t + dt, dt, z);
        break;
    case Scheme::ssp3:
        stage(op, 0.0, z, z, t, dt, z1_);
        stage(op, 0.75, z, z1_, t + dt, dt, z2_);
        stage(op, 1.0 / 3.0, z, z2_, t + 0.5 * dt, dt, z);
        break;
    }
}

double advisory_dt(double h, int degree, double max_velocity, double max_diffusion, double courant) {
    if (!(h > 0.0) || degree < 0)
        throw std::invalid_argument("advisory_dt: invalid mesh width or degree");
    const double k = 2.0 * degree + 1.0;
    if (max_velocity > 0.0)
        return courant * h / (k * max_velocity);
    if (max_diffusion > 0.0)
        return courant * h * h / (k * k * (degree + 1.0) * (degree + 1.0) * max_diffusion);
    return std::numeric_limits<double>::infinity();
}

void project_initial(const DgOperator& op, const MassOperator& mass, const std::function<double(const double*)>& u0,
                     DofVector& z) {
    op.integrate_function(u0, z);
    mass.solve(z, z);
}

Diagnostics diagnostics(const SemiDiscreteOperator& op, const DofVector& z, index_t step, double t) {
    DofVector mz;
    op.mass_apply(z, mz);
    Diagnostics d;
    d.step = step;
    d.time = t;
    double q = 0.0;
    for (index_t e = 0; e < z.elements(); ++e)
        d.mass += mz.block(e)[0];
    for (index_t i = 0; i < z.size(); ++i)
        q += z[i] * mz[i];
    d.l2 = std::sqrt(std::max(q, 0.0));
    return d;
}

namespace {

bool finite(const DofVector& z) {
    for (double v : z.values())
        if (!std::isfinite(v))
            return false;
    return true;
}

} // namespace

Trajectory run(const SemiDiscreteOperator& op, DofVector& z, const RunOptions& opts, const SnapshotFn& snapshot) {
    if (opts.steps < 0)
        throw std::invalid_argument("run: negative step count");
    if (opts.steps > 0 && !(opts.dt > 0.0))
        throw std::invalid_argument("run: time step must be positive");
    if (opts.diagnostics_every < 0 || opts.snapshot_every < 0)
        throw std::invalid_argument("run: output intervals must be non-negative");
    if (!finite(z))
        throw DivergenceError("non-finite initial coefficients", 0);

    TimeIntegrator ti(opts.scheme);
    Trajectory tr;
    double t = opts.t0;
    auto first = diagnostics(op, z, 0, t);
    tr.records.push_back(first);
    if (snapshot)
        snapshot(z, first);
    for (index_t k = 1; k <= opts.steps; ++k) {
        ti.step(op, z, t, opts.dt);
        t = opts.t0 + static_cast<double>(k) * opts.dt;
        if (!finite(z))
            throw DivergenceError("non-finite coefficients after step " + std::to_string(k), k);
        const bool diag = k == opts.steps || (opts.diagnostics_every > 0 && k % opts.diagnostics_every == 0);
        const bool snap = snapshot && opts.snapshot_every > 0 && k % opts.snapshot_every == 0;
        if (diag || snap) {
            auto d = diagnostics(op, z, k, t);
            if (diag)
                tr.records.push_back(d);
            if (snap)
                snapshot(z, d);
        }
    }
    tr.final_time = t;
    tr.steps = opts.steps;
    return tr;
}

} // namespace sfdg
