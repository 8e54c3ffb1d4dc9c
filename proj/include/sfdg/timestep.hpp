#pragma once

#include "sfdg/operator.hpp"
#include "sfdg/oracle.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sfdg {

enum class Scheme { euler, heun, ssp3 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);
int scheme_order(Scheme s);

/// M dz/dt = f(t) - A(t) z.
class SemiDiscreteOperator {
public:
    virtual ~SemiDiscreteOperator() = default;
    virtual DofVector create_vector() const = 0;
    /// r = f(t) - A(t) z
    virtual void residual(const DofVector& z, double t, DofVector& r) const = 0;
    /// z = M^{-1} r, in place allowed
    virtual void mass_solve(const DofVector& r, DofVector& z) const = 0;
    virtual void mass_apply(const DofVector& z, DofVector& y) const = 0;
    virtual int threads() const { return 1; }
};

class DgSemiDiscrete : public SemiDiscreteOperator {
public:
    explicit DgSemiDiscrete(const DgOperator& op);

    DofVector create_vector() const override { return op_->create_vector(); }
    void residual(const DofVector& z, double t, DofVector& r) const override;
    void mass_solve(const DofVector& r, DofVector& z) const override { mass_.solve(r, z); }
    void mass_apply(const DofVector& z, DofVector& y) const override { mass_.apply(z, y); }
    int threads() const override { return op_->threads(); }

    const DgOperator& op() const { return *op_; }
    const MassOperator& mass() const { return mass_; }

private:
    const DgOperator* op_;
    MassOperator mass_;
    bool zero_rhs_;
    mutable DofVector f_;
};

/// Same semi-discretization with A_h assembled once at construction time
/// (coefficients of A_h must not depend on t).
class MatrixSemiDiscrete : public SemiDiscreteOperator {
public:
    MatrixSemiDiscrete(const DgOperator& op, BlockSparseMatrix a);

    DofVector create_vector() const override { return op_->create_vector(); }
    void residual(const DofVector& z, double t, DofVector& r) const override;
    void mass_solve(const DofVector& r, DofVector& z) const override { mass_.solve(r, z); }
    void mass_apply(const DofVector& z, DofVector& y) const override { mass_.apply(z, y); }
    int threads() const override { return op_->threads(); }

    const MassOperator& mass() const { return mass_; }

private:
    const DgOperator* op_;
    BlockSparseMatrix a_;
    MassOperator mass_;
    mutable DofVector f_;
};

/// dz/dt = rate * z on a single coefficient.
class ScalarSemiDiscrete : public SemiDiscreteOperator {
public:
    explicit ScalarSemiDiscrete(double rate, double source = 0.0) : rate_(rate), source_(source) {}
    DofVector create_vector() const override { return DofVector(1, 1); }
    void residual(const DofVector& z, double, DofVector& r) const override;
    void mass_solve(const DofVector& r, DofVector& z) const override;
    void mass_apply(const DofVector& z, DofVector& y) const override;

private:
    double rate_;
    double source_;
};

class TimeIntegrator {
public:
    explicit TimeIntegrator(Scheme scheme) : scheme_(scheme) {}

    Scheme scheme() const { return scheme_; }
    /// Advance z from t to t + dt.
    void step(const SemiDiscreteOperator& op, DofVector& z, double t, double dt);

private:
    /// out = a x + (1-a) (y + dt M^{-1}(f(ty) - A(ty) y))
    void stage(const SemiDiscreteOperator& op, double a, const DofVector& x, const DofVector& y, double ty, double dt,
               DofVector& out);

    Scheme scheme_;
    DofVector r_, z1_, z2_;
};

/// Advisory step C h / ((2p+1) max|b|); without convection C h^2 / ((2p+1)^2 (p+1)^2 max|D|).
double advisory_dt(double h, int degree, double max_velocity, double max_diffusion, double courant = 0.3);

/// L2 projection M^{-1} (u0, phi).
void project_initial(const DgOperator& op, const MassOperator& mass, const std::function<double(const double*)>& u0,
                     DofVector& z);

struct Diagnostics {
    index_t step = 0;
    double time = 0.0;
    double mass = 0.0; ///< sum_e (M z)_{e,0}, the integral of u_h
    double l2 = 0.0;   ///< sqrt(z^T M z)
};

Diagnostics diagnostics(const SemiDiscreteOperator& op, const DofVector& z, index_t step, double t);

struct RunOptions {
    Scheme scheme = Scheme::heun;
    double dt = 0.0;
    index_t steps = 0;
    double t0 = 0.0;
    index_t diagnostics_every = 1;
    index_t snapshot_every = 0;
};

struct Trajectory {
    std::vector<Diagnostics> records;
    double final_time = 0.0;
    index_t steps = 0;
};

using SnapshotFn = std::function<void(const DofVector& z, const Diagnostics& diag)>;

/// Runs steps of the scheme; records diagnostics at step 0, every diagnostics_every
/// steps and at the end; calls snapshot at step 0 and every snapshot_every steps.
/// Throws DivergenceError on the first non-finite coefficient.
Trajectory run(const SemiDiscreteOperator& op, DofVector& z, const RunOptions& opts, const SnapshotFn& snapshot = {});

} // namespace sfdg
