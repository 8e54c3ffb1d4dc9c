#pragma once

#include "sfdg/mesh.hpp"
#include "sfdg/types.hpp"

#include <functional>
#include <string>

namespace sfdg {

/// How a coefficient varies in space; drives the operator's fast paths.
enum class Variation { zero, constant, per_cell, general };

/// Coefficient evaluators of the model problem
///   d/dt u + div(b u - D grad u) + c u = f,
/// called with the physical point x, time t and the id of the element
/// the point is assigned to (per-cell data, e.g. discontinuous D).
struct CoefficientSet {
    using MatrixFn = std::function<void(const double* x, double t, index_t elem, double* out)>;
    using ScalarFn = std::function<double(const double* x, double t, index_t elem)>;

    int dim = 2;
    MatrixFn diffusion; ///< symmetric d x d, row-major
    MatrixFn velocity;  ///< d entries
    ScalarFn reaction;
    ScalarFn source;
    ScalarFn dirichlet; ///< g
    ScalarFn neumann;   ///< j, the prescribed normal flux (b u - D grad u) . nu

    Variation diffusion_variation = Variation::zero;
    Variation velocity_variation = Variation::zero;
    Variation reaction_variation = Variation::zero;
    Variation source_variation = Variation::zero;

    bool has_diffusion() const { return diffusion_variation != Variation::zero; }
    bool has_velocity() const { return velocity_variation != Variation::zero; }
    bool has_reaction() const { return reaction_variation != Variation::zero; }
    bool has_source() const { return source_variation != Variation::zero; }

    /// Check that every evaluator required by the flags is present.
    void validate() const;
};

/// Returns true if the symmetric matrix passes a Cholesky factorization.
bool is_spd(int d, const double* a);

} // namespace sfdg
