#pragma once

#include "sfdg/coefficients.hpp"
#include "sfdg/mesh.hpp"

#include <functional>
#include <string>

namespace sfdg {

/// Parameters of the "custom" problem: spatially constant coefficients.
struct CustomCoefficients {
    Mat3 diffusion{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    DimArray<double> velocity{0.0, 0.0, 0.0};
    double reaction = 0.0;
    double source = 0.0;
    double dirichlet = 0.0;
    double neumann = 0.0;
    int quad_order_offset = 0; ///< quadrature order 2p + offset
};

struct Problem {
    std::string id;
    MeshConfig mesh;
    CoefficientSet coeffs;
    /// Exactness order q of the 1D rule for degree p.
    std::function<int(int)> quad_order;
    std::function<double(const double* x)> initial;
    double max_velocity = 0.0;  ///< bound of |b| over the domain
    double max_diffusion = 0.0; ///< bound of the largest eigenvalue of D

    int quad_points(int p) const { return points_for_order(quad_order(p)); }
};

/// Problem ids: "a", "b", "c", "taylor-green", "custom".
/// Problem A: axis-parallel periodic unit box, per-cell constant D and c, constant b, q = 2p.
/// Problem B: sheared affine mesh, polynomial coefficients, Dirichlet boundary, q = 2p + 4.
/// Problem C: perturbed multilinear mesh, polynomial coefficients, mixed boundary, q = 3p + 4.
Problem make_problem(const std::string& id, int dim, const DimArray<index_t>& cells,
                     const CustomCoefficients& custom = {});

bool is_known_problem(const std::string& id);

} // namespace sfdg
