#include "sfdg/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sfdg {

namespace {

// deterministic per-cell value in [0,1)
double cell_value(index_t e, int salt) {
    std::uint64_t z = static_cast<std::uint64_t>(e) * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(salt);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

void polynomial_diffusion(int d, const double* x, double* out) {
    double r2 = 0.0;
    for (int k = 0; k < d; ++k)
        r2 += x[k] * x[k];
    for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s)
            out[r * d + s] = (r == s ? 1.0 + 0.1 * r2 : 0.0) + 0.05 * x[r] * x[s];
}

void polynomial_velocity(int d, const double* x, double* out) {
    out[0] = 1.0 + x[1];
    out[1] = 1.0 - x[0];
    if (d == 3)
        out[2] = x[2];
}

void fill_polynomial(Problem& pr, int d) {
    auto& c = pr.coeffs;
    c.diffusion = [d](const double* x, double, index_t, double* out) { polynomial_diffusion(d, x, out); };
    c.velocity = [d](const double* x, double, index_t, double* out) { polynomial_velocity(d, x, out); };
    c.reaction = [](const double* x, double, index_t) { return 1.0 + x[0] * x[1]; };
    c.source = [](const double* x, double, index_t) { return 1.0 + x[0]; };
    c.dirichlet = [](const double* x, double t, index_t) { return x[0] + 0.5 * x[1] + t; };
    c.neumann = [](const double* x, double, index_t) { return 0.1 * x[0]; };
    c.diffusion_variation = Variation::general;
    c.velocity_variation = Variation::general;
    c.reaction_variation = Variation::general;
    c.source_variation = Variation::general;
    pr.initial = [d](const double* x) {
        double s = 1.0;
        for (int k = 0; k < d; ++k)
            s *= std::sin(std::numbers::pi * x[k]);
        return s;
    };
    // bounds on the unit box inflated by the mesh distortion
    pr.max_velocity = std::sqrt(static_cast<double>(d)) * 2.5;
    pr.max_diffusion = 1.0 + 0.1 * d * 2.25 + 0.05 * d * 2.25;
}

} // namespace

bool is_known_problem(const std::string& id) {
    return id == "a" || id == "b" || id == "c" || id == "taylor-green" || id == "custom";
}

Problem make_problem(const std::string& id, int dim, const DimArray<index_t>& cells, const CustomCoefficients& custom) {
    if (dim < 2 || dim > 3)
        throw std::invalid_argument("problem: dimension must be 2 or 3");
    Problem pr;
    pr.id = id;
    pr.mesh.dim = dim;
    pr.mesh.cells = cells;
    pr.coeffs.dim = dim;
    const int d = dim;

    if (id == "a") {
        for (int k = 0; k < 3; ++k)
            pr.mesh.periodic[k] = true;
        auto& c = pr.coeffs;
        c.diffusion = [d](const double*, double, index_t e, double* out) {
            const double s = cell_value(e, 1);
            for (int r = 0; r < d; ++r)
                for (int q = 0; q < d; ++q)
                    out[r * d + q] = r == q ? 1.0 + 0.5 * s + 0.1 * r : 0.1 * (1.0 - s);
        };
        c.velocity = [d](const double*, double, index_t, double* out) {
            const double b[3] = {1.0, 0.5, 0.25};
            for (int r = 0; r < d; ++r)
                out[r] = b[r];
        };
        c.reaction = [](const double*, double, index_t e) { return 0.1 * (1.0 + cell_value(e, 2)); };
        c.diffusion_variation = Variation::per_cell;
        c.velocity_variation = Variation::constant;
        c.reaction_variation = Variation::per_cell;
        pr.quad_order = [](int p) { return 2 * p; };
        pr.initial = [d](const double* x) {
            double s = 1.0;
            for (int k = 0; k < d; ++k)
                s *= std::sin(2.0 * std::numbers::pi * x[k]);
            return s;
        };
        pr.max_velocity = std::sqrt(1.0 + 0.25 + 0.0625);
        pr.max_diffusion = 1.5 + 0.2 + 0.1 * (d - 1);
        return pr;
    }
    if (id == "b") {
        pr.mesh.geometry = GeometryClass::affine;
        pr.mesh.affine = {{{1.0, 0.2, 0.1}, {0.0, 1.0, 0.15}, {0.0, 0.0, 1.0}}};
        fill_polynomial(pr, d);
        pr.quad_order = [](int p) { return 2 * p + 4; };
        return pr;
    }
    if (id == "c") {
        pr.mesh.geometry = GeometryClass::multilinear;
        pr.mesh.perturbation = 0.15;
        pr.mesh.periodic[0] = true;
        pr.mesh.boundary[1] = {BoundaryClass::dirichlet, BoundaryClass::neumann};
        pr.mesh.boundary[2] = {BoundaryClass::dirichlet, BoundaryClass::outflow};
        if (d == 2)
            pr.mesh.boundary[1] = {BoundaryClass::dirichlet, BoundaryClass::outflow};
        fill_polynomial(pr, d);
        pr.quad_order = [](int p) { return 3 * p + 4; };
        return pr;
    }
    if (id == "taylor-green") {
        if (dim != 3)
            throw std::invalid_argument("problem taylor-green is three-dimensional");
        for (int k = 0; k < 3; ++k) {
            pr.mesh.periodic[k] = true;
            pr.mesh.lo[k] = -std::numbers::pi;
            pr.mesh.hi[k] = std::numbers::pi;
        }
        auto& c = pr.coeffs;
        c.diffusion = [](const double*, double, index_t, double* out) {
            for (int r = 0; r < 3; ++r)
                for (int q = 0; q < 3; ++q)
                    out[r * 3 + q] = r == q ? 5e-6 : 0.0;
        };
        c.velocity = [](const double* x, double, index_t, double* out) {
            out[0] = std::cos(x[0]) * std::sin(-x[1]) * std::sin(-x[2]);
            out[1] = 0.5 * std::sin(x[0]) * std::cos(-x[1]) * std::sin(-x[2]);
            out[2] = 0.5 * std::sin(x[0]) * std::sin(-x[1]) * std::cos(-x[2]);
        };
        c.diffusion_variation = Variation::constant;
        c.velocity_variation = Variation::general;
        pr.quad_order = [](int p) { return 2 * p + 4; };
        pr.initial = [](const double* x) {
            const double dx = x[0] - 0.5, dy = x[1], dz = x[2];
            return std::exp(-2.0 * (dx * dx + dy * dy + dz * dz));
        };
        pr.max_velocity = std::sqrt(1.0 + 0.25 + 0.25);
        pr.max_diffusion = 5e-6;
        return pr;
    }
    if (id == "custom") {
        auto& c = pr.coeffs;
        const auto cc = custom;
        c.diffusion = [d, cc](const double*, double, index_t, double* out) {
            for (int r = 0; r < d; ++r)
                for (int q = 0; q < d; ++q)
                    out[r * d + q] = cc.diffusion[r][q];
        };
        c.velocity = [d, cc](const double*, double, index_t, double* out) {
            for (int r = 0; r < d; ++r)
                out[r] = cc.velocity[r];
        };
        c.reaction = [cc](const double*, double, index_t) { return cc.reaction; };
        c.source = [cc](const double*, double, index_t) { return cc.source; };
        c.dirichlet = [cc](const double*, double, index_t) { return cc.dirichlet; };
        c.neumann = [cc](const double*, double, index_t) { return cc.neumann; };
        bool any_d = false, any_b = false;
        double dmax = 0.0, bn = 0.0;
        for (int r = 0; r < d; ++r) {
            bn += cc.velocity[r] * cc.velocity[r];
            double row = 0.0;
            for (int q = 0; q < d; ++q) {
                any_d |= cc.diffusion[r][q] != 0.0;
                row += std::abs(cc.diffusion[r][q]);
            }
            dmax = std::max(dmax, row);
            any_b |= cc.velocity[r] != 0.0;
        }
        if (any_d) {
            double m[9];
            for (int r = 0; r < d; ++r)
                for (int q = 0; q < d; ++q)
                    m[r * d + q] = cc.diffusion[r][q];
            if (!is_spd(d, m))
                throw std::invalid_argument("custom problem: diffusion matrix must be symmetric positive definite");
        }
        c.diffusion_variation = any_d ? Variation::constant : Variation::zero;
        c.velocity_variation = any_b ? Variation::constant : Variation::zero;
        c.reaction_variation = cc.reaction != 0.0 ? Variation::constant : Variation::zero;
        c.source_variation = cc.source != 0.0 ? Variation::constant : Variation::zero;
        const int off = cc.quad_order_offset;
        pr.quad_order = [off](int p) { return 2 * p + off; };
        pr.initial = [](const double*) { return 1.0; };
        pr.max_velocity = std::sqrt(bn);
        pr.max_diffusion = dmax; // Gershgorin bound
        return pr;
    }
    throw std::invalid_argument("unknown problem '" + id + "' (expected a, b, c, taylor-green or custom)");
}

} // namespace sfdg
