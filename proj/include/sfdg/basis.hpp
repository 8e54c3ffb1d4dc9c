#pragma once

#include "sfdg/types.hpp"

#include <span>
#include <vector>

namespace sfdg {

/// Gauss-Legendre rule on the reference interval [0,1].
struct QuadratureRule1D {
    std::vector<double> points;  ///< strictly increasing, in (0,1)
    std::vector<double> weights; ///< positive, sum to 1

    int size() const { return static_cast<int>(points.size()); }
};

/// Orthonormal shifted Legendre polynomials on [0,1]:
/// theta_j(x) = sqrt(2j+1) P_j(2x-1), so that the integral of theta_i theta_j is delta_ij.
class Basis1D {
public:
    explicit Basis1D(int degree);

    int degree() const { return degree_; }
    int size() const { return degree_ + 1; }

    double value(int j, double x) const;
    double derivative(int j, double x) const;

    /// Values and first derivatives of all size() functions at x.
    void evaluate(double x, std::span<double> values, std::span<double> derivs) const;

private:
    int degree_;
};

QuadratureRule1D gauss_legendre(int m);
Basis1D legendre_basis(int p);

/// Quadrature points needed so that a 1D Gauss rule integrates degree `order` exactly.
int points_for_order(int order);

/// Dense row-major matrix, sized for the tiny operators of sum factorization.
struct SmallMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    SmallMatrix() = default;
    SmallMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    SmallMatrix transposed() const;
};

/// Volume evaluation matrices A^(q,r) (n x m, basis index by row, quadrature index
/// fastest). r = 0 selects plain values, r = 1..d the derivative in direction r.
class EvalMatrices {
public:
    EvalMatrices(const Basis1D& basis, const QuadratureRule1D& quad, int dim);

    int dim() const { return dim_; }
    int n() const { return n_; }
    int m() const { return m_; }

    /// A^(q,r) for direction q in [0,d) and r in [0,d]; r == q+1 gives derivatives.
    const SmallMatrix& integration(int q, int r) const;
    /// Transposed m x n layout used for evaluation: entry (i,j) = theta_j(xi_i).
    const SmallMatrix& evaluation(int q, int r) const;

    const SmallMatrix& values() const { return values_; }
    const SmallMatrix& derivatives() const { return derivs_; }
    std::span<const double> weights() const { return weights_; }
    std::span<const double> points() const { return points_; }

private:
    int dim_;
    int n_;
    int m_;
    SmallMatrix values_;
    SmallMatrix derivs_;
    SmallMatrix values_t_;
    SmallMatrix derivs_t_;
    std::vector<double> weights_;
    std::vector<double> points_;
};

EvalMatrices build_eval_matrices(const Basis1D& basis, const QuadratureRule1D& quad, int dim);

/// Which end of the reference interval a face sits on, as seen from one element.
enum class FaceEnd { low = 0, high = 1 };

/// Face evaluation matrices for one (normal direction, end) configuration.
/// Tangential directions are ordered ascending; this is the permutation pi_F
/// for the conforming structured meshes handled here.
class FaceMatrices {
public:
    FaceMatrices(const Basis1D& basis, const QuadratureRule1D& quad, int dim, int normal, FaceEnd end);

    int dim() const { return dim_; }
    int normal() const { return normal_; }
    FaceEnd end() const { return end_; }
    int n() const { return n_; }
    int m() const { return m_; }

    /// pi_F extended to all d coordinates: tangential directions, then the normal.
    std::span<const int> permutation() const { return {perm_.data(), static_cast<std::size_t>(dim_)}; }

    /// B^(k) for tangential slot k in [0,d-1): n x m values (or derivatives).
    const SmallMatrix& tangential(int k, bool derivative = false) const;
    /// B^(d): n x 1 column of theta_j (or theta_j') at the face coordinate.
    const SmallMatrix& normal_matrix(bool derivative = false) const;

private:
    int dim_;
    int normal_;
    FaceEnd end_;
    int n_;
    int m_;
    std::array<int, kMaxDim> perm_{};
    SmallMatrix tan_values_;
    SmallMatrix tan_derivs_;
    SmallMatrix normal_values_;
    SmallMatrix normal_derivs_;
};

FaceMatrices build_face_matrices(const Basis1D& basis, const QuadratureRule1D& quad, int dim, int normal,
                                 FaceEnd end);

} // namespace sfdg
