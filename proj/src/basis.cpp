#include "sfdg/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sfdg {

namespace {

// Legendre P_m and its derivative on [-1,1].
void legendre_with_derivative(int m, double s, double& p, double& dp) {
    double p0 = 1.0;
    double p1 = s;
    if (m == 0) {
        p = 1.0;
        dp = 0.0;
        return;
    }
    for (int k = 1; k < m; ++k) {
        const double p2 = ((2.0 * k + 1.0) * s * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p = p1;
    dp = m * (s * p1 - p0) / (s * s - 1.0);
}

} // namespace

QuadratureRule1D gauss_legendre(int m) {
    if (m < 1 || m > 40)
        throw std::invalid_argument("gauss_legendre: point count must be in [1,40], got " + std::to_string(m));

    QuadratureRule1D rule;
    rule.points.assign(m, 0.0);
    rule.weights.assign(m, 0.0);

    // Roots in (0,1) of P_m(2x-1); only the upper half is computed, the lower half mirrored.
    const int half = (m + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double s = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double p = 0.0;
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            legendre_with_derivative(m, s, p, dp);
            const double ds = p / dp;
            s -= ds;
            if (std::abs(ds) <= 1e-15)
                break;
        }
        legendre_with_derivative(m, s, p, dp);
        const double w = 1.0 / ((1.0 - s * s) * dp * dp); // 2/((1-s^2)P'^2) scaled by 1/2
        const double x = 0.5 * (1.0 + s);
        rule.points[m - 1 - i] = x;
        rule.weights[m - 1 - i] = w;
        rule.points[i] = 1.0 - x;
        rule.weights[i] = w;
    }
    if (m % 2 == 1)
        rule.points[m / 2] = 0.5;
    return rule;
}

int points_for_order(int order) {
    if (order < 0)
        throw std::invalid_argument("quadrature order must be non-negative");
    return (order + 2) / 2; // ceil((order+1)/2)
}

Basis1D::Basis1D(int degree) : degree_(degree) {
    if (degree < 0 || degree > 20)
        throw std::invalid_argument("legendre_basis: degree must be in [0,20], got " + std::to_string(degree));
}

Basis1D legendre_basis(int p) { return Basis1D(p); }

void Basis1D::evaluate(double x, std::span<double> values, std::span<double> derivs) const {
    const int n = size();
    const double s = 2.0 * x - 1.0;
    // P_j and P_j' by the three-term recurrence; P'_{k+1} = P'_{k-1} + (2k+1) P_k.
    double pm1 = 0.0, p = 1.0;
    double dpm1 = 0.0, dp = 0.0;
    for (int j = 0; j < n; ++j) {
        const double scale = std::sqrt(2.0 * j + 1.0);
        if (!values.empty())
            values[j] = scale * p;
        if (!derivs.empty())
            derivs[j] = 2.0 * scale * dp;
        const double pn = ((2.0 * j + 1.0) * s * p - j * pm1) / (j + 1.0);
        const double dpn = dpm1 + (2.0 * j + 1.0) * p;
        pm1 = p;
        p = pn;
        dpm1 = dp;
        dp = dpn;
    }
}

double Basis1D::value(int j, double x) const {
    std::array<double, 21> v{};
    evaluate(x, std::span<double>(v.data(), size()), {});
    return v[j];
}

double Basis1D::derivative(int j, double x) const {
    std::array<double, 21> dv{};
    evaluate(x, {}, std::span<double>(dv.data(), size()));
    return dv[j];
}

SmallMatrix SmallMatrix::transposed() const {
    SmallMatrix t(cols, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            t(j, i) = (*this)(i, j);
    return t;
}

EvalMatrices::EvalMatrices(const Basis1D& basis, const QuadratureRule1D& quad, int dim)
    : dim_(dim), n_(basis.size()), m_(quad.size()), values_(n_, m_), derivs_(n_, m_), weights_(quad.weights),
      points_(quad.points) {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("EvalMatrices: dimension must be 1..3");
    std::vector<double> v(n_), dv(n_);
    for (int i = 0; i < m_; ++i) {
        basis.evaluate(quad.points[i], v, dv);
        for (int j = 0; j < n_; ++j) {
            values_(j, i) = v[j];
            derivs_(j, i) = dv[j];
        }
    }
    values_t_ = values_.transposed();
    derivs_t_ = derivs_.transposed();
}

const SmallMatrix& EvalMatrices::integration(int q, int r) const {
    if (q < 0 || q >= dim_ || r < 0 || r > dim_)
        throw std::out_of_range("EvalMatrices::integration index");
    return r == q + 1 ? derivs_ : values_;
}

const SmallMatrix& EvalMatrices::evaluation(int q, int r) const {
    if (q < 0 || q >= dim_ || r < 0 || r > dim_)
        throw std::out_of_range("EvalMatrices::evaluation index");
    return r == q + 1 ? derivs_t_ : values_t_;
}

EvalMatrices build_eval_matrices(const Basis1D& basis, const QuadratureRule1D& quad, int dim) {
    return EvalMatrices(basis, quad, dim);
}

FaceMatrices::FaceMatrices(const Basis1D& basis, const QuadratureRule1D& quad, int dim, int normal, FaceEnd end)
    : dim_(dim), normal_(normal), end_(end), n_(basis.size()), m_(quad.size()) {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("FaceMatrices: dimension must be 1..3");
    if (normal < 0 || normal >= dim)
        throw std::invalid_argument("FaceMatrices: normal direction " + std::to_string(normal) +
                                    " out of range for d=" + std::to_string(dim));
    int k = 0;
    for (int q = 0; q < dim; ++q)
        if (q != normal)
            perm_[k++] = q;
    perm_[dim - 1] = normal;

    const EvalMatrices ev(basis, quad, 1);
    tan_values_ = ev.values();
    tan_derivs_ = ev.derivatives();

    normal_values_ = SmallMatrix(n_, 1);
    normal_derivs_ = SmallMatrix(n_, 1);
    std::vector<double> v(n_), dv(n_);
    basis.evaluate(end == FaceEnd::low ? 0.0 : 1.0, v, dv);
    for (int j = 0; j < n_; ++j) {
        normal_values_(j, 0) = v[j];
        normal_derivs_(j, 0) = dv[j];
    }
}

const SmallMatrix& FaceMatrices::tangential(int k, bool derivative) const {
    if (k < 0 || k >= dim_ - 1)
        throw std::out_of_range("FaceMatrices::tangential slot");
    return derivative ? tan_derivs_ : tan_values_;
}

const SmallMatrix& FaceMatrices::normal_matrix(bool derivative) const {
    return derivative ? normal_derivs_ : normal_values_;
}

FaceMatrices build_face_matrices(const Basis1D& basis, const QuadratureRule1D& quad, int dim, int normal,
                                 FaceEnd end) {
    return FaceMatrices(basis, quad, dim, normal, end);
}

} // namespace sfdg
