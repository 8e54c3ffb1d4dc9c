#pragma once

#include "sfdg/basis.hpp"
#include "sfdg/coefficients.hpp"
#include "sfdg/mesh.hpp"
#include "sfdg/sumfact.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace sfdg {

/// Element-blocked coefficient vector: block e holds the n^d coefficients of
/// element e in lexicographic local order.
class DofVector {
public:
    DofVector() = default;
    DofVector(index_t elements, index_t block) : elements_(elements), block_(block), values_(elements * block, 0.0) {}

    index_t elements() const { return elements_; }
    index_t block_size() const { return block_; }
    index_t size() const { return static_cast<index_t>(values_.size()); }

    double* block(index_t e) { return values_.data() + e * block_; }
    const double* block(index_t e) const { return values_.data() + e * block_; }
    std::span<double> span() { return values_; }
    std::span<const double> span() const { return values_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](index_t i) { return values_[i]; }
    double operator[](index_t i) const { return values_[i]; }

    void fill(double v) { std::fill(values_.begin(), values_.end(), v); }
    bool conforms(const DofVector& o) const { return elements_ == o.elements_ && block_ == o.block_; }

private:
    index_t elements_ = 0;
    index_t block_ = 0;
    std::vector<double> values_;
};

struct PenaltyParams {
    double alpha = 2.0;
    int degree = 1;
    int dim = 2;
};

/// u^- b_nu if b_nu >= 0, else u^+ b_nu.
double upwind_flux(double u_minus, double u_plus, double b_nu);

/// omega^- = delta^+/(delta^- + delta^+), omega^+ = delta^-/(delta^- + delta^+).
std::pair<double, double> face_weights(double delta_minus, double delta_plus);

/// alpha * harmonic(delta^-, delta^+) * p(p+d-1) * |F| / min(|T^-|, |T^+|).
double penalty_gamma(double delta_minus, double delta_plus, double area_f, double vol_minus, double vol_plus,
                     const PenaltyParams& params);

double harmonic_mean(double a, double b);

struct OperatorOptions {
    int degree = 1;
    int quad_points = 0; ///< 1D Gauss points; 0 selects p+1
    double alpha = 2.0;
    int threads = 1;
    bool generic_path = false; ///< disable the constant-geometry/coefficient fast paths
};

/// Matrix-free WSIPG operator y = A_h(t) z and right-hand side f_h(t).
class DgOperator {
public:
    DgOperator(const StructuredMesh& mesh, const CoefficientSet& coeffs, const OperatorOptions& options);
    ~DgOperator();
    DgOperator(const DgOperator&) = delete;
    DgOperator& operator=(const DgOperator&) = delete;

    const StructuredMesh& mesh() const { return *mesh_; }
    const CoefficientSet& coefficients() const { return coeffs_; }
    const OperatorOptions& options() const { return opts_; }
    int dim() const { return d_; }
    int degree() const { return opts_.degree; }
    int n() const { return n_; }
    int m() const { return m_; }
    index_t block_size() const { return block_; }
    index_t num_dofs() const { return block_ * mesh_->num_elements(); }
    const QuadratureRule1D& quadrature() const { return quad_; }
    const Basis1D& basis() const { return basis_; }

    DofVector create_vector() const { return DofVector(mesh_->num_elements(), block_); }

    void set_threads(int threads);
    int threads() const { return opts_.threads; }

    /// y = A_h(t) z (y is overwritten).
    void apply(const DofVector& z, double t, DofVector& y) const;
    void apply(const DofVector& z, double t, DofVector& y, KernelStats& stats) const;

    /// f_h(t) (overwritten).
    void assemble_rhs(double t, DofVector& f) const;

    /// (u, phi) for every test function, quadrature with this operator's rule.
    void integrate_function(const std::function<double(const double* x)>& u, DofVector& out) const;

    /// sqrt( sum_T int (u_h - u)^2 ).
    double l2_error(const DofVector& z, const std::function<double(const double* x)>& u) const;

    /// Per-thread scratch for the local kernels.
    struct Scratch;
    struct ScratchDeleter {
        void operator()(Scratch* s) const;
    };
    using ScratchPtr = std::unique_ptr<Scratch, ScratchDeleter>;
    ScratchPtr make_scratch() const;

    /// Local kernels, as used by apply(); exposed for the matrix oracle.
    /// ye/ym/yp are accumulated into. A null plus-side input means zero.
    void local_volume(index_t e, const double* ze, double t, double* ye, Scratch& s) const;
    void local_face(index_t face, const double* zm, const double* zp, double t, double* ym, double* yp,
                    Scratch& s) const;

    /// Phases of the colored sweep: phase 0 is the volume phase, the rest list
    /// face indices such that no element is touched twice within a phase.
    const std::vector<std::vector<index_t>>& face_phases() const { return phases_; }

    /// Penalty scale |F| / min(|T^-|, |T^+|) of a face.
    double face_penalty_scale(index_t face) const { return face_scale_[face]; }

    /// Modeled sum-factorization flops of one application (closed form per kernel).
    std::uint64_t modeled_flops() const;

private:
    void volume_qp(index_t e, double t, Scratch& s) const;
    void face_qp(index_t face, double t, Scratch& s, bool have_plus) const;

    const StructuredMesh* mesh_;
    CoefficientSet coeffs_;
    OperatorOptions opts_;
    int d_;
    int n_;
    int m_;
    index_t block_;
    Basis1D basis_;
    QuadratureRule1D quad_;
    EvalMatrices ev_;
    PackedChain chain_;
    std::vector<double> qweights_;      ///< tensor weights, m^d
    std::vector<double> fweights_;      ///< tensor weights, m^(d-1)
    std::vector<double> face_scale_;    ///< |F| / min(|T^-|,|T^+|)
    std::vector<std::vector<index_t>> phases_;
    bool fast_volume_ = false;
    bool fast_face_ = false;
    // constant-Jacobian data
    std::vector<double> cs_;   ///< S, d*d
    double cdet_ = 0.0;
    std::vector<double> cnu_;  ///< per direction: S e_k / |S e_k|, d entries
    std::vector<double> carea_; ///< per direction: det |S e_k|
    mutable std::vector<ScratchPtr> pool_;
};

/// Outflow faces whose velocity points into the domain at the face center.
/// Such inputs are accepted; callers may warn.
index_t count_inflow_on_outflow(const DgOperator& op, double t = 0.0);

} // namespace sfdg
