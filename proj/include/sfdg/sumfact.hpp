#pragma once

#include "sfdg/basis.hpp"
#include "sfdg/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sfdg {

/// Counters accumulated by the contraction kernels. FMA counts are per real
/// chain (padding lanes of a pack are not counted), so one FMA is two flops.
struct KernelStats {
    std::uint64_t volume_fma = 0;
    std::uint64_t face_fma = 0;
    std::uint64_t other_fma = 0; ///< geometry and stand-alone contractions
    std::uint64_t qp_flops = 0;
    std::uint64_t bytes_loaded = 0;
    std::uint64_t bytes_stored = 0;
    std::uint64_t invocations = 0;
    std::uint64_t volume_evaluations = 0;
    std::uint64_t volume_integrations = 0;
    std::uint64_t face_evaluations = 0;
    std::uint64_t face_integrations = 0;

    std::uint64_t fma() const { return volume_fma + face_fma + other_fma; }
    std::uint64_t sumfact_flops() const { return 2 * fma(); }
    void merge(const KernelStats& other);
};

enum class TensorRole { dof_coefficients, quad_values, quad_packed };

/// Lexicographic tensor with direction 0 fastest. Packed tensors hold
/// kPackWidth doubles per entry.
struct CoeffTensor {
    int dim = 0;
    DimArray<int> extents{1, 1, 1};
    TensorRole role = TensorRole::dof_coefficients;
    std::vector<double> values;

    CoeffTensor() = default;
    CoeffTensor(int d, DimArray<int> ext, TensorRole r);

    int pack() const { return role == TensorRole::quad_packed ? kPackWidth : 1; }
    index_t entries() const;
};

/// One recorded contraction stage (only when tracing is enabled on a workspace).
struct StageRecord {
    enum class Kind { volume_eval, volume_integrate, face_eval, face_integrate, generic } kind;
    int direction;
    int in_extent;
    int out_extent;
};

/// Scratch memory for one thread. Kernels never allocate; all intermediates
/// live in the two ping-pong buffers here.
class Workspace {
public:
    Workspace() = default;
    /// Buffers large enough for tensors with at most `max_extent` per direction.
    Workspace(int dim, int max_extent);

    double* ping() { return ping_.data(); }
    double* pong() { return pong_.data(); }
    std::size_t capacity_doubles() const { return ping_.size(); }

    KernelStats stats;
    bool trace = false;
    std::vector<StageRecord> trace_log;

private:
    std::vector<double> ping_;
    std::vector<double> pong_;
};

/// Single-chain sum factorization: y = (A^(d) x ... x A^(1)) x with the
/// contracted index rotated to the slowest position after every stage.
CoeffTensor sumfact_apply(std::span<const SmallMatrix> matrices, const CoeffTensor& x, KernelStats& stats);

/// Reference evaluation by full nested summation (test oracle).
CoeffTensor naive_tensor_apply(std::span<const SmallMatrix> matrices, const CoeffTensor& x);

/// Lane-interleaved matrices for the packed chains: lane l < d carries the
/// derivative in direction l, lane d the plain value, remaining lanes are zero.
class PackedChain {
public:
    /// values/derivs are n x m (basis row, quadrature column); end values are
    /// the basis and its derivative at 0 and 1.
    PackedChain(int dim, const SmallMatrix& values, const SmallMatrix& derivs, std::span<const double> low_values,
                std::span<const double> low_derivs, std::span<const double> high_values,
                std::span<const double> high_derivs);
    PackedChain(const EvalMatrices& ev, const Basis1D& basis);

    int dim() const { return dim_; }
    int n() const { return n_; }
    int m() const { return m_; }

    /// Volume: coefficients (n^d) -> packs at m^d points.
    void volume_evaluate(const double* x, double* packs, Workspace& ws) const;
    /// Volume: packs at m^d points -> y (n^d) += sum over lanes. `packs` is clobbered.
    void volume_integrate(double* packs, double* y, Workspace& ws) const;
    /// Face with normal direction `normal`: coefficients -> packs at m^(d-1) points.
    void face_evaluate(int normal, FaceEnd end, const double* x, double* packs, Workspace& ws) const;
    void face_integrate(int normal, FaceEnd end, double* packs, double* y, Workspace& ws) const;

    /// Same as face_evaluate/face_integrate but always through the generic
    /// runtime-stride normal stage (bit-compatible reference for the specializations).
    void face_evaluate_generic(int normal, FaceEnd end, const double* x, double* packs, Workspace& ws) const;
    void face_integrate_generic(int normal, FaceEnd end, double* packs, double* y, Workspace& ws) const;

    /// FMA counts per real chain, closed form from the stage extents.
    std::uint64_t volume_chain_fma() const;
    std::uint64_t face_chain_fma() const;

    int lanes() const { return dim_ + 1; }

private:
    template <bool Specialized>
    void face_evaluate_impl(int normal, FaceEnd end, const double* x, double* packs, Workspace& ws) const;
    template <bool Specialized>
    void face_integrate_impl(int normal, FaceEnd end, double* packs, double* y, Workspace& ws) const;

    int dim_;
    int n_;
    int m_;
    // [stage][i][j][lane]
    std::vector<std::vector<double>> eval_; // m x n per stage
    std::vector<std::vector<double>> integ_; // n x m per stage
    // face tangential stages: [normal][slot] -> matrices, and normal vectors [normal][end]
    std::vector<std::vector<std::vector<double>>> face_eval_;
    std::vector<std::vector<std::vector<double>>> face_integ_;
    std::vector<std::vector<std::vector<double>>> face_normal_; // n x kPackWidth
};

/// Quadrature-point values of a function given by coefficients (n^d) at m^d points.
CoeffTensor evaluate_values(const CoeffTensor& coeffs, const EvalMatrices& ev, KernelStats& stats);

/// d+1 chains producing packs [d_1 u, ..., d_d u, u, pad] per quadrature point
/// (reference-coordinate derivatives).
CoeffTensor evaluate_gradients(const CoeffTensor& coeffs, const EvalMatrices& ev, KernelStats& stats);

/// residual_j += sum_r sum_i A^(1,r)...A^(d,r) x^(r)_i, with x^(r) stored in the
/// packs (slot r-1 for the derivative tests r = 1..d, slot d for the value test).
void integrate_testfunctions(const CoeffTensor& qpdata, const EvalMatrices& ev, std::span<double> residual,
                             KernelStats& stats);

/// Face-point packs (reference derivatives and value) of the element function
/// on the face with the given normal direction and end.
CoeffTensor face_evaluate(const CoeffTensor& coeffs, const Basis1D& basis, const QuadratureRule1D& quad,
                          int normal, FaceEnd end, KernelStats& stats);
void face_integrate(const CoeffTensor& qpdata, const Basis1D& basis, const QuadratureRule1D& quad, int normal,
                    FaceEnd end, std::span<double> residual, KernelStats& stats);

/// In-place transposition of groups of kPackWidth packs so that each slot of
/// kPackWidth consecutive points becomes contiguous. `points` must be a
/// multiple of kPackWidth.
void transpose_pack(std::span<double> packs, index_t points);
/// Inverse of transpose_pack (the 4x4 block transpose is an involution).
void untranspose_pack(std::span<double> packs, index_t points);

/// Number of points rounded up to the pack width.
constexpr index_t padded_points(index_t points) {
    return (points + kPackWidth - 1) / kPackWidth * kPackWidth;
}

} // namespace sfdg
