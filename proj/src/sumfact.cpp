#include "sfdg/sumfact.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

#include <algorithm>
#include <cmath>
#include <string>

namespace sfdg {

void KernelStats::merge(const KernelStats& o) {
    volume_fma += o.volume_fma;
    face_fma += o.face_fma;
    other_fma += o.other_fma;
    qp_flops += o.qp_flops;
    bytes_loaded += o.bytes_loaded;
    bytes_stored += o.bytes_stored;
    invocations += o.invocations;
    volume_evaluations += o.volume_evaluations;
    volume_integrations += o.volume_integrations;
    face_evaluations += o.face_evaluations;
    face_integrations += o.face_integrations;
}

CoeffTensor::CoeffTensor(int d, DimArray<int> ext, TensorRole r) : dim(d), extents{1, 1, 1}, role(r) {
    for (int q = 0; q < d; ++q)
        extents[q] = ext[q];
    values.assign(static_cast<std::size_t>(entries() * pack()), 0.0);
}

index_t CoeffTensor::entries() const {
    index_t e = 1;
    for (int q = 0; q < dim; ++q)
        e *= extents[q];
    return e;
}

Workspace::Workspace(int dim, int max_extent) {
    const auto size = static_cast<std::size_t>(ipow(std::max(max_extent, 2), dim) * kPackWidth);
    ping_.assign(size, 0.0);
    pong_.assign(size, 0.0);
}

namespace {

constexpr int W = kPackWidth;

// ---------------------------------------------------------------------------
// Scalar rotating stage: out[r + rest*i] = sum_j A(i,j) in[j + in_ext*r].

void scalar_stage(const SmallMatrix& a, index_t rest, const double* in, double* out) {
    const int out_ext = a.rows;
    const int in_ext = a.cols;
    for (index_t r = 0; r < rest; ++r) {
        const double* col = in + in_ext * r;
        for (int i = 0; i < out_ext; ++i) {
            const double* row = a.data.data() + static_cast<std::size_t>(i) * in_ext;
            double acc = 0.0;
            for (int j = 0; j < in_ext; ++j)
                acc = std::fma(row[j], col[j], acc);
            out[r + rest * i] = acc;
        }
    }
}

// ---------------------------------------------------------------------------
// One pack of W lanes. Explicit vectors keep the compiler from vectorizing
// across the output index; every lane is an exact fused multiply-add.

#if defined(__AVX2__) && defined(__FMA__)
using Pack = __m256d;
inline Pack pack_load(const double* p) { return _mm256_loadu_pd(p); }
inline void pack_store(double* p, Pack v) { _mm256_storeu_pd(p, v); }
inline Pack pack_fma(Pack a, Pack b, Pack c) { return _mm256_fmadd_pd(a, b, c); }
inline Pack pack_splat(double x) { return _mm256_set1_pd(x); }
inline Pack pack_zero() { return _mm256_setzero_pd(); }
#else
struct Pack {
    double v[W];
};
inline Pack pack_load(const double* p) { return {{p[0], p[1], p[2], p[3]}}; }
inline void pack_store(double* p, Pack a) {
    for (int l = 0; l < W; ++l)
        p[l] = a.v[l];
}
inline Pack pack_fma(Pack a, Pack b, Pack c) {
    Pack r;
    for (int l = 0; l < W; ++l)
        r.v[l] = std::fma(a.v[l], b.v[l], c.v[l]);
    return r;
}
inline Pack pack_splat(double x) { return {{x, x, x, x}}; }
inline Pack pack_zero() { return {{0.0, 0.0, 0.0, 0.0}}; }
#endif

// ---------------------------------------------------------------------------
// Packed stages. P is [out][in][lane]. IN > 0 fixes the contracted extent at
// compile time so the input column stays in registers; IN == 0 is the generic path.

template <int IN>
void packed_first(const double* p, int out_ext, int in_ext_rt, index_t rest, const double* x, double* out) {
    const int in_ext = IN > 0 ? IN : in_ext_rt;
    for (index_t r = 0; r < rest; ++r) {
        const double* col = x + in_ext * r;
        for (int i = 0; i < out_ext; ++i) {
            const double* pi = p + static_cast<std::size_t>(i) * in_ext * W;
            Pack acc = pack_zero();
            for (int j = 0; j < in_ext; ++j)
                acc = pack_fma(pack_load(pi + j * W), pack_splat(col[j]), acc);
            pack_store(out + (r + rest * i) * W, acc);
        }
    }
}

template <int IN>
void packed_mid(const double* p, int out_ext, int in_ext_rt, index_t rest, const double* in, double* out) {
    const int in_ext = IN > 0 ? IN : in_ext_rt;
    for (index_t r = 0; r < rest; ++r) {
        const double* col = in + in_ext * r * W;
        for (int i = 0; i < out_ext; ++i) {
            const double* pi = p + static_cast<std::size_t>(i) * in_ext * W;
            Pack acc = pack_zero();
            for (int j = 0; j < in_ext; ++j)
                acc = pack_fma(pack_load(pi + j * W), pack_load(col + j * W), acc);
            pack_store(out + (r + rest * i) * W, acc);
        }
    }
}

template <int IN>
void packed_last(const double* p, int out_ext, int in_ext_rt, index_t rest, const double* in, double* y) {
    const int in_ext = IN > 0 ? IN : in_ext_rt;
    for (index_t r = 0; r < rest; ++r) {
        const double* col = in + in_ext * r * W;
        for (int i = 0; i < out_ext; ++i) {
            const double* pi = p + static_cast<std::size_t>(i) * in_ext * W;
            Pack acc = pack_zero();
            for (int j = 0; j < in_ext; ++j)
                acc = pack_fma(pack_load(pi + j * W), pack_load(col + j * W), acc);
            alignas(32) double a[W];
            pack_store(a, acc);
            y[r + rest * i] += (a[0] + a[1]) + (a[2] + a[3]);
        }
    }
}

using StageFn = void (*)(const double*, int, int, index_t, const double*, double*);

#define SFDG_STAGE_TABLE(name)                                                                                  \
    StageFn name##_for(int in_ext) {                                                                            \
        switch (in_ext) {                                                                                       \
        case 1: return &name<1>;                                                                                \
        case 2: return &name<2>;                                                                                \
        case 3: return &name<3>;                                                                                \
        case 4: return &name<4>;                                                                                \
        case 5: return &name<5>;                                                                                \
        case 6: return &name<6>;                                                                                \
        case 7: return &name<7>;                                                                                \
        case 8: return &name<8>;                                                                                \
        case 9: return &name<9>;                                                                                \
        case 10: return &name<10>;                                                                              \
        case 11: return &name<11>;                                                                              \
        case 12: return &name<12>;                                                                              \
        default: return &name<0>;                                                                               \
        }                                                                                                       \
    }

SFDG_STAGE_TABLE(packed_first)
SFDG_STAGE_TABLE(packed_mid)
SFDG_STAGE_TABLE(packed_last)

#undef SFDG_STAGE_TABLE

// ---------------------------------------------------------------------------
// Normal-direction stages of the face kernels. The tensor is viewed as
// [inner][n][outer] around the normal index.

inline void collapse_point(const double* bn, int n, index_t inner, const double* x, double* o) {
    double acc[W] = {0.0, 0.0, 0.0, 0.0};
    for (int j = 0; j < n; ++j) {
        const double v = x[inner * j];
        for (int l = 0; l < W; ++l)
            acc[l] = std::fma(bn[j * W + l], v, acc[l]);
    }
    for (int l = 0; l < W; ++l)
        o[l] = acc[l];
}

inline void expand_point(const double* bn, int n, index_t inner, const double* in, double* y) {
    for (int j = 0; j < n; ++j) {
        double t[W];
        for (int l = 0; l < W; ++l)
            t[l] = bn[j * W + l] * in[l];
        y[inner * j] += (t[0] + t[1]) + (t[2] + t[3]);
    }
}

void collapse_generic(const double* bn, int n, index_t inner, index_t outer, const double* x, double* out) {
    for (index_t o = 0; o < outer; ++o)
        for (index_t i = 0; i < inner; ++i)
            collapse_point(bn, n, inner, x + i + inner * n * o, out + (i + inner * o) * W);
}

void expand_generic(const double* bn, int n, index_t inner, index_t outer, const double* in, double* y) {
    for (index_t o = 0; o < outer; ++o)
        for (index_t i = 0; i < inner; ++i)
            expand_point(bn, n, inner, in + (i + inner * o) * W, y + i + inner * n * o);
}

// Specializations per (dimension, normal direction): the loop structure around
// the normal index is fixed at compile time.
template <int Dim, int Normal>
void collapse_special(const double* bn, int n, const double* x, double* out) {
    static_assert(Normal < Dim);
    if constexpr (Normal == 0) {
        // normal index fastest: each face point reads one contiguous run of n
        const index_t outer = ipow(n, Dim - 1);
        for (index_t o = 0; o < outer; ++o)
            collapse_point(bn, n, 1, x + n * o, out + o * W);
    } else if constexpr (Normal == Dim - 1) {
        // normal index slowest: a weighted sum of n contiguous slabs
        const index_t inner = ipow(n, Dim - 1);
        for (index_t i = 0; i < inner; ++i)
            collapse_point(bn, n, inner, x + i, out + i * W);
    } else {
        const index_t inner = ipow(n, Normal);
        const index_t outer = ipow(n, Dim - 1 - Normal);
        for (index_t o = 0; o < outer; ++o)
            for (index_t i = 0; i < inner; ++i)
                collapse_point(bn, n, inner, x + i + inner * n * o, out + (i + inner * o) * W);
    }
}

template <int Dim, int Normal>
void expand_special(const double* bn, int n, const double* in, double* y) {
    static_assert(Normal < Dim);
    if constexpr (Normal == 0) {
        const index_t outer = ipow(n, Dim - 1);
        for (index_t o = 0; o < outer; ++o)
            expand_point(bn, n, 1, in + o * W, y + n * o);
    } else if constexpr (Normal == Dim - 1) {
        const index_t inner = ipow(n, Dim - 1);
        for (index_t i = 0; i < inner; ++i)
            expand_point(bn, n, inner, in + i * W, y + i);
    } else {
        const index_t inner = ipow(n, Normal);
        const index_t outer = ipow(n, Dim - 1 - Normal);
        for (index_t o = 0; o < outer; ++o)
            for (index_t i = 0; i < inner; ++i)
                expand_point(bn, n, inner, in + (i + inner * o) * W, y + i + inner * n * o);
    }
}

using CollapseFn = void (*)(const double*, int, const double*, double*);
using ExpandFn = void (*)(const double*, int, const double*, double*);

struct FaceKernelTable {
    CollapseFn collapse[kMaxDim + 1][kMaxDim]{};
    ExpandFn expand[kMaxDim + 1][kMaxDim]{};

    FaceKernelTable() {
        collapse[1][0] = &collapse_special<1, 0>;
        collapse[2][0] = &collapse_special<2, 0>;
        collapse[2][1] = &collapse_special<2, 1>;
        collapse[3][0] = &collapse_special<3, 0>;
        collapse[3][1] = &collapse_special<3, 1>;
        collapse[3][2] = &collapse_special<3, 2>;
        expand[1][0] = &expand_special<1, 0>;
        expand[2][0] = &expand_special<2, 0>;
        expand[2][1] = &expand_special<2, 1>;
        expand[3][0] = &expand_special<3, 0>;
        expand[3][1] = &expand_special<3, 1>;
        expand[3][2] = &expand_special<3, 2>;
    }
};

const FaceKernelTable& face_kernels() {
    static const FaceKernelTable table;
    return table;
}

std::vector<double> interleave(const SmallMatrix& value, const SmallMatrix& deriv, int dim, int stage_dir) {
    // lane l < dim: derivative in direction l; lane dim: value; rest zero
    std::vector<double> p(static_cast<std::size_t>(value.rows) * value.cols * W, 0.0);
    for (int i = 0; i < value.rows; ++i)
        for (int j = 0; j < value.cols; ++j)
            for (int l = 0; l <= dim; ++l)
                p[(static_cast<std::size_t>(i) * value.cols + j) * W + l] =
                    l == stage_dir ? deriv(i, j) : value(i, j);
    return p;
}

void record(Workspace& ws, StageRecord::Kind kind, int dir, int in_ext, int out_ext) {
    if (ws.trace)
        ws.trace_log.push_back({kind, dir, in_ext, out_ext});
}

} // namespace

// ---------------------------------------------------------------------------

CoeffTensor sumfact_apply(std::span<const SmallMatrix> matrices, const CoeffTensor& x, KernelStats& stats) {
    const int d = x.dim;
    if (static_cast<int>(matrices.size()) != d)
        throw std::invalid_argument("sumfact_apply: need one matrix per direction");
    if (x.pack() != 1)
        throw std::invalid_argument("sumfact_apply: scalar tensor expected");
    DimArray<int> ext = x.extents;
    for (int q = 0; q < d; ++q)
        if (matrices[q].cols != ext[q])
            throw std::invalid_argument("sumfact_apply: matrix " + std::to_string(q) + " has " +
                                        std::to_string(matrices[q].cols) + " columns, tensor extent is " +
                                        std::to_string(ext[q]));

    std::vector<double> cur = x.values;
    std::vector<double> next;
    for (int q = 0; q < d; ++q) {
        const auto& a = matrices[q];
        index_t rest = 1;
        for (int k = 0; k < d; ++k)
            if (k != q)
                rest *= ext[k];
        next.assign(static_cast<std::size_t>(rest * a.rows), 0.0);
        scalar_stage(a, rest, cur.data(), next.data());
        stats.other_fma += static_cast<std::uint64_t>(rest) * a.rows * a.cols;
        stats.bytes_loaded += static_cast<std::uint64_t>(rest) * a.cols * sizeof(double);
        stats.bytes_stored += static_cast<std::uint64_t>(rest) * a.rows * sizeof(double);
        ext[q] = a.rows;
        cur.swap(next);
    }
    stats.invocations += 1;

    CoeffTensor y(d, ext, x.role);
    y.values = std::move(cur);
    return y;
}

CoeffTensor naive_tensor_apply(std::span<const SmallMatrix> matrices, const CoeffTensor& x) {
    const int d = x.dim;
    if (static_cast<int>(matrices.size()) != d)
        throw std::invalid_argument("naive_tensor_apply: need one matrix per direction");
    DimArray<int> out_ext{1, 1, 1};
    for (int q = 0; q < d; ++q) {
        if (matrices[q].cols != x.extents[q])
            throw std::invalid_argument("naive_tensor_apply: extent mismatch in direction " + std::to_string(q));
        out_ext[q] = matrices[q].rows;
    }
    CoeffTensor y(d, out_ext, x.role);
    const index_t n_out = y.entries();
    const index_t n_in = x.entries();
    std::array<int, kMaxDim> oi{}, ji{};
    for (index_t io = 0; io < n_out; ++io) {
        index_t rem = io;
        for (int q = 0; q < d; ++q) {
            oi[q] = static_cast<int>(rem % out_ext[q]);
            rem /= out_ext[q];
        }
        double sum = 0.0;
        for (index_t jn = 0; jn < n_in; ++jn) {
            index_t r2 = jn;
            double prod = x.values[jn];
            for (int q = 0; q < d; ++q) {
                ji[q] = static_cast<int>(r2 % x.extents[q]);
                r2 /= x.extents[q];
                prod *= matrices[q](oi[q], ji[q]);
            }
            sum += prod;
        }
        y.values[io] = sum;
    }
    return y;
}

// ---------------------------------------------------------------------------

PackedChain::PackedChain(int dim, const SmallMatrix& values, const SmallMatrix& derivs,
                         std::span<const double> low_values, std::span<const double> low_derivs,
                         std::span<const double> high_values, std::span<const double> high_derivs)
    : dim_(dim), n_(values.rows), m_(values.cols) {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("PackedChain: dimension must be 1..3");
    const SmallMatrix vt = values.transposed();
    const SmallMatrix dt = derivs.transposed();
    for (int q = 0; q < dim; ++q) {
        eval_.push_back(interleave(vt, dt, dim, q));
        integ_.push_back(interleave(values, derivs, dim, q));
    }
    face_eval_.resize(dim);
    face_integ_.resize(dim);
    face_normal_.resize(dim);
    for (int k = 0; k < dim; ++k) {
        int slot = 0;
        for (int q = 0; q < dim; ++q) {
            if (q == k)
                continue;
            face_eval_[k].push_back(interleave(vt, dt, dim, q));
            face_integ_[k].push_back(interleave(values, derivs, dim, q));
            ++slot;
        }
        for (int e = 0; e < 2; ++e) {
            const auto& v = e == 0 ? low_values : high_values;
            const auto& dv = e == 0 ? low_derivs : high_derivs;
            std::vector<double> bn(static_cast<std::size_t>(n_) * W, 0.0);
            for (int j = 0; j < n_; ++j)
                for (int l = 0; l <= dim; ++l)
                    bn[j * W + l] = l == k ? dv[j] : v[j];
            face_normal_[k].push_back(std::move(bn));
        }
    }
}

namespace {
std::vector<double> endpoint(const Basis1D& b, double x, bool deriv) {
    std::vector<double> v(b.size()), dv(b.size());
    b.evaluate(x, v, dv);
    return deriv ? dv : v;
}
} // namespace

PackedChain::PackedChain(const EvalMatrices& ev, const Basis1D& basis)
    : PackedChain(ev.dim(), ev.values(), ev.derivatives(), endpoint(basis, 0.0, false), endpoint(basis, 0.0, true),
                  endpoint(basis, 1.0, false), endpoint(basis, 1.0, true)) {}

std::uint64_t PackedChain::volume_chain_fma() const {
    std::uint64_t total = 0;
    for (int q = 0; q < dim_; ++q)
        total += static_cast<std::uint64_t>(ipow(m_, q) * ipow(n_, dim_ - q)) * m_;
    return total;
}

std::uint64_t PackedChain::face_chain_fma() const {
    std::uint64_t total = static_cast<std::uint64_t>(ipow(n_, dim_));
    for (int s = 0; s < dim_ - 1; ++s)
        total += static_cast<std::uint64_t>(ipow(m_, s) * ipow(n_, dim_ - 1 - s)) * m_;
    return total;
}

void PackedChain::volume_evaluate(const double* x, double* packs, Workspace& ws) const {
    const int d = dim_;
    const double* in = x;
    double* bufs[2] = {ws.ping(), ws.pong()};
    for (int q = 0; q < d; ++q) {
        const index_t rest = ipow(m_, q) * ipow(n_, d - 1 - q);
        double* out = q == d - 1 ? packs : bufs[q % 2];
        if (q == 0)
            packed_first_for(n_)(eval_[0].data(), m_, n_, rest, in, out);
        else
            packed_mid_for(n_)(eval_[q].data(), m_, n_, rest, in, out);
        record(ws, StageRecord::Kind::volume_eval, q, n_, m_);
        in = out;
    }
    const auto fma = volume_chain_fma();
    ws.stats.volume_fma += fma * lanes();
    ws.stats.bytes_loaded += static_cast<std::uint64_t>(ipow(n_, d)) * sizeof(double);
    ws.stats.bytes_stored += static_cast<std::uint64_t>(ipow(m_, d)) * W * sizeof(double);
    ws.stats.invocations += 1;
    ws.stats.volume_evaluations += 1;
}

void PackedChain::volume_integrate(double* packs, double* y, Workspace& ws) const {
    const int d = dim_;
    const double* in = packs;
    double* bufs[2] = {ws.ping(), ws.pong()};
    for (int q = 0; q < d; ++q) {
        const index_t rest = ipow(n_, q) * ipow(m_, d - 1 - q);
        if (q == d - 1) {
            packed_last_for(m_)(integ_[q].data(), n_, m_, rest, in, y);
        } else {
            double* out = bufs[q % 2];
            packed_mid_for(m_)(integ_[q].data(), n_, m_, rest, in, out);
            in = out;
        }
        record(ws, StageRecord::Kind::volume_integrate, q, m_, n_);
    }
    const auto fma = volume_chain_fma();
    ws.stats.volume_fma += fma * lanes();
    ws.stats.bytes_loaded += static_cast<std::uint64_t>(ipow(m_, d)) * W * sizeof(double) +
                             static_cast<std::uint64_t>(ipow(n_, d)) * sizeof(double);
    ws.stats.bytes_stored += static_cast<std::uint64_t>(ipow(n_, d)) * sizeof(double);
    ws.stats.invocations += 1;
    ws.stats.volume_integrations += 1;
}

template <bool Specialized>
void PackedChain::face_evaluate_impl(int normal, FaceEnd end, const double* x, double* packs, Workspace& ws) const {
    const int d = dim_;
    if (normal < 0 || normal >= d)
        throw std::invalid_argument("face_evaluate: normal direction " + std::to_string(normal) + " out of range");
    const double* bn = face_normal_[normal][static_cast<int>(end)].data();
    double* bufs[2] = {ws.ping(), ws.pong()};

    // normal direction first: extent n -> 1
    double* first_out = d == 1 ? packs : bufs[0];
    if constexpr (Specialized)
        face_kernels().collapse[d][normal](bn, n_, x, first_out);
    else
        collapse_generic(bn, n_, ipow(n_, normal), ipow(n_, d - 1 - normal), x, first_out);
    record(ws, StageRecord::Kind::face_eval, normal, n_, 1);

    const double* in = first_out;
    for (int s = 0; s < d - 1; ++s) {
        const index_t rest = ipow(m_, s) * ipow(n_, d - 2 - s);
        double* out = s == d - 2 ? packs : bufs[(s + 1) % 2];
        packed_mid_for(n_)(face_eval_[normal][s].data(), m_, n_, rest, in, out);
        record(ws, StageRecord::Kind::face_eval, s < normal ? s : s + 1, n_, m_);
        in = out;
    }
    ws.stats.face_fma += face_chain_fma() * lanes();
    ws.stats.bytes_loaded += static_cast<std::uint64_t>(ipow(n_, d)) * sizeof(double);
    ws.stats.bytes_stored += static_cast<std::uint64_t>(ipow(m_, d - 1)) * W * sizeof(double);
    ws.stats.invocations += 1;
    ws.stats.face_evaluations += 1;
}

template <bool Specialized>
void PackedChain::face_integrate_impl(int normal, FaceEnd end, double* packs, double* y, Workspace& ws) const {
    const int d = dim_;
    if (normal < 0 || normal >= d)
        throw std::invalid_argument("face_integrate: normal direction " + std::to_string(normal) + " out of range");
    const double* bn = face_normal_[normal][static_cast<int>(end)].data();
    double* bufs[2] = {ws.ping(), ws.pong()};

    const double* in = packs;
    for (int s = 0; s < d - 1; ++s) {
        const index_t rest = ipow(n_, s) * ipow(m_, d - 2 - s);
        double* out = bufs[s % 2];
        packed_mid_for(m_)(face_integ_[normal][s].data(), n_, m_, rest, in, out);
        record(ws, StageRecord::Kind::face_integrate, s < normal ? s : s + 1, m_, n_);
        in = out;
    }
    // normal direction last: extent 1 -> n, accumulated straight into y
    if constexpr (Specialized)
        face_kernels().expand[d][normal](bn, n_, in, y);
    else
        expand_generic(bn, n_, ipow(n_, normal), ipow(n_, d - 1 - normal), in, y);
    record(ws, StageRecord::Kind::face_integrate, normal, 1, n_);

    ws.stats.face_fma += face_chain_fma() * lanes();
    ws.stats.bytes_loaded += static_cast<std::uint64_t>(ipow(m_, d - 1)) * W * sizeof(double) +
                             static_cast<std::uint64_t>(ipow(n_, d)) * sizeof(double);
    ws.stats.bytes_stored += static_cast<std::uint64_t>(ipow(n_, d)) * sizeof(double);
    ws.stats.invocations += 1;
    ws.stats.face_integrations += 1;
}

void PackedChain::face_evaluate(int normal, FaceEnd end, const double* x, double* packs, Workspace& ws) const {
    face_evaluate_impl<true>(normal, end, x, packs, ws);
}
void PackedChain::face_integrate(int normal, FaceEnd end, double* packs, double* y, Workspace& ws) const {
    face_integrate_impl<true>(normal, end, packs, y, ws);
}
void PackedChain::face_evaluate_generic(int normal, FaceEnd end, const double* x, double* packs,
                                        Workspace& ws) const {
    face_evaluate_impl<false>(normal, end, x, packs, ws);
}
void PackedChain::face_integrate_generic(int normal, FaceEnd end, double* packs, double* y, Workspace& ws) const {
    face_integrate_impl<false>(normal, end, packs, y, ws);
}

// ---------------------------------------------------------------------------

void transpose_pack(std::span<double> packs, index_t points) {
    if (points % W != 0)
        throw std::invalid_argument("transpose_pack: point count must be a multiple of the pack width");
    if (static_cast<index_t>(packs.size()) < points * W)
        throw std::invalid_argument("transpose_pack: buffer too small");
    for (index_t b = 0; b < points; b += W) {
        double* blk = packs.data() + b * W;
        for (int i = 0; i < W; ++i)
            for (int j = i + 1; j < W; ++j)
                std::swap(blk[i * W + j], blk[j * W + i]);
    }
}

void untranspose_pack(std::span<double> packs, index_t points) { transpose_pack(packs, points); }

// ---------------------------------------------------------------------------
// Tensor-level convenience wrappers (allocate their results).

namespace {

void require_coeffs(const CoeffTensor& c, int dim, int n, const char* who) {
    if (c.dim != dim || c.pack() != 1)
        throw std::invalid_argument(std::string(who) + ": coefficient tensor of matching dimension expected");
    for (int q = 0; q < dim; ++q)
        if (c.extents[q] != n)
            throw std::invalid_argument(std::string(who) + ": coefficient extents must all equal n");
}

DimArray<int> uniform(int d, int e) {
    DimArray<int> ext{1, 1, 1};
    for (int q = 0; q < d; ++q)
        ext[q] = e;
    return ext;
}

} // namespace

CoeffTensor evaluate_values(const CoeffTensor& coeffs, const EvalMatrices& ev, KernelStats& stats) {
    require_coeffs(coeffs, ev.dim(), ev.n(), "evaluate_values");
    std::vector<SmallMatrix> mats;
    for (int q = 0; q < ev.dim(); ++q)
        mats.push_back(ev.evaluation(q, 0));
    CoeffTensor out = sumfact_apply(mats, coeffs, stats);
    out.role = TensorRole::quad_values;
    return out;
}

CoeffTensor evaluate_gradients(const CoeffTensor& coeffs, const EvalMatrices& ev, KernelStats& stats) {
    require_coeffs(coeffs, ev.dim(), ev.n(), "evaluate_gradients");
    const int d = ev.dim();
    const Basis1D basis(ev.n() - 1);
    const PackedChain chain(ev, basis);
    Workspace ws(d, std::max(ev.n(), ev.m()));
    CoeffTensor out(d, uniform(d, ev.m()), TensorRole::quad_packed);
    chain.volume_evaluate(coeffs.values.data(), out.values.data(), ws);
    stats.merge(ws.stats);
    return out;
}

void integrate_testfunctions(const CoeffTensor& qpdata, const EvalMatrices& ev, std::span<double> residual,
                             KernelStats& stats) {
    const int d = ev.dim();
    if (qpdata.dim != d || qpdata.role != TensorRole::quad_packed)
        throw std::invalid_argument("integrate_testfunctions: packed quadrature data expected");
    for (int q = 0; q < d; ++q)
        if (qpdata.extents[q] != ev.m())
            throw std::invalid_argument("integrate_testfunctions: quadrature extents must all equal m");
    if (static_cast<index_t>(residual.size()) != ipow(ev.n(), d))
        throw std::invalid_argument("integrate_testfunctions: residual size must be n^d");
    const Basis1D basis(ev.n() - 1);
    const PackedChain chain(ev, basis);
    Workspace ws(d, std::max(ev.n(), ev.m()));
    std::vector<double> scratch = qpdata.values;
    chain.volume_integrate(scratch.data(), residual.data(), ws);
    stats.merge(ws.stats);
}

CoeffTensor face_evaluate(const CoeffTensor& coeffs, const Basis1D& basis, const QuadratureRule1D& quad, int normal,
                          FaceEnd end, KernelStats& stats) {
    const int d = coeffs.dim;
    if (normal < 0 || normal >= d)
        throw std::invalid_argument("face_evaluate: normal direction out of range");
    require_coeffs(coeffs, d, basis.size(), "face_evaluate");
    const EvalMatrices ev(basis, quad, d);
    const PackedChain chain(ev, basis);
    Workspace ws(d, std::max(ev.n(), ev.m()));
    CoeffTensor out(d - 1, uniform(d - 1, ev.m()), TensorRole::quad_packed);
    if (d == 1)
        out.values.assign(kPackWidth, 0.0);
    chain.face_evaluate(normal, end, coeffs.values.data(), out.values.data(), ws);
    stats.merge(ws.stats);
    return out;
}

void face_integrate(const CoeffTensor& qpdata, const Basis1D& basis, const QuadratureRule1D& quad, int normal,
                    FaceEnd end, std::span<double> residual, KernelStats& stats) {
    const int d = qpdata.dim + 1;
    if (normal < 0 || normal >= d)
        throw std::invalid_argument("face_integrate: normal direction out of range");
    if (qpdata.role != TensorRole::quad_packed)
        throw std::invalid_argument("face_integrate: packed face data expected");
    if (static_cast<index_t>(residual.size()) != ipow(basis.size(), d))
        throw std::invalid_argument("face_integrate: residual size must be n^d");
    const EvalMatrices ev(basis, quad, d);
    const PackedChain chain(ev, basis);
    Workspace ws(d, std::max(ev.n(), ev.m()));
    std::vector<double> scratch = qpdata.values;
    chain.face_integrate(normal, end, scratch.data(), residual.data(), ws);
    stats.merge(ws.stats);
}

} // namespace sfdg
