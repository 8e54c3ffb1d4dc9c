#include "sfdg/oracle.hpp"

#include <Eigen/Dense>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace sfdg {

std::size_t BlockSparseMatrix::bytes() const {
    return values.size() * sizeof(double) + col_idx.size() * sizeof(index_t) + row_ptr.size() * sizeof(index_t);
}

double* BlockSparseMatrix::find(index_t i, index_t j) {
    const auto b = col_idx.begin() + row_ptr[i], e = col_idx.begin() + row_ptr[i + 1];
    const auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j)
        return nullptr;
    return values.data() + (it - col_idx.begin()) * block_size * block_size;
}

const double* BlockSparseMatrix::find(index_t i, index_t j) const {
    return const_cast<BlockSparseMatrix*>(this)->find(i, j);
}

namespace {

std::vector<std::vector<index_t>> adjacency(const StructuredMesh& mesh) {
    std::vector<std::set<index_t>> cols(static_cast<std::size_t>(mesh.num_elements()));
    for (index_t e = 0; e < mesh.num_elements(); ++e)
        cols[e].insert(e);
    for (const auto& f : mesh.faces())
        if (f.interior()) {
            cols[f.minus].insert(f.plus);
            cols[f.plus].insert(f.minus);
        }
    std::vector<std::vector<index_t>> out(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i)
        out[i].assign(cols[i].begin(), cols[i].end());
    return out;
}

} // namespace

std::size_t estimate_matrix_bytes(const StructuredMesh& mesh, index_t block_size) {
    // every interior face couples two distinct elements (at most two blocks)
    const std::size_t blocks = static_cast<std::size_t>(mesh.num_elements() + 2 * mesh.num_interior_faces());
    return blocks * static_cast<std::size_t>(block_size * block_size) * sizeof(double) +
           blocks * sizeof(index_t) + static_cast<std::size_t>(mesh.num_elements() + 1) * sizeof(index_t);
}

BlockSparseMatrix assemble_matrix(const DgOperator& op, double t, std::size_t cap_bytes) {
    const auto& mesh = op.mesh();
    const index_t bs = op.block_size();
    const std::size_t estimate = estimate_matrix_bytes(mesh, bs);
    if (estimate > cap_bytes)
        throw ResourceError("matrix assembly needs about " + std::to_string(estimate >> 20) +
                                " MiB, above the cap of " + std::to_string(cap_bytes >> 20) + " MiB",
                            estimate);

    BlockSparseMatrix a;
    a.block_rows = mesh.num_elements();
    a.block_size = bs;
    const auto adj = adjacency(mesh);
    a.row_ptr.assign(static_cast<std::size_t>(a.block_rows + 1), 0);
    for (index_t i = 0; i < a.block_rows; ++i)
        a.row_ptr[i + 1] = a.row_ptr[i] + static_cast<index_t>(adj[i].size());
    a.col_idx.reserve(static_cast<std::size_t>(a.row_ptr.back()));
    for (const auto& r : adj)
        a.col_idx.insert(a.col_idx.end(), r.begin(), r.end());
    a.values.assign(static_cast<std::size_t>(a.row_ptr.back() * bs * bs), 0.0);

    // faces touching each element
    std::vector<std::vector<index_t>> touching(static_cast<std::size_t>(a.block_rows));
    const auto& faces = mesh.faces();
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        touching[faces[fi].minus].push_back(static_cast<index_t>(fi));
        if (faces[fi].plus >= 0)
            touching[faces[fi].plus].push_back(static_cast<index_t>(fi));
    }

    const int nt = op.threads();
    std::exception_ptr error;
#pragma omp parallel num_threads(nt)
    {
        auto s = op.make_scratch();
        std::vector<double> unit(static_cast<std::size_t>(bs), 0.0), col(static_cast<std::size_t>(bs)),
            other(static_cast<std::size_t>(bs));
        try {
#pragma omp for schedule(static)
            for (index_t e = 0; e < a.block_rows; ++e) {
                for (index_t j = 0; j < bs; ++j) {
                    std::fill(unit.begin(), unit.end(), 0.0);
                    unit[j] = 1.0;
                    std::fill(col.begin(), col.end(), 0.0);
                    op.local_volume(e, unit.data(), t, col.data(), *s);
                    for (index_t fi : touching[e]) {
                        const auto& f = faces[fi];
                        std::fill(other.begin(), other.end(), 0.0);
                        index_t row = -1;
                        if (f.minus == e) {
                            op.local_face(fi, unit.data(), nullptr, t, col.data(), f.plus >= 0 ? other.data() : nullptr,
                                          *s);
                            row = f.plus;
                        } else {
                            op.local_face(fi, nullptr, unit.data(), t, other.data(), col.data(), *s);
                            row = f.minus;
                        }
                        if (row >= 0) {
                            double* blk = a.find(row, e);
                            for (index_t i = 0; i < bs; ++i)
                                blk[i * bs + j] += other[i];
                        }
                    }
                    double* diag = a.find(e, e);
                    for (index_t i = 0; i < bs; ++i)
                        diag[i * bs + j] = col[i];
                }
            }
        } catch (...) {
#pragma omp critical
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
    return a;
}

void spmv(const BlockSparseMatrix& a, const DofVector& z, DofVector& y, int threads) {
    const index_t bs = a.block_size;
    if (z.elements() != a.block_rows || z.block_size() != bs)
        throw std::invalid_argument("spmv: vector does not match the matrix");
    if (!y.conforms(z))
        y = DofVector(a.block_rows, bs);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (index_t i = 0; i < a.block_rows; ++i) {
        double* yi = y.block(i);
        std::fill(yi, yi + bs, 0.0);
        for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const double* blk = a.values.data() + k * bs * bs;
            const double* zj = z.block(a.col_idx[k]);
            for (index_t r = 0; r < bs; ++r) {
                const double* row = blk + r * bs;
                double acc = 0.0;
                for (index_t c = 0; c < bs; ++c)
                    acc += row[c] * zj[c];
                yi[r] += acc;
            }
        }
    }
}

void write_triplets(const BlockSparseMatrix& a, std::ostream& os) {
    const index_t bs = a.block_size;
    os.precision(17);
    for (index_t i = 0; i < a.block_rows; ++i)
        for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            os << i << ' ' << a.col_idx[k];
            const double* blk = a.values.data() + k * bs * bs;
            for (index_t r = 0; r < bs * bs; ++r)
                os << ' ' << blk[r];
            os << '\n';
        }
}

// ---------------------------------------------------------------------------

struct MassOperator::Factors {
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llt;
    std::vector<Eigen::MatrixXd> blocks;
};

MassOperator::MassOperator(const DgOperator& op) : block_(op.block_size()) {
    const auto& mesh = op.mesh();
    const index_t ne = mesh.num_elements();
    if (mesh.constant_jacobian()) {
        // orthonormal basis and constant Delta_T: M = Delta_T I per element
        mode_ = Mode::diagonal;
        diag_.resize(static_cast<std::size_t>(ne));
        for (index_t e = 0; e < ne; ++e)
            diag_[e] = mesh.cell_volume(e);
        return;
    }
    mode_ = Mode::block_diagonal;
    factors_ = std::make_unique<Factors>();
    const int d = mesh.dim();
    const int n = op.n();
    const int m = n + 1; // det J of a multilinear map has degree <= 2 per direction
    const auto rule = gauss_legendre(m);
    const Basis1D& basis = op.basis();
    GeometryEvaluator geo(mesh, rule);
    VolumeGeometry vg;
    const index_t nq = ipow(m, d);
    Eigen::MatrixXd b(nq, block_);
    std::vector<double> vals(static_cast<std::size_t>(n * m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            vals[i * n + j] = basis.value(j, rule.points[i]);
    Eigen::VectorXd w(nq);
    for (index_t q = 0; q < nq; ++q) {
        int qi[3] = {0, 0, 0};
        index_t r = q;
        double wq = 1.0;
        for (int k = 0; k < d; ++k) {
            qi[k] = static_cast<int>(r % m);
            r /= m;
            wq *= rule.weights[qi[k]];
        }
        w[q] = wq;
        for (index_t j = 0; j < block_; ++j) {
            index_t rj = j;
            double v = 1.0;
            for (int k = 0; k < d; ++k) {
                v *= vals[qi[k] * n + rj % n];
                rj /= n;
            }
            b(q, j) = v;
        }
    }
    factors_->llt.resize(static_cast<std::size_t>(ne));
    factors_->blocks.resize(static_cast<std::size_t>(ne));
    for (index_t e = 0; e < ne; ++e) {
        geo.volume(e, vg);
        Eigen::VectorXd jw(nq);
        for (index_t q = 0; q < nq; ++q)
            jw[q] = w[q] * vg.det[q];
        Eigen::MatrixXd me = b.transpose() * jw.asDiagonal() * b;
        me = 0.5 * (me + me.transpose());
        factors_->llt[e].compute(me);
        if (factors_->llt[e].info() != Eigen::Success)
            throw DegenerateGeometryError("mass matrix of element " + std::to_string(e) + " is not positive definite");
        factors_->blocks[e] = std::move(me);
    }
}

MassOperator::~MassOperator() = default;
MassOperator::MassOperator(MassOperator&&) noexcept = default;
MassOperator& MassOperator::operator=(MassOperator&&) noexcept = default;

void MassOperator::apply(const DofVector& z, DofVector& y) const {
    if (!y.conforms(z))
        y = DofVector(z.elements(), z.block_size());
    for (index_t e = 0; e < z.elements(); ++e) {
        if (mode_ == Mode::diagonal) {
            for (index_t j = 0; j < block_; ++j)
                y.block(e)[j] = diag_[e] * z.block(e)[j];
        } else {
            Eigen::Map<const Eigen::VectorXd> ze(z.block(e), block_);
            Eigen::Map<Eigen::VectorXd> ye(y.block(e), block_);
            ye = factors_->blocks[e] * ze;
        }
    }
}

void MassOperator::solve(const DofVector& r, DofVector& z) const {
    if (r.block_size() != block_)
        throw std::invalid_argument("mass_solve: vector does not match the discretization");
    if (&r != &z && !z.conforms(r))
        z = DofVector(r.elements(), r.block_size());
    for (index_t e = 0; e < r.elements(); ++e) {
        if (mode_ == Mode::diagonal) {
            const double inv = 1.0 / diag_[e];
            for (index_t j = 0; j < block_; ++j)
                z.block(e)[j] = r.block(e)[j] * inv;
        } else {
            Eigen::Map<const Eigen::VectorXd> re(r.block(e), block_);
            Eigen::VectorXd sol = factors_->llt[e].solve(re);
            std::copy(sol.data(), sol.data() + block_, z.block(e));
        }
    }
}

std::vector<double> MassOperator::block(index_t e) const {
    std::vector<double> out(static_cast<std::size_t>(block_ * block_), 0.0);
    if (mode_ == Mode::diagonal) {
        for (index_t j = 0; j < block_; ++j)
            out[j * block_ + j] = diag_[e];
        return out;
    }
    const auto& me = factors_->blocks[e];
    for (index_t i = 0; i < block_; ++i)
        for (index_t j = 0; j < block_; ++j)
            out[i * block_ + j] = me(i, j);
    return out;
}

MassOperator assemble_mass(const DgOperator& op) { return MassOperator(op); }

void mass_solve(const MassOperator& m, const DofVector& r, DofVector& z) { m.solve(r, z); }

OracleReport verify_against_oracle(const DgOperator& op, int trials, double t, std::uint64_t seed, double tolerance,
                                   std::size_t cap_bytes) {
    OracleReport rep;
    rep.trials = trials;
    rep.dofs = op.num_dofs();
    const auto a = assemble_matrix(op, t, cap_bytes);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DofVector z = op.create_vector(), y1, y2;
    for (int k = 0; k < trials; ++k) {
        for (auto& v : z.values())
            v = u(rng);
        op.apply(z, t, y1);
        spmv(a, z, y2, op.threads());
        double num = 0.0, den = 0.0;
        for (index_t i = 0; i < z.size(); ++i) {
            num = std::max(num, std::abs(y1[i] - y2[i]));
            den = std::max(den, std::abs(y2[i]));
        }
        rep.max_rel_error = std::max(rep.max_rel_error, den > 0.0 ? num / den : num);
    }
    rep.pass = rep.max_rel_error <= tolerance;
    return rep;
}

} // namespace sfdg
