#pragma once

#include "sfdg/operator.hpp"

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

namespace sfdg {

inline constexpr std::size_t kDefaultMatrixCap = std::size_t(2) << 30;

/// Block-CSR matrix with dense n^d x n^d blocks over the element adjacency graph.
struct BlockSparseMatrix {
    index_t block_rows = 0;
    index_t block_size = 0;
    std::vector<index_t> row_ptr;
    std::vector<index_t> col_idx;
    std::vector<double> values; ///< row-major blocks, in col_idx order

    index_t num_blocks() const { return static_cast<index_t>(col_idx.size()); }
    std::size_t bytes() const;
    /// Pointer to block (i, j) or nullptr if it is not stored.
    double* find(index_t i, index_t j);
    const double* find(index_t i, index_t j) const;
};

/// Estimated storage of the operator matrix on this mesh/basis.
std::size_t estimate_matrix_bytes(const StructuredMesh& mesh, index_t block_size);

/// Column (e, j) is the matrix-free local kernels applied to the unit vector
/// of local dof j on element e.
BlockSparseMatrix assemble_matrix(const DgOperator& op, double t, std::size_t cap_bytes = kDefaultMatrixCap);

void spmv(const BlockSparseMatrix& a, const DofVector& z, DofVector& y, int threads = 1);

/// Text dump: one line per stored block, "row col v00 v01 ... " row-major.
void write_triplets(const BlockSparseMatrix& a, std::ostream& os);

class MassOperator {
public:
    enum class Mode { diagonal, block_diagonal };

    explicit MassOperator(const DgOperator& op);
    ~MassOperator();
    MassOperator(MassOperator&&) noexcept;
    MassOperator& operator=(MassOperator&&) noexcept;

    Mode mode() const { return mode_; }
    /// y = M z
    void apply(const DofVector& z, DofVector& y) const;
    /// z = M^{-1} r (z may alias r)
    void solve(const DofVector& r, DofVector& z) const;
    /// Diagonal entries (diagonal mode only).
    const std::vector<double>& diagonal() const { return diag_; }
    /// Dense block of element e, row-major (block-diagonal mode only).
    std::vector<double> block(index_t e) const;

private:
    struct Factors;
    Mode mode_;
    index_t block_ = 0;
    std::vector<double> diag_; ///< per element Delta_T
    std::unique_ptr<Factors> factors_;
};

MassOperator assemble_mass(const DgOperator& op);
void mass_solve(const MassOperator& m, const DofVector& r, DofVector& z);

struct OracleReport {
    double max_rel_error = 0.0;
    int trials = 0;
    index_t dofs = 0;
    bool pass = false;
};

/// Compares apply() with the SpMV of the assembled matrix on random vectors.
OracleReport verify_against_oracle(const DgOperator& op, int trials, double t = 0.0, std::uint64_t seed = 1,
                                   double tolerance = 1e-10, std::size_t cap_bytes = kDefaultMatrixCap);

} // namespace sfdg
