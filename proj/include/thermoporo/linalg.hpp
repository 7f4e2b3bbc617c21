#pragma once

// Sparse matrices, block composition, essential-BC elimination and the direct
// solves used inside every iteration of every coupling scheme.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermoporo {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Triplet accumulator; finalize() sums duplicates and compresses.
class MatrixBuilder {
public:
    MatrixBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

    void add(int i, int j, double v) { triplets_.emplace_back(i, j, v); }

    SparseMatrix finalize() const {
        SparseMatrix a(rows_, cols_);
        a.setFromTriplets(triplets_.begin(), triplets_.end());
        a.makeCompressed();
        return a;
    }

private:
    int rows_, cols_;
    std::vector<Triplet> triplets_;
};

// Grid of optional blocks with a consistent row/col partition, plus a
// right-hand side partitioned like the rows.
struct BlockSystem {
    std::vector<int> row_sizes;
    std::vector<int> col_sizes;
    std::vector<std::optional<SparseMatrix>> blocks;  // row-major
    std::vector<Vector> rhs;                          // one per block row, may be empty

    BlockSystem(std::vector<int> rows, std::vector<int> cols)
        : row_sizes(std::move(rows)), col_sizes(std::move(cols)),
          blocks(row_sizes.size() * col_sizes.size()), rhs(row_sizes.size()) {}

    void set(int bi, int bj, SparseMatrix a) {
        if (a.rows() != row_sizes.at(bi) || a.cols() != col_sizes.at(bj))
            throw std::invalid_argument("BlockSystem::set: block dimension mismatch at (" +
                                        std::to_string(bi) + "," + std::to_string(bj) + ")");
        blocks[bi * col_sizes.size() + bj] = std::move(a);
    }

    void set_rhs(int bi, Vector b) {
        if (b.size() != row_sizes.at(bi))
            throw std::invalid_argument("BlockSystem::set_rhs: size mismatch");
        rhs[bi] = std::move(b);
    }

    const std::optional<SparseMatrix>& block(int bi, int bj) const {
        return blocks[bi * col_sizes.size() + bj];
    }

    int total_rows() const {
        int n = 0;
        for (int s : row_sizes) n += s;
        return n;
    }
    int total_cols() const {
        int n = 0;
        for (int s : col_sizes) n += s;
        return n;
    }
};

// Flatten to a monolithic matrix; absent blocks contribute zeros.
inline SparseMatrix assemble_block(const BlockSystem& sys) {
    std::vector<int> row_off(sys.row_sizes.size() + 1, 0), col_off(sys.col_sizes.size() + 1, 0);
    for (std::size_t i = 0; i < sys.row_sizes.size(); ++i) row_off[i + 1] = row_off[i] + sys.row_sizes[i];
    for (std::size_t j = 0; j < sys.col_sizes.size(); ++j) col_off[j + 1] = col_off[j] + sys.col_sizes[j];

    std::vector<Triplet> trip;
    for (std::size_t bi = 0; bi < sys.row_sizes.size(); ++bi) {
        for (std::size_t bj = 0; bj < sys.col_sizes.size(); ++bj) {
            const auto& blk = sys.block(static_cast<int>(bi), static_cast<int>(bj));
            if (!blk) continue;
            for (int k = 0; k < blk->outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(*blk, k); it; ++it)
                    trip.emplace_back(row_off[bi] + static_cast<int>(it.row()),
                                      col_off[bj] + static_cast<int>(it.col()), it.value());
        }
    }
    SparseMatrix a(row_off.back(), col_off.back());
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    return a;
}

inline Vector assemble_rhs(const BlockSystem& sys) {
    Vector b = Vector::Zero(sys.total_rows());
    int off = 0;
    for (std::size_t bi = 0; bi < sys.row_sizes.size(); ++bi) {
        if (sys.rhs[bi].size() > 0) b.segment(off, sys.row_sizes[bi]) = sys.rhs[bi];
        off += sys.row_sizes[bi];
    }
    return b;
}

// Sparse LU with a hard residual contract, so iteration counts are never
// contaminated by inner-solver error.
class LuSolver {
public:
    // Physical units can spread matrix entries over ~20 orders of magnitude;
    // equilibrate rows and columns before factorizing and refine iteratively,
    // so the residual contract holds independently of the caller's scaling.
    void factorize(const SparseMatrix& a) {
        if (a.rows() != a.cols()) throw SolveError("solve: matrix not square");
        const int n = static_cast<int>(a.rows());
        dr_ = Vector::Ones(n);
        dc_ = Vector::Ones(n);
        SparseMatrix s = a;
        for (int sweep = 0; sweep < 2; ++sweep) {
            Vector rmax = Vector::Zero(n), cmax = Vector::Zero(n);
            for (int k = 0; k < s.outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(s, k); it; ++it) {
                    const double v = std::abs(it.value());
                    rmax[it.row()] = std::max(rmax[it.row()], v);
                    cmax[it.col()] = std::max(cmax[it.col()], v);
                }
            for (int i = 0; i < n; ++i) {
                rmax[i] = rmax[i] > 0.0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
                cmax[i] = cmax[i] > 0.0 ? 1.0 / std::sqrt(cmax[i]) : 1.0;
            }
            for (int k = 0; k < s.outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(s, k); it; ++it)
                    it.valueRef() *= rmax[it.row()] * cmax[it.col()];
            dr_ = dr_.cwiseProduct(rmax);
            dc_ = dc_.cwiseProduct(cmax);
        }
        lu_.compute(s);
        if (lu_.info() != Eigen::Success)
            throw SolveError("solve: LU factorization failed (singular or rank-deficient matrix)");
        scaled_ = std::move(s);
        ready_ = true;
    }

    Vector solve(const Vector& b, double residual_tol = 1e-10) const {
        if (!ready_) throw SolveError("solve: factorize first");
        const Vector bs = dr_.cwiseProduct(b);
        const double bn = bs.norm();
        Vector y = lu_.solve(bs);
        if (lu_.info() != Eigen::Success) throw SolveError("solve: LU backsubstitution failed");
        if (bn == 0.0) return dc_.cwiseProduct(y);
        for (int pass = 0; pass < 4; ++pass) {
            const Vector r = bs - scaled_ * y;
            if (r.norm() <= residual_tol * bn) return dc_.cwiseProduct(y);
            y += lu_.solve(r);
        }
        const double rn = (scaled_ * y - bs).norm();
        if (!(rn <= residual_tol * bn)) {
            char msg[64];
            std::snprintf(msg, sizeof(msg), "%.3e", rn / bn);
            throw SolveError(std::string("solve: relative residual ") + msg + " exceeds contract");
        }
        return dc_.cwiseProduct(y);
    }

    bool ready() const { return ready_; }

private:
    SparseMatrix scaled_;
    Vector dr_, dc_;  // row / column equilibration factors
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
    bool ready_ = false;
};

inline Vector solve(const SparseMatrix& a, const Vector& b) {
    LuSolver lu;
    lu.factorize(a);
    return lu.solve(b);
}

// Symmetric elimination of prescribed dofs: for each constrained dof j with
// value v, move column j times v to the right-hand side, zero row and column
// j, and put 1 on the diagonal with b[j] = v. Preserves symmetry.
inline std::pair<SparseMatrix, Vector> apply_essential_bc(const SparseMatrix& a, const Vector& b,
                                                          std::span<const int> dofs,
                                                          std::span<const double> values) {
    if (dofs.size() != values.size())
        throw std::invalid_argument("apply_essential_bc: index/value size mismatch");
    const int n = static_cast<int>(a.rows());
    std::vector<char> fixed(n, 0);
    std::vector<double> val(n, 0.0);
    for (std::size_t k = 0; k < dofs.size(); ++k) {
        const int j = dofs[k];
        if (j < 0 || j >= n) throw std::invalid_argument("apply_essential_bc: dof out of range");
        if (fixed[j] && val[j] != values[k])
            throw std::invalid_argument("apply_essential_bc: conflicting values for dof " +
                                        std::to_string(j));
        fixed[j] = 1;
        val[j] = values[k];
    }

    Vector bb = b;
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(a.nonZeros()));
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
            if (fixed[j] && !fixed[i]) bb[i] -= it.value() * val[j];
            if (!fixed[i] && !fixed[j]) trip.emplace_back(i, j, it.value());
        }
    }
    for (int j = 0; j < n; ++j)
        if (fixed[j]) {
            trip.emplace_back(j, j, 1.0);
            bb[j] = val[j];
        }

    SparseMatrix aa(n, static_cast<int>(a.cols()));
    aa.setFromTriplets(trip.begin(), trip.end());
    aa.makeCompressed();
    return {std::move(aa), std::move(bb)};
}

// RHS-only variant for reuse of an already-eliminated factorization.
inline Vector eliminate_rhs(const SparseMatrix& a_orig, const Vector& b,
                            std::span<const int> dofs, std::span<const double> values) {
    const int n = static_cast<int>(a_orig.rows());
    std::vector<char> fixed(n, 0);
    std::vector<double> val(n, 0.0);
    for (std::size_t k = 0; k < dofs.size(); ++k) {
        fixed[dofs[k]] = 1;
        val[dofs[k]] = values[k];
    }
    Vector bb = b;
    for (int k = 0; k < a_orig.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a_orig, k); it; ++it)
            if (fixed[it.col()] && !fixed[it.row()])
                bb[it.row()] -= it.value() * val[it.col()];
    for (int j = 0; j < n; ++j)
        if (fixed[j]) bb[j] = val[j];
    return bb;
}

}  // namespace thermoporo
