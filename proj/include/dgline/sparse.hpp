#pragma once

#include "dgline/common.hpp"
#include "dgline/mesh.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <ostream>
#include <span>
#include <vector>

namespace dgline {

using Vector = Eigen::VectorXd;
using DenseBlock = Eigen::MatrixXd;

/// Compressed sparse row matrix whose rows are grouped into equal-size
/// element blocks. The sparsity is block-structured: block row e couples to
/// the sorted block columns in `block_cols[e]`.
class CsrMatrix {
public:
    CsrMatrix() = default;

    /// Block pattern where each element couples to itself and its face neighbours.
    static CsrMatrix from_mesh(const Mesh& m, int block_size) {
        std::vector<std::vector<int>> cols(m.num_elements());
        for (std::size_t e = 0; e < m.num_elements(); ++e) {
            cols[e].push_back(static_cast<int>(e));
            for (int nb : m.neighbors[e])
                if (nb >= 0) cols[e].push_back(nb);
            std::sort(cols[e].begin(), cols[e].end());
        }
        return CsrMatrix(block_size, std::move(cols));
    }

    static CsrMatrix block_diagonal(std::size_t num_blocks, int block_size) {
        std::vector<std::vector<int>> cols(num_blocks);
        for (std::size_t e = 0; e < num_blocks; ++e) cols[e] = {static_cast<int>(e)};
        return CsrMatrix(block_size, std::move(cols));
    }

    /// General scalar CSR (block size 1) from triplets; duplicates are summed.
    static CsrMatrix from_triplets(int n, const std::vector<Eigen::Triplet<double>>& trips) {
        std::vector<std::vector<int>> cols(n);
        for (const auto& t : trips) cols[t.row()].push_back(t.col());
        for (auto& c : cols) {
            std::sort(c.begin(), c.end());
            c.erase(std::unique(c.begin(), c.end()), c.end());
        }
        CsrMatrix a(1, std::move(cols));
        for (const auto& t : trips) a.block(t.row(), t.col())[0] += t.value();
        return a;
    }

    int rows() const { return static_cast<int>(row_ptr_.size()) - 1; }
    int block_size() const { return bs_; }
    std::size_t num_blocks() const { return block_cols_.size(); }
    std::size_t nnz() const { return values_.size(); }

    std::span<const int> row_ptr() const { return row_ptr_; }
    std::span<const int> col_idx() const { return col_idx_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    const std::vector<int>& block_cols(std::size_t e) const { return block_cols_[e]; }

    /// Pointer to entry (0,0) of block (bi, bj); rows of the block are
    /// spaced `row_stride(bi)` apart.
    double* block(int bi, int bj) {
        const auto& c = block_cols_[bi];
        const auto it = std::lower_bound(c.begin(), c.end(), bj);
        if (it == c.end() || *it != bj) throw AssemblyError("CsrMatrix: block outside the sparsity pattern");
        return values_.data() + row_ptr_[bi * bs_] + (it - c.begin()) * bs_;
    }
    int row_stride(int bi) const { return static_cast<int>(block_cols_[bi].size()) * bs_; }

    void add_block(int bi, int bj, const DenseBlock& local, double scale = 1.0) {
        double* p = block(bi, bj);
        const int stride = row_stride(bi);
        for (int r = 0; r < bs_; ++r)
            for (int c = 0; c < bs_; ++c) p[r * stride + c] += scale * local(r, c);
    }

    DenseBlock get_block(int bi, int bj) const {
        const double* p = const_cast<CsrMatrix*>(this)->block(bi, bj);
        const int stride = row_stride(bi);
        DenseBlock b(bs_, bs_);
        for (int r = 0; r < bs_; ++r)
            for (int c = 0; c < bs_; ++c) b(r, c) = p[r * stride + c];
        return b;
    }

    double coeff(int i, int j) const {
        for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
            if (col_idx_[p] == j) return values_[p];
        return 0.0;
    }

    /// y = A x. Rows are independent, so the result is thread-count invariant.
    void multiply(const Vector& x, Vector& y) const {
        y.resize(rows());
        parallel_for_chunks(static_cast<std::size_t>(rows()), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                double s = 0.0;
                for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[col_idx_[p]];
                y[static_cast<Eigen::Index>(i)] = s;
            }
        });
    }

    Vector operator*(const Vector& x) const {
        Vector y;
        multiply(x, y);
        return y;
    }

    /// this += scale * other, where other's pattern is contained in this one.
    void add_scaled(const CsrMatrix& other, double scale) {
        if (other.bs_ != bs_ || other.num_blocks() != num_blocks())
            throw AssemblyError("CsrMatrix::add_scaled: incompatible layouts");
        for (int bi = 0; bi < static_cast<int>(num_blocks()); ++bi)
            for (int bj : other.block_cols_[bi]) add_block(bi, bj, other.get_block(bi, bj), scale);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// max |A_ij - A_ji|.
    double max_asymmetry() const {
        double m = 0.0;
        for (int i = 0; i < rows(); ++i)
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
                m = std::max(m, std::abs(values_[p] - coeff(col_idx_[p], i)));
        return m;
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows(), rows());
        for (int i = 0; i < rows(); ++i)
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) = values_[p];
        return d;
    }

    void write_matrix_market(std::ostream& os) const {
        os.precision(17);
        os << "%%MatrixMarket matrix coordinate real general\n" << rows() << ' ' << rows() << ' ' << nnz() << '\n';
        for (int i = 0; i < rows(); ++i)
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
                os << i + 1 << ' ' << col_idx_[p] + 1 << ' ' << values_[p] << '\n';
    }

private:
    CsrMatrix(int bs, std::vector<std::vector<int>> block_cols) : bs_(bs), block_cols_(std::move(block_cols)) {
        const std::size_t nb = block_cols_.size();
        row_ptr_.assign(nb * bs_ + 1, 0);
        for (std::size_t e = 0; e < nb; ++e)
            for (int r = 0; r < bs_; ++r)
                row_ptr_[e * bs_ + r + 1] = row_ptr_[e * bs_ + r] + static_cast<int>(block_cols_[e].size()) * bs_;
        col_idx_.resize(row_ptr_.back());
        values_.assign(row_ptr_.back(), 0.0);
        for (std::size_t e = 0; e < nb; ++e)
            for (int r = 0; r < bs_; ++r) {
                int p = row_ptr_[e * bs_ + r];
                for (int bj : block_cols_[e])
                    for (int c = 0; c < bs_; ++c) col_idx_[p++] = bj * bs_ + c;
            }
    }

    int bs_ = 1;
    std::vector<std::vector<int>> block_cols_;
    std::vector<int> row_ptr_;
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

/// Deterministic dot product: fixed-size partial sums combined in order.
inline double dot(const Vector& a, const Vector& b) {
    constexpr Eigen::Index chunk = 4096;
    const Eigen::Index n = a.size();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; i += chunk) {
        const Eigen::Index len = std::min(chunk, n - i);
        s += a.segment(i, len).dot(b.segment(i, len));
    }
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

} // namespace dgline
