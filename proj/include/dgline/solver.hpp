#pragma once

#include "dgline/sparse.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace dgline {

enum class KrylovMethod { cg, bicgstab };
enum class Preconditioner { none, jacobi, block_jacobi };

struct SolverConfig {
    KrylovMethod method = KrylovMethod::cg;
    double rel_tol = 1e-10;
    int max_iter = 0; // 0: 10 * number of unknowns
    Preconditioner preconditioner = Preconditioner::block_jacobi;
    /// Called with (iteration, iterate) after every update; for diagnostics.
    std::function<void(int, const Vector&)> monitor;

    void validate() const {
        if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("SolverConfig: rel_tol must lie in (0, 1)");
        if (max_iter < 0) throw InvalidArgument("SolverConfig: max_iter must be >= 1 (or 0 for the default)");
    }
};

struct SolveResult {
    Vector x;
    int iterations = 0;
    double residual = 0.0;          // ||b - A x||_2
    double relative_residual = 0.0; // residual / ||b||_2
};

/// Thrown when the iteration fails; carries the best iterate found.
struct SolverError : std::runtime_error {
    SolveResult best;
    SolverError(const std::string& what, SolveResult r) : std::runtime_error(what), best(std::move(r)) {}
};

/// Inverse of the diagonal (or of the diagonal blocks) of A.
class BlockJacobi {
public:
    BlockJacobi(const CsrMatrix& a, Preconditioner kind) : kind_(kind), bs_(kind == Preconditioner::block_jacobi ? a.block_size() : 1) {
        if (kind_ == Preconditioner::none) return;
        if (kind_ == Preconditioner::jacobi) {
            inv_diag_.resize(a.rows());
            for (int i = 0; i < a.rows(); ++i) {
                const double d = a.coeff(i, i);
                if (d == 0.0) throw SolverError("Jacobi preconditioner: zero diagonal entry", {});
                inv_diag_[i] = 1.0 / d;
            }
            return;
        }
        blocks_.reserve(a.num_blocks());
        for (int e = 0; e < static_cast<int>(a.num_blocks()); ++e) {
            Eigen::PartialPivLU<DenseBlock> lu(a.get_block(e, e));
            blocks_.push_back(lu.inverse());
            if (!blocks_.back().allFinite()) throw SolverError("block-Jacobi preconditioner: singular diagonal block", {});
        }
    }

    void apply(const Vector& r, Vector& z) const {
        switch (kind_) {
        case Preconditioner::none:
            z = r;
            return;
        case Preconditioner::jacobi:
            z = r.cwiseProduct(inv_diag_);
            return;
        case Preconditioner::block_jacobi:
            z.resize(r.size());
            parallel_for_chunks(blocks_.size(), [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) {
                    const auto off = static_cast<Eigen::Index>(i) * bs_;
                    z.segment(off, bs_).noalias() = blocks_[i] * r.segment(off, bs_);
                }
            });
            return;
        }
    }

private:
    Preconditioner kind_;
    int bs_;
    Vector inv_diag_;
    std::vector<DenseBlock> blocks_;
};

namespace detail {

inline SolveResult finish(const CsrMatrix& a, const Vector& b, Vector x, int it, double bnorm) {
    SolveResult r;
    r.residual = norm2(b - a * x);
    r.relative_residual = bnorm > 0.0 ? r.residual / bnorm : r.residual;
    r.x = std::move(x);
    r.iterations = it;
    return r;
}

using Monitor = std::function<void(int, const Vector&)>;

inline SolveResult pcg(const CsrMatrix& a, const Vector& b, const Vector& x0, const BlockJacobi& m, double tol,
                       int max_iter, const Monitor& monitor = {}) {
    const double bnorm = norm2(b);
    Vector x = x0;
    Vector r = b - a * x;
    Vector z, p, ap;
    if (norm2(r) <= tol * bnorm || bnorm == 0.0) return finish(a, b, x, 0, bnorm);
    m.apply(r, z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        a.multiply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0) || !std::isfinite(pap))
            throw SolverError("CG breakdown at iteration " + std::to_string(it) +
                                  ": p^T A p <= 0 (matrix not positive definite; penalty too small?)",
                              finish(a, b, x, it, bnorm));
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        if (monitor) monitor(it, x);
        const double rn = norm2(r);
        if (!std::isfinite(rn)) throw SolverError("CG produced NaN", finish(a, b, x, it, bnorm));
        if (rn <= tol * bnorm) {
            SolveResult res = finish(a, b, std::move(x), it, bnorm);
            if (res.relative_residual <= tol * 1.01) return res;
            // recursive residual drifted from the true one: restart from here
            SolveResult again = pcg(a, b, res.x, m, tol, max_iter - it, monitor);
            again.iterations += it;
            return again;
        }
        m.apply(r, z);
        const double rz_new = dot(r, z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw SolverError("CG did not converge in " + std::to_string(max_iter) + " iterations", finish(a, b, x, max_iter, bnorm));
}

inline SolveResult pbicgstab(const CsrMatrix& a, const Vector& b, const Vector& x0, const BlockJacobi& m, double tol,
                             int max_iter, const Monitor& monitor = {}) {
    const double bnorm = norm2(b);
    Vector x = x0;
    Vector r = b - a * x;
    if (bnorm == 0.0 || norm2(r) <= tol * bnorm) return finish(a, b, x, 0, bnorm);
    const Vector r_hat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    Vector v = Vector::Zero(b.size()), p = Vector::Zero(b.size()), y, z, s, t;
    for (int it = 1; it <= max_iter; ++it) {
        const double rho_new = dot(r_hat, r);
        if (rho_new == 0.0 || !std::isfinite(rho_new))
            throw SolverError("BiCGStab breakdown (rho = 0) at iteration " + std::to_string(it), finish(a, b, x, it, bnorm));
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p = r + beta * (p - omega * v);
        m.apply(p, y);
        a.multiply(y, v);
        alpha = rho / dot(r_hat, v);
        s = r - alpha * v;
        if (norm2(s) <= tol * bnorm) {
            x += alpha * y;
            return finish(a, b, std::move(x), it, bnorm);
        }
        m.apply(s, z);
        a.multiply(z, t);
        const double tt = dot(t, t);
        omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
        x += alpha * y + omega * z;
        r = s - omega * t;
        if (monitor) monitor(it, x);
        const double rn = norm2(r);
        if (!std::isfinite(rn)) throw SolverError("BiCGStab produced NaN", finish(a, b, x, it, bnorm));
        if (rn <= tol * bnorm) return finish(a, b, std::move(x), it, bnorm);
        if (omega == 0.0)
            throw SolverError("BiCGStab breakdown (omega = 0) at iteration " + std::to_string(it), finish(a, b, x, it, bnorm));
    }
    throw SolverError("BiCGStab did not converge in " + std::to_string(max_iter) + " iterations",
                      finish(a, b, x, max_iter, bnorm));
}

} // namespace detail

/// Reusable solver: builds the preconditioner once for repeated solves with
/// the same matrix.
class KrylovSolver {
public:
    KrylovSolver(const CsrMatrix& a, SolverConfig cfg) : a_(a), cfg_(cfg), m_((cfg.validate(), a), cfg.preconditioner) {}

    /// Solves A x = b to ||A x - b|| <= rel_tol ||b||, starting from x0 if given.
    SolveResult solve(const Vector& b, const Vector* x0 = nullptr) const {
        if (b.size() != a_.rows()) throw InvalidArgument("solve: right-hand side has wrong size");
        if (x0 && x0->size() != a_.rows()) throw InvalidArgument("solve: initial guess has wrong size");
        const int max_iter = cfg_.max_iter > 0 ? cfg_.max_iter : 10 * std::max(a_.rows(), 1);
        const Vector start = x0 ? *x0 : Vector::Zero(b.size());
        if (cfg_.method == KrylovMethod::cg) return detail::pcg(a_, b, start, m_, cfg_.rel_tol, max_iter, cfg_.monitor);
        return detail::pbicgstab(a_, b, start, m_, cfg_.rel_tol, max_iter, cfg_.monitor);
    }

private:
    const CsrMatrix& a_;
    SolverConfig cfg_;
    BlockJacobi m_;
};

inline SolveResult solve(const CsrMatrix& a, const Vector& b, const SolverConfig& cfg = {}, const Vector* x0 = nullptr) {
    return KrylovSolver(a, cfg).solve(b, x0);
}

/// CG for symmetric forms (epsilon = -1), BiCGStab otherwise.
inline KrylovMethod method_for_epsilon(int epsilon) {
    return epsilon == -1 ? KrylovMethod::cg : KrylovMethod::bicgstab;
}

} // namespace dgline
