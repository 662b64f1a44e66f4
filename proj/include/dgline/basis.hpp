#pragma once

#include "dgline/common.hpp"
#include "dgline/mesh.hpp"

#include <array>
#include <string>
#include <vector>

namespace dgline {

inline constexpr int kMaxDegree = 4;

inline int basis_dimension(int k) { return (k + 1) * (k + 2) * (k + 3) / 6; }

/// Nodal Lagrange basis of P^k on the reference tetrahedron. Nodes are the
/// equispaced lattice points, vertices first (so k = 1 nodes are exactly the
/// reference vertices 0, e1, e2, e3).
class LagrangeBasis {
public:
    explicit LagrangeBasis(int k) : k_(k) {
        if (k < 1 || k > kMaxDegree)
            throw CapabilityError("unsupported polynomial degree " + std::to_string(k));
        for (int s = 0; s <= k; ++s)
            for (int c = 0; c <= s; ++c)
                for (int b = 0; b <= s - c; ++b) exps_.push_back({s - b - c, b, c});

        nodes_.push_back(Vec3(0, 0, 0));
        nodes_.push_back(Vec3(1, 0, 0));
        nodes_.push_back(Vec3(0, 1, 0));
        nodes_.push_back(Vec3(0, 0, 1));
        for (int c = 0; c <= k; ++c)
            for (int b = 0; b <= k - c; ++b)
                for (int a = 0; a <= k - b - c; ++a) {
                    const bool vertex = (a == 0 && b == 0 && c == 0) || (a == k && b == 0 && c == 0) ||
                                        (a == 0 && b == k && c == 0) || (a == 0 && b == 0 && c == k);
                    if (!vertex) nodes_.push_back(Vec3(a, b, c) / k);
                }

        const int n = dim();
        Eigen::MatrixXd V(n, n);
        for (int i = 0; i < n; ++i) V.row(i) = monomials(nodes_[i]).transpose();
        coeffs_ = V.inverse(); // phi_i = sum_j coeffs_(j, i) m_j
    }

    int degree() const { return k_; }
    int dim() const { return static_cast<int>(exps_.size()); }
    const std::vector<Vec3>& nodes() const { return nodes_; }

    Eigen::VectorXd values(const Vec3& xi) const { return coeffs_.transpose() * monomials(xi); }

    /// Reference gradients, one row per basis function.
    Eigen::MatrixX3d gradients(const Vec3& xi) const {
        const int n = dim();
        Eigen::MatrixX3d dm(n, 3);
        for (int j = 0; j < n; ++j) {
            const auto& p = exps_[j];
            for (int d = 0; d < 3; ++d) {
                if (p[d] == 0) {
                    dm(j, d) = 0.0;
                    continue;
                }
                double v = p[d];
                for (int q = 0; q < 3; ++q) v *= ipow(xi[q], q == d ? p[q] - 1 : p[q]);
                dm(j, d) = v;
            }
        }
        return coeffs_.transpose() * dm;
    }

    /// Coefficients of the nodal interpolant of fn (a function of reference coordinates).
    template <typename Fn>
    Eigen::VectorXd interpolate_reference(Fn&& fn) const {
        Eigen::VectorXd c(dim());
        for (int i = 0; i < dim(); ++i) c[i] = fn(nodes_[i]);
        return c;
    }

private:
    static double ipow(double x, int p) {
        double r = 1.0;
        for (int i = 0; i < p; ++i) r *= x;
        return r;
    }

    Eigen::VectorXd monomials(const Vec3& xi) const {
        Eigen::VectorXd m(dim());
        for (int j = 0; j < dim(); ++j) m[j] = ipow(xi[0], exps_[j][0]) * ipow(xi[1], exps_[j][1]) * ipow(xi[2], exps_[j][2]);
        return m;
    }

    int k_;
    std::vector<std::array<int, 3>> exps_;
    std::vector<Vec3> nodes_;
    Eigen::MatrixXd coeffs_;
};

inline LagrangeBasis make_basis(int k) { return LagrangeBasis(k); }

/// Affine map x = origin + J * xi from the reference tetrahedron.
struct AffineMap {
    Vec3 origin;
    Mat3 jacobian;
    Mat3 inverse;
    double det;

    AffineMap(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) : origin(a) {
        jacobian.col(0) = b - a;
        jacobian.col(1) = c - a;
        jacobian.col(2) = d - a;
        det = jacobian.determinant();
        const double scale = jacobian.colwise().norm().maxCoeff();
        if (!(std::abs(det) > 1e-14 * scale * scale * scale))
            throw GeometryError("AffineMap: singular Jacobian (degenerate element)");
        inverse = jacobian.inverse();
    }

    explicit AffineMap(const std::array<Vec3, 4>& v) : AffineMap(v[0], v[1], v[2], v[3]) {}

    Vec3 to_physical(const Vec3& xi) const { return origin + jacobian * xi; }
    Vec3 to_reference(const Vec3& x) const { return inverse * (x - origin); }

    /// Physical gradients: rows of G * J^{-1} (i.e. J^{-T} applied to each gradient).
    Eigen::MatrixX3d push_forward(const Eigen::MatrixX3d& ref_grads) const { return ref_grads * inverse; }
};

inline AffineMap map_to_physical(const Mesh& m, int e) { return AffineMap(m.element_vertices(e)); }

} // namespace dgline
