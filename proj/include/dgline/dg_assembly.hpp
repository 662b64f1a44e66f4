#pragma once

#include "dgline/basis.hpp"
#include "dgline/field.hpp"
#include "dgline/mesh.hpp"
#include "dgline/quadrature.hpp"
#include "dgline/sparse.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dgline {

/// Which global length plays the role of h in sigma / h^beta.
enum class MeshSizeMeasure {
    cell,     // edge length of the structured cells (1/n on the unit cube)
    diameter, // max element diameter
};

/// Interior penalty parameters. epsilon = -1 (SIPG), 0 (IIPG), +1 (NIPG);
/// the jump penalty is sigma / h^beta with one global mesh size h.
struct DGSpec {
    int k = 1;
    int epsilon = -1;
    double sigma = 5.0;
    double beta = 1.0;
    MeshSizeMeasure measure = MeshSizeMeasure::cell;

    /// Defaults used for the line-source experiments: SIPG, beta = 1,
    /// sigma = 5 (k = 1) or 12 (k >= 2).
    static DGSpec defaults(int k) { return {k, -1, k == 1 ? 5.0 : 12.0, 1.0, MeshSizeMeasure::cell}; }

    void validate() const {
        if (k < 1) throw InvalidArgument("DGSpec: k must be >= 1");
        if (epsilon < -1 || epsilon > 1) throw InvalidArgument("DGSpec: epsilon must be -1, 0 or 1");
        if (!(sigma > 0.0)) throw InvalidArgument("DGSpec: sigma must be positive");
        if (!(beta >= 1.0)) throw InvalidArgument("DGSpec: beta must be >= 1");
    }

    double mesh_size(const Mesh& m) const { return measure == MeshSizeMeasure::cell ? m.h_cell : m.h; }
    /// sigma / h^beta
    double penalty(const Mesh& m) const { return sigma / std::pow(mesh_size(m), beta); }
    /// sigma / h, the jump weight of the energy norm
    double norm_penalty(const Mesh& m) const { return sigma / mesh_size(m); }
};

/// Assembled operator plus right-hand side over the element-blocked DoFs.
struct SparseSystem {
    CsrMatrix matrix;
    Vector rhs;
};

/// Which parts of the bilinear form to assemble.
enum class FormPart {
    Full,        // a_eps
    EnergyNorm,  // broken gradient + sigma/h jumps: w^T A w = |w|_DG^2
    PenaltyOnly, // jump penalty only
};

namespace detail {

struct FacePoint {
    Vec3 x;
    double w; // includes the face area scaling
};

inline std::vector<FacePoint> face_quadrature_points(const Triangle& t, const TriangleRule& rule, double area) {
    std::vector<FacePoint> pts;
    pts.reserve(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& s = rule.points[q];
        pts.push_back({t[0] + s[0] * (t[1] - t[0]) + s[1] * (t[2] - t[0]), 2.0 * area * rule.weights[q]});
    }
    return pts;
}

struct TraceData {
    Eigen::VectorXd phi;
    Eigen::VectorXd dphi_n; // normal derivative along the face normal
};

inline TraceData trace(const LagrangeBasis& basis, const AffineMap& map, const Vec3& x, const Vec3& n) {
    const Vec3 xi = map.to_reference(x);
    return {basis.values(xi), map.push_forward(basis.gradients(xi)) * n};
}

inline int volume_exactness(int k) { return 2 * k; }
inline int face_exactness(int k) { return 2 * k + 1; }

} // namespace detail

/// Element mass matrix (phi_j, phi_i)_E.
inline DenseBlock local_mass(const Mesh& mesh, int e, const LagrangeBasis& basis, const TetRule& rule) {
    const AffineMap map = map_to_physical(mesh, e);
    const int n = basis.dim();
    DenseBlock m = DenseBlock::Zero(n, n);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Eigen::VectorXd phi = basis.values(rule.points[q]);
        m.noalias() += (rule.weights[q] * std::abs(map.det)) * phi * phi.transpose();
    }
    return m;
}

inline DenseBlock local_mass(const Mesh& mesh, int e, const LagrangeBasis& basis) {
    return local_mass(mesh, e, basis, tet_quadrature(2 * basis.degree()));
}

/// Block-diagonal broken mass matrix.
inline SparseSystem assemble_mass(const Mesh& mesh, const LagrangeBasis& basis) {
    SparseSystem sys{CsrMatrix::block_diagonal(mesh.num_elements(), basis.dim()), Vector()};
    const TetRule rule = tet_quadrature(2 * basis.degree());
    for (int e = 0; e < static_cast<int>(mesh.num_elements()); ++e)
        sys.matrix.add_block(e, e, local_mass(mesh, e, basis, rule));
    return sys;
}

/// Interior penalty stiffness matrix. Matrix entry (i, j) is a(phi_j, phi_i).
inline SparseSystem assemble_stiffness(const Mesh& mesh, const DGSpec& spec, FormPart part = FormPart::Full) {
    spec.validate();
    const LagrangeBasis basis(spec.k);
    const int n = basis.dim();
    SparseSystem sys{CsrMatrix::from_mesh(mesh, n), Vector()};

    const double eps = part == FormPart::Full ? spec.epsilon : 0.0;
    const double consistency = part == FormPart::Full ? 1.0 : 0.0;
    const double pen = part == FormPart::Full || part == FormPart::PenaltyOnly ? spec.penalty(mesh) : spec.norm_penalty(mesh);

    if (part != FormPart::PenaltyOnly) {
        const TetRule vrule = tet_quadrature(detail::volume_exactness(spec.k));
        std::vector<Eigen::MatrixX3d> ref_grads;
        for (const auto& p : vrule.points) ref_grads.push_back(basis.gradients(p));
        for (int e = 0; e < static_cast<int>(mesh.num_elements()); ++e) {
            const AffineMap map = map_to_physical(mesh, e);
            DenseBlock k_e = DenseBlock::Zero(n, n);
            for (std::size_t q = 0; q < vrule.size(); ++q) {
                const Eigen::MatrixX3d g = map.push_forward(ref_grads[q]);
                k_e.noalias() += (vrule.weights[q] * std::abs(map.det)) * g * g.transpose();
            }
            sys.matrix.add_block(e, e, k_e);
        }
    }

    const TriangleRule frule = triangle_quadrature(detail::face_exactness(spec.k));
    for (const auto& f : mesh.interior_faces) {
        const AffineMap ma = map_to_physical(mesh, f.left);
        const AffineMap mb = map_to_physical(mesh, f.right);
        DenseBlock aa = DenseBlock::Zero(n, n), ab = aa, ba = aa, bb = aa;
        for (const auto& fp : detail::face_quadrature_points(mesh.face_points(f.vertices), frule, f.area)) {
            const auto ta = detail::trace(basis, ma, fp.x, f.normal);
            const auto tb = detail::trace(basis, mb, fp.x, f.normal);
            // test side s_a, trial side s_b: [v] = s_a phi^a, {grad u}.n = 0.5 dphi^b
            auto add = [&](DenseBlock& blk, const detail::TraceData& test, double s_test, const detail::TraceData& trial,
                           double s_trial) {
                blk.noalias() += fp.w * (-0.5 * consistency * s_test) * test.phi * trial.dphi_n.transpose();
                blk.noalias() += fp.w * (0.5 * eps * s_trial) * test.dphi_n * trial.phi.transpose();
                blk.noalias() += fp.w * (pen * s_test * s_trial) * test.phi * trial.phi.transpose();
            };
            add(aa, ta, 1.0, ta, 1.0);
            add(ab, ta, 1.0, tb, -1.0);
            add(ba, tb, -1.0, ta, 1.0);
            add(bb, tb, -1.0, tb, -1.0);
        }
        sys.matrix.add_block(f.left, f.left, aa);
        sys.matrix.add_block(f.left, f.right, ab);
        sys.matrix.add_block(f.right, f.left, ba);
        sys.matrix.add_block(f.right, f.right, bb);
    }

    for (const auto& f : mesh.boundary_faces) {
        const AffineMap ma = map_to_physical(mesh, f.element);
        DenseBlock aa = DenseBlock::Zero(n, n);
        for (const auto& fp : detail::face_quadrature_points(mesh.face_points(f.vertices), frule, f.area)) {
            const auto t = detail::trace(basis, ma, fp.x, f.normal);
            aa.noalias() += fp.w * (-consistency) * t.phi * t.dphi_n.transpose();
            aa.noalias() += fp.w * eps * t.dphi_n * t.phi.transpose();
            aa.noalias() += fp.w * pen * t.phi * t.phi.transpose();
        }
        sys.matrix.add_block(f.element, f.element, aa);
    }
    return sys;
}

/// Weak (Nitsche) Dirichlet data: sum over boundary faces of
/// eps * (g, grad v . n)_e + sigma/h^beta (g, v)_e.
inline Vector assemble_dirichlet_rhs(const Mesh& mesh, const DGSpec& spec, const PointFunction& g,
                                     int exactness = -1) {
    spec.validate();
    const LagrangeBasis basis(spec.k);
    const int n = basis.dim();
    Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_elements()) * n);
    if (!g) return b;
    const TriangleRule frule = triangle_quadrature(exactness >= 0 ? exactness : 2 * spec.k + 2);
    const double pen = spec.penalty(mesh);
    for (const auto& f : mesh.boundary_faces) {
        const AffineMap ma = map_to_physical(mesh, f.element);
        auto blk = b.segment(static_cast<Eigen::Index>(f.element) * n, n);
        for (const auto& fp : detail::face_quadrature_points(mesh.face_points(f.vertices), frule, f.area)) {
            const double gv = g(fp.x);
            if (gv == 0.0) continue;
            const auto t = detail::trace(basis, ma, fp.x, f.normal);
            blk += fp.w * gv * (spec.epsilon * t.dphi_n + pen * t.phi);
        }
    }
    return b;
}

/// Volume load (F, v)_Omega; used for manufactured smooth solutions.
inline Vector assemble_volume_rhs(const Mesh& mesh, int k, const PointFunction& load, int exactness = -1) {
    const LagrangeBasis basis(k);
    const int n = basis.dim();
    Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_elements()) * n);
    if (!load) return b;
    const TetRule rule = tet_quadrature(exactness >= 0 ? exactness : 2 * k + 2);
    std::vector<Eigen::VectorXd> phis;
    for (const auto& p : rule.points) phis.push_back(basis.values(p));
    for (int e = 0; e < static_cast<int>(mesh.num_elements()); ++e) {
        const AffineMap map = map_to_physical(mesh, e);
        auto blk = b.segment(static_cast<Eigen::Index>(e) * n, n);
        for (std::size_t q = 0; q < rule.size(); ++q)
            blk += (rule.weights[q] * std::abs(map.det) * load(map.to_physical(rule.points[q]))) * phis[q];
    }
    return b;
}

/// Elementwise L2 projection of a point function onto the broken space.
inline FieldFunction l2_project(const Mesh& mesh, int k, const PointFunction& fn, int exactness = -1) {
    FieldFunction out(mesh, k);
    const LagrangeBasis& basis = out.basis();
    const TetRule rule = tet_quadrature(exactness >= 0 ? exactness : 2 * k + 2);
    std::vector<Eigen::VectorXd> phis;
    for (const auto& p : rule.points) phis.push_back(basis.values(p));
    for (int e = 0; e < static_cast<int>(mesh.num_elements()); ++e) {
        const AffineMap map = map_to_physical(mesh, e);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(basis.dim());
        DenseBlock m = DenseBlock::Zero(basis.dim(), basis.dim());
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = rule.weights[q] * std::abs(map.det);
            rhs += w * fn(map.to_physical(rule.points[q])) * phis[q];
            m.noalias() += w * phis[q] * phis[q].transpose();
        }
        Eigen::LLT<DenseBlock> llt(m);
        if (llt.info() != Eigen::Success) throw AssemblyError("l2_project: singular local mass matrix");
        out.block(e) = llt.solve(rhs);
    }
    return out;
}

} // namespace dgline
