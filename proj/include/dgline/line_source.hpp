#pragma once

#include "dgline/curve.hpp"
#include "dgline/dg_assembly.hpp"
#include "dgline/field.hpp"

#include <functional>

namespace dgline {

/// Source density along the curve as a function of arclength s.
using ArclengthFunction = std::function<double(double)>;

/// b_i = integral over the curve of f * phi_i. Only elements cut by the curve
/// receive nonzero entries.
inline Vector assemble_line_rhs(const CurveRestrictions& restr, const ArclengthFunction& f, const Mesh& mesh,
                                const LagrangeBasis& basis, int exactness = -1) {
    const int n = basis.dim();
    Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_elements()) * n);
    const SegmentRule rule = segment_quadrature(exactness >= 0 ? exactness : basis.degree() + 2);
    for (const auto& r : restr.items) {
        const AffineMap map = map_to_physical(mesh, r.element);
        auto blk = b.segment(static_cast<Eigen::Index>(r.element) * n, n);
        for (const auto& piece : r.pieces) {
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double t = rule.points[q][0];
                const Vec3 x = piece.start + t * (piece.end - piece.start);
                const double fv = f(piece.s0 + t * piece.length);
                blk += (rule.weights[q] * piece.length * fv) * basis.values(map.to_reference(x));
            }
        }
    }
    return b;
}

inline Vector assemble_line_rhs(const Curve& curve, const ArclengthFunction& f, const Mesh& mesh,
                                const LagrangeBasis& basis, int exactness = -1) {
    return assemble_line_rhs(build_restrictions(curve, mesh), f, mesh, basis, exactness);
}

/// L2 representative f_h of the line functional: on every element cut by the
/// curve, (f_h, v)_E = integral over E ∩ curve of f v for all v in P^k(E);
/// zero elsewhere.
inline FieldFunction compute_fh_field(const CurveRestrictions& restr, const ArclengthFunction& f, const Mesh& mesh,
                                      int k, int exactness = -1) {
    FieldFunction fh(mesh, k);
    const Vector b = assemble_line_rhs(restr, f, mesh, fh.basis(), exactness);
    const TetRule rule = tet_quadrature(2 * k);
    for (const auto& r : restr.items) {
        Eigen::LLT<DenseBlock> llt(local_mass(mesh, r.element, fh.basis(), rule));
        if (llt.info() != Eigen::Success)
            throw AssemblyError("compute_fh_field: singular local mass matrix on element " + std::to_string(r.element));
        fh.block(r.element) = llt.solve(b.segment(static_cast<Eigen::Index>(r.element) * fh.block_size(), fh.block_size()));
    }
    return fh;
}

inline FieldFunction compute_fh_field(const Curve& curve, const ArclengthFunction& f, const Mesh& mesh, int k,
                                      int exactness = -1) {
    return compute_fh_field(build_restrictions(curve, mesh), f, mesh, k, exactness);
}

} // namespace dgline
