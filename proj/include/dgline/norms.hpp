#pragma once

#include "dgline/curve.hpp"
#include "dgline/dg_assembly.hpp"
#include "dgline/field.hpp"
#include "dgline/quadrature.hpp"

#include <cmath>
#include <optional>
#include <set>
#include <vector>

namespace dgline {

/// Whole domain, or an axis-aligned box whose faces lie on mesh planes.
struct Region {
    std::optional<BoxDomain> box;

    static Region whole() { return {}; }
    static Region make_box(const Vec3& lo, const Vec3& hi) { return {BoxDomain(lo, hi)}; }

    bool is_whole() const { return !box.has_value(); }
    bool contains(const Vec3& x, double tol = 0.0) const { return !box || box->contains(x, tol); }
};

/// Throws unless the region is inside the domain with faces on grid planes.
inline void check_region(const Region& r, const Mesh& mesh) {
    if (r.is_whole()) return;
    const Vec3 cs = mesh.cell_size();
    if (!mesh.domain.contains_box(*r.box, 1e-12))
        throw InvalidArgument("region lies outside the domain");
    for (int d = 0; d < 3; ++d)
        for (double c : {r.box->lo[d], r.box->hi[d]}) {
            const double q = (c - mesh.domain.lo[d]) / cs[d];
            if (std::abs(q - std::round(q)) > 1e-8)
                throw InvalidArgument("region faces must be aligned with the mesh cells");
        }
}

struct NormOptions {
    int exactness = -1; // default 2k + 2
    /// Elements integrated with `refined_exactness` instead (e.g. those cut by
    /// the source curve, where the exact solution is singular).
    std::vector<int> refined_elements;
    int refined_exactness = 16;
};

namespace detail {

inline std::vector<char> refined_mask(const Mesh& mesh, const NormOptions& o) {
    std::vector<char> m(mesh.num_elements(), 0);
    for (int e : o.refined_elements) m.at(e) = 1;
    return m;
}

/// Sums fn(e, x, w) over quadrature points of elements whose barycenter lies
/// in the region.
template <typename Fn>
double integrate_elements(const FieldFunction& field, const Region& region, const NormOptions& opts, Fn&& fn) {
    const Mesh& mesh = field.mesh();
    const int k = field.degree();
    const TetRule base = tet_quadrature(opts.exactness >= 0 ? opts.exactness : 2 * k + 2);
    const TetRule fine = tet_quadrature(std::max(opts.refined_exactness, base.exactness));
    const auto mask = refined_mask(mesh, opts);
    double total = 0.0;
    for (int e = 0; e < static_cast<int>(mesh.num_elements()); ++e) {
        if (!region.contains(mesh.centroid(e))) continue;
        const AffineMap map = map_to_physical(mesh, e);
        const TetRule& rule = mask[e] ? fine : base;
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
            s += fn(e, map, rule.points[q], rule.weights[q] * std::abs(map.det));
        total += s;
    }
    return total;
}

/// Sums over faces with centroid in the closed region:
/// fn(jump_of_field_minus_exact(x), x, w).
template <typename Fn>
double integrate_jumps(const FieldFunction& field, const PointFunction& exact, const Region& region, int exactness,
                       Fn&& fn) {
    const Mesh& mesh = field.mesh();
    const TriangleRule rule = triangle_quadrature(exactness);
    const double tol = 1e-10 * mesh.h;
    double total = 0.0;
    for (const auto& f : mesh.interior_faces) {
        const Triangle t = mesh.face_points(f.vertices);
        if (!region.contains((t[0] + t[1] + t[2]) / 3.0, tol)) continue;
        for (const auto& fp : face_quadrature_points(t, rule, f.area))
            total += fn(field.value(f.left, fp.x) - field.value(f.right, fp.x), fp.x, fp.w);
    }
    for (const auto& f : mesh.boundary_faces) {
        const Triangle t = mesh.face_points(f.vertices);
        if (!region.contains((t[0] + t[1] + t[2]) / 3.0, tol)) continue;
        for (const auto& fp : face_quadrature_points(t, rule, f.area)) {
            const double u = exact ? exact(fp.x) : 0.0;
            total += fn(field.value(f.element, fp.x) - u, fp.x, fp.w);
        }
    }
    return total;
}

inline void check_alpha(double alpha, double lo, double hi, const char* what) {
    if (!(alpha > lo && alpha < hi))
        throw InvalidArgument(std::string(what) + ": alpha out of range");
}

} // namespace detail

/// ||u_h - u||_{L2(region)}; an empty `exact` means u = 0.
inline double l2_error(const FieldFunction& field, const PointFunction& exact, const Region& region = Region::whole(),
                       const NormOptions& opts = {}) {
    check_region(region, field.mesh());
    const LagrangeBasis& basis = field.basis();
    const double s = detail::integrate_elements(field, region, opts, [&](int e, const AffineMap& map, const Vec3& xi, double w) {
        const double uh = field.block(e).dot(basis.values(xi));
        const double u = exact ? exact(map.to_physical(xi)) : 0.0;
        return w * (uh - u) * (uh - u);
    });
    return std::sqrt(s);
}

/// Broken energy error: sum_E ||grad(u_h - u)||^2 + sigma/h sum_e ||[u_h - u]||^2,
/// with sigma and h taken from `spec`,
/// over the region (exact solution continuous, so its interior jumps vanish).
inline double dg_energy_error(const FieldFunction& field, const PointFunction& exact, const GradientFunction& grad,
                              const DGSpec& spec, const Region& region = Region::whole(), const NormOptions& opts = {}) {
    check_region(region, field.mesh());
    const LagrangeBasis& basis = field.basis();
    const double vol = detail::integrate_elements(field, region, opts, [&](int e, const AffineMap& map, const Vec3& xi, double w) {
        const Vec3 gh = map.push_forward(basis.gradients(xi)).transpose() * field.block(e);
        const Vec3 g = grad ? grad(map.to_physical(xi)) : Vec3::Zero();
        return w * (gh - g).squaredNorm();
    });
    const int fex = opts.exactness >= 0 ? opts.exactness : 2 * field.degree() + 2;
    const double jumps = detail::integrate_jumps(field, exact, region, fex,
                                                 [](double j, const Vec3&, double w) { return w * j * j; });
    return std::sqrt(vol + spec.norm_penalty(field.mesh()) * jumps);
}

/// (integral of |u_h - u|^2 d^{2 alpha})^{1/2}, d = distance to the curve, alpha in (-1, 1).
inline double weighted_l2_norm(const FieldFunction& field, const PointFunction& exact, double alpha, const Curve& curve,
                               const NormOptions& opts = {}) {
    detail::check_alpha(alpha, -1.0, 1.0, "weighted_l2_norm");
    const LagrangeBasis& basis = field.basis();
    const double s = detail::integrate_elements(field, Region::whole(), opts, [&](int e, const AffineMap& map, const Vec3& xi, double w) {
        const Vec3 x = map.to_physical(xi);
        const double uh = field.block(e).dot(basis.values(xi));
        const double u = exact ? exact(x) : 0.0;
        const double weight = alpha == 0.0 ? 1.0 : std::pow(distance_to_curve(x, curve), 2.0 * alpha);
        return w * weight * (uh - u) * (uh - u);
    });
    return std::sqrt(s);
}

/// Weighted broken energy norm of u_h - u with weight d^{2 alpha} on both the
/// gradient and jump terms, alpha in (0, 1).
inline double weighted_dg_norm(const FieldFunction& field, const PointFunction& exact, const GradientFunction& grad,
                               double alpha, const Curve& curve, const DGSpec& spec, const NormOptions& opts = {}) {
    detail::check_alpha(alpha, 0.0, 1.0, "weighted_dg_norm");
    const LagrangeBasis& basis = field.basis();
    const double vol = detail::integrate_elements(field, Region::whole(), opts, [&](int e, const AffineMap& map, const Vec3& xi, double w) {
        const Vec3 x = map.to_physical(xi);
        const Vec3 gh = map.push_forward(basis.gradients(xi)).transpose() * field.block(e);
        const Vec3 g = grad ? grad(x) : Vec3::Zero();
        return w * std::pow(distance_to_curve(x, curve), 2.0 * alpha) * (gh - g).squaredNorm();
    });
    const int fex = opts.exactness >= 0 ? opts.exactness : 2 * field.degree() + 2;
    const double jumps = detail::integrate_jumps(field, exact, Region::whole(), fex, [&](double j, const Vec3& x, double w) {
        return w * std::pow(distance_to_curve(x, curve), 2.0 * alpha) * j * j;
    });
    return std::sqrt(vol + spec.norm_penalty(field.mesh()) * jumps);
}

/// rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
inline std::vector<double> convergence_rates(const std::vector<double>& errors, const std::vector<double>& hs) {
    if (errors.size() != hs.size() || errors.size() < 2)
        throw InvalidArgument("convergence_rates: need two or more (error, h) pairs of equal length");
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!(errors[i] > 0.0)) throw InvalidArgument("convergence_rates: errors must be positive");
        if (!(hs[i] > 0.0)) throw InvalidArgument("convergence_rates: mesh sizes must be positive");
        if (i > 0 && !(hs[i] < hs[i - 1])) throw InvalidArgument("convergence_rates: mesh sizes must strictly decrease");
    }
    std::vector<double> rates;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        rates.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
    return rates;
}

} // namespace dgline
