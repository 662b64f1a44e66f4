#pragma once

#include "dgline/common.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace dgline {

/// Quadrature rule on a reference simplex of dimension Dim:
///   Dim = 1: [0, 1]                          (measure 1)
///   Dim = 2: triangle (0,0), (1,0), (0,1)    (measure 1/2)
///   Dim = 3: tetrahedron with vertices 0, e1, e2, e3 (measure 1/6)
template <int Dim>
struct QuadRule {
    using Point = Eigen::Matrix<double, Dim, 1>;
    std::vector<Point, Eigen::aligned_allocator<Point>> points;
    std::vector<double> weights;
    int exactness = 0;

    std::size_t size() const { return weights.size(); }
};

using SegmentRule = QuadRule<1>;
using TriangleRule = QuadRule<2>;
using TetRule = QuadRule<3>;

inline constexpr int kMaxQuadratureExactness = 30;

namespace detail {

/// Gauss-Legendre nodes and weights on [0, 1], by Newton iteration on P_m.
inline void gauss_legendre_01(int m, std::vector<double>& x, std::vector<double>& w) {
    x.assign(m, 0.0);
    w.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= m; ++k) {
            const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = m * (t * p1 - p0) / (t * t - 1.0);
        x[i] = 0.5 * (1.0 - t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
}

inline int points_for(int degree) { return std::max(1, (degree + 2) / 2); }

inline void check_exactness(int e) {
    if (e < 0 || e > kMaxQuadratureExactness)
        throw CapabilityError("quadrature exactness " + std::to_string(e) + " is not available (max " +
                              std::to_string(kMaxQuadratureExactness) + ")");
}

} // namespace detail

/// Gauss-Legendre rule on [0, 1] exact for polynomials of degree <= min_exactness.
inline SegmentRule segment_quadrature(int min_exactness) {
    detail::check_exactness(min_exactness);
    const int m = detail::points_for(min_exactness);
    std::vector<double> x, w;
    detail::gauss_legendre_01(m, x, w);
    SegmentRule r;
    r.exactness = 2 * m - 1;
    for (int i = 0; i < m; ++i) {
        r.points.push_back(SegmentRule::Point(x[i]));
        r.weights.push_back(w[i]);
    }
    return r;
}

/// Collapsed (Duffy) tensor-product Gauss rule on the reference triangle.
/// A degree-p integrand becomes degree p+1 in the collapsed direction.
inline TriangleRule triangle_quadrature(int min_exactness) {
    detail::check_exactness(min_exactness);
    const int m = detail::points_for(min_exactness + 1);
    std::vector<double> x, w;
    detail::gauss_legendre_01(m, x, w);
    TriangleRule r;
    r.exactness = 2 * m - 2;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double u = x[i], v = x[j];
            r.points.emplace_back(u, v * (1.0 - u));
            r.weights.push_back(w[i] * w[j] * (1.0 - u));
        }
    return r;
}

/// Collapsed tensor-product Gauss rule on the reference tetrahedron.
inline TetRule tet_quadrature(int min_exactness) {
    detail::check_exactness(min_exactness);
    const int m = detail::points_for(min_exactness + 2);
    std::vector<double> x, w;
    detail::gauss_legendre_01(m, x, w);
    TetRule r;
    r.exactness = 2 * m - 3;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                const double u = x[i], v = x[j], s = x[k];
                r.points.emplace_back(u, v * (1.0 - u), s * (1.0 - u) * (1.0 - v));
                r.weights.push_back(w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
            }
    return r;
}

} // namespace dgline
