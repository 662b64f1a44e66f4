#pragma once

#include "dgline/common.hpp"
#include "dgline/field.hpp"

#include <cmath>
#include <numbers>

namespace dgline {

/// u = -(1/2pi) ln r, r = distance to the vertical line through (x0, y0).
/// Solves -Laplace u = delta_line with unit line density. Values are
/// evaluated at r >= r_min so quadrature points that land on the line stay finite.
struct LogLineSolution {
    double x0 = 2.0 / 3.0;
    double y0 = 1.0 / 3.0;
    double r_min = 1e-12;

    double value(const Vec3& p) const {
        const double r = std::max(std::hypot(p[0] - x0, p[1] - y0), r_min);
        return -std::log(r) / (2.0 * std::numbers::pi);
    }

    Vec3 gradient(const Vec3& p) const {
        const double dx = p[0] - x0, dy = p[1] - y0;
        const double r2 = std::max(dx * dx + dy * dy, r_min * r_min);
        return Vec3(dx, dy, 0.0) * (-1.0 / (2.0 * std::numbers::pi * r2));
    }

    PointFunction as_function() const {
        return [s = *this](const Vec3& p) { return s.value(p); };
    }
    GradientFunction as_gradient() const {
        return [s = *this](const Vec3& p) { return s.gradient(p); };
    }
};

} // namespace dgline
