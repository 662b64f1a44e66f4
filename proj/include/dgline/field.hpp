#pragma once

#include "dgline/basis.hpp"
#include "dgline/mesh.hpp"
#include "dgline/sparse.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace dgline {

using PointFunction = std::function<double(const Vec3&)>;
using GradientFunction = std::function<Vec3(const Vec3&)>;

/// Broken polynomial field: one coefficient block of size dim P^k per element.
class FieldFunction {
public:
    FieldFunction(const Mesh& mesh, int k)
        : mesh_(&mesh), basis_(std::make_shared<const LagrangeBasis>(k)),
          coeffs_(Vector::Zero(static_cast<Eigen::Index>(mesh.num_elements()) * basis_->dim())) {}

    FieldFunction(const Mesh& mesh, int k, Vector coeffs) : FieldFunction(mesh, k) {
        if (coeffs.size() != coeffs_.size()) throw InvalidArgument("FieldFunction: coefficient vector has wrong size");
        coeffs_ = std::move(coeffs);
    }

    /// Nodal interpolant of a point function.
    static FieldFunction interpolate(const Mesh& mesh, int k, const PointFunction& fn) {
        FieldFunction f(mesh, k);
        for (int e = 0; e < static_cast<int>(mesh.num_elements()); ++e) {
            const AffineMap map = map_to_physical(mesh, e);
            f.block(e) = f.basis().interpolate_reference([&](const Vec3& xi) { return fn(map.to_physical(xi)); });
        }
        return f;
    }

    const Mesh& mesh() const { return *mesh_; }
    const LagrangeBasis& basis() const { return *basis_; }
    int degree() const { return basis_->degree(); }
    int block_size() const { return basis_->dim(); }

    const Vector& coefficients() const { return coeffs_; }
    Vector& coefficients() { return coeffs_; }

    Eigen::VectorBlock<Vector> block(int e) { return coeffs_.segment(static_cast<Eigen::Index>(e) * block_size(), block_size()); }
    Eigen::VectorBlock<const Vector> block(int e) const { return coeffs_.segment(static_cast<Eigen::Index>(e) * block_size(), block_size()); }

    /// Value of the restriction to element e at physical point x (x may lie
    /// outside e; the element polynomial is extended).
    double value(int e, const Vec3& x) const {
        const AffineMap map = map_to_physical(*mesh_, e);
        return block(e).dot(basis_->values(map.to_reference(x)));
    }

    Vec3 gradient(int e, const Vec3& x) const {
        const AffineMap map = map_to_physical(*mesh_, e);
        const Eigen::MatrixX3d g = map.push_forward(basis_->gradients(map.to_reference(x)));
        return g.transpose() * block(e);
    }

    std::optional<double> evaluate(const Vec3& x) const {
        const auto e = mesh_->locate(x);
        if (!e) return std::nullopt;
        return value(*e, x);
    }

private:
    const Mesh* mesh_;
    std::shared_ptr<const LagrangeBasis> basis_;
    Vector coeffs_;
};

} // namespace dgline
