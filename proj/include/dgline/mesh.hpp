#pragma once

#include "dgline/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace dgline {

/// Axis-aligned box lo < x < hi.
struct BoxDomain {
    Vec3 lo{0.0, 0.0, 0.0};
    Vec3 hi{1.0, 1.0, 1.0};

    BoxDomain() = default;
    BoxDomain(Vec3 lo_, Vec3 hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (!((hi.array() > lo.array()).all()))
            throw InvalidArgument("BoxDomain: hi must exceed lo componentwise");
    }

    double volume() const { return (hi - lo).prod(); }
    Vec3 extent() const { return hi - lo; }

    bool contains(const Vec3& x, double tol = 0.0) const {
        return ((x.array() >= lo.array() - tol) && (x.array() <= hi.array() + tol)).all();
    }
    bool contains_box(const BoxDomain& b, double tol = 0.0) const {
        return contains(b.lo, tol) && contains(b.hi, tol);
    }
};

using Triangle = std::array<Vec3, 3>;

struct FaceGeometry {
    double area;
    Vec3 normal; // unit, right-handed w.r.t. the vertex order
};

/// Area and unit normal of a triangle; normal follows (b-a)x(c-a).
inline FaceGeometry face_area_and_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 cr = (b - a).cross(c - a);
    const double n = cr.norm();
    const double scale = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
    if (!(n > 1e-14 * scale * scale))
        throw GeometryError("face_area_and_normal: degenerate (collinear) face");
    return {0.5 * n, cr / n};
}

inline FaceGeometry face_area_and_normal(const Triangle& t) {
    return face_area_and_normal(t[0], t[1], t[2]);
}

/// Face shared by two elements; normal points from `left` (E1) to `right` (E2),
/// and left < right.
struct InteriorFace {
    std::array<int, 3> vertices;
    int left;
    int right;
    int left_local;  // local face index in `left` (opposite local vertex)
    int right_local;
    Vec3 normal;
    double area;
};

struct BoundaryFace {
    std::array<int, 3> vertices;
    int element;
    int local;
    Vec3 normal; // outward
    double area;
};

/// Conforming tetrahedral mesh of a box. Immutable after construction.
class Mesh {
public:
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> tets; // positively oriented
    std::vector<InteriorFace> interior_faces;
    std::vector<BoundaryFace> boundary_faces;
    // neighbors[e][f] = element across local face f, or -1 on the boundary
    std::vector<std::array<int, 4>> neighbors;
    double h = 0.0;      // max element diameter
    double h_cell = 0.0; // max edge length of the structured cells

    BoxDomain domain;
    std::array<int, 3> cells{0, 0, 0};

    std::size_t num_elements() const { return tets.size(); }

    Vec3 vertex(int e, int local) const { return vertices[static_cast<std::size_t>(tets[e][local])]; }

    std::array<Vec3, 4> element_vertices(int e) const {
        return {vertex(e, 0), vertex(e, 1), vertex(e, 2), vertex(e, 3)};
    }

    Vec3 centroid(int e) const {
        return 0.25 * (vertex(e, 0) + vertex(e, 1) + vertex(e, 2) + vertex(e, 3));
    }

    double volume(int e) const {
        const auto v = element_vertices(e);
        return (v[1] - v[0]).dot((v[2] - v[0]).cross(v[3] - v[0])) / 6.0;
    }

    double diameter(int e) const {
        const auto v = element_vertices(e);
        double d = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) d = std::max(d, (v[i] - v[j]).norm());
        return d;
    }

    Triangle face_points(const std::array<int, 3>& f) const {
        return {vertices[f[0]], vertices[f[1]], vertices[f[2]]};
    }

    Vec3 cell_size() const {
        return domain.extent().cwiseQuotient(Vec3(cells[0], cells[1], cells[2]));
    }

    /// Elements of every structured cell overlapping the closed box [lo, hi].
    std::vector<int> elements_near(const Vec3& lo, const Vec3& hi) const {
        std::array<int, 3> a{}, b{};
        const Vec3 cs = cell_size();
        for (int d = 0; d < 3; ++d) {
            const double slack = 1e-9 * cs[d];
            a[d] = std::clamp(static_cast<int>(std::floor((lo[d] - slack - domain.lo[d]) / cs[d])), 0, cells[d] - 1);
            b[d] = std::clamp(static_cast<int>(std::floor((hi[d] + slack - domain.lo[d]) / cs[d])), 0, cells[d] - 1);
        }
        std::vector<int> out;
        for (int k = a[2]; k <= b[2]; ++k)
            for (int j = a[1]; j <= b[1]; ++j)
                for (int i = a[0]; i <= b[0]; ++i) {
                    const int c = i + cells[0] * (j + cells[1] * k);
                    for (int t = 0; t < 6; ++t) out.push_back(6 * c + t);
                }
        return out;
    }

    /// Barycentric coordinates of x with respect to element e.
    Eigen::Vector4d barycentric(int e, const Vec3& x) const {
        const auto v = element_vertices(e);
        Mat3 J;
        J.col(0) = v[1] - v[0];
        J.col(1) = v[2] - v[0];
        J.col(2) = v[3] - v[0];
        const Vec3 xi = J.partialPivLu().solve(x - v[0]);
        return {1.0 - xi.sum(), xi[0], xi[1], xi[2]};
    }

    /// An element whose closure contains x, if any.
    std::optional<int> locate(const Vec3& x) const {
        if (!domain.contains(x, 1e-12 * h)) return std::nullopt;
        int best = -1;
        double best_min = -1e300;
        for (int e : elements_near(x, x)) {
            const double m = barycentric(e, x).minCoeff();
            if (m > best_min) {
                best_min = m;
                best = e;
            }
        }
        if (best < 0 || best_min < -1e-10) return std::nullopt;
        return best;
    }
};

namespace detail {

inline void build_faces(Mesh& m) {
    struct Incidence {
        std::array<int, 3> key;
        int elem;
        int local;
    };
    std::vector<Incidence> inc;
    inc.reserve(4 * m.tets.size());
    for (int e = 0; e < static_cast<int>(m.tets.size()); ++e) {
        for (int f = 0; f < 4; ++f) {
            std::array<int, 3> key{};
            int q = 0;
            for (int i = 0; i < 4; ++i)
                if (i != f) key[q++] = m.tets[e][i];
            std::sort(key.begin(), key.end());
            inc.push_back({key, e, f});
        }
    }
    std::sort(inc.begin(), inc.end(), [](const Incidence& a, const Incidence& b) {
        return a.key != b.key ? a.key < b.key : a.elem < b.elem;
    });

    m.neighbors.assign(m.tets.size(), {-1, -1, -1, -1});
    m.interior_faces.clear();
    m.boundary_faces.clear();

    // Outward normal of local face f of element e.
    auto outward = [&m](int e, const std::array<int, 3>& key, int f) {
        const Triangle t = m.face_points(key);
        FaceGeometry g = face_area_and_normal(t);
        if (g.normal.dot(m.vertex(e, f) - t[0]) > 0.0) g.normal = -g.normal;
        return g;
    };

    for (std::size_t i = 0; i < inc.size();) {
        std::size_t j = i + 1;
        while (j < inc.size() && inc[j].key == inc[i].key) ++j;
        const std::size_t count = j - i;
        if (count == 1) {
            const auto& a = inc[i];
            const FaceGeometry g = outward(a.elem, a.key, a.local);
            m.boundary_faces.push_back({a.key, a.elem, a.local, g.normal, g.area});
        } else if (count == 2) {
            const auto& a = inc[i]; // smaller element index: E1
            const auto& b = inc[i + 1];
            const FaceGeometry g = outward(a.elem, a.key, a.local);
            m.interior_faces.push_back({a.key, a.elem, b.elem, a.local, b.local, g.normal, g.area});
            m.neighbors[a.elem][a.local] = b.elem;
            m.neighbors[b.elem][b.local] = a.elem;
        } else {
            throw GeometryError("mesh is not conforming: a face is shared by more than two elements");
        }
        i = j;
    }
}

} // namespace detail

/// Structured tetrahedral mesh: each of the n[0]*n[1]*n[2] cells is split into
/// six tetrahedra sharing the cell's main diagonal (Kuhn triangulation).
inline Mesh build_box_mesh(const BoxDomain& domain, const std::array<int, 3>& n) {
    if (n[0] < 1 || n[1] < 1 || n[2] < 1)
        throw InvalidArgument("build_box_mesh: cell counts must be >= 1");
    Mesh m;
    m.domain = domain;
    m.cells = n;
    const int nx = n[0] + 1, ny = n[1] + 1, nz = n[2] + 1;
    const Vec3 cs = m.cell_size();
    m.vertices.reserve(static_cast<std::size_t>(nx) * ny * nz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                // pin the far faces exactly to hi
                Vec3 p(i == n[0] ? domain.hi[0] : domain.lo[0] + i * cs[0],
                       j == n[1] ? domain.hi[1] : domain.lo[1] + j * cs[1],
                       k == n[2] ? domain.hi[2] : domain.lo[2] + k * cs[2]);
                m.vertices.push_back(p);
            }
    auto vid = [&](int i, int j, int k) { return i + nx * (j + ny * k); };

    static constexpr std::array<std::array<int, 3>, 6> perms{{
        {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
    }};
    m.tets.reserve(6 * static_cast<std::size_t>(n[0]) * n[1] * n[2]);
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                for (const auto& p : perms) {
                    std::array<int, 3> c{i, j, k};
                    std::array<int, 4> t{};
                    t[0] = vid(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[p[s]];
                        t[s + 1] = vid(c[0], c[1], c[2]);
                    }
                    const Vec3 a = m.vertices[t[0]];
                    const double det = (m.vertices[t[1]] - a).dot((m.vertices[t[2]] - a).cross(m.vertices[t[3]] - a));
                    if (det < 0.0) std::swap(t[2], t[3]);
                    m.tets.push_back(t);
                }
            }

    detail::build_faces(m);
    for (int e = 0; e < static_cast<int>(m.tets.size()); ++e) m.h = std::max(m.h, m.diameter(e));
    m.h_cell = cs.maxCoeff();
    return m;
}

/// Legacy ASCII VTK, UNSTRUCTURED_GRID with tetrahedra (cell type 10).
inline void write_vtk_mesh(std::ostream& os, const Mesh& m, const std::vector<double>* cell_data = nullptr,
                           const std::string& cell_data_name = "cell_data") {
    os.precision(17);
    os << "# vtk DataFile Version 3.0\ndgline mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << m.vertices.size() << " double\n";
    for (const auto& v : m.vertices) os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    os << "CELLS " << m.tets.size() << ' ' << 5 * m.tets.size() << '\n';
    for (const auto& t : m.tets) os << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
    os << "CELL_TYPES " << m.tets.size() << '\n';
    for (std::size_t i = 0; i < m.tets.size(); ++i) os << "10\n";
    if (cell_data) {
        os << "CELL_DATA " << m.tets.size() << "\nSCALARS " << cell_data_name << " double 1\nLOOKUP_TABLE default\n";
        for (double d : *cell_data) os << d << '\n';
    }
}

} // namespace dgline
