#pragma once

#include "dgline/common.hpp"
#include "dgline/mesh.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dgline {

/// Polyline source curve. Points are ordered; segment i joins points i, i+1.
class Curve {
public:
    Curve() = default;
    explicit Curve(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw InvalidArgument("Curve: need at least two points");
        arclength_.assign(points_.size(), 0.0);
        for (std::size_t i = 1; i < points_.size(); ++i) {
            const double len = (points_[i] - points_[i - 1]).norm();
            if (!(len > 0.0)) throw InvalidArgument("Curve: zero-length segment at index " + std::to_string(i - 1));
            arclength_[i] = arclength_[i - 1] + len;
        }
    }

    const std::vector<Vec3>& points() const { return points_; }
    std::size_t num_segments() const { return points_.size() - 1; }
    const Vec3& start(std::size_t s) const { return points_[s]; }
    const Vec3& end(std::size_t s) const { return points_[s + 1]; }
    double segment_length(std::size_t s) const { return arclength_[s + 1] - arclength_[s]; }
    /// Arclength at the start of segment s.
    double arclength_at(std::size_t s) const { return arclength_[s]; }
    double length() const { return arclength_.back(); }

    /// Throws unless every point lies in the box shrunk by `margin`.
    void validate_inside(const BoxDomain& d, double margin = 0.0) const {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const Vec3& p = points_[i];
            if (((p.array() < d.lo.array() + margin) || (p.array() > d.hi.array() - margin)).any()) {
                std::ostringstream os;
                os << "Curve: point " << i << " (" << p.transpose() << ") lies outside the domain";
                throw InvalidArgument(os.str());
            }
        }
    }

private:
    std::vector<Vec3> points_;
    std::vector<double> arclength_;
};

inline Curve make_line_curve(const Vec3& a, const Vec3& b) { return Curve({a, b}); }

/// Sinusoidal polyline: runs along `axis` from `from` to `to`, displaced
/// by amplitude*sin(2*pi*periods*t) in the first transverse direction.
inline Curve make_sine_curve(const Vec3& from, const Vec3& to, double amplitude, double periods, int samples,
                             int transverse_axis) {
    if (samples < 2) throw InvalidArgument("sine curve: need at least 2 samples");
    if (transverse_axis < 0 || transverse_axis > 2) throw InvalidArgument("sine curve: axis must be 0, 1 or 2");
    std::vector<Vec3> pts;
    pts.reserve(samples);
    for (int i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / (samples - 1);
        Vec3 p = from + t * (to - from);
        p[transverse_axis] += amplitude * std::sin(2.0 * std::numbers::pi * periods * t);
        pts.push_back(p);
    }
    return Curve(std::move(pts));
}

/// Reads whitespace-separated "x y z" triples, one point per line. Blank
/// lines and lines starting with '#' are skipped.
inline Curve read_curve(std::istream& is) {
    std::vector<Vec3> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        Vec3 p;
        if (!(ls >> p[0] >> p[1] >> p[2]))
            throw InvalidArgument("curve file line " + std::to_string(lineno) + ": expected 'x y z'");
        std::string extra;
        if (ls >> extra) throw InvalidArgument("curve file line " + std::to_string(lineno) + ": trailing tokens");
        pts.push_back(p);
    }
    return Curve(std::move(pts));
}

inline Curve read_curve_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidArgument("cannot open curve file '" + path + "'");
    return read_curve(f);
}

inline double distance_to_segment(const Vec3& x, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (x - (a + t * ab)).norm();
}

/// Exact distance from x to the polyline.
inline double distance_to_curve(const Vec3& x, const Curve& c) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < c.num_segments(); ++s) d = std::min(d, distance_to_segment(x, c.start(s), c.end(s)));
    return d;
}

/// Parameter interval [t0, t1] of a segment a + t (b - a), t in [0, 1].
struct ParamInterval {
    double t0;
    double t1;
};

/// Clips the segment [a, b] against the closed tetrahedron by successive
/// half-space cuts. Returns nothing when the inside part is shorter than
/// `min_length`.
inline std::optional<ParamInterval> clip_segment_tet(const Vec3& a, const Vec3& b, const std::array<Vec3, 4>& tet,
                                                     double min_length = 0.0) {
    double t0 = 0.0, t1 = 1.0;
    const Vec3 dir = b - a;
    const double scale = std::max({(tet[1] - tet[0]).norm(), (tet[2] - tet[0]).norm(), (tet[3] - tet[0]).norm()});
    for (int f = 0; f < 4; ++f) {
        const Vec3& p0 = tet[(f + 1) % 4];
        const Vec3& p1 = tet[(f + 2) % 4];
        const Vec3& p2 = tet[(f + 3) % 4];
        Vec3 n = (p1 - p0).cross(p2 - p0);
        n.normalize();
        if (n.dot(tet[f] - p0) > 0.0) n = -n; // outward
        // inside: n.(x - p0) <= 0
        const double fa = n.dot(a - p0);
        const double fd = n.dot(dir);
        const double tol = 1e-14 * scale;
        if (std::abs(fd) <= 1e-300) {
            if (fa > tol) return std::nullopt;
            continue;
        }
        const double t = -fa / fd;
        if (fd > 0.0)
            t1 = std::min(t1, t);
        else
            t0 = std::max(t0, t);
        if (t0 > t1) return std::nullopt;
    }
    if ((t1 - t0) * dir.norm() <= min_length) return std::nullopt;
    return ParamInterval{t0, t1};
}

struct SubSegment {
    Vec3 start;
    Vec3 end;
    double length;
    double s0; // arclength of `start` along the curve
};

/// Part of the curve inside one element.
struct LineRestriction {
    int element;
    std::vector<SubSegment> pieces;

    double length() const {
        double l = 0.0;
        for (const auto& p : pieces) l += p.length;
        return l;
    }
};

struct CurveRestrictions {
    std::vector<LineRestriction> items; // sorted by element index
    int long_intersections = 0;         // elements with |curve ∩ E| > 2h

    double total_length() const {
        double l = 0.0;
        for (const auto& r : items) l += r.length();
        return l;
    }
};

/// Splits the curve over the mesh elements. Overlapping candidate intervals
/// (a piece running along a shared face or edge) are resolved by parameter
/// order, so each part of the curve is assigned to exactly one element.
inline CurveRestrictions build_restrictions(const Curve& curve, const Mesh& mesh) {
    curve.validate_inside(mesh.domain);
    const double drop = 1e-12 * mesh.h;
    std::vector<std::vector<SubSegment>> per_elem(mesh.num_elements());
    for (std::size_t s = 0; s < curve.num_segments(); ++s) {
        const Vec3& a = curve.start(s);
        const Vec3& b = curve.end(s);
        const double len = curve.segment_length(s);
        struct Cand {
            int elem;
            ParamInterval iv;
        };
        std::vector<Cand> cands;
        for (int e : mesh.elements_near(a.cwiseMin(b), a.cwiseMax(b)))
            if (auto iv = clip_segment_tet(a, b, mesh.element_vertices(e), drop)) cands.push_back({e, *iv});
        std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
            return x.iv.t0 != y.iv.t0 ? x.iv.t0 < y.iv.t0 : x.elem < y.elem;
        });
        double covered = 0.0;
        for (const auto& c : cands) {
            const double t0 = std::max(c.iv.t0, covered);
            const double t1 = c.iv.t1;
            if ((t1 - t0) * len <= drop) continue;
            // snap tiny gaps left by roundoff between neighbouring elements
            const double start = (t0 - covered) * len <= 1e-10 * mesh.h ? covered : t0;
            per_elem[c.elem].push_back({a + start * (b - a), a + t1 * (b - a), (t1 - start) * len,
                                        curve.arclength_at(s) + start * len});
            covered = t1;
        }
        if ((1.0 - covered) * len > 1e-10 * mesh.h)
            throw InvalidArgument("curve segment " + std::to_string(s) + " is not covered by the mesh");
    }
    CurveRestrictions out;
    for (int e = 0; e < static_cast<int>(per_elem.size()); ++e) {
        if (per_elem[e].empty()) continue;
        LineRestriction r{e, std::move(per_elem[e])};
        if (r.length() > 2.0 * mesh.h) ++out.long_intersections;
        out.items.push_back(std::move(r));
    }
    return out;
}

} // namespace dgline
