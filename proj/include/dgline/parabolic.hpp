#pragma once

#include "dgline/dg_assembly.hpp"
#include "dgline/line_source.hpp"
#include "dgline/norms.hpp"
#include "dgline/solver.hpp"

#include <functional>
#include <vector>

namespace dgline {

/// Uniform partition of (0, T] into `steps` intervals.
struct TimeGrid {
    double T = 1.0;
    int steps = 1;

    void validate() const {
        if (!(T > 0.0)) throw InvalidArgument("TimeGrid: T must be positive");
        if (steps < 1) throw InvalidArgument("TimeGrid: need at least one step");
    }
    double tau() const { return T / steps; }
    double time(int n) const { return n == steps ? T : n * tau(); }
};

/// Source density f(t, s) along the curve.
using TimeArclengthFunction = std::function<double(double t, double s)>;
using TimePointFunction = std::function<double(double t, const Vec3& x)>;

struct StepStats {
    int n = 0;
    double t = 0.0;
    double l2 = 0.0;          // ||u^n||_{L2}
    double dg = 0.0;          // ||u^n||_DG
    double accumulator = 0.0; // sum_{j<=n} ||u^j - u^{j-1}||^2 + tau ||u^n||_DG^2
    double data = 0.0;        // ||u^0||^2 + tau sum_{j<=n} ||f(t^j)||^2_{L2(curve)}
    int iterations = 0;
};

/// Snapshots u^0..u^N; u_{h,tau}(t) = u^n on (t^{n-1}, t^n].
struct TimeSeries {
    const Mesh* mesh = nullptr;
    int k = 1;
    TimeGrid grid;
    std::vector<Vector> snapshots;
    std::vector<StepStats> stats;

    FieldFunction snapshot(std::size_t n) const { return FieldFunction(*mesh, k, snapshots.at(n)); }
    const Vector& final_coefficients() const { return snapshots.back(); }
};

struct ParabolicOptions {
    /// Rebuild the line right-hand side at every step. When false, f(t, s)
    /// is sampled once at t = T and reused.
    bool time_dependent_source = true;
    /// Keep every snapshot; otherwise only u^0 and u^N are stored.
    bool keep_snapshots = true;
    std::function<void(const StepStats&, const Vector&)> on_step;
    /// Optional volume load F(t, x) added to the line source; for
    /// manufactured smooth solutions.
    TimePointFunction volume_load;
};

/// Elementwise L2 projection (u_h(0), v) = (u0, v).
inline FieldFunction project_initial(const PointFunction& u0, const Mesh& mesh, int k) {
    if (!u0) return FieldFunction(mesh, k);
    return l2_project(mesh, k, u0);
}

/// ||f||^2_{L2(curve)} by Gauss quadrature on each curve segment.
inline double curve_l2_squared(const Curve& curve, const ArclengthFunction& f, int exactness = 8) {
    const SegmentRule rule = segment_quadrature(exactness);
    double s = 0.0;
    for (std::size_t i = 0; i < curve.num_segments(); ++i) {
        const double len = curve.segment_length(i);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double v = f(curve.arclength_at(i) + rule.points[q][0] * len);
            s += rule.weights[q] * len * v * v;
        }
    }
    return s;
}

/// Backward Euler: (M + tau A) u^n = M u^{n-1} + tau b(t^n), homogeneous
/// Dirichlet data, b(t)_i = integral over the curve of f(t) phi_i.
inline TimeSeries run_backward_euler(const Mesh& mesh, const DGSpec& spec, const Curve& curve,
                                     const TimeArclengthFunction& f, const PointFunction& u0, const TimeGrid& grid,
                                     SolverConfig solver_cfg = {}, const ParabolicOptions& opts = {}) {
    grid.validate();
    spec.validate();
    const double tau = grid.tau();
    const LagrangeBasis basis(spec.k);

    const SparseSystem mass = assemble_mass(mesh, basis);
    const CsrMatrix norm_matrix = assemble_stiffness(mesh, spec, FormPart::EnergyNorm).matrix;
    CsrMatrix system = assemble_stiffness(mesh, spec).matrix;
    for (auto& v : system.values()) v *= tau;
    system.add_scaled(mass.matrix, 1.0);
    if (spec.epsilon != -1) solver_cfg.method = KrylovMethod::bicgstab;
    const KrylovSolver solver(system, solver_cfg);

    const CurveRestrictions restr = build_restrictions(curve, mesh);
    auto line_rhs = [&](double t) {
        if (!f) return Vector(Vector::Zero(mass.matrix.rows()));
        return assemble_line_rhs(restr, [&](double s) { return f(t, s); }, mesh, basis);
    };
    auto f_norm2 = [&](double t) {
        if (!f) return 0.0;
        return curve_l2_squared(curve, [&](double s) { return f(t, s); });
    };

    TimeSeries out;
    out.mesh = &mesh;
    out.k = spec.k;
    out.grid = grid;

    Vector u = project_initial(u0, mesh, spec.k).coefficients();
    const double u0_sq = dot(u, mass.matrix * u);
    StepStats st;
    st.l2 = std::sqrt(u0_sq);
    st.dg = std::sqrt(std::max(0.0, dot(u, norm_matrix * u)));
    st.accumulator = tau * st.dg * st.dg;
    st.data = u0_sq;
    out.stats.push_back(st);
    out.snapshots.push_back(u);
    if (opts.on_step) opts.on_step(st, u);

    Vector fixed_b;
    if (!opts.time_dependent_source) fixed_b = line_rhs(grid.T);
    const double fixed_fn = opts.time_dependent_source ? 0.0 : f_norm2(grid.T);

    double increments = 0.0;
    double data = u0_sq;
    for (int n = 1; n <= grid.steps; ++n) {
        const double t = grid.time(n);
        Vector b = opts.time_dependent_source ? line_rhs(t) : fixed_b;
        if (opts.volume_load)
            b += assemble_volume_rhs(mesh, spec.k, [&](const Vec3& x) { return opts.volume_load(t, x); }, 2 * spec.k + 4);
        const Vector rhs = mass.matrix * u + tau * b;
        SolveResult res;
        try {
            res = solver.solve(rhs, &u);
        } catch (const SolverError& e) {
            throw SolverError("time step " + std::to_string(n) + ": " + e.what(), e.best);
        }
        const Vector du = res.x - u;
        increments += dot(du, mass.matrix * du);
        data += tau * (opts.time_dependent_source ? f_norm2(t) : fixed_fn);
        u = std::move(res.x);

        st.n = n;
        st.t = t;
        st.l2 = std::sqrt(std::max(0.0, dot(u, mass.matrix * u)));
        st.dg = std::sqrt(std::max(0.0, dot(u, norm_matrix * u)));
        st.accumulator = increments + tau * st.dg * st.dg;
        st.data = data;
        st.iterations = res.iterations;
        out.stats.push_back(st);
        if (opts.keep_snapshots || n == grid.steps) out.snapshots.push_back(u);
        if (opts.on_step) opts.on_step(st, u);
    }
    return out;
}

/// ||u - u_{h,tau}||_{L2(0,T; L2)} with a 2-point Gauss rule on each time
/// interval. Requires every snapshot to be stored.
inline double spacetime_l2_error(const TimeSeries& series, const TimePointFunction& exact,
                                 const NormOptions& opts = {}) {
    if (series.snapshots.size() != static_cast<std::size_t>(series.grid.steps) + 1)
        throw InvalidArgument("spacetime_l2_error: series must keep every snapshot");
    const SegmentRule trule = segment_quadrature(3);
    const double tau = series.grid.tau();
    double total = 0.0;
    for (int n = 1; n <= series.grid.steps; ++n) {
        const FieldFunction un = series.snapshot(n);
        const double t0 = series.grid.time(n - 1);
        for (std::size_t q = 0; q < trule.size(); ++q) {
            const double t = t0 + trule.points[q][0] * tau;
            PointFunction ex;
            if (exact) ex = [&exact, t](const Vec3& x) { return exact(t, x); };
            const double e = l2_error(un, ex, Region::whole(), opts);
            total += trule.weights[q] * tau * e * e;
        }
    }
    return std::sqrt(total);
}

} // namespace dgline
