#pragma once

#include "dgline/config.hpp"
#include "dgline/line_source.hpp"
#include "dgline/manufactured.hpp"
#include "dgline/norms.hpp"
#include "dgline/parabolic.hpp"
#include "dgline/vtk.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

namespace dgline {

struct RunOptions {
    std::filesystem::path out_dir = ".";
    bool vtk = true;
    std::ostream* log = nullptr; // progress and tables; null for silence
};

/// One refinement level of an elliptic run. The mesh lives on the heap so the
/// solution field keeps a valid pointer when the struct is moved.
struct LevelSolution {
    std::array<int, 3> n{};
    std::unique_ptr<Mesh> mesh;
    CurveRestrictions restrictions;
    std::optional<FieldFunction> solution;
    SolveResult solve;
    double assembly_seconds = 0.0;
    double solve_seconds = 0.0;
};

struct LevelResult {
    std::array<int, 3> n{};
    double h = 0.0;     // cell size (max edge of a grid cell)
    double h_max = 0.0; // max element diameter
    long n_dof = 0;
    int iterations = 0;
    double h_fh = 0.0;            // h * ||f_h||_{L2}
    std::vector<double> errors;   // aligned with StudyResult::error_columns
    double assembly_seconds = 0.0;
    double solve_seconds = 0.0;
    double error_seconds = 0.0;
};

struct StudyResult {
    std::vector<std::string> error_columns;
    std::vector<LevelResult> levels;
    /// rates[c][i]: rate of column c between levels i and i+1.
    std::vector<std::vector<double>> rates;
    std::vector<std::string> assertion_failures;

    bool ok() const { return assertion_failures.empty(); }
    std::size_t column(const std::string& name) const {
        for (std::size_t c = 0; c < error_columns.size(); ++c)
            if (error_columns[c] == name) return c;
        throw InvalidArgument("no error column '" + name + "'");
    }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

inline std::string level_tag(const std::array<int, 3>& n) {
    return std::to_string(n[0]) + "x" + std::to_string(n[1]) + "x" + std::to_string(n[2]);
}

inline LogLineSolution exact_for(const StudyConfig& cfg, const Mesh& mesh) {
    LogLineSolution ex;
    ex.x0 = cfg.curve.from[0];
    ex.y0 = cfg.curve.from[1];
    ex.r_min = 1e-10 * mesh.h;
    return ex;
}

inline std::vector<std::string> error_columns(const StudyConfig& cfg) {
    std::vector<std::string> cols;
    if (cfg.exact_solution == "none") return cols;
    cols.push_back("err_L2_global");
    for (const auto& r : cfg.regions) cols.push_back("err_L2_" + r.name);
    if (!cfg.energy_region.empty()) cols.push_back("err_DG_" + cfg.energy_region);
    return cols;
}

inline Region region_of(const StudyConfig& cfg, const std::string& name) {
    for (const auto& r : cfg.regions)
        if (r.name == name) return Region::make_box(Vec3(r.lo[0], r.lo[1], r.lo[2]), Vec3(r.hi[0], r.hi[1], r.hi[2]));
    throw InvalidArgument("no region named '" + name + "'");
}

inline void ensure_dir(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw InvalidArgument("cannot create output directory '" + p.string() + "': " + ec.message());
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + p.string() + "'");
    f << text;
}

} // namespace detail

/// Assembles and solves one elliptic level at time t (for the source f(t, s)).
/// With the log-line exact solution enabled, Dirichlet data is u_exact;
/// otherwise g = 0.
inline LevelSolution solve_elliptic_level(const StudyConfig& cfg, const std::array<int, 3>& n, double t = 0.0,
                                          bool homogeneous_bc = false) {
    const auto t0 = std::chrono::steady_clock::now();
    LevelSolution out;
    out.n = n;
    out.mesh = std::make_unique<Mesh>(build_box_mesh(cfg.domain(), n));
    const Mesh& mesh = *out.mesh;
    const DGSpec spec = cfg.dg_spec();
    spec.validate();
    const Curve curve = build_curve(cfg.curve);
    curve.validate_inside(mesh.domain);
    out.restrictions = build_restrictions(curve, mesh);
    const auto f = build_source(cfg.source);
    const LagrangeBasis basis(cfg.k);

    const SparseSystem sys = assemble_stiffness(mesh, spec);
    Vector rhs = assemble_line_rhs(out.restrictions, [&](double s) { return f(t, s); }, mesh, basis);
    if (cfg.exact_solution == "log_line" && !homogeneous_bc)
        rhs += assemble_dirichlet_rhs(mesh, spec, detail::exact_for(cfg, mesh).as_function());
    out.assembly_seconds = detail::seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    try {
        out.solve = solve(sys.matrix, rhs, cfg.solver_config());
    } catch (const SolverError& e) {
        throw SolverError("level " + detail::level_tag(n) + ": " + e.what(), e.best);
    }
    out.solve_seconds = detail::seconds_since(t1);
    out.solution.emplace(mesh, cfg.k, out.solve.x);
    return out;
}

/// Errors and diagnostics of one solved level, in the order of error_columns(cfg).
inline LevelResult evaluate_level(const StudyConfig& cfg, const LevelSolution& ls) {
    const auto t0 = std::chrono::steady_clock::now();
    const Mesh& mesh = *ls.mesh;
    const FieldFunction& u = *ls.solution;
    LevelResult r;
    r.n = ls.n;
    r.h = mesh.h_cell;
    r.h_max = mesh.h;
    r.n_dof = static_cast<long>(u.coefficients().size());
    r.iterations = ls.solve.iterations;
    r.assembly_seconds = ls.assembly_seconds;
    r.solve_seconds = ls.solve_seconds;

    const auto f = build_source(cfg.source);
    const FieldFunction fh = compute_fh_field(ls.restrictions, [&](double s) { return f(0.0, s); }, mesh, cfg.k);
    r.h_fh = mesh.h_cell * l2_error(fh, {});

    if (cfg.exact_solution == "log_line") {
        const LogLineSolution ex = detail::exact_for(cfg, mesh);
        NormOptions opts;
        for (const auto& it : ls.restrictions.items) opts.refined_elements.push_back(it.element);
        r.errors.push_back(l2_error(u, ex.as_function(), Region::whole(), opts));
        for (const auto& reg : cfg.regions) {
            const Region box = detail::region_of(cfg, reg.name);
            r.errors.push_back(l2_error(u, ex.as_function(), box, opts));
        }
        if (!cfg.energy_region.empty())
            r.errors.push_back(dg_energy_error(u, ex.as_function(), ex.as_gradient(), cfg.dg_spec(),
                                               detail::region_of(cfg, cfg.energy_region), opts));
    }
    r.error_seconds = detail::seconds_since(t0);
    return r;
}

/// Rows of the errors CSV; wall times are kept out so reruns are byte-identical.
inline std::string errors_csv(const StudyConfig& cfg, const StudyResult& res, bool with_rates) {
    std::string s = "k,nx,ny,nz,h,h_max,n_dof,iterations,h_fh_L2";
    for (const auto& c : res.error_columns) s += "," + c;
    if (with_rates)
        for (const auto& c : res.error_columns) s += ",rate_" + c.substr(4);
    s += "\n";
    for (std::size_t i = 0; i < res.levels.size(); ++i) {
        const LevelResult& l = res.levels[i];
        s += std::to_string(cfg.k) + "," + std::to_string(l.n[0]) + "," + std::to_string(l.n[1]) + "," +
             std::to_string(l.n[2]) + "," + detail::fmt(l.h) + "," + detail::fmt(l.h_max) + "," +
             std::to_string(l.n_dof) + "," + std::to_string(l.iterations) + "," + detail::fmt(l.h_fh);
        for (double e : l.errors) s += "," + detail::fmt(e);
        if (with_rates)
            for (std::size_t c = 0; c < res.error_columns.size(); ++c)
                s += "," + (i == 0 ? std::string() : detail::fmt(res.rates[c][i - 1]));
        s += "\n";
    }
    return s;
}

/// Human-readable table of errors with rates between successive levels.
inline std::string rate_table(const StudyResult& res) {
    std::string s;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-12s %-10s %9s", "level", "h", "n_dof");
    s += buf;
    for (const auto& c : res.error_columns) {
        std::snprintf(buf, sizeof buf, " %16s %6s", c.c_str(), "rate");
        s += buf;
    }
    s += "\n";
    for (std::size_t i = 0; i < res.levels.size(); ++i) {
        const LevelResult& l = res.levels[i];
        std::snprintf(buf, sizeof buf, "%-12s %-10.4g %9ld", detail::level_tag(l.n).c_str(), l.h, l.n_dof);
        s += buf;
        for (std::size_t c = 0; c < res.error_columns.size(); ++c) {
            if (i == 0 || res.rates.empty())
                std::snprintf(buf, sizeof buf, " %16.4e %6s", l.errors[c], "-");
            else
                std::snprintf(buf, sizeof buf, " %16.4e %6.2f", l.errors[c], res.rates[c][i - 1]);
            s += buf;
        }
        s += "\n";
    }
    return s;
}

namespace detail {

inline nlohmann::json metadata(const StudyConfig& cfg, const StudyResult& res, const std::string& command) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = to_json(cfg);
    j["threads"] = thread_count();
    j["levels"] = nlohmann::json::array();
    for (const auto& l : res.levels)
        j["levels"].push_back({{"n", l.n},
                               {"n_dof", l.n_dof},
                               {"iterations", l.iterations},
                               {"assembly_seconds", l.assembly_seconds},
                               {"solve_seconds", l.solve_seconds},
                               {"error_seconds", l.error_seconds}});
    if (!res.assertion_failures.empty()) j["assertion_failures"] = res.assertion_failures;
    return j;
}

inline StudyResult run_levels(const StudyConfig& cfg, const RunOptions& opt) {
    detail::ensure_dir(opt.out_dir);
    StudyResult res;
    res.error_columns = error_columns(cfg);
    for (const auto& n : cfg.levels) {
        if (opt.log) *opt.log << "level " << level_tag(n) << " ..." << std::flush;
        const LevelSolution ls = solve_elliptic_level(cfg, n);
        LevelResult r = evaluate_level(cfg, ls);
        if (opt.vtk) write_vtk_field((opt.out_dir / ("solution_" + level_tag(n) + ".vtk")).string(), *ls.solution, "u");
        if (opt.log)
            *opt.log << " dofs " << r.n_dof << ", " << r.iterations << " iterations, "
                     << r.assembly_seconds + r.solve_seconds + r.error_seconds << " s\n";
        res.levels.push_back(std::move(r));
    }
    return res;
}

} // namespace detail

/// Solves every configured level and writes errors.csv, metadata.json and
/// (optionally) solution_<level>.vtk into opt.out_dir.
inline StudyResult run_elliptic(const StudyConfig& cfg, const RunOptions& opt = {}) {
    StudyResult res = detail::run_levels(cfg, opt);
    detail::write_text(opt.out_dir / "errors.csv", errors_csv(cfg, res, false));
    detail::write_text(opt.out_dir / "metadata.json", detail::metadata(cfg, res, "solve-elliptic").dump(2) + "\n");
    if (opt.log && !res.error_columns.empty()) *opt.log << rate_table(res);
    return res;
}

/// Convergence study: run_elliptic plus pairwise rates (study.csv, rates.txt)
/// and evaluation of the configured rate assertions on the finest pair.
inline StudyResult run_study(const StudyConfig& cfg, const RunOptions& opt = {}) {
    if (cfg.levels.size() < 2) throw InvalidArgument("study: need at least two refinement levels");
    {
        std::vector<double> hs;
        for (const auto& n : cfg.levels) {
            const Vec3 ext = cfg.domain().extent();
            hs.push_back(std::max({ext[0] / n[0], ext[1] / n[1], ext[2] / n[2]}));
        }
        for (std::size_t i = 1; i < hs.size(); ++i)
            if (!(hs[i] < hs[i - 1])) throw InvalidArgument("study: mesh sizes must strictly decrease between levels");
    }
    for (const auto& a : cfg.rate_assertions) {
        const auto cols = detail::error_columns(cfg);
        if (std::find(cols.begin(), cols.end(), a.column) == cols.end())
            throw InvalidArgument("rate assertion refers to unknown column '" + a.column + "'");
    }

    StudyResult res = detail::run_levels(cfg, opt);
    std::vector<double> hs;
    for (const auto& l : res.levels) hs.push_back(l.h);
    for (std::size_t c = 0; c < res.error_columns.size(); ++c) {
        std::vector<double> errs;
        for (const auto& l : res.levels) errs.push_back(l.errors[c]);
        res.rates.push_back(convergence_rates(errs, hs));
    }
    for (const auto& a : cfg.rate_assertions) {
        const double rate = res.rates[res.column(a.column)].back();
        if (!(rate >= a.min && rate <= a.max))
            res.assertion_failures.push_back(a.column + ": finest-pair rate " + detail::fmt(rate) + " outside [" +
                                             detail::fmt(a.min) + ", " + detail::fmt(a.max) + "]");
    }

    const std::string table = rate_table(res);
    detail::write_text(opt.out_dir / "study.csv", errors_csv(cfg, res, true));
    detail::write_text(opt.out_dir / "rates.txt", table);
    detail::write_text(opt.out_dir / "metadata.json", detail::metadata(cfg, res, "study").dump(2) + "\n");
    if (opt.log) {
        *opt.log << table;
        for (const auto& f : res.assertion_failures) *opt.log << "rate assertion failed: " << f << "\n";
    }
    return res;
}

struct ParabolicLevelResult {
    std::array<int, 3> n{};
    double h = 0.0;
    std::vector<StepStats> stats;
    double final_l2 = 0.0;
    std::optional<double> steady_state_diff; // relative L2 distance to the elliptic solution
};

struct ParabolicResult {
    std::vector<ParabolicLevelResult> levels;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

/// Backward Euler runs on every level with homogeneous Dirichlet data. Writes
/// parabolic_<level>.csv, optional snapshots and metadata.json.
inline ParabolicResult run_parabolic(const StudyConfig& cfg, const RunOptions& opt = {}) {
    if (cfg.mode != "parabolic") throw InvalidArgument("solve-parabolic: config mode must be 'parabolic'");
    detail::ensure_dir(opt.out_dir);
    const Curve curve = build_curve(cfg.curve);
    const auto f = build_source(cfg.source);
    const auto u0 = build_point_function(cfg.parabolic.u0);
    const TimeGrid grid{cfg.parabolic.T, cfg.parabolic.steps};
    const DGSpec spec = cfg.dg_spec();

    ParabolicResult out;
    nlohmann::json meta;
    meta["command"] = "solve-parabolic";
    meta["config"] = to_json(cfg);
    meta["threads"] = thread_count();
    meta["levels"] = nlohmann::json::array();

    for (const auto& n : cfg.levels) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::string tag = detail::level_tag(n);
        if (opt.log) *opt.log << "level " << tag << " ..." << std::flush;
        const Mesh mesh = build_box_mesh(cfg.domain(), n);
        curve.validate_inside(mesh.domain);
        ParabolicOptions popts;
        popts.time_dependent_source = source_is_time_dependent(cfg.source);
        popts.keep_snapshots = false;
        const int every = cfg.parabolic.snapshot_every;
        if (opt.vtk && every > 0)
            popts.on_step = [&](const StepStats& st, const Vector& u) {
                if (st.n % every == 0 || st.n == grid.steps)
                    write_vtk_field((opt.out_dir / ("snapshot_" + tag + "_" + std::to_string(st.n) + ".vtk")).string(),
                                    FieldFunction(mesh, cfg.k, u), "u");
            };
        const TimeSeries series = run_backward_euler(mesh, spec, curve, f, u0, grid, cfg.solver_config(), popts);

        ParabolicLevelResult lr;
        lr.n = n;
        lr.h = mesh.h_cell;
        lr.stats = series.stats;
        lr.final_l2 = series.stats.back().l2;

        std::string csv = "n,t,l2,dg,accumulator,data,stability_ratio,iterations\n";
        const double scale = grid.tau() / (mesh.h_cell * mesh.h_cell);
        for (const auto& st : series.stats) {
            const double bound = scale * st.data;
            csv += std::to_string(st.n) + "," + detail::fmt(st.t) + "," + detail::fmt(st.l2) + "," +
                   detail::fmt(st.dg) + "," + detail::fmt(st.accumulator) + "," + detail::fmt(st.data) + "," +
                   (bound > 0.0 ? detail::fmt(st.accumulator / bound) : std::string("0")) + "," +
                   std::to_string(st.iterations) + "\n";
        }
        detail::write_text(opt.out_dir / ("parabolic_" + tag + ".csv"), csv);

        if (cfg.parabolic.steady_state_check) {
            const LevelSolution ell = solve_elliptic_level(cfg, n, grid.T, true);
            const FieldFunction uN(mesh, cfg.k, series.final_coefficients());
            const FieldFunction ue(mesh, cfg.k, ell.solve.x);
            const double ref = l2_error(ue, {});
            const FieldFunction d(mesh, cfg.k, Vector(uN.coefficients() - ue.coefficients()));
            const double diff = l2_error(d, {}) / (ref > 0.0 ? ref : 1.0);
            lr.steady_state_diff = diff;
            if (!(diff <= cfg.parabolic.steady_state_tolerance))
                out.failures.push_back("level " + tag + ": steady-state difference " + detail::fmt(diff) +
                                       " exceeds tolerance " + detail::fmt(cfg.parabolic.steady_state_tolerance));
        }
        const double secs = detail::seconds_since(t0);
        nlohmann::json lj = {{"n", n}, {"n_dof", static_cast<long>(series.final_coefficients().size())},
                             {"final_l2", lr.final_l2}, {"wall_seconds", secs}};
        if (lr.steady_state_diff) lj["steady_state_relative_diff"] = *lr.steady_state_diff;
        meta["levels"].push_back(lj);
        if (opt.log) {
            *opt.log << " final ||u||_L2 " << detail::fmt(lr.final_l2);
            if (lr.steady_state_diff) *opt.log << ", steady-state diff " << detail::fmt(*lr.steady_state_diff);
            *opt.log << ", " << secs << " s\n";
        }
        out.levels.push_back(std::move(lr));
    }
    if (!out.failures.empty()) meta["failures"] = out.failures;
    detail::write_text(opt.out_dir / "metadata.json", meta.dump(2) + "\n");
    if (opt.log)
        for (const auto& f : out.failures) *opt.log << "check failed: " << f << "\n";
    return out;
}

} // namespace dgline
