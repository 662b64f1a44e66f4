#pragma once

#include "dgline/common.hpp"
#include "dgline/curve.hpp"
#include "dgline/dg_assembly.hpp"
#include "dgline/expression.hpp"
#include "dgline/solver.hpp"

#include "json.hpp"

#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dgline {

using Triple = std::array<double, 3>;

struct CurveSpec {
    std::string type = "line"; // line | sine | file
    Triple from{2.0 / 3.0, 1.0 / 3.0, 0.0};
    Triple to{2.0 / 3.0, 1.0 / 3.0, 0.25};
    double amplitude = 0.1;
    double periods = 1.0;
    int axis = 0; // displaced coordinate for `sine`
    int samples = 65;
    std::string path;
    bool operator==(const CurveSpec&) const = default;
};

/// A scalar given either as a constant or as an expression.
struct ScalarSpec {
    std::string type = "constant"; // constant | expression
    double value = 0.0;
    std::string expr;
    bool operator==(const ScalarSpec&) const = default;
};

struct RegionSpec {
    std::string name;
    Triple lo{};
    Triple hi{};
    bool operator==(const RegionSpec&) const = default;
};

struct SolverSpec {
    std::string method = "auto"; // auto | cg | bicgstab
    double rel_tol = 1e-10;
    int max_iter = 0;
    std::string preconditioner = "block_jacobi"; // none | jacobi | block_jacobi
    bool operator==(const SolverSpec&) const = default;
};

struct ParabolicSpec {
    double T = 1.0;
    int steps = 10;
    ScalarSpec u0{};
    int snapshot_every = 0; // 0: no VTK snapshots
    bool steady_state_check = false;
    double steady_state_tolerance = 1e-6;
    bool operator==(const ParabolicSpec&) const = default;
};

struct RateAssertion {
    std::string column; // an error column, e.g. err_L2_C1
    double min = 0.0;
    double max = 1e300;
    bool operator==(const RateAssertion&) const = default;
};

/// Everything needed to run one solve, study or time-dependent run.
struct StudyConfig {
    Triple domain_lo{0.0, 0.0, 0.0};
    Triple domain_hi{1.0, 1.0, 0.25};
    CurveSpec curve{};
    ScalarSpec source{"constant", 1.0, ""}; // variables s (arclength), t (time)
    int k = 1;
    int epsilon = -1;
    std::optional<double> sigma; // default: 5 for k = 1, 12 otherwise
    double beta = 1.0;
    std::string mesh_size = "cell"; // cell | diameter
    std::vector<std::array<int, 3>> levels{{4, 4, 1}};
    std::vector<RegionSpec> regions;
    std::string energy_region;
    std::string exact_solution = "none"; // none | log_line
    SolverSpec solver{};
    std::string mode = "elliptic"; // elliptic | parabolic
    ParabolicSpec parabolic{};
    std::vector<RateAssertion> rate_assertions;

    bool operator==(const StudyConfig&) const = default;

    BoxDomain domain() const { return {Vec3(domain_lo[0], domain_lo[1], domain_lo[2]), Vec3(domain_hi[0], domain_hi[1], domain_hi[2])}; }

    DGSpec dg_spec() const {
        DGSpec s = DGSpec::defaults(k);
        s.epsilon = epsilon;
        if (sigma) s.sigma = *sigma;
        s.beta = beta;
        s.measure = mesh_size == "diameter" ? MeshSizeMeasure::diameter : MeshSizeMeasure::cell;
        return s;
    }

    SolverConfig solver_config() const {
        SolverConfig c;
        c.method = solver.method == "auto" ? method_for_epsilon(epsilon)
                   : solver.method == "cg" ? KrylovMethod::cg
                                           : KrylovMethod::bicgstab;
        c.rel_tol = solver.rel_tol;
        c.max_iter = solver.max_iter;
        c.preconditioner = solver.preconditioner == "none"     ? Preconditioner::none
                           : solver.preconditioner == "jacobi" ? Preconditioner::jacobi
                                                               : Preconditioner::block_jacobi;
        return c;
    }
};

/// Raised for malformed or schema-violating configuration. `where` is a JSON
/// pointer (or "line L, column C" for syntax errors).
struct ConfigError : InvalidArgument {
    std::string where;
    ConfigError(std::string where_, const std::string& msg)
        : InvalidArgument("config error at " + where_ + ": " + msg), where(std::move(where_)) {}
};

/// The line-source manufactured-solution experiment on (0,1)x(0,1)x(0,0.25):
/// vertical line through (2/3, 1/3), f = 1, SIPG with beta = 1.
inline StudyConfig reference_study_config(int k) {
    StudyConfig c;
    c.k = k;
    c.levels = {{4, 4, 1}, {8, 8, 2}, {16, 16, 4}, {32, 32, 8}};
    c.regions = {{"C1", {0.25, 0.5, 0.0}, {0.5, 0.75, 0.25}}, {"C2", {0.0, 0.75, 0.0}, {0.25, 1.0, 0.25}}};
    c.energy_region = "C1";
    c.exact_solution = "log_line";
    return c;
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) throw ConfigError(path + "/" + key, "unknown key '" + key + "'");
}

template <typename T>
T get(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path, std::string("wrong type (") + e.what() + ")");
    }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
    if (obj.contains(key)) out = get<T>(obj.at(key), path + "/" + key);
}

inline Triple read_triple(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(path, "expected an array of three numbers");
    Triple t{};
    for (int i = 0; i < 3; ++i) t[i] = get<double>(j[i], path + "/" + std::to_string(i));
    return t;
}

inline ScalarSpec read_scalar(const json& j, const std::string& path, const std::vector<std::string>& vars) {
    ScalarSpec s;
    if (j.is_number()) {
        s.value = j.get<double>();
        return s;
    }
    reject_unknown(j, path, {"type", "value", "expr"});
    read(j, "type", path, s.type);
    read(j, "value", path, s.value);
    read(j, "expr", path, s.expr);
    if (s.type == "expression") {
        try {
            Expression(s.expr, vars);
        } catch (const InvalidArgument& e) {
            throw ConfigError(path + "/expr", e.what());
        }
    } else if (s.type != "constant") {
        throw ConfigError(path + "/type", "expected 'constant' or 'expression'");
    }
    return s;
}

inline json scalar_to_json(const ScalarSpec& s) {
    if (s.type == "expression") return {{"type", "expression"}, {"expr", s.expr}};
    return {{"type", "constant"}, {"value", s.value}};
}

} // namespace detail

inline StudyConfig parse_config(const nlohmann::json& j) {
    using namespace detail;
    reject_unknown(j, "", {"domain", "curve", "source", "discretization", "levels", "regions", "energy_region",
                           "exact_solution", "solver", "mode", "parabolic", "rate_assertions"});
    StudyConfig c;
    if (j.contains("domain")) {
        const auto& d = j["domain"];
        reject_unknown(d, "/domain", {"lo", "hi"});
        if (d.contains("lo")) c.domain_lo = read_triple(d["lo"], "/domain/lo");
        if (d.contains("hi")) c.domain_hi = read_triple(d["hi"], "/domain/hi");
        for (int i = 0; i < 3; ++i)
            if (!(c.domain_hi[i] > c.domain_lo[i])) throw ConfigError("/domain", "hi must exceed lo componentwise");
    }
    if (j.contains("curve")) {
        const auto& cj = j["curve"];
        reject_unknown(cj, "/curve", {"type", "from", "to", "amplitude", "periods", "axis", "samples", "path"});
        read(cj, "type", "/curve", c.curve.type);
        if (cj.contains("from")) c.curve.from = read_triple(cj["from"], "/curve/from");
        if (cj.contains("to")) c.curve.to = read_triple(cj["to"], "/curve/to");
        read(cj, "amplitude", "/curve", c.curve.amplitude);
        read(cj, "periods", "/curve", c.curve.periods);
        read(cj, "axis", "/curve", c.curve.axis);
        read(cj, "samples", "/curve", c.curve.samples);
        read(cj, "path", "/curve", c.curve.path);
        if (c.curve.type != "line" && c.curve.type != "sine" && c.curve.type != "file")
            throw ConfigError("/curve/type", "expected 'line', 'sine' or 'file'");
        if (c.curve.type == "file" && c.curve.path.empty()) throw ConfigError("/curve/path", "required for type 'file'");
        if (c.curve.axis < 0 || c.curve.axis > 2) throw ConfigError("/curve/axis", "must be 0, 1 or 2");
        if (c.curve.samples < 2) throw ConfigError("/curve/samples", "must be >= 2");
    }
    if (j.contains("source")) c.source = read_scalar(j["source"], "/source", {"s", "t"});
    if (j.contains("discretization")) {
        const auto& d = j["discretization"];
        reject_unknown(d, "/discretization", {"k", "epsilon", "sigma", "beta", "mesh_size"});
        read(d, "k", "/discretization", c.k);
        read(d, "epsilon", "/discretization", c.epsilon);
        if (d.contains("sigma")) c.sigma = get<double>(d["sigma"], "/discretization/sigma");
        read(d, "beta", "/discretization", c.beta);
        read(d, "mesh_size", "/discretization", c.mesh_size);
        if (c.k < 1 || c.k > kMaxDegree) throw ConfigError("/discretization/k", "unsupported degree");
        if (c.epsilon < -1 || c.epsilon > 1) throw ConfigError("/discretization/epsilon", "must be -1, 0 or 1");
        if (c.sigma && !(*c.sigma > 0.0)) throw ConfigError("/discretization/sigma", "must be positive");
        if (!(c.beta >= 1.0)) throw ConfigError("/discretization/beta", "must be >= 1");
        if (c.mesh_size != "cell" && c.mesh_size != "diameter")
            throw ConfigError("/discretization/mesh_size", "expected 'cell' or 'diameter'");
    }
    if (j.contains("levels")) {
        const auto& l = j["levels"];
        if (!l.is_array() || l.empty()) throw ConfigError("/levels", "expected a non-empty array of [nx, ny, nz]");
        c.levels.clear();
        for (std::size_t i = 0; i < l.size(); ++i) {
            const std::string p = "/levels/" + std::to_string(i);
            if (!l[i].is_array() || l[i].size() != 3) throw ConfigError(p, "expected [nx, ny, nz]");
            std::array<int, 3> n{};
            for (int d = 0; d < 3; ++d) {
                n[d] = get<int>(l[i][d], p + "/" + std::to_string(d));
                if (n[d] < 1) throw ConfigError(p, "cell counts must be >= 1");
            }
            c.levels.push_back(n);
        }
    }
    if (j.contains("regions")) {
        const auto& r = j["regions"];
        if (!r.is_array()) throw ConfigError("/regions", "expected an array");
        for (std::size_t i = 0; i < r.size(); ++i) {
            const std::string p = "/regions/" + std::to_string(i);
            reject_unknown(r[i], p, {"name", "lo", "hi"});
            RegionSpec rs;
            read(r[i], "name", p, rs.name);
            if (rs.name.empty()) throw ConfigError(p + "/name", "required");
            if (!r[i].contains("lo") || !r[i].contains("hi")) throw ConfigError(p, "lo and hi are required");
            rs.lo = read_triple(r[i]["lo"], p + "/lo");
            rs.hi = read_triple(r[i]["hi"], p + "/hi");
            for (const auto& other : c.regions)
                if (other.name == rs.name) throw ConfigError(p + "/name", "duplicate region name");
            c.regions.push_back(rs);
        }
    }
    read(j, "energy_region", "", c.energy_region);
    if (!c.energy_region.empty()) {
        bool found = false;
        for (const auto& r : c.regions) found |= r.name == c.energy_region;
        if (!found) throw ConfigError("/energy_region", "no region named '" + c.energy_region + "'");
    }
    read(j, "exact_solution", "", c.exact_solution);
    if (c.exact_solution != "none" && c.exact_solution != "log_line")
        throw ConfigError("/exact_solution", "expected 'none' or 'log_line'");
    if (c.exact_solution == "log_line" &&
        (c.curve.type != "line" || c.curve.from[0] != c.curve.to[0] || c.curve.from[1] != c.curve.to[1]))
        throw ConfigError("/exact_solution", "'log_line' requires a vertical line curve");
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        reject_unknown(s, "/solver", {"method", "rel_tol", "max_iter", "preconditioner"});
        read(s, "method", "/solver", c.solver.method);
        read(s, "rel_tol", "/solver", c.solver.rel_tol);
        read(s, "max_iter", "/solver", c.solver.max_iter);
        read(s, "preconditioner", "/solver", c.solver.preconditioner);
        if (c.solver.method != "auto" && c.solver.method != "cg" && c.solver.method != "bicgstab")
            throw ConfigError("/solver/method", "expected 'auto', 'cg' or 'bicgstab'");
        if (c.solver.method == "cg" && c.epsilon != -1)
            throw ConfigError("/solver/method", "cg requires the symmetric form (epsilon = -1)");
        if (!(c.solver.rel_tol > 0.0 && c.solver.rel_tol < 1.0)) throw ConfigError("/solver/rel_tol", "must lie in (0, 1)");
        if (c.solver.max_iter < 0) throw ConfigError("/solver/max_iter", "must be >= 0");
        if (c.solver.preconditioner != "none" && c.solver.preconditioner != "jacobi" &&
            c.solver.preconditioner != "block_jacobi")
            throw ConfigError("/solver/preconditioner", "expected 'none', 'jacobi' or 'block_jacobi'");
    }
    read(j, "mode", "", c.mode);
    if (c.mode != "elliptic" && c.mode != "parabolic") throw ConfigError("/mode", "expected 'elliptic' or 'parabolic'");
    if (j.contains("parabolic")) {
        const auto& p = j["parabolic"];
        reject_unknown(p, "/parabolic", {"T", "steps", "tau", "u0", "snapshot_every", "steady_state_check",
                                         "steady_state_tolerance"});
        read(p, "T", "/parabolic", c.parabolic.T);
        if (!(c.parabolic.T > 0.0)) throw ConfigError("/parabolic/T", "must be positive");
        if (p.contains("steps") && p.contains("tau")) throw ConfigError("/parabolic", "give either 'steps' or 'tau'");
        read(p, "steps", "/parabolic", c.parabolic.steps);
        if (p.contains("tau")) {
            const double tau = get<double>(p["tau"], "/parabolic/tau");
            if (!(tau > 0.0)) throw ConfigError("/parabolic/tau", "must be positive");
            if (tau > c.parabolic.T) throw ConfigError("/parabolic/tau", "time step exceeds the final time T");
            const double steps = c.parabolic.T / tau;
            if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
                throw ConfigError("/parabolic/tau", "T must be an integer multiple of tau");
            c.parabolic.steps = static_cast<int>(std::round(steps));
        }
        if (c.parabolic.steps < 1) throw ConfigError("/parabolic/steps", "must be >= 1");
        if (p.contains("u0")) c.parabolic.u0 = read_scalar(p["u0"], "/parabolic/u0", {"x", "y", "z"});
        read(p, "snapshot_every", "/parabolic", c.parabolic.snapshot_every);
        read(p, "steady_state_check", "/parabolic", c.parabolic.steady_state_check);
        read(p, "steady_state_tolerance", "/parabolic", c.parabolic.steady_state_tolerance);
        if (c.parabolic.snapshot_every < 0) throw ConfigError("/parabolic/snapshot_every", "must be >= 0");
    }
    if (j.contains("rate_assertions")) {
        const auto& r = j["rate_assertions"];
        if (!r.is_array()) throw ConfigError("/rate_assertions", "expected an array");
        for (std::size_t i = 0; i < r.size(); ++i) {
            const std::string p = "/rate_assertions/" + std::to_string(i);
            reject_unknown(r[i], p, {"column", "min", "max"});
            RateAssertion a;
            read(r[i], "column", p, a.column);
            read(r[i], "min", p, a.min);
            read(r[i], "max", p, a.max);
            if (a.column.empty()) throw ConfigError(p + "/column", "required");
            c.rate_assertions.push_back(a);
        }
    }
    return c;
}

inline StudyConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // locate the byte offset as line/column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), e.what());
    }
    return parse_config(j);
}

inline StudyConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidArgument("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

/// Canonical JSON form; parse_config(to_json(c)) == c.
inline nlohmann::json to_json(const StudyConfig& c) {
    using nlohmann::json;
    json j;
    j["domain"] = {{"lo", c.domain_lo}, {"hi", c.domain_hi}};
    json cj = {{"type", c.curve.type}};
    if (c.curve.type == "file") {
        cj["path"] = c.curve.path;
    } else {
        cj["from"] = c.curve.from;
        cj["to"] = c.curve.to;
    }
    if (c.curve.type == "sine") {
        cj["amplitude"] = c.curve.amplitude;
        cj["periods"] = c.curve.periods;
        cj["axis"] = c.curve.axis;
        cj["samples"] = c.curve.samples;
    }
    j["curve"] = cj;
    j["source"] = detail::scalar_to_json(c.source);
    j["discretization"] = {{"k", c.k}, {"epsilon", c.epsilon}, {"beta", c.beta}, {"mesh_size", c.mesh_size}};
    if (c.sigma) j["discretization"]["sigma"] = *c.sigma;
    j["levels"] = c.levels;
    j["regions"] = json::array();
    for (const auto& r : c.regions) j["regions"].push_back({{"name", r.name}, {"lo", r.lo}, {"hi", r.hi}});
    if (!c.energy_region.empty()) j["energy_region"] = c.energy_region;
    j["exact_solution"] = c.exact_solution;
    j["solver"] = {{"method", c.solver.method},
                   {"rel_tol", c.solver.rel_tol},
                   {"max_iter", c.solver.max_iter},
                   {"preconditioner", c.solver.preconditioner}};
    j["mode"] = c.mode;
    j["parabolic"] = {{"T", c.parabolic.T},
                      {"steps", c.parabolic.steps},
                      {"u0", detail::scalar_to_json(c.parabolic.u0)},
                      {"snapshot_every", c.parabolic.snapshot_every},
                      {"steady_state_check", c.parabolic.steady_state_check},
                      {"steady_state_tolerance", c.parabolic.steady_state_tolerance}};
    j["rate_assertions"] = json::array();
    for (const auto& a : c.rate_assertions) j["rate_assertions"].push_back({{"column", a.column}, {"min", a.min}, {"max", a.max}});
    return j;
}

inline Curve build_curve(const CurveSpec& s) {
    const Vec3 a(s.from[0], s.from[1], s.from[2]);
    const Vec3 b(s.to[0], s.to[1], s.to[2]);
    if (s.type == "line") return make_line_curve(a, b);
    if (s.type == "sine") return make_sine_curve(a, b, s.amplitude, s.periods, s.samples, s.axis);
    return read_curve_file(s.path);
}

/// f(t, s) from the source spec.
inline std::function<double(double, double)> build_source(const ScalarSpec& s) {
    if (s.type == "constant") return [v = s.value](double, double) { return v; };
    const Expression e(s.expr, {"s", "t"});
    return [e](double t, double arc) { return e({arc, t}); };
}

inline bool source_is_time_dependent(const ScalarSpec& s) {
    return s.type == "expression" && Expression(s.expr, {"s", "t"}).uses("t");
}

/// u0(x) from the initial-condition spec.
inline std::function<double(const Vec3&)> build_point_function(const ScalarSpec& s) {
    if (s.type == "constant") {
        if (s.value == 0.0) return {};
        return [v = s.value](const Vec3&) { return v; };
    }
    const Expression e(s.expr, {"x", "y", "z"});
    return [e](const Vec3& p) { return e({p[0], p[1], p[2]}); };
}

} // namespace dgline
