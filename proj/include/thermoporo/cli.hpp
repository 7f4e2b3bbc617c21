#pragma once

// Run configuration, experiment orchestration, and CSV emission. A run is
// described by a flat key = value config file plus command-line overrides;
// every experiment shipped under experiments/ is one such file.

#include "thermoporo/mesh.hpp"
#include "thermoporo/model.hpp"
#include "thermoporo/problems.hpp"
#include "thermoporo/schemes.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermoporo {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// exit codes of the CLI contract
inline constexpr int exit_ok = 0;
inline constexpr int exit_not_converged = 1;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_solver_failure = 3;

struct RunConfig {
    std::string problem = "manufactured";  // manufactured | mandel
    SchemeKind scheme = SchemeKind::HFM;
    Regime regime = Regime::PR1;
    int mesh_nx = 16, mesh_ny = 16;
    double tau = -1.0;  // default 1 (manufactured) or 10 (mandel)
    int steps = 1;
    double t_f = -1.0;  // if set, steps = round(t_f / tau)
    StabilizationMode stab = StabilizationMode::theory();
    double atol = 1e-6, rtol = 1e-6;
    double cutoff = -1.0;       // override of the cut-off constant
    double cf_override = -1.0;  // override of c_f (manufactured)
    double heat_source = 0.0;   // z (mandel)
    LameConvention lame = LameConvention::Alt;
    std::string out = "out";
    bool warm_start = true;
    bool weighted_norm = false;
    bool scale_beta = true;
    bool scale_content_beta = true;
    int max_iter = 100;
    std::vector<double> profile_times;
    bool write_fields = true;

    double tau_or_default() const { return tau > 0.0 ? tau : (problem == "mandel" ? 10.0 : 1.0); }
    int steps_or_default() const {
        if (t_f > 0.0) return std::max(1, static_cast<int>(std::llround(t_f / tau_or_default())));
        return steps;
    }
};

inline void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    auto to_double = [&](const std::string& v) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config: bad numeric value '" + value + "' for key '" + key + "'");
        }
    };
    auto to_int = [&](const std::string& v) { return static_cast<int>(std::llround(to_double(v))); };
    auto to_bool = [&](const std::string& v) {
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError("config: bad boolean '" + value + "' for key '" + key + "'");
    };

    try {
        if (key == "problem") {
            if (value != "manufactured" && value != "mandel")
                throw ConfigError("config: unknown problem '" + value + "'");
            c.problem = value;
        } else if (key == "scheme") c.scheme = scheme_from_name(value);
        else if (key == "regime") c.regime = regime_from_name(value);
        else if (key == "mesh_n") c.mesh_nx = c.mesh_ny = to_int(value);
        else if (key == "mesh_nx") c.mesh_nx = to_int(value);
        else if (key == "mesh_ny") c.mesh_ny = to_int(value);
        else if (key == "tau") c.tau = to_double(value);
        else if (key == "steps") c.steps = to_int(value);
        else if (key == "t_f") c.t_f = to_double(value);
        else if (key == "stab") {
            if (value == "theory") c.stab = StabilizationMode::theory();
            else if (value == "none") c.stab = StabilizationMode::none();
            else {
                const auto colon = value.find(':');
                if (colon == std::string::npos)
                    throw ConfigError("config: stab must be theory, none, or LT:LP");
                c.stab = StabilizationMode::custom(to_double(value.substr(0, colon)),
                                                  to_double(value.substr(colon + 1)));
            }
        } else if (key == "atol") c.atol = to_double(value);
        else if (key == "rtol") c.rtol = to_double(value);
        else if (key == "cutoff") c.cutoff = to_double(value);
        else if (key == "cf") c.cf_override = to_double(value);
        else if (key == "heat_source") c.heat_source = to_double(value);
        else if (key == "lame") {
            if (value == "alt") c.lame = LameConvention::Alt;
            else if (value == "standard") c.lame = LameConvention::Standard;
            else throw ConfigError("config: lame must be alt or standard");
        } else if (key == "out") c.out = value;
        else if (key == "warm_start") c.warm_start = to_bool(value);
        else if (key == "weighted_norm") c.weighted_norm = to_bool(value);
        else if (key == "scale_beta") c.scale_beta = to_bool(value);
        else if (key == "scale_content_beta") c.scale_content_beta = to_bool(value);
        else if (key == "max_iter") c.max_iter = to_int(value);
        else if (key == "write_fields") c.write_fields = to_bool(value);
        else if (key == "profiles") {
            c.profile_times.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) c.profile_times.push_back(to_double(item));
        } else throw ConfigError("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
        try {
            apply_config_entry(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// setup and output

struct Setup {
    Mesh mesh;
    PhysParams params;
    ProblemSpec spec;
    double tau;
    int steps;
};

inline Setup make_setup(const RunConfig& c) {
    Setup s;
    s.tau = c.tau_or_default();
    s.steps = c.steps_or_default();
    if (c.problem == "manufactured") {
        s.params = regime(c.regime);
        if (c.cf_override > 0.0) s.params.c_f = c.cf_override;
        if (c.cutoff > 0.0) s.params.cutoff_M = c.cutoff;
        s.spec = manufactured_problem(s.params);
        s.mesh = build_rect_mesh({1.0, 1.0, c.mesh_nx, c.mesh_ny});
    } else {
        MandelConfig cfg = mandel_config(c.lame, c.heat_source);
        cfg.tau = s.tau;
        if (c.cutoff > 0.0) cfg.params.cutoff_M = c.cutoff;
        if (c.cf_override > 0.0) cfg.params.c_f = c.cf_override;
        s.params = cfg.params;
        s.spec = mandel_problem(cfg);
        s.mesh = build_rect_mesh({cfg.a, cfg.b, c.mesh_nx, c.mesh_ny});
    }
    return s;
}

inline RunOptions run_options(const RunConfig& c) {
    RunOptions o;
    o.atol = c.atol;
    o.rtol = c.rtol;
    o.max_iter = c.max_iter;
    o.warm_start = c.warm_start;
    o.mass_weighted_norm = c.weighted_norm;
    o.scale_beta_coupling = c.scale_beta;
    o.scale_content_beta = c.scale_content_beta;
    return o;
}

namespace csv {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.5e", v);
    return buf;
}

}  // namespace csv

// (coordinate, field, value) samples along the domain midline: cell traces of
// p and T plus nodal u1 on the horizontal line, nodal u2 on the vertical one.
inline void profile_dump(const FieldState& state, const Mesh& mesh, const std::string& line,
                         double t, std::ostream& os) {
    (void)t;
    os << "coord,field,value\n";
    if (line == "horizontal") {
        const double ymid = mesh.height / 2.0;
        double band = mesh.height;
        for (int k = 0; k < mesh.n_triangles(); ++k)
            band = std::min(band, std::abs(mesh.centroid(k)[1] - ymid));
        for (int k = 0; k < mesh.n_triangles(); ++k) {
            const auto c = mesh.centroid(k);
            if (c[1] < ymid - 1e-12 && ymid - c[1] < 2.0 * band + 1e-12) {
                os << csv::num(c[0]) << ",p," << csv::num(state.p[k]) << "\n";
                os << csv::num(c[0]) << ",T," << csv::num(state.T[k]) << "\n";
            }
        }
        double best = mesh.height;
        for (int v = 0; v < mesh.n_vertices(); ++v)
            best = std::min(best, std::abs(mesh.vertices[v][1] - ymid));
        for (int v = 0; v < mesh.n_vertices(); ++v)
            if (std::abs(std::abs(mesh.vertices[v][1] - ymid) - best) < 1e-12)
                os << csv::num(mesh.vertices[v][0]) << ",u1," << csv::num(state.u[2 * v]) << "\n";
    } else if (line == "vertical") {
        const double xmid = mesh.width / 2.0;
        double best = mesh.width;
        for (int v = 0; v < mesh.n_vertices(); ++v)
            best = std::min(best, std::abs(mesh.vertices[v][0] - xmid));
        for (int v = 0; v < mesh.n_vertices(); ++v)
            if (std::abs(std::abs(mesh.vertices[v][0] - xmid) - best) < 1e-12)
                os << csv::num(mesh.vertices[v][1]) << ",u2," << csv::num(state.u[2 * v + 1]) << "\n";
    } else {
        throw std::invalid_argument("profile_dump: line must be horizontal or vertical");
    }
}

struct RunArtifacts {
    TransientResult result;
    L2Errors errors;       // manufactured only
    bool has_errors = false;
    int exit_code = exit_ok;
};

inline RunArtifacts run(const RunConfig& c) {
    const Setup s = make_setup(c);
    RunArtifacts art;
    try {
        art.result = run_transient(c.scheme, s.mesh, s.params, s.spec, s.tau, s.steps, c.stab,
                                   run_options(c));
    } catch (const SolveError&) {
        throw;  // caller maps to exit_solver_failure
    }

    namespace fs = std::filesystem;
    fs::create_directories(c.out);
    const auto path = [&](const std::string& name) { return (fs::path(c.out) / name).string(); };

    {
        std::ofstream os(path("iterations.csv"));
        os << "step,time,iterations,converged,final_residual\n";
        for (std::size_t n = 0; n < art.result.reports.size(); ++n) {
            const auto& r = art.result.reports[n];
            os << n + 1 << "," << csv::num((n + 1) * s.tau) << "," << r.iterations << ","
               << (r.converged ? 1 : 0) << ","
               << csv::num(r.residual_history.empty() ? 0.0 : r.residual_history.back()) << "\n";
        }
    }
    {
        std::ofstream os(path("residuals.csv"));
        os << "step,iter,residual\n";
        for (std::size_t n = 0; n < art.result.reports.size(); ++n)
            for (std::size_t i = 0; i < art.result.reports[n].residual_history.size(); ++i)
                os << n + 1 << "," << i + 1 << ","
                   << csv::num(art.result.reports[n].residual_history[i]) << "\n";
    }

    if (c.write_fields && !art.result.states.empty()) {
        const FieldState& st = art.result.states.back();
        {
            std::ofstream os(path("fields_cells.csv"));
            os << "cell,x,y,T,p\n";
            for (int k = 0; k < s.mesh.n_triangles(); ++k) {
                const auto ctr = s.mesh.centroid(k);
                os << k << "," << csv::num(ctr[0]) << "," << csv::num(ctr[1]) << ","
                   << csv::num(st.T[k]) << "," << csv::num(st.p[k]) << "\n";
            }
        }
        {
            std::ofstream os(path("fields_vertices.csv"));
            os << "vertex,x,y,u1,u2\n";
            for (int v = 0; v < s.mesh.n_vertices(); ++v)
                os << v << "," << csv::num(s.mesh.vertices[v][0]) << ","
                   << csv::num(s.mesh.vertices[v][1]) << "," << csv::num(st.u[2 * v]) << ","
                   << csv::num(st.u[2 * v + 1]) << "\n";
        }
        {
            std::ofstream os(path("fields_edges.csv"));
            os << "edge,x,y,r,w\n";
            for (int e = 0; e < s.mesh.n_edges(); ++e) {
                const auto& a = s.mesh.vertices[s.mesh.edges[e][0]];
                const auto& b = s.mesh.vertices[s.mesh.edges[e][1]];
                os << e << "," << csv::num((a[0] + b[0]) / 2) << "," << csv::num((a[1] + b[1]) / 2)
                   << "," << csv::num(st.r[e]) << "," << csv::num(st.w[e]) << "\n";
            }
        }
    }

    if (c.problem == "manufactured" && !art.result.states.empty()) {
        art.errors = l2_errors(s.mesh, art.result.states.back(),
                               manufactured_exact_fields(s.params, s.steps * s.tau));
        art.has_errors = true;
        std::ofstream os(path("errors.csv"));
        os << "h,e_T,e_r,e_p,e_w,e_u\n";
        os << csv::num(1.0 / c.mesh_nx) << "," << csv::num(art.errors.T) << ","
           << csv::num(art.errors.r) << "," << csv::num(art.errors.p) << ","
           << csv::num(art.errors.w) << "," << csv::num(art.errors.u) << "\n";
    }

    for (double tp : c.profile_times) {
        const int n = static_cast<int>(std::llround(tp / s.tau));
        if (n < 1 || n > static_cast<int>(art.result.states.size())) continue;
        if (std::abs(n * s.tau - tp) > 1e-9 * std::max(1.0, tp)) continue;
        std::ostringstream hname, vname;
        hname << "profile_h_t" << tp << ".csv";
        vname << "profile_v_t" << tp << ".csv";
        std::ofstream oh(path(hname.str()));
        profile_dump(art.result.states[n - 1], s.mesh, "horizontal", tp, oh);
        std::ofstream ov(path(vname.str()));
        profile_dump(art.result.states[n - 1], s.mesh, "vertical", tp, ov);
    }

    art.exit_code = art.result.all_converged() ? exit_ok : exit_not_converged;
    return art;
}

// ---------------------------------------------------------------------------
// sweeps

struct TableRow {
    std::string problem, label, regime, scheme, stab;
    int iterations = 0;
    bool converged = false;
    bool has_errors = false;
    L2Errors errors;
};

struct TableReport {
    std::vector<TableRow> rows;
};

inline void write_table(const TableReport& rep, std::ostream& os) {
    bool err = false;
    for (const auto& r : rep.rows) err = err || r.has_errors;
    os << "problem,label,regime,scheme,stab,iterations,converged";
    if (err) os << ",e_T,e_r,e_p,e_w,e_u";
    os << "\n";
    for (const auto& r : rep.rows) {
        os << r.problem << "," << r.label << "," << r.regime << "," << r.scheme << "," << r.stab
           << "," << r.iterations << "," << (r.converged ? 1 : 0);
        if (err) {
            if (r.has_errors)
                os << "," << csv::num(r.errors.T) << "," << csv::num(r.errors.r) << ","
                   << csv::num(r.errors.p) << "," << csv::num(r.errors.w) << ","
                   << csv::num(r.errors.u);
            else
                os << ",,,,,";
        }
        os << "\n";
    }
}

inline std::string stab_label(const StabilizationMode& s) {
    switch (s.kind) {
        case StabilizationMode::Kind::Theory: return "theory";
        case StabilizationMode::Kind::None: return "none";
        case StabilizationMode::Kind::Custom:
            return csv::num(s.L_T) + ":" + csv::num(s.L_p);
    }
    return "?";
}

// One run -> one table row; solver failures are recorded, not fatal.
inline TableRow run_cell(const RunConfig& c) {
    TableRow row;
    row.problem = c.problem;
    row.label = c.problem == "mandel" ? std::to_string(c.mesh_nx) : "1/" + std::to_string(c.mesh_nx);
    row.regime = c.problem == "mandel" ? "-" : regime_name(c.regime);
    row.scheme = scheme_name(c.scheme);
    row.stab = stab_label(c.stab);
    try {
        const Setup s = make_setup(c);
        const TransientResult res = run_transient(c.scheme, s.mesh, s.params, s.spec, s.tau,
                                                  s.steps, c.stab, run_options(c));
        row.iterations = res.reports.empty() ? 0 : res.reports.back().iterations;
        row.converged = res.all_converged();
        if (c.problem == "manufactured") {
            row.errors = l2_errors(s.mesh, res.states.back(),
                                   manufactured_exact_fields(s.params, s.steps * s.tau));
            row.has_errors = true;
        }
    } catch (const SolveError&) {
        row.iterations = -1;
        row.converged = false;
    }
    return row;
}

inline TableReport sweep(const RunConfig& base, const std::string& axis,
                         const std::vector<std::string>& values) {
    if (values.empty()) throw ConfigError("sweep: axis values must be nonempty");
    static const std::map<std::string, std::string> axis_key = {
        {"mesh", "mesh_n"}, {"regime", "regime"}, {"scheme", "scheme"}, {"stabilization", "stab"}};
    const auto it = axis_key.find(axis);
    if (it == axis_key.end())
        throw ConfigError("sweep: axis must be mesh, regime, scheme, or stabilization");

    TableReport rep;
    for (const auto& v : values) {
        RunConfig c = base;
        apply_config_entry(c, it->second, v);
        rep.rows.push_back(run_cell(c));
    }

    namespace fs = std::filesystem;
    fs::create_directories(base.out);
    std::ofstream os((fs::path(base.out) / "table.csv").string());
    write_table(rep, os);
    return rep;
}

inline std::vector<std::string> default_axis_values(const std::string& axis,
                                                    const std::string& problem) {
    if (axis == "mesh")
        return problem == "mandel" ? std::vector<std::string>{"10", "20", "40"}
                                   : std::vector<std::string>{"4", "8", "16", "32", "64"};
    if (axis == "regime") return {"PR1", "PR2", "PR3", "PR4", "PR5"};
    if (axis == "scheme") return {"HFM", "HF-M", "HM-F", "FM-H", "H-F-M", "F-H-M"};
    if (axis == "stabilization") return {"theory", "none"};
    throw ConfigError("sweep: axis must be mesh, regime, scheme, or stabilization");
}

}  // namespace thermoporo
