// Command-line driver: single runs, table sweeps, and mesh dumps.

#include "thermoporo/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace tp = thermoporo;

namespace {

struct Overrides {
    std::vector<std::pair<std::string, std::string>> kv;
    void apply(tp::RunConfig& c) const {
        for (const auto& [k, v] : kv) tp::apply_config_entry(c, k, v);
    }
};

void add_common_flags(CLI::App* app, std::string& config_path, Overrides& ov) {
    app->add_option("-c,--config", config_path, "flat key = value config file");
    auto opt = [app, &ov](const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(
            flag, [&ov, key](const std::string& v) { ov.kv.emplace_back(key, v); }, help);
    };
    opt("--problem", "problem", "manufactured | mandel");
    opt("--scheme", "scheme", "HFM | HF-M | HM-F | FM-H | H-F-M | F-H-M");
    opt("--regime", "regime", "PR1..PR5 (manufactured)");
    opt("--mesh-n", "mesh_n", "subdivisions per axis");
    opt("--tau", "tau", "time step");
    opt("--steps", "steps", "number of time steps");
    opt("--t-f", "t_f", "final time (overrides steps)");
    opt("--stab", "stab", "theory | none | LT:LP");
    opt("--cutoff", "cutoff", "cut-off constant M");
    opt("--cf", "cf", "override of the convective coefficient c_f");
    opt("--heat-source", "heat_source", "constant heat source z (mandel)");
    opt("--lame", "lame", "alt | standard Lame conversion");
    opt("--out", "out", "output directory");
    opt("--atol", "atol", "absolute stopping tolerance");
    opt("--rtol", "rtol", "relative stopping tolerance");
    opt("--max-iter", "max_iter", "iteration cap per time step");
    opt("--warm-start", "warm_start", "true|false: start iterations from the previous step");
    opt("--weighted-norm", "weighted_norm", "true|false: mass-weighted stopping norm");
    opt("--scale-beta", "scale_beta", "true|false: scale the momentum beta coupling by 1/T_ref");
    opt("--scale-content-beta", "scale_content_beta",
        "true|false: scale the heat-content dilation coupling by 1/T_ref");
    opt("--profiles", "profiles", "comma-separated times for midline profile dumps");
}

tp::RunConfig load_config(const std::string& config_path, const Overrides& ov) {
    tp::RunConfig c;
    if (!config_path.empty()) c = tp::parse_config_file(config_path);
    ov.apply(c);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed-FEM solver for coupled heat / flow / mechanics in porous media"};
    app.require_subcommand(1);

    std::string run_config, sweep_config, sweep_axis, sweep_values;
    Overrides run_ov, sweep_ov;

    CLI::App* cmd_run = app.add_subcommand("run", "single transient run");
    add_common_flags(cmd_run, run_config, run_ov);

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "sweep one config axis, emit table.csv");
    add_common_flags(cmd_sweep, sweep_config, sweep_ov);
    cmd_sweep->add_option("--axis", sweep_axis, "mesh | regime | scheme | stabilization")
        ->required();
    cmd_sweep->add_option("--values", sweep_values, "comma-separated axis values");

    CLI::App* cmd_mesh = app.add_subcommand("mesh", "dump a structured mesh as plain text");
    int mesh_nx = 4, mesh_ny = 4;
    double mesh_w = 1.0, mesh_h = 1.0;
    std::string mesh_out = "mesh.txt";
    cmd_mesh->add_option("--nx", mesh_nx, "cells in x");
    cmd_mesh->add_option("--ny", mesh_ny, "cells in y");
    cmd_mesh->add_option("--width", mesh_w, "domain width");
    cmd_mesh->add_option("--height", mesh_h, "domain height");
    cmd_mesh->add_option("--out", mesh_out, "output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            const tp::RunConfig c = load_config(run_config, run_ov);
            const tp::RunArtifacts art = tp::run(c);
            for (std::size_t n = 0; n < art.result.reports.size(); ++n)
                std::cout << "step " << n + 1 << ": " << art.result.reports[n].iterations
                          << " iterations" << (art.result.reports[n].converged ? "" : " (no convergence)")
                          << "\n";
            if (art.has_errors)
                std::cout << "errors: e_T=" << art.errors.T << " e_r=" << art.errors.r
                          << " e_p=" << art.errors.p << " e_w=" << art.errors.w
                          << " e_u=" << art.errors.u << "\n";
            return art.exit_code;
        }
        if (cmd_sweep->parsed()) {
            const tp::RunConfig c = load_config(sweep_config, sweep_ov);
            std::vector<std::string> values;
            if (sweep_values.empty()) {
                values = tp::default_axis_values(sweep_axis, c.problem);
            } else {
                std::stringstream ss(sweep_values);
                std::string item;
                while (std::getline(ss, item, ',')) values.push_back(item);
            }
            const tp::TableReport rep = tp::sweep(c, sweep_axis, values);
            tp::write_table(rep, std::cout);
            return tp::exit_ok;
        }
        if (cmd_mesh->parsed()) {
            const tp::Mesh m = tp::build_rect_mesh({mesh_w, mesh_h, mesh_nx, mesh_ny});
            std::ofstream os(mesh_out);
            if (!os) throw tp::ConfigError("mesh: cannot open output file " + mesh_out);
            tp::write_mesh(m, os);
            return tp::exit_ok;
        }
    } catch (const tp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return tp::exit_config_error;
    } catch (const tp::SolveError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return tp::exit_solver_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tp::exit_config_error;
    }
    return tp::exit_ok;
}
