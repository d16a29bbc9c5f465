// camsim batch CLI: dispatches one experiment per invocation and writes CSV
// artifacts plus a rerunnable manifest.

#include "camsim/runner.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

void print_fet(const char* role, const camsim::MosfetParams& p) {
    using camsim::format_number;
    std::cout << "[fets." << role << "]\n"
              << "polarity = \"" << (p.polarity == camsim::Polarity::N ? "N" : "P") << "\"\n"
              << "width = " << format_number(p.width) << "\n"
              << "length = " << format_number(p.length) << "\n"
              << "vth0 = " << format_number(p.vth0) << "\n"
              << "kp = " << format_number(p.kp) << "\n"
              << "lambda = " << format_number(p.lambda) << "\n"
              << "n_slope = " << format_number(p.n_slope) << "\n"
              << "cap_gate = " << format_number(p.cap_gate) << "\n"
              << "temp_coeff_vth = " << format_number(p.temp_coeff_vth) << "\n"
              << "temp_exp_mobility = " << format_number(p.temp_exp_mobility) << "\n\n";
}

int print_defaults(const std::string& kind_name) {
    using namespace camsim;
    const CellKind kind = cell_kind_from_name(kind_name);
    const CellVariant v = CellVariant::make(kind);
    std::cout << "# camsim " << kVersion << " defaults for " << kind_name << "\n\n"
              << "[cell]\n"
              << "kind = \"" << kind_name << "\"\n"
              << "supply = " << format_number(v.supply) << "\n"
              << "balancing_r = " << format_number(v.balancing_r) << "\n"
              << "dyn_min = " << format_number(v.dyn_min) << "\n"
              << "dyn_max = " << format_number(v.dyn_max) << "\n"
              << "output_load = " << format_number(v.output_load) << "\n\n";
    for (const auto& [role, params] : v.fet_params) print_fet(role.c_str(), params);
    SolveOptions s;
    std::cout << "[solver]\n"
              << "abs_tol_current = " << format_number(s.abs_tol_current) << "\n"
              << "rel_tol_voltage = " << format_number(s.rel_tol_voltage) << "\n"
              << "max_iters = " << s.max_iters << "\n"
              << "gmin_start = " << format_number(s.gmin_start) << "\n"
              << "gmin_floor = " << format_number(s.gmin_floor) << "\n"
              << "source_steps = " << s.source_steps << "\n"
              << "damping = " << format_number(s.damping) << "\n"
              << "temperature_c = " << format_number(s.temperature_c) << "\n"
              << "transient_dt = " << format_number(s.transient_dt) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camsim: window-comparator CAM cell simulator"};
    app.set_version_flag("--version", std::string("camsim ") + std::string(camsim::kVersion));
    app.require_subcommand(1);

    camsim::RunRequest req;
    std::int64_t seed_flag = -1;

    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
    run_cmd->add_option("config_path", req.config_path, "config file path");
    run_cmd->add_option("--config", req.config_path, "config file path (flag form)");
    run_cmd->add_option("--set", req.overrides, "override key=value (repeatable)");
    run_cmd->add_option("--out", req.output_dir, "output directory override");
    run_cmd->add_option("--seed", seed_flag, "seed override");
    run_cmd->add_option("--jobs", req.jobs, "worker threads")->envname("CAMCELL_JOBS");
    run_cmd->add_flag("--quiet", req.quiet, "suppress summary and warnings");

    std::string defaults_kind = "IntegratedMinimum";
    CLI::App* defaults_cmd =
        app.add_subcommand("defaults", "print default parameters as config text");
    defaults_cmd->add_option("kind", defaults_kind, "cell kind");

    CLI11_PARSE(app, argc, argv);

    if (defaults_cmd->parsed()) {
        try {
            return print_defaults(defaults_kind);
        } catch (const camsim::SimError& e) {
            std::cerr << "camsim: " << e.what() << "\n";
            return 1;
        }
    }
    if (req.config_path.empty()) {
        std::cerr << "camsim: run needs a config file (positional or --config)\n";
        return 1;
    }
    if (seed_flag >= 0) req.seed = static_cast<std::uint64_t>(seed_flag);
    return camsim::run(req);
}
