#pragma once

// Batch front-end: resolves a RunConfig from config text plus overrides,
// dispatches one experiment, and writes CSV artifacts, a summary table and
// a rerunnable manifest into the output directory.

#include "camsim/config.hpp"
#include "camsim/csv.hpp"
#include "camsim/experiments.hpp"
#include "camsim/version.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace camsim {

enum class Experiment { Sweep, Thresholds, Supply, Energy, Corners, MonteCarlo, Memristor };

inline Experiment experiment_from_name(const std::string& name) {
    if (name == "sweep") return Experiment::Sweep;
    if (name == "thresholds") return Experiment::Thresholds;
    if (name == "supply") return Experiment::Supply;
    if (name == "energy") return Experiment::Energy;
    if (name == "corners") return Experiment::Corners;
    if (name == "montecarlo") return Experiment::MonteCarlo;
    if (name == "memristor") return Experiment::Memristor;
    raise(Errc::ConfigError, "unknown experiment '" + name + "'");
}

inline const char* experiment_name(Experiment e) {
    switch (e) {
        case Experiment::Sweep: return "sweep";
        case Experiment::Thresholds: return "thresholds";
        case Experiment::Supply: return "supply";
        case Experiment::Energy: return "energy";
        case Experiment::Corners: return "corners";
        case Experiment::MonteCarlo: return "montecarlo";
        case Experiment::Memristor: return "memristor";
    }
    return "?";
}

inline CellKind cell_kind_from_name(const std::string& name) {
    for (CellKind k : {CellKind::PcbResistor, CellKind::PcbMemristor,
                       CellKind::IntegratedMinimum, CellKind::IntegratedWide,
                       CellKind::IntegratedNative})
        if (name == cell_kind_name(k)) return k;
    raise(Errc::ConfigError, "unknown cell kind '" + name + "'");
}

namespace schema {

inline const std::set<std::string>& allowed_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> s{
            "experiment", "seed", "output_dir", "jobs",
            "cell.kind", "cell.with_enable", "cell.supply", "cell.balancing_r",
            "cell.dyn_min", "cell.dyn_max", "cell.output_load", "cell.m1", "cell.m2",
            "cell.mirror_dynamic",
            "solver.abs_tol_current", "solver.rel_tol_voltage", "solver.max_iters",
            "solver.gmin_start", "solver.gmin_floor", "solver.source_steps",
            "solver.damping", "solver.temperature_c", "solver.transient_dt",
            "sweep.samples", "sweep.start", "sweep.stop", "sweep.denoise_window",
            "thresholds.element", "thresholds.count", "thresholds.states",
            "thresholds.fixed_other", "thresholds.samples", "thresholds.denoise_window",
            "supply.supplies", "supply.samples", "supply.denoise_window",
            "energy.v_test", "energy.v_tests", "energy.v_count", "energy.park",
            "energy.t_settle", "energy.t_enable", "energy.t_return_delay",
            "energy.t_ramp_input", "energy.t_ramp_enable", "energy.t_tail", "energy.dt",
            "energy.dc_samples", "energy.denoise_window",
            "corners.vth_shift", "corners.kp_shift", "corners.samples",
            "corners.denoise_window",
            "montecarlo.run_count", "montecarlo.a_vt", "montecarlo.a_kp",
            "montecarlo.samples", "montecarlo.denoise_window",
            "memristor.element", "memristor.targets", "memristor.count",
            "memristor.fixed_other", "memristor.write_amplitude", "memristor.pulse_min",
            "memristor.pulse_max", "memristor.settle_time", "memristor.read_voltage",
            "memristor.samples", "memristor.relax_rate", "memristor.telegraph_r_a",
            "memristor.telegraph_r_b", "memristor.telegraph_prob",
            "memristor.denoise_window",
        };
        for (const char* role :
             {"input_n", "input_p", "output_n", "output_p", "enable_n", "enable_p"})
            for (const char* field :
                 {"polarity", "width", "length", "vth0", "kp", "lambda", "n_slope",
                  "cap_gate", "temp_coeff_vth", "temp_exp_mobility"})
                s.insert(std::string("fets.") + role + "." + field);
        return s;
    }();
    return keys;
}

}  // namespace schema

struct RunConfig {
    Experiment experiment = Experiment::Sweep;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int jobs = 1;
    CellVariant cell;
    bool with_enable = false;
    double m1 = 0.0;  // 0 = widest configuration default
    double m2 = 0.0;
    SolveOptions solver;
    Config raw;  // resolved keys for the manifest
};

namespace detail {

inline MosfetParams fet_from_config(const Config& cfg, const std::string& prefix,
                                    MosfetParams base) {
    base.polarity =
        cfg.text(prefix + ".polarity", base.polarity == Polarity::N ? "N" : "P") == "N"
            ? Polarity::N
            : Polarity::P;
    base.width = cfg.number(prefix + ".width", base.width);
    base.length = cfg.number(prefix + ".length", base.length);
    base.vth0 = cfg.number(prefix + ".vth0", base.vth0);
    base.kp = cfg.number(prefix + ".kp", base.kp);
    base.lambda = cfg.number(prefix + ".lambda", base.lambda);
    base.n_slope = cfg.number(prefix + ".n_slope", base.n_slope);
    base.cap_gate = cfg.number(prefix + ".cap_gate", base.cap_gate);
    base.temp_coeff_vth = cfg.number(prefix + ".temp_coeff_vth", base.temp_coeff_vth);
    base.temp_exp_mobility = cfg.number(prefix + ".temp_exp_mobility", base.temp_exp_mobility);
    return base;
}

}  // namespace detail

inline RunConfig resolve_run_config(const Config& cfg) {
    cfg.enforce_schema(schema::allowed_keys());
    RunConfig rc;
    if (!cfg.has("experiment"))
        raise(Errc::ConfigError, "missing required key 'experiment'");
    rc.experiment = experiment_from_name(cfg.text("experiment", ""));
    rc.seed = static_cast<std::uint64_t>(cfg.number("seed", 1));
    rc.output_dir = cfg.text("output_dir", "out");
    rc.jobs = static_cast<int>(cfg.number("jobs", 0));

    rc.cell = CellVariant::make(cell_kind_from_name(cfg.text("cell.kind", "PcbResistor")));
    rc.cell.supply = cfg.number("cell.supply", rc.cell.supply);
    rc.cell.balancing_r = cfg.number("cell.balancing_r", rc.cell.balancing_r);
    rc.cell.dyn_min = cfg.number("cell.dyn_min", rc.cell.dyn_min);
    rc.cell.dyn_max = cfg.number("cell.dyn_max", rc.cell.dyn_max);
    rc.cell.output_load = cfg.number("cell.output_load", rc.cell.output_load);
    rc.cell.mirror_dynamic = cfg.flag("cell.mirror_dynamic", rc.cell.mirror_dynamic);
    for (auto& [role, params] : rc.cell.fet_params)
        params = detail::fet_from_config(cfg, "fets." + role, params);
    rc.with_enable = cfg.flag("cell.with_enable", false);
    rc.m1 = cfg.number("cell.m1", rc.cell.dyn_max);
    rc.m2 = cfg.number("cell.m2", rc.cell.dyn_max);

    rc.solver.abs_tol_current = cfg.number("solver.abs_tol_current", rc.solver.abs_tol_current);
    rc.solver.rel_tol_voltage = cfg.number("solver.rel_tol_voltage", rc.solver.rel_tol_voltage);
    rc.solver.max_iters = static_cast<int>(cfg.number("solver.max_iters", rc.solver.max_iters));
    rc.solver.gmin_start = cfg.number("solver.gmin_start", rc.solver.gmin_start);
    rc.solver.gmin_floor = cfg.number("solver.gmin_floor", rc.solver.gmin_floor);
    rc.solver.source_steps =
        static_cast<int>(cfg.number("solver.source_steps", rc.solver.source_steps));
    rc.solver.damping = cfg.number("solver.damping", rc.solver.damping);
    rc.solver.temperature_c = cfg.number("solver.temperature_c", rc.solver.temperature_c);
    rc.solver.transient_dt = cfg.number("solver.transient_dt", rc.solver.transient_dt);
    rc.solver.check();
    rc.raw = cfg;
    return rc;
}

/// Writes every default the run will actually use back into the config, so
/// the emitted manifest pins the full resolved state (device parameters,
/// solver settings, resolved state/voltage grids) rather than relying on
/// library defaults staying put.
inline void materialize_defaults(RunConfig& rc) {
    Config& cfg = rc.raw;
    cfg.set_text("experiment", experiment_name(rc.experiment));
    cfg.set_number("seed", static_cast<double>(rc.seed));
    cfg.set_text("output_dir", rc.output_dir);

    cfg.set_text("cell.kind", cell_kind_name(rc.cell.kind));
    cfg.set_flag("cell.with_enable", rc.with_enable);
    cfg.set_number("cell.supply", rc.cell.supply);
    cfg.set_number("cell.balancing_r", rc.cell.balancing_r);
    cfg.set_number("cell.dyn_min", rc.cell.dyn_min);
    cfg.set_number("cell.dyn_max", rc.cell.dyn_max);
    cfg.set_number("cell.output_load", rc.cell.output_load);
    cfg.set_number("cell.m1", rc.m1);
    cfg.set_number("cell.m2", rc.m2);
    cfg.set_flag("cell.mirror_dynamic", rc.cell.mirror_dynamic);
    for (const auto& [role, p] : rc.cell.fet_params) {
        const std::string pre = "fets." + role + ".";
        cfg.set_text(pre + "polarity", p.polarity == Polarity::N ? "N" : "P");
        cfg.set_number(pre + "width", p.width);
        cfg.set_number(pre + "length", p.length);
        cfg.set_number(pre + "vth0", p.vth0);
        cfg.set_number(pre + "kp", p.kp);
        cfg.set_number(pre + "lambda", p.lambda);
        cfg.set_number(pre + "n_slope", p.n_slope);
        cfg.set_number(pre + "cap_gate", p.cap_gate);
        cfg.set_number(pre + "temp_coeff_vth", p.temp_coeff_vth);
        cfg.set_number(pre + "temp_exp_mobility", p.temp_exp_mobility);
    }

    cfg.set_number("solver.abs_tol_current", rc.solver.abs_tol_current);
    cfg.set_number("solver.rel_tol_voltage", rc.solver.rel_tol_voltage);
    cfg.set_number("solver.max_iters", rc.solver.max_iters);
    cfg.set_number("solver.gmin_start", rc.solver.gmin_start);
    cfg.set_number("solver.gmin_floor", rc.solver.gmin_floor);
    cfg.set_number("solver.source_steps", rc.solver.source_steps);
    cfg.set_number("solver.damping", rc.solver.damping);
    cfg.set_number("solver.temperature_c", rc.solver.temperature_c);
    cfg.set_number("solver.transient_dt", rc.solver.transient_dt);

    auto num = [&](const std::string& key, double fallback) {
        cfg.set_number(key, cfg.number(key, fallback));
    };
    auto denoise = [&](const std::string& section) { num(section + ".denoise_window", 50); };
    switch (rc.experiment) {
        case Experiment::Sweep:
            num("sweep.samples", 5898);
            num("sweep.start", 0.0);
            num("sweep.stop", rc.cell.supply);
            denoise("sweep");
            break;
        case Experiment::Thresholds: {
            cfg.set_text("thresholds.element", cfg.text("thresholds.element", "M1"));
            num("thresholds.count", 16);
            const int count = static_cast<int>(cfg.number("thresholds.count", 16));
            cfg.set_list("thresholds.states",
                         cfg.list("thresholds.states",
                                  geometric_states(rc.cell.dyn_min, rc.cell.dyn_max, count)));
            num("thresholds.fixed_other", rc.cell.dyn_max);
            num("thresholds.samples", 5898);
            denoise("thresholds");
            break;
        }
        case Experiment::Supply:
            cfg.set_list("supply.supplies",
                         cfg.list("supply.supplies", {1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4}));
            num("supply.samples", 1201);
            denoise("supply");
            break;
        case Experiment::Energy: {
            EnergyProtocol proto;
            num("energy.t_settle", proto.t_settle);
            num("energy.t_enable", proto.t_enable);
            num("energy.t_return_delay", proto.t_return_delay);
            num("energy.t_ramp_input", proto.t_ramp_input);
            num("energy.t_ramp_enable", proto.t_ramp_enable);
            num("energy.t_tail", proto.t_tail);
            num("energy.dt", rc.solver.transient_dt);
            num("energy.dc_samples", 1201);
            cfg.set_text("energy.park", cfg.text("energy.park", "Auto"));
            if (!cfg.has("energy.v_tests") && !cfg.has("energy.v_count"))
                num("energy.v_test", 0.9);
            denoise("energy");
            break;
        }
        case Experiment::Corners:
            num("corners.vth_shift", 0.1);
            num("corners.kp_shift", 0.1);
            num("corners.samples", 1801);
            denoise("corners");
            break;
        case Experiment::MonteCarlo: {
            MismatchParams mm;
            num("montecarlo.run_count", 250);
            num("montecarlo.a_vt", mm.a_vt);
            num("montecarlo.a_kp", mm.a_kp);
            num("montecarlo.samples", 1201);
            denoise("montecarlo");
            break;
        }
        case Experiment::Memristor: {
            cfg.set_text("memristor.element", cfg.text("memristor.element", "M1"));
            num("memristor.count", 8);
            const int count = static_cast<int>(cfg.number("memristor.count", 8));
            cfg.set_list("memristor.targets",
                         cfg.list("memristor.targets",
                                  geometric_states(rc.cell.dyn_min, rc.cell.dyn_max, count)));
            num("memristor.fixed_other", rc.cell.dyn_max);
            MemristorProtocol proto;
            num("memristor.write_amplitude", proto.write_amplitude);
            num("memristor.pulse_min", proto.pulse_min);
            num("memristor.pulse_max", proto.pulse_max);
            num("memristor.settle_time", proto.settle_time);
            num("memristor.read_voltage", proto.read_voltage);
            num("memristor.samples", proto.samples);
            num("memristor.relax_rate", proto.relax_rate);
            denoise("memristor");
            break;
        }
    }
}

// --------------------------------------------------------------------------
// Manifest
// --------------------------------------------------------------------------

/// Canonical config text: resolved keys, grouped by section, sorted. Keys
/// that do not affect results (output_dir, jobs) are excluded from the hash.
inline std::string render_manifest(const Config& cfg, std::uint64_t* hash_out = nullptr) {
    std::map<std::string, std::vector<std::pair<std::string, const ConfigValue*>>> sections;
    for (const auto& [key, value] : cfg.entries()) {
        const std::size_t dot = key.rfind('.');
        const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
        const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
        sections[section].emplace_back(leaf, &value);
    }
    std::string semantic;
    std::string body;
    for (auto& [section, keys] : sections) {
        std::sort(keys.begin(), keys.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (!section.empty()) body += "[" + section + "]\n";
        for (const auto& [leaf, value] : keys) {
            const std::string full = section.empty() ? leaf : section + "." + leaf;
            const std::string line = leaf + " = " + value->render() + "\n";
            body += line;
            if (full != "output_dir" && full != "jobs") semantic += full + "=" + value->render() + ";";
        }
        body += "\n";
    }
    const std::uint64_t h = fnv1a64(semantic);
    if (hash_out) *hash_out = h;
    std::string text;
    text += "# camsim " + std::string(kVersion) + " run manifest\n";
    text += "# config_hash=" + hex64(h) + "\n";
    text += "# rerun with: camsim run <this file>\n\n";
    text += body;
    return text;
}

// --------------------------------------------------------------------------
// Experiment execution and artifact emission
// --------------------------------------------------------------------------

struct Artifact {
    std::string filename;
    std::string content;
};

struct RunOutput {
    std::vector<Artifact> artifacts;
    std::string summary;  // human-readable table, also written to summary.txt
};

namespace detail {

inline void stamp_meta(CsvWriter& w, const RunConfig& rc, std::uint64_t hash) {
    w.meta("camsim_version", kVersion);
    w.meta("config_hash", hex64(hash));
    w.meta("experiment", experiment_name(rc.experiment));
    w.meta("cell", cell_kind_name(rc.cell.kind));
    w.meta("supply", rc.cell.supply);
    w.meta("seed", static_cast<double>(rc.seed));
}

inline std::string fixed(double v, int prec = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

inline DynamicElement element_from_name(const std::string& name) {
    if (name == "M1") return DynamicElement::M1;
    if (name == "M2") return DynamicElement::M2;
    raise(Errc::ConfigError, "element must be M1 or M2, got '" + name + "'");
}

inline int denoise_of(const Config& cfg, const std::string& section) {
    return static_cast<int>(cfg.number(section + ".denoise_window", 50));
}

}  // namespace detail

inline RunOutput execute_experiment(const RunConfig& rc) {
    const Config& cfg = rc.raw;
    std::uint64_t hash = 0;
    render_manifest(cfg, &hash);
    RunOutput out;
    std::ostringstream summary;
    summary << "camsim " << kVersion << "  experiment=" << experiment_name(rc.experiment)
            << "  cell=" << cell_kind_name(rc.cell.kind) << "\n";

    const int jobs = rc.jobs > 0 ? rc.jobs : default_jobs();

    switch (rc.experiment) {
        case Experiment::Sweep: {
            auto [cell, h] = build_cell(rc.cell, rc.with_enable);
            set_dynamic(cell, h, DynamicElement::M1, rc.m1);
            set_dynamic(cell, h, DynamicElement::M2, rc.m2);
            if (rc.with_enable) {
                cell.set_source(h.enable, rc.cell.supply);
                cell.set_source(h.enable_bar, 0.0);
            }
            const int samples = static_cast<int>(cfg.number("sweep.samples", 5898));
            const double start = cfg.number("sweep.start", 0.0);
            const double stop = cfg.number("sweep.stop", rc.cell.supply);
            Trace t = dc_sweep(cell, h.input, start, stop, samples, rc.solver);
            const WindowMetrics m = window_metrics(t, detail::denoise_of(cfg, "sweep"));
            CsvWriter w;
            detail::stamp_meta(w, rc, hash);
            w.meta("m1", rc.m1);
            w.meta("m2", rc.m2);
            w.header({"input_v", "output_a"});
            for (std::size_t i = 0; i < t.size(); ++i) w.row({t.x[i], t.y[i]});
            out.artifacts.push_back({"trace.csv", w.str()});
            summary << "window [" << detail::fixed(m.lower_threshold) << ", "
                    << detail::fixed(m.upper_threshold) << "] V  width "
                    << detail::fixed(1e3 * m.width, 1) << " mV  peak "
                    << format_number(m.peak_current) << " A\n";
            break;
        }

        case Experiment::Thresholds: {
            const DynamicElement el =
                detail::element_from_name(cfg.text("thresholds.element", "M1"));
            const int count = static_cast<int>(cfg.number("thresholds.count", 16));
            std::vector<double> states =
                cfg.list("thresholds.states",
                         geometric_states(rc.cell.dyn_min, rc.cell.dyn_max, count));
            const double fixed_other = cfg.number("thresholds.fixed_other", rc.cell.dyn_max);
            const int samples = static_cast<int>(cfg.number("thresholds.samples", 5898));
            auto res = threshold_sweep(rc.cell, el, states, fixed_other, samples, rc.solver,
                                       detail::denoise_of(cfg, "thresholds"), true);

            CsvWriter w;
            detail::stamp_meta(w, rc, hash);
            w.meta("element", el == DynamicElement::M1 ? "M1" : "M2");
            w.meta("fixed_other", fixed_other);
            w.header({"state_ohm", "lower_v", "upper_v", "width_v", "peak_a"});
            for (std::size_t i = 0; i < states.size(); ++i)
                w.row({states[i], res.metrics[i].lower_threshold,
                       res.metrics[i].upper_threshold, res.metrics[i].width,
                       res.metrics[i].peak_current});
            out.artifacts.push_back({"metrics.csv", w.str()});

            CsvWriter tw;
            detail::stamp_meta(tw, rc, hash);
            tw.header({"state_ohm", "input_v", "output_a"});
            for (std::size_t i = 0; i < res.traces.size(); ++i)
                for (std::size_t k = 0; k < res.traces[i].size(); ++k)
                    tw.row({states[i], res.traces[i].x[k], res.traces[i].y[k]});
            out.artifacts.push_back({"traces.csv", tw.str()});

            summary << "state_ohm    lower_v  upper_v  width_mV\n";
            for (std::size_t i = 0; i < states.size(); ++i)
                summary << detail::fixed(states[i], 0) << "  "
                        << detail::fixed(res.metrics[i].lower_threshold) << "  "
                        << detail::fixed(res.metrics[i].upper_threshold) << "  "
                        << detail::fixed(1e3 * res.metrics[i].width, 1) << "\n";
            break;
        }

        case Experiment::Supply: {
            std::vector<double> supplies =
                cfg.list("supply.supplies", {1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4});
            const int samples = static_cast<int>(cfg.number("supply.samples", 1201));
            auto res = supply_linearity(rc.cell, supplies, samples, rc.solver,
                                        detail::denoise_of(cfg, "supply"));
            CsvWriter w;
            detail::stamp_meta(w, rc, hash);
            w.meta("slope", res.fit.slope);
            w.meta("intercept", res.fit.intercept);
            w.meta("r2", res.fit.r2);
            w.header({"supply_v", "max_width_v"});
            for (std::size_t i = 0; i < supplies.size(); ++i)
                w.row({supplies[i], res.widths[i]});
            out.artifacts.push_back({"widths.csv", w.str()});
            summary << "max width vs supply: slope=" << detail::fixed(res.fit.slope, 4)
                    << " V/V  intercept=" << detail::fixed(res.fit.intercept, 4)
                    << " V  r2=" << detail::fixed(res.fit.r2, 5) << "\n";
            break;
        }

        case Experiment::Energy: {
            EnergyProtocol proto;
            proto.t_settle = cfg.number("energy.t_settle", proto.t_settle);
            proto.t_enable = cfg.number("energy.t_enable", proto.t_enable);
            proto.t_return_delay = cfg.number("energy.t_return_delay", proto.t_return_delay);
            proto.t_ramp_input = cfg.number("energy.t_ramp_input", proto.t_ramp_input);
            proto.t_ramp_enable = cfg.number("energy.t_ramp_enable", proto.t_ramp_enable);
            proto.t_tail = cfg.number("energy.t_tail", proto.t_tail);
            proto.dt = cfg.number("energy.dt", rc.solver.transient_dt);
            const int dc_samples = static_cast<int>(cfg.number("energy.dc_samples", 1201));

            std::optional<Park> park;
            const std::string park_name = cfg.text("energy.park", "Auto");
            if (park_name == "Ground") park = Park::Ground;
            else if (park_name == "Supply") park = Park::Supply;
            else if (park_name != "Auto")
                raise(Errc::ConfigError, "energy.park must be Ground, Supply or Auto");

            std::vector<double> v_tests;
            if (cfg.has("energy.v_tests")) {
                v_tests = cfg.list("energy.v_tests", {});
            } else if (cfg.has("energy.v_count")) {
                const int n = static_cast<int>(cfg.number("energy.v_count", 0));
                if (n < 2) raise(Errc::ConfigError, "energy.v_count must be >= 2");
                for (int i = 0; i < n; ++i)
                    v_tests.push_back(rc.cell.supply * static_cast<double>(i) /
                                      static_cast<double>(n - 1));
            } else {
                v_tests.push_back(cfg.number("energy.v_test", 0.9));
            }

            std::vector<EnergyReport> reports(v_tests.size());
            parallel_for(v_tests.size(), jobs, [&](std::size_t i) {
                reports[i] = energy_test(rc.cell, rc.m1, rc.m2, v_tests[i], park, proto,
                                         rc.solver, dc_samples,
                                         detail::denoise_of(cfg, "energy"));
            });

            CsvWriter w;
            detail::stamp_meta(w, rc, hash);
            w.meta("m1", rc.m1);
            w.meta("m2", rc.m2);
            w.header({"v_test_v", "energy_j", "input_j", "enable_j", "supply_j",
                      "classification"});
            for (const auto& r : reports)
                w.raw_row({format_number(r.test_voltage), format_number(r.energy),
                           format_number(r.input_energy), format_number(r.enable_energy),
                           format_number(r.supply_energy),
                           hit_class_name(r.classification)});
            out.artifacts.push_back({"report.csv", w.str()});

            summary << "v_test_V  energy_fJ  class\n";
            for (const auto& r : reports)
                summary << detail::fixed(r.test_voltage, 3) << "  "
                        << detail::fixed(1e15 * r.energy, 2) << "  "
                        << hit_class_name(r.classification) << "\n";
            break;
        }

        case Experiment::Corners: {
            const double vth_shift = cfg.number("corners.vth_shift", 0.1);
            const double kp_shift = cfg.number("corners.kp_shift", 0.1);
            const int samples = static_cast<int>(cfg.number("corners.samples", 1801));
            const auto corners = standard_corners(vth_shift, kp_shift);
            std::vector<CornerResult> results(corners.size());
            parallel_for(corners.size(), jobs, [&](std::size_t i) {
                results[i] = corner_run(rc.cell, corners[i], {}, rc.solver, samples,
                                        detail::denoise_of(cfg, "corners"));
            });
            CsvWriter w;
            detail::stamp_meta(w, rc, hash);
            w.header({"corner", "temperature_c", "max_width_v", "hit_energy_j",
                      "miss_energy_j"});
            for (const auto& r : results)
                w.raw_row({r.corner.name, format_number(r.corner.temperature_c),
                           format_number(r.max_width), format_number(r.hit_energy),
                           format_number(r.miss_energy)});
            out.artifacts.push_back({"corners.csv", w.str()});

            summary << "corner     width_mV  hit_fJ  miss_fJ\n";
            for (const auto& r : results)
                summary << r.corner.name << "  " << detail::fixed(1e3 * r.max_width, 1)
                        << "  " << detail::fixed(1e15 * r.hit_energy, 2) << "  "
                        << detail::fixed(1e15 * r.miss_energy, 2) << "\n";
            break;
        }

        case Experiment::MonteCarlo: {
            const int runs = static_cast<int>(cfg.number("montecarlo.run_count", 250));
            MismatchParams mm;
            mm.a_vt = cfg.number("montecarlo.a_vt", mm.a_vt);
            mm.a_kp = cfg.number("montecarlo.a_kp", mm.a_kp);
            const int samples = static_cast<int>(cfg.number("montecarlo.samples", 1201));
            MonteCarloReport rep =
                monte_carlo(rc.cell, runs, rc.seed, mm, samples, jobs, rc.solver,
                            detail::denoise_of(cfg, "montecarlo"));

            CsvWriter w;
            detail::stamp_meta(w, rc, hash);
            w.meta("mu", rep.mu);
            w.meta("sigma", rep.sigma);
            w.meta("non_converged", static_cast<double>(rep.non_converged));
            w.header({"run", "max_width_v"});
            for (std::size_t i = 0; i < rep.samples.size(); ++i)
                w.row({static_cast<double>(i), rep.samples[i]});
            out.artifacts.push_back({"samples.csv", w.str()});

            // fixed-count histogram for the distribution plot
            const int bins = 20;
            const double lo = *std::min_element(rep.samples.begin(), rep.samples.end());
            const double hi = *std::max_element(rep.samples.begin(), rep.samples.end());
            const double span = (hi > lo) ? (hi - lo) : 1e-12;
            std::vector<int> counts(bins, 0);
            for (double s : rep.samples) {
                int b = static_cast<int>((s - lo) / span * bins);
                b = std::clamp(b, 0, bins - 1);
                ++counts[static_cast<std::size_t>(b)];
            }
            CsvWriter hw;
            detail::stamp_meta(hw, rc, hash);
            hw.header({"bin_lo_v", "bin_hi_v", "count"});
            for (int b = 0; b < bins; ++b)
                hw.row({lo + span * b / bins, lo + span * (b + 1) / bins,
                        static_cast<double>(counts[static_cast<std::size_t>(b)])});
            out.artifacts.push_back({"histogram.csv", hw.str()});

            summary << "runs=" << rep.run_count << " (failed " << rep.non_converged
                    << ")  mu=" << detail::fixed(1e3 * rep.mu, 1)
                    << " mV  sigma=" << detail::fixed(1e3 * rep.sigma, 2) << " mV\n";
            break;
        }

        case Experiment::Memristor: {
            if (rc.cell.kind != CellKind::PcbMemristor)
                raise(Errc::ConfigError, "memristor experiment needs cell.kind=PcbMemristor");
            const DynamicElement el =
                detail::element_from_name(cfg.text("memristor.element", "M1"));
            const int count = static_cast<int>(cfg.number("memristor.count", 8));
            std::vector<double> targets =
                cfg.list("memristor.targets",
                         geometric_states(rc.cell.dyn_min, rc.cell.dyn_max, count));
            const double fixed_other = cfg.number("memristor.fixed_other", rc.cell.dyn_max);
            MemristorProtocol proto;
            proto.write_amplitude = cfg.number("memristor.write_amplitude", proto.write_amplitude);
            proto.pulse_min = cfg.number("memristor.pulse_min", proto.pulse_min);
            proto.pulse_max = cfg.number("memristor.pulse_max", proto.pulse_max);
            proto.settle_time = cfg.number("memristor.settle_time", proto.settle_time);
            proto.read_voltage = cfg.number("memristor.read_voltage", proto.read_voltage);
            proto.samples = static_cast<int>(cfg.number("memristor.samples", proto.samples));
            proto.relax_rate = cfg.number("memristor.relax_rate", proto.relax_rate);
            if (cfg.has("memristor.telegraph_prob")) {
                TelegraphParams tp;
                tp.r_a = cfg.number("memristor.telegraph_r_a", rc.cell.dyn_max / 2.0);
                tp.r_b = cfg.number("memristor.telegraph_r_b", rc.cell.dyn_max);
                tp.switch_prob = cfg.number("memristor.telegraph_prob", 0.0);
                proto.telegraph = tp;
            }
            auto points = memristor_emulation_sweep(rc.cell, el, targets, fixed_other,
                                                    rc.seed, proto, rc.solver,
                                                    detail::denoise_of(cfg, "memristor"));

            CsvWriter w;
            detail::stamp_meta(w, rc, hash);
            w.meta("element", el == DynamicElement::M1 ? "M1" : "M2");
            w.header({"target_ohm", "read_ohm", "lower_v", "upper_v", "width_v"});
            for (const auto& p : points)
                w.row({p.target_state, p.read_state, p.metrics.lower_threshold,
                       p.metrics.upper_threshold, p.metrics.width});
            out.artifacts.push_back({"thresholds.csv", w.str()});

            CsvWriter tw;
            detail::stamp_meta(tw, rc, hash);
            tw.header({"read_ohm", "input_v", "output_a"});
            for (const auto& p : points)
                for (std::size_t k = 0; k < p.trace.size(); ++k)
                    tw.row({p.read_state, p.trace.x[k], p.trace.y[k]});
            out.artifacts.push_back({"traces.csv", tw.str()});

            summary << "target_ohm  read_ohm  lower_v  upper_v\n";
            for (const auto& p : points)
                summary << detail::fixed(p.target_state, 0) << "  "
                        << detail::fixed(p.read_state, 0) << "  "
                        << detail::fixed(p.metrics.lower_threshold) << "  "
                        << detail::fixed(p.metrics.upper_threshold) << "\n";
            break;
        }
    }

    out.summary = summary.str();
    return out;
}

/// Writes artifacts (plus manifest.toml and summary.txt) into output_dir.
/// An empty artifact list writes nothing.
inline std::vector<std::filesystem::path> emit_report(const RunConfig& rc,
                                                      const RunOutput& out) {
    std::vector<std::filesystem::path> written;
    if (out.artifacts.empty()) return written;
    const std::filesystem::path dir(rc.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    for (const auto& a : out.artifacts) {
        const auto path = dir / a.filename;
        write_file_atomic(path, a.content);
        written.push_back(path);
    }
    write_file_atomic(dir / "manifest.toml", render_manifest(rc.raw));
    write_file_atomic(dir / "summary.txt", out.summary);
    written.push_back(dir / "manifest.toml");
    written.push_back(dir / "summary.txt");
    return written;
}

// --------------------------------------------------------------------------
// Process entry
// --------------------------------------------------------------------------

struct RunRequest {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::string output_dir;              // optional override
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    bool quiet = false;
};

/// Exit codes: 0 success, 1 config error, 2 solver non-convergence.
inline int run(const RunRequest& req) {
    warnings_enabled() = !req.quiet;
    try {
        Config cfg = Config::parse_file(req.config_path);
        for (const auto& o : req.overrides) cfg.set_override(o);
        if (!req.output_dir.empty()) cfg.set_text("output_dir", req.output_dir);
        if (req.seed) cfg.set_number("seed", static_cast<double>(*req.seed));
        if (req.jobs > 0) cfg.set_number("jobs", req.jobs);
        RunConfig rc = resolve_run_config(cfg);
        materialize_defaults(rc);
        RunOutput out = execute_experiment(rc);
        emit_report(rc, out);
        if (!req.quiet) std::cout << out.summary;
        return 0;
    } catch (const SimError& e) {
        std::cerr << "camsim: " << e.what() << "\n";
        if (e.code() == Errc::NoConvergence || e.code() == Errc::SingularMatrix) return 2;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "camsim: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace camsim
