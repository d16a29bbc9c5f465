#pragma once

// Experiment protocols: dynamic-element threshold sweeps, supply linearity,
// the timed energy-per-test transient, process corners, Monte Carlo mismatch
// and the memristor-backed emulation of the PCB measurements.

#include "camsim/camcell.hpp"
#include "camsim/parallel.hpp"
#include "camsim/solver.hpp"
#include "camsim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace camsim {

// --------------------------------------------------------------------------
// Threshold sweeps (resistor-backed dynamic elements)
// --------------------------------------------------------------------------

struct ThresholdSweepResult {
    DynamicElement element = DynamicElement::M1;
    double fixed_other = 0.0;                 // ohm
    std::vector<double> states;               // ohm
    std::vector<WindowMetrics> metrics;
    std::vector<Trace> traces;                // kept for plotting
};

/// One full input sweep per dynamic-element state, the other element held
/// fixed. The trace metadata records the cell configuration.
inline ThresholdSweepResult threshold_sweep(const CellVariant& variant,
                                            DynamicElement element,
                                            const std::vector<double>& states,
                                            double fixed_other, int samples,
                                            const SolveOptions& opt = {},
                                            int denoise_window = 50,
                                            bool keep_traces = true) {
    if (states.empty()) raise(Errc::Precondition, "threshold_sweep needs states");
    auto [cell, h] = build_cell(variant, false);
    const DynamicElement other =
        (element == DynamicElement::M1) ? DynamicElement::M2 : DynamicElement::M1;
    set_dynamic(cell, h, other, fixed_other);

    ThresholdSweepResult out;
    out.element = element;
    out.fixed_other = fixed_other;
    out.states = states;
    out.metrics.resize(states.size());
    if (keep_traces) out.traces.resize(states.size());

    for (std::size_t i = 0; i < states.size(); ++i) {
        Circuit c = cell;
        set_dynamic(c, h, element, states[i]);
        Trace t;
        try {
            t = dc_sweep(c, h.input, 0.0, variant.supply, samples, opt);
        } catch (const SimError& e) {
            raise(e.code(), "state " + std::to_string(states[i]) + " ohm: " + e.what());
        }
        t.meta.variant = cell_kind_name(variant.kind);
        t.meta.supply = variant.supply;
        t.meta.m1 = get_dynamic(c, h, DynamicElement::M1);
        t.meta.m2 = get_dynamic(c, h, DynamicElement::M2);
        out.metrics[i] = window_metrics(t, denoise_window);
        if (keep_traces) out.traces[i] = std::move(t);
    }
    return out;
}

/// Widest-window configuration: both dynamic elements at the top of their
/// range (the M1 branch threshold falls, the M2 branch threshold rises).
inline std::pair<double, double> widest_configuration(const CellVariant& v) {
    return {v.dyn_max, v.dyn_max};
}

inline Trace widest_window_trace(const CellVariant& variant, int samples,
                                 const SolveOptions& opt = {}) {
    auto [cell, h] = build_cell(variant, false);
    const auto [m1, m2] = widest_configuration(variant);
    set_dynamic(cell, h, DynamicElement::M1, m1);
    set_dynamic(cell, h, DynamicElement::M2, m2);
    Trace t = dc_sweep(cell, h.input, 0.0, variant.supply, samples, opt);
    t.meta.variant = cell_kind_name(variant.kind);
    t.meta.supply = variant.supply;
    t.meta.m1 = m1;
    t.meta.m2 = m2;
    return t;
}

// --------------------------------------------------------------------------
// Supply linearity
// --------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        raise(Errc::Precondition, "linear_fit needs matching samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) raise(Errc::DegenerateRegression, "all abscissae identical");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r2 = (syy == 0.0) ? 1.0 : 1.0 - ss_res / syy;
    return f;
}

struct SupplyLinearityResult {
    std::vector<double> supplies;  // V
    std::vector<double> widths;    // V, max window width per supply
    LineFit fit;
};

inline SupplyLinearityResult supply_linearity(const CellVariant& variant,
                                              const std::vector<double>& supplies,
                                              int samples = 1201,
                                              const SolveOptions& opt = {},
                                              int denoise_window = 50) {
    if (supplies.size() < 3)
        raise(Errc::DegenerateRegression, "supply fit needs at least 3 points");
    SupplyLinearityResult out;
    out.supplies = supplies;
    out.widths.resize(supplies.size());
    for (std::size_t i = 0; i < supplies.size(); ++i) {
        CellVariant v = variant;
        v.supply = supplies[i];
        Trace t = widest_window_trace(v, samples, opt);
        out.widths[i] = window_metrics(t, denoise_window).width;
    }
    out.fit = linear_fit(out.supplies, out.widths);
    return out;
}

// --------------------------------------------------------------------------
// Energy-per-test protocol
// --------------------------------------------------------------------------

enum class Park { Ground, Supply };
enum class HitClass { Hit, MissLow, MissHigh };

inline const char* hit_class_name(HitClass h) {
    switch (h) {
        case HitClass::Hit: return "Hit";
        case HitClass::MissLow: return "MissLow";
        case HitClass::MissHigh: return "MissHigh";
    }
    return "?";
}

inline Park default_park(CellKind kind) {
    return kind == CellKind::IntegratedNative ? Park::Supply : Park::Ground;
}

/// Timings of the test pulse sequence. Settle/enable/return-delay are the
/// protocol constants; the edge rates are modelling choices.
struct EnergyProtocol {
    double t_settle = 2.35e-9;        // s, input hold before enable
    double t_enable = 450e-12;        // s, enable pulse plateau
    double t_return_delay = 200e-12;  // s, wait after pulse before input returns
    double t_ramp_input = 100e-12;    // s
    double t_ramp_enable = 50e-12;    // s
    double t_tail = 300e-12;          // s, trailing observation
    double dt = 1e-12;                // s
};

struct EnergyReport {
    double test_voltage = 0.0;   // V
    double energy = 0.0;         // J, input + enable + supply
    HitClass classification = HitClass::Hit;
    double input_energy = 0.0;   // J
    double enable_energy = 0.0;  // J (both complementary drives)
    double supply_energy = 0.0;  // J
    double load_energy = 0.0;    // J delivered into the output load
    double window_lower = 0.0;   // V, DC window used for classification
    double window_upper = 0.0;   // V
};

namespace detail {

inline double trapz(const std::vector<double>& t, const std::vector<double>& p) {
    double e = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i)
        e += 0.5 * (p[i] + p[i - 1]) * (t[i] - t[i - 1]);
    return e;
}

}  // namespace detail

struct EnergyWaveforms {
    TransientResult transient;
    double t_enable_rise = 0.0;  // s, start of the enable plateau
    double t_enable_fall = 0.0;  // s, end of the enable plateau
};

/// Runs the full test protocol on an enabled cell and integrates the power
/// delivered by the input, enable and supply sources.
inline EnergyReport energy_test(const CellVariant& variant, double m1, double m2,
                                double v_test, std::optional<Park> park = std::nullopt,
                                const EnergyProtocol& proto = {},
                                const SolveOptions& opt = {}, int dc_samples = 1201,
                                int denoise_window = 50,
                                EnergyWaveforms* waveforms_out = nullptr) {
    if (v_test < 0.0 || v_test > variant.supply)
        raise(Errc::Precondition, "test voltage outside [0, supply]");
    auto [cell, h] = build_cell(variant, true);
    set_dynamic(cell, h, DynamicElement::M1, m1);
    set_dynamic(cell, h, DynamicElement::M2, m2);

    // classification window from a DC sweep of the same configuration,
    // output stage enabled
    Circuit dc = cell;
    dc.set_source(h.enable, variant.supply);
    dc.set_source(h.enable_bar, 0.0);
    Trace t = dc_sweep(dc, h.input, 0.0, variant.supply, dc_samples, opt);
    const WindowMetrics wm = window_metrics(t, denoise_window);

    const Park park_side = park.value_or(default_park(variant.kind));
    const double v_park = (park_side == Park::Ground) ? 0.0 : variant.supply;

    // timeline
    const double t0 = 0.0;
    const double t_in_hi = t0 + proto.t_ramp_input;
    const double t_en_rise = t_in_hi + proto.t_settle;
    const double t_en_hi = t_en_rise + proto.t_ramp_enable;
    const double t_en_fall = t_en_hi + proto.t_enable;
    const double t_en_lo = t_en_fall + proto.t_ramp_enable;
    const double t_in_back = t_en_lo + proto.t_return_delay;
    const double t_in_parked = t_in_back + proto.t_ramp_input;
    const double t_stop = t_in_parked + proto.t_tail;

    std::map<std::string, Waveform> stim;
    stim[h.input] = Waveform()
                        .add(t0, v_park)
                        .add(t_in_hi, v_test)
                        .add(t_in_back, v_test)
                        .add(t_in_parked, v_park);
    Waveform en = Waveform().add(t0, 0.0);
    Waveform enb = Waveform().add(t0, variant.supply);
    if (proto.t_enable > 0.0) {
        en.add(t_en_rise, 0.0)
            .add(t_en_hi, variant.supply)
            .add(t_en_fall, variant.supply)
            .add(t_en_lo, 0.0);
        enb.add(t_en_rise, variant.supply)
            .add(t_en_hi, 0.0)
            .add(t_en_fall, 0.0)
            .add(t_en_lo, variant.supply);
    }
    stim[h.enable] = en;
    stim[h.enable_bar] = enb;

    TransientResult tr = transient(cell, stim, t_stop, proto.dt, opt);

    // power delivered by each source: -v * i_branch with the branch current
    // oriented positive-terminal inward
    auto source_energy = [&](const std::string& label) {
        int col = -1;
        for (std::size_t b = 0; b < tr.branch_labels.size(); ++b)
            if (tr.branch_labels[b] == label) col = static_cast<int>(b);
        if (col < 0) raise(Errc::UnknownSource, "no branch for " + label);
        const DeviceInstance& d = cell.device(label);
        const int npos = d.terminals[0].index;
        const int nneg = d.terminals[1].index;
        std::vector<double> p(tr.times.size());
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            const double v = tr.node_voltages(static_cast<int>(k), npos) -
                             tr.node_voltages(static_cast<int>(k), nneg);
            p[k] = -v * tr.branch_currents(static_cast<int>(k), col);
        }
        return detail::trapz(tr.times, p);
    };

    EnergyReport rep;
    rep.test_voltage = v_test;
    rep.input_energy = source_energy(h.input);
    rep.enable_energy = source_energy(h.enable) + source_energy(h.enable_bar);
    rep.supply_energy = source_energy(h.supply);
    rep.energy = rep.input_energy + rep.enable_energy + rep.supply_energy;
    rep.window_lower = wm.lower_threshold;
    rep.window_upper = wm.upper_threshold;
    if (v_test < wm.lower_threshold)
        rep.classification = HitClass::MissLow;
    else if (v_test > wm.upper_threshold)
        rep.classification = HitClass::MissHigh;
    else
        rep.classification = HitClass::Hit;

    {  // energy into the output load via the probe branch
        int col = -1;
        for (std::size_t b = 0; b < tr.branch_labels.size(); ++b)
            if (tr.branch_labels[b] == h.output_probe) col = static_cast<int>(b);
        const DeviceInstance& d = cell.device(h.output_probe);
        const int node = d.terminals[0].index;
        std::vector<double> p(tr.times.size());
        for (std::size_t k = 0; k < tr.times.size(); ++k)
            p[k] = tr.node_voltages(static_cast<int>(k), node) *
                   tr.branch_currents(static_cast<int>(k), col);
        rep.load_energy = detail::trapz(tr.times, p);
    }
    if (waveforms_out) {
        waveforms_out->transient = std::move(tr);
        waveforms_out->t_enable_rise = t_en_hi;
        waveforms_out->t_enable_fall = t_en_fall;
    }
    return rep;
}

// --------------------------------------------------------------------------
// Process corners
// --------------------------------------------------------------------------

struct CornerSpec {
    std::string name = "nominal";
    double temperature_c = 25.0;
    double vth_shift = 0.0;  // fast > 0: vth0 scaled by (1 - shift)
    double kp_shift = 0.0;   // fast > 0: kp scaled by (1 + shift)
};

inline void validate(const CornerSpec& c) {
    if (std::fabs(c.vth_shift) > 0.5 || std::fabs(c.kp_shift) > 0.5)
        raise(Errc::Precondition, "corner shifts limited to +/-0.5");
}

inline std::vector<CornerSpec> standard_corners(double vth_shift = 0.1,
                                                double kp_shift = 0.1) {
    return {
        {"25C", 25.0, 0.0, 0.0},
        {"37C", 37.0, 0.0, 0.0},
        {"FastFast", 25.0, vth_shift, kp_shift},
        {"SlowSlow", 25.0, -vth_shift, -kp_shift},
    };
}

inline CellVariant apply_corner(const CellVariant& v, const CornerSpec& c) {
    validate(c);
    CellVariant out = v;
    for (auto& [role, p] : out.fet_params) {
        p.vth0 *= (1.0 - c.vth_shift);
        p.kp *= (1.0 + c.kp_shift);
    }
    return out;
}

/// Per-variant fixture voltages for the corner energy rows.
inline std::pair<double, double> corner_test_voltages(CellKind kind) {
    switch (kind) {
        case CellKind::IntegratedMinimum: return {0.9, 1.3};
        case CellKind::IntegratedWide: return {0.9, 1.5};
        case CellKind::IntegratedNative: return {0.6, 1.2};
        default: return {0.9, 1.3};
    }
}

struct CornerResult {
    CornerSpec corner;
    double max_width = 0.0;    // V
    double hit_energy = 0.0;   // J
    double miss_energy = 0.0;  // J
};

inline CornerResult corner_run(const CellVariant& variant, const CornerSpec& corner,
                               const EnergyProtocol& proto = {},
                               const SolveOptions& base_opt = {}, int samples = 1801,
                               int denoise_window = 50) {
    const CellVariant v = apply_corner(variant, corner);
    SolveOptions opt = base_opt;
    opt.temperature_c = corner.temperature_c;

    CornerResult out;
    out.corner = corner;
    Trace t = widest_window_trace(v, samples, opt);
    out.max_width = window_metrics(t, denoise_window).width;

    const auto [v_hit, v_miss] = corner_test_voltages(variant.kind);
    const auto [m1, m2] = widest_configuration(v);
    out.hit_energy = energy_test(v, m1, m2, v_hit, std::nullopt, proto, opt).energy;
    out.miss_energy = energy_test(v, m1, m2, v_miss, std::nullopt, proto, opt).energy;
    return out;
}

// --------------------------------------------------------------------------
// Monte Carlo mismatch
// --------------------------------------------------------------------------

/// Pelgrom-style area scaling: sigma = a / sqrt(W*L).
struct MismatchParams {
    double a_vt = 3.5e-9;  // V*m
    double a_kp = 1.0e-8;  // (fraction)*m
};

struct MonteCarloReport {
    std::vector<double> samples;  // V, max window width per converged run
    double mu = 0.0;              // V
    double sigma = 0.0;           // V
    int run_count = 0;
    std::uint64_t seed = 0;
    int non_converged = 0;
};

inline MonteCarloReport monte_carlo(const CellVariant& variant, int run_count,
                                    std::uint64_t seed, const MismatchParams& mismatch = {},
                                    int samples = 1201, int jobs = 1,
                                    const SolveOptions& opt = {},
                                    int denoise_window = 50) {
    if (run_count < 2) raise(Errc::Precondition, "monte_carlo needs run_count >= 2");
    auto [base_cell, h] = build_cell(variant, false);
    const auto [m1, m2] = widest_configuration(variant);
    set_dynamic(base_cell, h, DynamicElement::M1, m1);
    set_dynamic(base_cell, h, DynamicElement::M2, m2);

    std::vector<double> widths(static_cast<std::size_t>(run_count),
                               std::numeric_limits<double>::quiet_NaN());
    const Circuit& proto_cell = base_cell;
    const std::string input = h.input;
    const double supply = variant.supply;

    parallel_for(static_cast<std::size_t>(run_count), jobs, [&](std::size_t run) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        Circuit c = proto_cell;
        c.for_each_mosfet([&](const std::string&, MosfetParams& p) {
            const double area_scale = 1.0 / std::sqrt(p.width * p.length);
            const double dvth = normal(rng) * mismatch.a_vt * area_scale;
            const double dkp = normal(rng) * mismatch.a_kp * area_scale;
            p.vth0 += (p.polarity == Polarity::N ? dvth : -dvth);
            p.kp *= std::max(0.05, 1.0 + dkp);
        });
        try {
            Trace t = dc_sweep(c, input, 0.0, supply, samples, opt);
            widths[run] = window_metrics(t, denoise_window).width;
        } catch (const SimError&) {
            // non-converged runs stay NaN and are excluded from the fit
        }
    });

    MonteCarloReport rep;
    rep.run_count = run_count;
    rep.seed = seed;
    for (double w : widths) {
        if (std::isnan(w))
            ++rep.non_converged;
        else
            rep.samples.push_back(w);
    }
    if (rep.samples.empty()) raise(Errc::NoConvergence, "all Monte Carlo runs failed");
    const double n = static_cast<double>(rep.samples.size());
    rep.mu = std::accumulate(rep.samples.begin(), rep.samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double w : rep.samples) ss += (w - rep.mu) * (w - rep.mu);
    rep.sigma = (rep.samples.size() > 1) ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return rep;
}

// --------------------------------------------------------------------------
// Memristor-backed emulation of the PCB protocol
// --------------------------------------------------------------------------

struct MemristorProtocol {
    double write_amplitude = 2.0;   // V
    double pulse_min = 100e-6;      // s
    double pulse_max = 500e-6;      // s
    double settle_time = 0.0;       // s of relaxation between write and read
    double read_voltage = 0.25;     // V
    int samples = 1801;
    double relax_rate = 0.0;        // 1/s
    std::optional<TelegraphParams> telegraph;
};

struct MemristorSweepPoint {
    double target_state = 0.0;  // ohm
    double read_state = 0.0;    // ohm, after programming/relaxation
    WindowMetrics metrics;
    Trace trace;
};

/// Programs the chosen element toward each target with bounded pulses, reads
/// it back, then runs the input sweep with per-sample telegraph activity.
inline std::vector<MemristorSweepPoint> memristor_emulation_sweep(
    const CellVariant& variant, DynamicElement element,
    const std::vector<double>& targets, double fixed_other, std::uint64_t seed,
    const MemristorProtocol& proto = {}, const SolveOptions& opt = {},
    int denoise_window = 50) {
    if (variant.kind != CellKind::PcbMemristor)
        raise(Errc::Precondition, "memristor emulation needs the PcbMemristor variant");
    auto [cell, h] = build_cell(variant, false);
    const DynamicElement other =
        (element == DynamicElement::M1) ? DynamicElement::M2 : DynamicElement::M1;
    set_dynamic(cell, h, other, fixed_other);

    const std::string& label = (element == DynamicElement::M1) ? h.m1 : h.m2;
    std::mt19937_64 rng(seed);

    MemristorState state = std::get<MemristorState>(cell.device(label).params);
    state.relax_rate = proto.relax_rate;
    state.telegraph = proto.telegraph;

    std::vector<MemristorSweepPoint> out;
    out.reserve(targets.size());

    for (double target : targets) {
        // program with bounded-width pulses in log-resistance space; the last
        // pulse may trim below the nominal minimum width to land on target
        for (int pulse = 0; pulse < 64; ++pulse) {
            const double dlog = std::log10(target) - std::log10(state.resistance);
            if (std::fabs(dlog) < 1e-3) break;
            const double amp = (dlog > 0.0) ? proto.write_amplitude : -proto.write_amplitude;
            const double width = std::min(
                std::fabs(dlog) / (state.write_rate * proto.write_amplitude), proto.pulse_max);
            state = memristor_write(state, amp, width);
        }
        if (proto.settle_time > 0.0) state = memristor_relax(state, proto.settle_time);

        auto [i_read, st] = memristor_read(state, proto.read_voltage, rng);
        (void)i_read;
        state = st;
        MemristorSweepPoint pt;
        pt.target_state = target;
        pt.read_state = state.resistance;

        // input sweep with per-sample telegraph activity on the element
        Circuit c = cell;
        Trace t;
        t.x.resize(static_cast<std::size_t>(proto.samples));
        t.y.resize(static_cast<std::size_t>(proto.samples));
        const DeviceInstance* probe = &c.device(h.output_probe);
        Eigen::VectorXd guess;
        const Eigen::VectorXd* guess_ptr = nullptr;
        for (int i = 0; i < proto.samples; ++i) {
            if (state.telegraph && state.telegraph->switch_prob > 0.0) {
                auto [ir, st2] = memristor_read(state, proto.read_voltage, rng);
                (void)ir;
                state = st2;
            }
            c.set_resistance(label, state.resistance);
            const double v = variant.supply * static_cast<double>(i) /
                             static_cast<double>(proto.samples - 1);
            c.set_source(h.input, v);
            DcSolution s = dc_solve(c, opt, guess_ptr);
            if (!s.converged)
                raise(Errc::NoConvergence, "memristor sweep sample " + std::to_string(i));
            t.x[static_cast<std::size_t>(i)] = v;
            t.y[static_cast<std::size_t>(i)] = s.branch_currents[probe->branch];
            const int nn = c.node_count() - 1;
            guess.resize(c.system_size());
            for (int k = 0; k < nn; ++k) guess[k] = s.node_voltages[k + 1];
            for (int b = 0; b < c.branch_count(); ++b) guess[nn + b] = s.branch_currents[b];
            guess_ptr = &guess;
        }
        t.meta.variant = cell_kind_name(variant.kind);
        t.meta.supply = variant.supply;
        t.meta.m1 = (element == DynamicElement::M1) ? pt.read_state : fixed_other;
        t.meta.m2 = (element == DynamicElement::M2) ? pt.read_state : fixed_other;
        pt.metrics = window_metrics(t, denoise_window);
        pt.trace = std::move(t);
        out.push_back(std::move(pt));
    }
    return out;
}

}  // namespace camsim
