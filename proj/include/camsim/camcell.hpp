#pragma once

// Builds the 6T2R2M window-comparator cell. Each input branch is a skewed
// inverter whose switching point is set by the ratio of its source
// degeneration resistors; one of the pair is the programmable dynamic
// element. Inverter 1 (dynamic element on top) drives the output PMOS and
// sets the lower threshold; inverter 2 (dynamic element to ground) drives
// the output NMOS and sets the upper threshold. Output current flows into
// the load only while the input sits between the two thresholds.

#include "camsim/devices.hpp"
#include "camsim/netlist.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace camsim {

inline std::atomic<bool>& warnings_enabled() {
    static std::atomic<bool> on{true};
    return on;
}

inline void warn(const std::string& msg) {
    if (warnings_enabled()) std::cerr << "warning: " << msg << "\n";
}

enum class CellKind {
    PcbResistor,
    PcbMemristor,
    IntegratedMinimum,
    IntegratedWide,
    IntegratedNative,
};

inline const char* cell_kind_name(CellKind k) {
    switch (k) {
        case CellKind::PcbResistor: return "PcbResistor";
        case CellKind::PcbMemristor: return "PcbMemristor";
        case CellKind::IntegratedMinimum: return "IntegratedMinimum";
        case CellKind::IntegratedWide: return "IntegratedWide";
        case CellKind::IntegratedNative: return "IntegratedNative";
    }
    return "?";
}

enum class DynamicElement { M1, M2 };

struct CellVariant {
    CellKind kind = CellKind::PcbResistor;
    double balancing_r = 1e6;   // ohm
    double dyn_min = 100e3;     // ohm
    double dyn_max = 10e6;      // ohm
    double output_load = 1e6;   // ohm
    double supply = 1.8;        // V
    std::map<std::string, MosfetParams> fet_params;  // role -> params
    bool mirror_dynamic = false;  // swap which branch side holds M1/M2

    static CellVariant make(CellKind kind) {
        CellVariant v;
        v.kind = kind;
        const bool pcb = (kind == CellKind::PcbResistor || kind == CellKind::PcbMemristor);
        if (pcb) {
            v.balancing_r = 1e6;
            v.dyn_min = 100e3;
            v.dyn_max = 10e6;
            v.output_load = 1e6;
            for (const char* role : {"input_n", "output_n", "enable_n"})
                v.fet_params[role] = process::discrete_nmos();
            for (const char* role : {"input_p", "output_p", "enable_p"})
                v.fet_params[role] = process::discrete_pmos();
        } else {
            v.balancing_r = 10e3;
            v.dyn_min = 1e3;
            v.dyn_max = 100e3;
            v.output_load = 100e3;
            MosfetParams in_n = process::generic180_nmos();
            MosfetParams in_p = process::generic180_pmos();
            if (kind == CellKind::IntegratedWide) {
                in_n = process::generic180_nmos(1e-6, 180e-9);
                in_p = process::generic180_pmos(1e-6, 180e-9);
            } else if (kind == CellKind::IntegratedNative) {
                in_n = process::generic180_native_nmos();
            }
            v.fet_params["input_n"] = in_n;
            v.fet_params["input_p"] = in_p;
            // output and enable transistors are minimum size in all designs
            v.fet_params["output_n"] = process::generic180_nmos();
            v.fet_params["output_p"] = process::generic180_pmos();
            v.fet_params["enable_n"] = process::generic180_nmos();
            v.fet_params["enable_p"] = process::generic180_pmos();
        }
        return v;
    }
};

inline void validate(const CellVariant& v) {
    if (!(v.balancing_r > 0.0 && v.output_load > 0.0))
        raise(Errc::InvalidVariant, "cell resistors must be positive");
    if (!(v.dyn_min > 0.0 && v.dyn_min < v.dyn_max))
        raise(Errc::InvalidVariant, "dynamic range must satisfy 0 < min < max");
    if (!(v.supply > 0.0)) raise(Errc::InvalidVariant, "supply must be positive");
    for (const char* role : {"input_n", "input_p", "output_n", "output_p"})
        if (!v.fet_params.count(role))
            raise(Errc::InvalidVariant, std::string("missing FET role ") + role);
}

struct CellHandles {
    std::string input = "VIN";
    std::string supply = "VDD";
    std::string enable;       // empty without enable stage
    std::string enable_bar;   // complementary gate drive
    std::string m1 = "M1";
    std::string m2 = "M2";
    std::string output_probe = "IOUT";
    double dyn_min = 0.0;
    double dyn_max = 0.0;
};

inline std::pair<Circuit, CellHandles> build_cell(const CellVariant& v,
                                                  bool with_enable = false) {
    validate(v);
    if (with_enable &&
        (!v.fet_params.count("enable_n") || !v.fet_params.count("enable_p")))
        raise(Errc::InvalidVariant, "enable stage requested without enable FET params");

    Circuit c;
    CellHandles h;
    h.dyn_min = v.dyn_min;
    h.dyn_max = v.dyn_max;

    const NodeId gnd = kGround;
    const NodeId vdd = c.add_node();
    const NodeId vin = c.add_node();
    const NodeId n_top1 = c.add_node();  // branch 1: top element to PMOS source
    const NodeId n_o1 = c.add_node();    // inverter 1 output
    const NodeId n_bot1 = c.add_node();  // branch 1: NMOS source to bottom element
    const NodeId n_top2 = c.add_node();
    const NodeId n_o2 = c.add_node();
    const NodeId n_bot2 = c.add_node();

    c.add_vsource(h.supply, vdd, gnd, v.supply);
    c.add_vsource(h.input, vin, gnd, 0.0);

    auto add_dynamic = [&](const std::string& label, NodeId a, NodeId b) {
        if (v.kind == CellKind::PcbMemristor) {
            MemristorState s;
            s.r_min = v.dyn_min;
            s.r_max = v.dyn_max;
            s.resistance = v.dyn_max;
            s.prior_resistance = v.dyn_max;
            c.add_memristor(label, a, b, s);
        } else {
            c.add_resistor(label, a, b, v.dyn_max);
        }
    };

    // Branch 1 (lower threshold): dynamic on top unless mirrored.
    if (!v.mirror_dynamic) {
        add_dynamic(h.m1, vdd, n_top1);
        c.add_resistor("R1", n_bot1, gnd, v.balancing_r);
    } else {
        c.add_resistor("R1", vdd, n_top1, v.balancing_r);
        add_dynamic(h.m1, n_bot1, gnd);
    }
    c.add_mosfet("MP1", n_o1, vin, n_top1, vdd, v.fet_params.at("input_p"));
    c.add_mosfet("MN1", n_o1, vin, n_bot1, gnd, v.fet_params.at("input_n"));

    // Branch 2 (upper threshold): dynamic to ground unless mirrored.
    if (!v.mirror_dynamic) {
        c.add_resistor("R2", vdd, n_top2, v.balancing_r);
        add_dynamic(h.m2, n_bot2, gnd);
    } else {
        add_dynamic(h.m2, vdd, n_top2);
        c.add_resistor("R2", n_bot2, gnd, v.balancing_r);
    }
    c.add_mosfet("MP2", n_o2, vin, n_top2, vdd, v.fet_params.at("input_p"));
    c.add_mosfet("MN2", n_o2, vin, n_bot2, gnd, v.fet_params.at("input_n"));

    // Output stage: series PMOS/NMOS pair gated by the two inverter outputs,
    // with optional enable devices bracketing the pair.
    const NodeId n_mid = c.add_node();
    const NodeId n_out = c.add_node();
    const NodeId n_load = c.add_node();

    NodeId p_source = vdd;
    NodeId n_source = n_out;
    if (with_enable) {
        const NodeId n_a = c.add_node();
        const NodeId n_c = c.add_node();
        const NodeId en = c.add_node();
        const NodeId enb = c.add_node();
        h.enable = "VEN";
        h.enable_bar = "VENB";
        c.add_vsource(h.enable, en, gnd, 0.0);
        c.add_vsource(h.enable_bar, enb, gnd, v.supply);
        c.add_mosfet("MPE", n_a, enb, vdd, vdd, v.fet_params.at("enable_p"));
        c.add_mosfet("MNE", n_c, en, n_out, gnd, v.fet_params.at("enable_n"));
        p_source = n_a;
        n_source = n_c;
    }
    c.add_mosfet("MPO", n_mid, n_o1, p_source, vdd, v.fet_params.at("output_p"));
    c.add_mosfet("MNO", n_mid, n_o2, n_source, gnd, v.fet_params.at("output_n"));

    c.add_probe(h.output_probe, n_out, n_load);
    c.add_resistor("RL", n_load, gnd, v.output_load);

    c.validate_connectivity();
    return {std::move(c), h};
}

/// Sets one dynamic element, clamping into the variant's range. Returns the
/// value actually applied.
inline double set_dynamic(Circuit& c, const CellHandles& h, DynamicElement e,
                          double resistance) {
    const std::string& label = (e == DynamicElement::M1) ? h.m1 : h.m2;
    if (!c.has_device(label))
        raise(Errc::UnknownElement, "dynamic element '" + label + "' not in circuit");
    double r = resistance;
    if (r < h.dyn_min || r > h.dyn_max) {
        r = std::clamp(r, h.dyn_min, h.dyn_max);
        warn("dynamic element " + label + " clamped to " + std::to_string(r) + " ohm");
    }
    c.set_resistance(label, r);
    return r;
}

inline double get_dynamic(const Circuit& c, const CellHandles& h, DynamicElement e) {
    return c.resistance(e == DynamicElement::M1 ? h.m1 : h.m2);
}

/// Geometric progression inclusive of both endpoints.
inline std::vector<double> geometric_states(double lo, double hi, int count) {
    if (count < 2) raise(Errc::Precondition, "need at least 2 states");
    if (!(lo > 0.0 && hi > lo)) raise(Errc::Precondition, "need 0 < lo < hi");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                               static_cast<double>(count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

}  // namespace camsim
