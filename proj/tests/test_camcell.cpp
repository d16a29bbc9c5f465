#include <catch2/catch_amalgamated.hpp>

#include "camsim/camcell.hpp"
#include "camsim/solver.hpp"
#include "camsim/trace.hpp"

#include <cmath>

using namespace camsim;

namespace {

int count_cell_devices(const Circuit& c) {
    int n = 0;
    for (const auto& d : c.devices())
        if (d.kind == DeviceKind::Resistor || d.kind == DeviceKind::Mosfet ||
            d.kind == DeviceKind::Memristor)
            ++n;
    return n;
}

}  // namespace

TEST_CASE("minimum cell has the 6T2R2M component count plus load", "[camcell]") {
    auto [c, h] = build_cell(CellVariant::make(CellKind::IntegratedMinimum), false);
    CHECK(count_cell_devices(c) == 11);  // 6 FETs + 2 balancing + 2 dynamic + load
    CHECK(h.enable.empty());
}

TEST_CASE("enable stage adds two series transistors", "[camcell]") {
    auto [c, h] = build_cell(CellVariant::make(CellKind::IntegratedMinimum), true);
    CHECK(count_cell_devices(c) == 13);
    CHECK(h.enable == "VEN");
    CHECK(c.has_device("MPE"));
    CHECK(c.has_device("MNE"));
}

TEST_CASE("pcb variant carries megohm balancing resistors", "[camcell]") {
    auto [c, h] = build_cell(CellVariant::make(CellKind::PcbResistor), false);
    (void)h;
    CHECK(c.resistance("R1") == 1e6);
    CHECK(c.resistance("R2") == 1e6);
    CHECK(c.resistance("RL") == 1e6);
}

TEST_CASE("set_dynamic clamps out-of-range values", "[camcell]") {
    auto [c, h] = build_cell(CellVariant::make(CellKind::PcbResistor), false);
    warnings_enabled() = false;
    const double applied = set_dynamic(c, h, DynamicElement::M1, 50e6);
    warnings_enabled() = true;
    CHECK(applied == 10e6);
    CHECK(get_dynamic(c, h, DynamicElement::M1) == 10e6);

    set_dynamic(c, h, DynamicElement::M2, 1e6);
    CHECK(get_dynamic(c, h, DynamicElement::M2) == 1e6);
}

TEST_CASE("geometric states span the range", "[camcell]") {
    auto s = geometric_states(100e3, 10e6, 16);
    REQUIRE(s.size() == 16);
    CHECK(s.front() == 100e3);
    CHECK(s.back() == 10e6);
    const double want_ratio = std::pow(100.0, 1.0 / 15.0);
    for (std::size_t i = 1; i < s.size(); ++i)
        CHECK(s[i] / s[i - 1] == Catch::Approx(want_ratio).epsilon(1e-12));

    auto two = geometric_states(1e3, 100e3, 2);
    CHECK(two == std::vector<double>{1e3, 100e3});

    auto five = geometric_states(3.3e3, 47e3, 5);
    const double r0 = five[1] / five[0];
    for (std::size_t i = 1; i + 1 < five.size(); ++i)
        CHECK(five[i + 1] / five[i] == Catch::Approx(r0).epsilon(1e-12));
}

TEST_CASE("invalid variants are rejected", "[camcell]") {
    CellVariant v = CellVariant::make(CellKind::IntegratedMinimum);
    v.balancing_r = -1.0;
    try {
        build_cell(v, false);
        FAIL("expected InvalidVariant");
    } catch (const SimError& e) {
        CHECK(e.code() == Errc::InvalidVariant);
    }
    CellVariant w = CellVariant::make(CellKind::IntegratedMinimum);
    w.fet_params.erase("input_n");
    CHECK_THROWS_AS(build_cell(w, false), SimError);
}

TEST_CASE("widest window is contiguous and specific", "[camcell][window]") {
    auto [c, h] = build_cell(CellVariant::make(CellKind::PcbResistor), false);
    set_dynamic(c, h, DynamicElement::M1, h.dyn_max);
    set_dynamic(c, h, DynamicElement::M2, h.dyn_max);
    Trace t = dc_sweep(c, h.input, 0.0, 1.8, 1201);
    Trace sm = moving_average(t, 50);
    const double peak = *std::max_element(sm.y.begin(), sm.y.end());
    REQUIRE(peak > 0.0);

    // a single contiguous region above 10% of peak
    int regions = 0;
    bool inside = false;
    std::size_t first = 0, last = 0;
    for (std::size_t i = 0; i < sm.size(); ++i) {
        const bool hi = sm.y[i] > 0.1 * peak;
        if (hi && !inside) {
            ++regions;
            first = i;
            inside = true;
        }
        if (hi) last = i;
        if (!hi) inside = false;
    }
    CHECK(regions == 1);

    // well outside the region the output dies below 1% of peak
    const double guard = 0.2;  // V, covers the subthreshold skirt
    for (std::size_t i = 0; i < sm.size(); ++i) {
        if (sm.x[i] < sm.x[first] - guard || sm.x[i] > sm.x[last] + guard)
            CHECK(sm.y[i] < 0.01 * peak);
    }
}

TEST_CASE("inactive enable pinches the output off", "[camcell]") {
    auto [c, h] = build_cell(CellVariant::make(CellKind::IntegratedMinimum), true);
    set_dynamic(c, h, DynamicElement::M1, h.dyn_max);
    set_dynamic(c, h, DynamicElement::M2, h.dyn_max);
    c.set_source(h.enable, 0.0);
    c.set_source(h.enable_bar, 1.8);
    for (double vin : {0.0, 0.45, 0.9, 1.35, 1.8}) {
        c.set_source(h.input, vin);
        DcSolution s = dc_solve(c);
        REQUIRE(s.converged);
        CHECK(std::fabs(branch_current(c, s, h.output_probe)) < 1e-9);
    }
}
