#include <catch2/catch_amalgamated.hpp>

#include "camsim/netlist.hpp"

#include <random>

using namespace camsim;

namespace {

Circuit divider(double r_top, double r_bot, double v) {
    Circuit c;
    NodeId top = c.add_node();
    NodeId mid = c.add_node();
    c.add_vsource("V1", top, kGround, v);
    c.add_resistor("RT", top, mid, r_top);
    c.add_resistor("RB", mid, kGround, r_bot);
    return c;
}

}  // namespace

TEST_CASE("single resistor insertion", "[netlist]") {
    Circuit c;
    NodeId n1 = c.add_node();
    c.add_resistor("R1", n1, kGround, 1e6);
    CHECK(c.devices().size() == 1);
    CHECK(c.node_count() == 2);
    CHECK(c.resistance("R1") == 1e6);
}

TEST_CASE("zero resistance rejected", "[netlist]") {
    Circuit c;
    NodeId n1 = c.add_node();
    try {
        c.add_resistor("R1", n1, kGround, 0.0);
        FAIL("expected NonPositiveResistance");
    } catch (const SimError& e) {
        CHECK(e.code() == Errc::NonPositiveResistance);
    }
}

TEST_CASE("terminal arity enforced", "[netlist]") {
    Circuit c;
    NodeId n1 = c.add_node();
    DeviceInstance bad;
    bad.kind = DeviceKind::Mosfet;
    bad.label = "M";
    bad.terminals = {n1, kGround, n1};  // 3 of 4
    bad.params = MosfetParams{};
    try {
        c.add_device(bad);
        FAIL("expected BadArity");
    } catch (const SimError& e) {
        CHECK(e.code() == Errc::BadArity);
    }
}

TEST_CASE("duplicate labels and dangling nodes rejected", "[netlist]") {
    Circuit c;
    NodeId n1 = c.add_node();
    c.add_resistor("R1", n1, kGround, 1e3);
    CHECK_THROWS_AS(c.add_resistor("R1", n1, kGround, 1e3), SimError);
    CHECK_THROWS_AS(c.add_resistor("R2", NodeId{7}, kGround, 1e3), SimError);
}

TEST_CASE("source set and read back", "[netlist]") {
    Circuit c = divider(1e6, 1e6, 0.0);
    c.set_source("V1", 0.9);
    CHECK(c.source("V1") == 0.9);
    c.set_source("V1", 1.8);
    CHECK(c.source("V1") == 1.8);
    try {
        c.set_source("NOPE", 1.0);
        FAIL("expected UnknownSource");
    } catch (const SimError& e) {
        CHECK(e.code() == Errc::UnknownSource);
    }
}

TEST_CASE("add then remove restores the circuit", "[netlist]") {
    Circuit before = divider(1e6, 2e6, 1.8);
    Circuit c = before;
    NodeId mid{2};
    c.add_resistor("RX", mid, kGround, 5e4);
    CHECK_FALSE(c == before);
    c.remove_device("RX");
    CHECK(c == before);
}

TEST_CASE("add/remove round trip on random circuits", "[netlist][property]") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> rdist(1e2, 1e7);
    for (int trial = 0; trial < 25; ++trial) {
        Circuit c;
        std::vector<NodeId> nodes{kGround};
        std::uniform_int_distribution<int> extra(2, 6);
        const int n = extra(rng);
        for (int i = 0; i < n; ++i) nodes.push_back(c.add_node());
        c.add_vsource("V", nodes[1], kGround, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
        for (int i = 0; i + 1 < n; ++i)
            c.add_resistor("R" + std::to_string(i), nodes[static_cast<std::size_t>(i) + 1],
                           nodes[static_cast<std::size_t>(i) + 2], rdist(rng));
        const Circuit before = c;
        c.add_resistor("RTMP", nodes[pick(rng)], nodes[pick(rng)], rdist(rng));
        c.remove_device("RTMP");
        CHECK(c == before);
    }
}

TEST_CASE("connectivity scan flags unbound and floating nodes", "[netlist]") {
    Circuit c;
    NodeId n1 = c.add_node();
    NodeId n2 = c.add_node();
    c.add_vsource("V", n1, kGround, 1.0);
    // n2 bound only through a MOSFET gate: no DC path
    NodeId n3 = c.add_node();
    c.add_resistor("R", n3, kGround, 1e3);
    c.add_mosfet("M", n3, n2, kGround, kGround, MosfetParams{});
    try {
        c.validate_connectivity();
        FAIL("expected NoDcPath");
    } catch (const SimError& e) {
        CHECK(e.code() == Errc::NoDcPath);
    }

    Circuit c2;
    (void)c2.add_node();
    NodeId m1 = c2.add_node();
    c2.add_vsource("V", m1, kGround, 1.0);  // node 1 never bound
    try {
        c2.validate_connectivity();
        FAIL("expected UnboundNode");
    } catch (const SimError& e) {
        CHECK(e.code() == Errc::UnboundNode);
    }
}
