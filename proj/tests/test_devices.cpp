#include <catch2/catch_amalgamated.hpp>

#include "camsim/devices.hpp"

#include <cmath>
#include <random>

using namespace camsim;

namespace {

MosfetParams unit_nmos(double vth, double beta, double lambda = 0.0) {
    MosfetParams p;
    p.polarity = Polarity::N;
    p.width = 1e-6;
    p.length = 1e-6;  // W/L = 1, so kp is beta directly
    p.kp = beta;
    p.vth0 = vth;
    p.lambda = lambda;
    p.n_slope = 1.3;
    p.temp_coeff_vth = 0.0;
    return p;
}

}  // namespace

TEST_CASE("deep subthreshold off current", "[devices]") {
    MosfetParams p = unit_nmos(0.5, 1e-3);
    const double id = mosfet_eval(p, 0.0, 1.8).current[0];
    CHECK(std::fabs(id) < 1e-9);
}

TEST_CASE("strong inversion approaches the square law", "[devices]") {
    MosfetParams p = unit_nmos(0.5, 1e-3, 0.0);
    const double id = mosfet_eval(p, 1.5, 2.0).current[0];
    const double level1 = 0.5 * 1e-3 * (1.5 - 0.5) * (1.5 - 0.5);
    CHECK(id == Catch::Approx(level1).epsilon(0.05));
}

TEST_CASE("pmos mirrors nmos", "[devices]") {
    MosfetParams n = unit_nmos(0.5, 1e-3, 0.05);
    MosfetParams p = n;
    p.polarity = Polarity::P;
    p.vth0 = -0.5;
    const double id_n = mosfet_eval(n, 1.2, 0.9).current[0];
    const double id_p = mosfet_eval(p, -1.2, -0.9).current[0];
    CHECK(id_p == Catch::Approx(-id_n).epsilon(1e-12));
}

TEST_CASE("terminal currents conserve charge", "[devices][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> v(-2.0, 2.0);
    MosfetParams p = process::generic180_nmos();
    for (int i = 0; i < 200; ++i) {
        const DeviceEval e = mosfet_eval(p, v(rng), v(rng));
        double sum = 0.0;
        for (int t = 0; t < 4; ++t) sum += e.current[static_cast<std::size_t>(t)];
        CHECK(std::fabs(sum) <= 1e-15);
        for (int t = 0; t < 4; ++t)
            for (int u = 0; u < 4; ++u)
                CHECK(std::isfinite(e.didv[static_cast<std::size_t>(t)][static_cast<std::size_t>(u)]));
    }
}

TEST_CASE("analytic jacobian matches finite differences", "[devices]") {
    MosfetParams p = unit_nmos(0.45, 2e-4, 0.06);

    SECTION("strong inversion") {
        CHECK(mosfet_jacobian_check(p, 1.4, 1.2) < 1e-4);
        CHECK(mosfet_jacobian_check(p, 1.0, 1.8) < 1e-4);
    }
    SECTION("subthreshold") {
        CHECK(mosfet_jacobian_check(p, 0.25, 0.9) < 1e-3);
        CHECK(mosfet_jacobian_check(p, 0.35, 1.8) < 1e-3);
    }
    SECTION("triode, lambda = 0") {
        MosfetParams q = unit_nmos(0.45, 2e-4, 0.0);
        CHECK(mosfet_jacobian_check(q, 1.5, 0.2) < 1e-4);
        CHECK(mosfet_jacobian_check(q, 1.2, 0.05) < 1e-4);
    }
    SECTION("pmos points") {
        MosfetParams q = process::generic180_pmos();
        CHECK(mosfet_jacobian_check(q, -1.2, -0.9) < 1e-4);
        CHECK(mosfet_jacobian_check(q, -0.3, -1.0) < 1e-3);
    }
}

TEST_CASE("drain current is smooth on a fine bias grid", "[devices]") {
    MosfetParams p = process::generic180_nmos();
    const double h = 1e-3;
    const double beta = p.kp * p.width / p.length;
    for (double vds : {0.05, 0.9, 1.8}) {
        double prev = mosfet_eval(p, 0.0, vds).current[0];
        double prev2 = 0.0;
        for (int i = 1; i <= 2000; ++i) {
            const double vgs = h * i;
            const double id = mosfet_eval(p, vgs, vds).current[0];
            if (i >= 2) {
                const double second = id - 2.0 * prev + prev2;
                CHECK(std::fabs(second) <= 40.0 * beta * h * h);  // bounded curvature
            }
            CHECK(id >= prev - 1e-18);  // monotone in vgs
            prev2 = prev;
            prev = id;
        }
    }
}

TEST_CASE("first derivative stays continuous across the vds axis", "[devices]") {
    // central differences track the analytic gds across vds = 0, where the
    // smoothed channel-length-modulation |vds| term has its knee
    MosfetParams p = process::generic180_nmos();
    const double h = 1e-3;
    const double beta = p.kp * p.width / p.length;
    for (double vgs : {0.3, 0.8, 1.4}) {
        for (int i = -1000; i <= 1000; i += 5) {
            const double vds = h * i;
            const double idp = mosfet_eval(p, vgs, vds + h).current[0];
            const double idm = mosfet_eval(p, vgs, vds - h).current[0];
            const double gds_fd = (idp - idm) / (2.0 * h);
            const double gds = mosfet_eval(p, vgs, vds).didv[0][0];
            CHECK(std::fabs(gds_fd - gds) <= 1e-3 * beta + 1e-2 * std::fabs(gds));
        }
    }
}

TEST_CASE("memristor null pulse is a no-op", "[devices]") {
    MemristorState s;
    s.resistance = 300e3;
    s.prior_resistance = 200e3;
    MemristorState after = memristor_write(s, 0.0, 1e-4);
    CHECK(after.resistance == s.resistance);
    CHECK(after.prior_resistance == s.prior_resistance);
}

TEST_CASE("repeated max-amplitude pulses clamp at r_min", "[devices]") {
    MemristorState s;
    s.resistance = 1e6;
    for (int i = 0; i < 20; ++i) s = memristor_write(s, -3.0, 500e-6);
    CHECK(s.resistance == Catch::Approx(s.r_min).epsilon(1e-12));
    s = memristor_write(s, -3.0, 500e-6);
    CHECK(s.resistance == Catch::Approx(s.r_min).epsilon(1e-12));
}

TEST_CASE("write then relax moves partway back", "[devices]") {
    MemristorState s;
    s.resistance = 100e3;
    s.prior_resistance = 100e3;
    s.relax_rate = 0.1;
    // drive exactly to 1 Mohm: one decade up
    const double duration = 1.0 / (s.write_rate * 2.0);
    s = memristor_write(s, 2.0, duration);
    CHECK(s.resistance == Catch::Approx(1e6).epsilon(1e-9));
    CHECK(s.prior_resistance == Catch::Approx(100e3).epsilon(1e-12));
    s = memristor_relax(s, 1.0);
    // closed form: log10(R) = 5 + 1*exp(-0.1)
    const double expected = std::pow(10.0, 5.0 + std::exp(-0.1));
    CHECK(s.resistance == Catch::Approx(expected).epsilon(1e-9));
    CHECK(s.resistance > 100e3);
    CHECK(s.resistance < 1e6);
    CHECK(std::fabs(s.resistance - 1e6) < std::fabs(s.resistance - 100e3));
}

TEST_CASE("write is reversible away from the clamps", "[devices][property]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> r0(3e5, 3e6);
    std::uniform_real_distribution<double> amp(0.5, 2.5);
    std::uniform_real_distribution<double> dur(1e-5, 2e-4);
    for (int i = 0; i < 50; ++i) {
        MemristorState s;
        s.resistance = r0(rng);
        const double start = s.resistance;
        const double a = amp(rng);
        const double d = dur(rng);
        MemristorState w = memristor_write(s, a, d);
        if (w.resistance >= s.r_max * 0.999 || w.resistance <= s.r_min * 1.001) continue;
        w = memristor_write(w, -a, d);
        CHECK(w.resistance == Catch::Approx(start).epsilon(0.01));
    }
}

TEST_CASE("read at 250 mV", "[devices]") {
    std::mt19937_64 rng(5);
    MemristorState s;
    s.resistance = 1e6;
    auto [i, after] = memristor_read(s, 0.25, rng);
    CHECK(i == 0.25 / 1e6);
    CHECK(after.resistance == s.resistance);

    s.telegraph = TelegraphParams{800e3, 1.2e6, 0.0};
    auto [i2, after2] = memristor_read(s, 0.25, rng);
    (void)i2;
    CHECK(after2.resistance == s.resistance);

    CHECK_THROWS_AS(memristor_read(s, 0.5, rng), SimError);
}

TEST_CASE("telegraph flip fraction follows switch_prob", "[devices]") {
    std::mt19937_64 rng(2024);
    MemristorState s;
    s.resistance = 1e6;
    s.telegraph = TelegraphParams{800e3, 1.2e6, 0.5};
    int flips = 0;
    const int reads = 10000;
    for (int k = 0; k < reads; ++k) {
        const double before = s.resistance;
        auto [i, after] = memristor_read(s, 0.25, rng);
        (void)i;
        if (after.resistance != before) ++flips;
        s = after;
    }
    const double frac = static_cast<double>(flips) / reads;
    CHECK(frac == Catch::Approx(0.5).margin(0.02));
}
