#pragma once

// Device constitutive equations: a smooth single-expression MOSFET compact
// model with analytic derivatives, and a behavioral memristor with pulse
// programming, relaxation and telegraph noise.

#include "camsim/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

namespace camsim {

inline constexpr double kBoltzmannOverQ = 8.617333262e-5;  // V/K
inline constexpr double kZeroCelsius = 273.15;             // K

enum class Polarity { N, P };

struct MosfetParams {
    Polarity polarity = Polarity::N;
    double width = 220e-9;             // m
    double length = 180e-9;            // m
    double vth0 = 0.45;                // V (negative for PMOS)
    double kp = 300e-6;                // A/V^2 per square, scaled by W/L
    double lambda = 0.06;              // 1/V channel-length modulation
    double n_slope = 1.35;             // subthreshold slope factor
    double cap_gate = 0.0;             // F, lumped gate-source capacitance
    double temp_coeff_vth = 0.7e-3;    // V/degC threshold magnitude drop
    double temp_exp_mobility = 1.5;    // mobility ~ T^-x
    double min_width = 0.0;            // process minimum, m
    double min_length = 0.0;           // process minimum, m

    bool operator==(const MosfetParams&) const = default;
};

inline void validate(const MosfetParams& p) {
    if (p.width < p.min_width || p.length < p.min_length)
        raise(Errc::InvalidVariant, "mosfet geometry below process minimum");
    if (!(p.kp > 0.0)) raise(Errc::InvalidVariant, "mosfet kp must be positive");
    if (!(p.n_slope >= 1.0)) raise(Errc::InvalidVariant, "mosfet n_slope must be >= 1");
    if (!(p.cap_gate >= 0.0)) raise(Errc::InvalidVariant, "mosfet cap_gate must be >= 0");
}

// Default parameter sets. Geometry is the anchored part; the electrical
// values are documented calibration knobs, overridable from config.
namespace process {

inline constexpr double kOxideCapPerArea = 8.5e-3;  // F/m^2, 180nm-class

inline double gate_cap(double w, double l) { return w * l * kOxideCapPerArea; }

/// SSM6L36TU-class small-signal FETs used on the PCB models.
inline MosfetParams discrete_nmos() {
    MosfetParams p;
    p.polarity = Polarity::N;
    p.width = 100e-6;
    p.length = 1e-6;
    p.vth0 = 0.8;
    p.kp = 20e-6;
    p.lambda = 0.01;
    p.n_slope = 1.8;
    p.cap_gate = gate_cap(p.width, p.length);
    return p;
}

inline MosfetParams discrete_pmos() {
    MosfetParams p = discrete_nmos();
    p.polarity = Polarity::P;
    p.vth0 = -0.8;
    p.kp = 8e-6;
    return p;
}

/// Generic 1.8 V 180nm-class device; geometry per instance.
inline MosfetParams generic180_nmos(double w = 220e-9, double l = 180e-9) {
    MosfetParams p;
    p.polarity = Polarity::N;
    p.width = w;
    p.length = l;
    p.vth0 = 0.45;
    p.kp = 300e-6;
    p.lambda = 0.06;
    p.n_slope = 1.35;
    p.cap_gate = gate_cap(w, l);
    p.min_width = 220e-9;
    p.min_length = 180e-9;
    return p;
}

inline MosfetParams generic180_pmos(double w = 220e-9, double l = 180e-9) {
    MosfetParams p = generic180_nmos(w, l);
    p.polarity = Polarity::P;
    p.vth0 = -0.45;
    p.kp = 70e-6;
    p.n_slope = 1.4;
    return p;
}

/// Low-threshold native NMOS (wider minimum geometry).
inline MosfetParams generic180_native_nmos() {
    MosfetParams p = generic180_nmos(420e-9, 500e-9);
    p.vth0 = 0.05;
    p.lambda = 0.03;
    p.min_width = 420e-9;
    p.min_length = 500e-9;
    return p;
}

}  // namespace process

/// Per-terminal currents and dI/dV entries for MNA stamping.
struct DeviceEval {
    int terminal_count = 0;
    std::array<double, 4> current{};                  // A
    std::array<std::array<double, 4>, 4> didv{};      // didv[t][u] = dI_t/dV_u
};

namespace detail {

// softplus scaled so that q(u) -> u for u >> s and -> s*exp(u/s) for u << -s
inline double soft_charge(double u, double s) {
    const double r = u / s;
    if (r > 40.0) return u;
    if (r < -40.0) return s * std::exp(r);
    return s * std::log1p(std::exp(r));
}

inline double logistic(double u, double s) {
    const double r = u / s;
    if (r > 40.0) return 1.0;
    if (r < -40.0) return std::exp(r);
    const double e = std::exp(-r);
    return 1.0 / (1.0 + e);
}

}  // namespace detail

/// Drain current and conductances of the smooth compact model.
///
/// A charge-interpolation expression covering subthreshold through strong
/// inversion with one formula:
///   q(u)  = s*ln(1 + e^(u/s)),  s = 2*n*Vt
///   Id    = (beta/2) * (q(Vgs-Vth)^2 - q(Vgs-Vth-Vds)^2) * (1 + lambda*|Vds|_eps)
/// In strong inversion this limits to the level-1 square law exactly; the
/// subthreshold limit is exponential with slope factor n. Antisymmetric in
/// drain/source exchange, C1-continuous everywhere. PMOS is evaluated by
/// polarity reflection. Terminal order: drain, gate, source, body.
inline DeviceEval mosfet_eval(const MosfetParams& p, double v_gs, double v_ds,
                              double temperature_c = 25.0) {
    if (!std::isfinite(v_gs) || !std::isfinite(v_ds) || !std::isfinite(temperature_c))
        raise(Errc::NonFiniteInput, "mosfet_eval bias not finite");

    const double sign = (p.polarity == Polarity::N) ? 1.0 : -1.0;
    const double vgs = sign * v_gs;
    const double vds = sign * v_ds;

    const double t_kelvin = temperature_c + kZeroCelsius;
    const double vt = kBoltzmannOverQ * t_kelvin;
    const double vth = std::fabs(p.vth0) - p.temp_coeff_vth * (temperature_c - 25.0);
    const double beta = p.kp * (p.width / p.length) *
                        std::pow(t_kelvin / (25.0 + kZeroCelsius), -p.temp_exp_mobility);

    const double s = 2.0 * p.n_slope * vt;
    const double q1 = detail::soft_charge(vgs - vth, s);
    const double q2 = detail::soft_charge(vgs - vth - vds, s);
    const double dq1 = detail::logistic(vgs - vth, s);
    const double dq2 = detail::logistic(vgs - vth - vds, s);

    const double core = 0.5 * beta * (q1 * q1 - q2 * q2);
    // smooth |Vds| keeps channel-length modulation antisymmetric and C1 at 0
    constexpr double eps = 1e-3;
    const double vabs = std::sqrt(vds * vds + eps * eps) - eps;
    const double clm = 1.0 + p.lambda * vabs;
    const double dclm = p.lambda * vds / std::sqrt(vds * vds + eps * eps);

    const double id_n = core * clm;
    const double gm_n = beta * (q1 * dq1 - q2 * dq2) * clm;
    const double gds_n = beta * q2 * dq2 * clm + core * dclm;

    // Reflection back: Id = sign * id_n(sign*v), so dId/dVgs and dId/dVds
    // pick up sign^2 = +1.
    const double id = sign * id_n;
    const double gm = gm_n;
    const double gds = gds_n;

    DeviceEval e;
    e.terminal_count = 4;
    e.current = {id, 0.0, -id, 0.0};
    // rows: D,G,S,B x cols: D,G,S,B
    e.didv[0] = {gds, gm, -(gm + gds), 0.0};
    e.didv[2] = {-gds, -gm, gm + gds, 0.0};
    return e;
}

/// Max relative error between analytic conductances and central finite
/// differences at one operating point. Solver-correctness guard.
inline double mosfet_jacobian_check(const MosfetParams& p, double v_gs, double v_ds,
                                    double temperature_c = 25.0) {
    constexpr double h = 1e-6;
    const DeviceEval e = mosfet_eval(p, v_gs, v_ds, temperature_c);
    const double gm = e.didv[0][1];
    const double gds = e.didv[0][0];

    const double id_gp = mosfet_eval(p, v_gs + h, v_ds, temperature_c).current[0];
    const double id_gm = mosfet_eval(p, v_gs - h, v_ds, temperature_c).current[0];
    const double id_dp = mosfet_eval(p, v_gs, v_ds + h, temperature_c).current[0];
    const double id_dm = mosfet_eval(p, v_gs, v_ds - h, temperature_c).current[0];

    const double gm_fd = (id_gp - id_gm) / (2.0 * h);
    const double gds_fd = (id_dp - id_dm) / (2.0 * h);

    const double floor_g = 1e-15;
    const double err_gm = std::fabs(gm - gm_fd) / std::max(std::fabs(gm_fd), floor_g);
    const double err_gds = std::fabs(gds - gds_fd) / std::max(std::fabs(gds_fd), floor_g);
    return std::max(err_gm, err_gds);
}

// --------------------------------------------------------------------------
// Memristor behavioral model
// --------------------------------------------------------------------------

struct TelegraphParams {
    double r_a = 0.0;         // ohm
    double r_b = 0.0;         // ohm
    double switch_prob = 0.0; // per read

    bool operator==(const TelegraphParams&) const = default;
};

struct MemristorState {
    double resistance = 1e6;        // ohm
    double prior_resistance = 1e6;  // ohm, relaxation target
    double r_min = 100e3;           // ohm
    double r_max = 10e6;            // ohm
    double relax_rate = 0.0;        // 1/s, decay of log-R toward prior
    double write_rate = 2000.0;     // decades of log10(R) per volt-second
    std::optional<TelegraphParams> telegraph;

    bool operator==(const MemristorState&) const = default;
};

inline void validate(const MemristorState& s) {
    if (!(s.r_min > 0.0 && s.r_max >= s.r_min))
        raise(Errc::InvalidVariant, "memristor bounds must satisfy 0 < r_min <= r_max");
    if (!(s.resistance >= s.r_min && s.resistance <= s.r_max))
        raise(Errc::NonPositiveResistance, "memristor resistance outside [r_min, r_max]");
    if (s.telegraph) {
        const auto& t = *s.telegraph;
        if (t.r_a < s.r_min || t.r_a > s.r_max || t.r_b < s.r_min || t.r_b > s.r_max)
            raise(Errc::InvalidVariant, "telegraph states outside [r_min, r_max]");
    }
}

/// Programming pulse. Positive amplitude raises resistance: log10(R) moves
/// by write_rate * amplitude * duration, clamped to [r_min, r_max].
inline MemristorState memristor_write(MemristorState s, double amplitude_v,
                                      double duration_s) {
    if (!(duration_s > 0.0)) raise(Errc::Precondition, "write duration must be > 0");
    if (amplitude_v == 0.0) return s;
    const double pre = s.resistance;
    double logr = std::log10(s.resistance) + s.write_rate * amplitude_v * duration_s;
    logr = std::clamp(logr, std::log10(s.r_min), std::log10(s.r_max));
    s.prior_resistance = pre;
    s.resistance = std::pow(10.0, logr);
    return s;
}

/// Exponential decay of log10(R) toward the pre-write state.
inline MemristorState memristor_relax(MemristorState s, double dt_s) {
    if (dt_s <= 0.0 || s.relax_rate <= 0.0) return s;
    const double lp = std::log10(s.prior_resistance);
    const double lr = std::log10(s.resistance);
    const double l = lp + (lr - lp) * std::exp(-s.relax_rate * dt_s);
    s.resistance = std::clamp(std::pow(10.0, l), s.r_min, s.r_max);
    return s;
}

/// Non-disturbing read. Telegraph noise (when configured) may flip the state
/// between its two levels before the current is taken.
template <class Urbg>
inline std::pair<double, MemristorState> memristor_read(MemristorState s, double v_read,
                                                        Urbg& rng,
                                                        double read_limit = 0.3) {
    if (std::fabs(v_read) > read_limit)
        raise(Errc::Precondition, "read voltage outside non-disturbing regime");
    if (s.telegraph && s.telegraph->switch_prob > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < s.telegraph->switch_prob) {
            const auto& t = *s.telegraph;
            // snap to the nearer level, then toggle
            const double da = std::fabs(std::log10(s.resistance) - std::log10(t.r_a));
            const double db = std::fabs(std::log10(s.resistance) - std::log10(t.r_b));
            s.resistance = (da <= db) ? t.r_b : t.r_a;
        }
    }
    return {v_read / s.resistance, s};
}

}  // namespace camsim
