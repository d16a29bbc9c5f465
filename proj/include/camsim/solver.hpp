#pragma once

// MNA solver: damped Newton-Raphson for DC operating points with a fixed
// homotopy ladder (plain Newton -> gmin stepping -> source stepping),
// warm-started DC sweeps, and fixed-step trapezoidal transient analysis.
//
// Unknown vector layout: [v(1..N-1), i_branch(0..B-1)]. Node 0 is ground.
// The dense direct solve is deliberate: cells here have ~15 nodes and the
// dense path doubles as the linear oracle in tests.

#include "camsim/devices.hpp"
#include "camsim/netlist.hpp"
#include "camsim/trace.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace camsim {

struct SolveOptions {
    double abs_tol_current = 1e-12;  // A, KCL residual bound
    double rel_tol_voltage = 1e-6;   // per-unknown update bound
    int max_iters = 200;
    double gmin_start = 1e-3;        // S
    double gmin_floor = 1e-12;       // S
    int source_steps = 10;
    double damping = 0.3;            // V, max voltage update per iteration
    double temperature_c = 25.0;
    double transient_dt = 1e-12;     // s, fixed step

    void check() const {
        if (!(abs_tol_current > 0.0 && rel_tol_voltage > 0.0 && transient_dt > 0.0))
            raise(Errc::Precondition, "solver tolerances must be strictly positive");
        if (!(gmin_floor < gmin_start))
            raise(Errc::Precondition, "gmin_floor must be below gmin_start");
    }
};

struct DcSolution {
    Eigen::VectorXd node_voltages;   // size node_count, [0] = 0
    Eigen::VectorXd branch_currents; // per V-source/probe branch index
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;           // max node KCL residual, A
    std::string stage;               // homotopy rung that produced the result

    [[nodiscard]] double voltage(NodeId n) const { return node_voltages[n.index]; }
};

/// Branch current through a voltage source or probe, by label.
inline double branch_current(const Circuit& c, const DcSolution& s, std::string_view label) {
    const DeviceInstance& d = c.device(label);
    if (d.branch < 0) raise(Errc::UnknownDevice, "device has no branch current");
    return s.branch_currents[d.branch];
}

struct TransientResult {
    std::vector<double> times;                  // s, uniform
    Eigen::MatrixXd node_voltages;              // row per step, col per node
    Eigen::MatrixXd branch_currents;            // row per step, col per branch
    std::vector<std::string> branch_labels;     // col -> source/probe label
};

/// Piecewise-linear waveform; constant extrapolation outside the points.
class Waveform {
public:
    Waveform() = default;
    static Waveform constant(double v) { return Waveform().add(0.0, v); }

    Waveform& add(double t, double v) {
        pts_.emplace_back(t, v);
        return *this;
    }

    [[nodiscard]] double at(double t) const {
        if (pts_.empty()) return 0.0;
        if (t <= pts_.front().first) return pts_.front().second;
        if (t >= pts_.back().first) return pts_.back().second;
        for (std::size_t i = 1; i < pts_.size(); ++i) {
            if (t <= pts_[i].first) {
                const auto [t0, v0] = pts_[i - 1];
                const auto [t1, v1] = pts_[i];
                if (t1 == t0) return v1;
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        return pts_.back().second;
    }

private:
    std::vector<std::pair<double, double>> pts_;
};

namespace detail {

struct CapCompanion {
    int node_a = -1;   // row of first terminal (-1 = ground)
    int node_b = -1;
    double c = 0.0;    // F
    double v_prev = 0.0;
    double i_prev = 0.0;
};

inline int row_of(NodeId n) { return n.index - 1; }

struct Mna {
    Eigen::MatrixXd jac;
    Eigen::VectorXd res;
    int n_nodes = 0;  // non-ground node count

    void reset(int nodes, int branches) {
        n_nodes = nodes;
        const int n = nodes + branches;
        jac.setZero(n, n);
        res.setZero(n);
    }
};

// Builds the Jacobian d(residual)/dx and the residual f(x). Node rows hold
// KCL (sum of currents leaving the node); branch rows hold the source
// voltage constraint. gmin adds a shunt to ground on every node row.
inline void stamp(const Circuit& c, const Eigen::VectorXd& x, double temperature_c,
                  double gmin, double source_scale,
                  const std::vector<CapCompanion>* caps, double dt, Mna& m) {
    const int nn = c.node_count() - 1;
    m.reset(nn, c.branch_count());

    auto v_of = [&](NodeId n) { return n.is_ground() ? 0.0 : x[row_of(n)]; };
    auto add_j = [&](int r, int col, double g) {
        if (r >= 0 && col >= 0) m.jac(r, col) += g;
    };
    auto add_f = [&](int r, double i) {
        if (r >= 0) m.res(r) += i;
    };

    for (const auto& d : c.devices()) {
        switch (d.kind) {
            case DeviceKind::Resistor:
            case DeviceKind::Memristor: {
                const double r_ohm = (d.kind == DeviceKind::Resistor)
                                         ? std::get<ResistorParams>(d.params).resistance
                                         : std::get<MemristorState>(d.params).resistance;
                const double g = 1.0 / r_ohm;
                const int ra = row_of(d.terminals[0]);
                const int rb = row_of(d.terminals[1]);
                const double i = g * (v_of(d.terminals[0]) - v_of(d.terminals[1]));
                add_j(ra, ra, g);
                add_j(rb, rb, g);
                add_j(ra, rb, -g);
                add_j(rb, ra, -g);
                add_f(ra, i);
                add_f(rb, -i);
                break;
            }
            case DeviceKind::VoltageSource:
            case DeviceKind::CurrentProbe: {
                const double value =
                    (d.kind == DeviceKind::VoltageSource)
                        ? std::get<SourceParams>(d.params).value * source_scale
                        : 0.0;
                const int rp = row_of(d.terminals[0]);
                const int rn = row_of(d.terminals[1]);
                const int rb = m.n_nodes + d.branch;
                add_j(rp, rb, 1.0);
                add_j(rn, rb, -1.0);
                add_j(rb, rp, 1.0);
                add_j(rb, rn, -1.0);
                const double ib = x[rb];
                add_f(rp, ib);
                add_f(rn, -ib);
                m.res(rb) += v_of(d.terminals[0]) - v_of(d.terminals[1]) - value;
                break;
            }
            case DeviceKind::Mosfet: {
                const auto& p = std::get<MosfetParams>(d.params);
                const double vg = v_of(d.terminals[1]);
                const double vs = v_of(d.terminals[2]);
                const double vd = v_of(d.terminals[0]);
                const DeviceEval e = mosfet_eval(p, vg - vs, vd - vs, temperature_c);
                const int rows[4] = {row_of(d.terminals[0]), row_of(d.terminals[1]),
                                     row_of(d.terminals[2]), row_of(d.terminals[3])};
                for (int t = 0; t < 4; ++t) {
                    add_f(rows[t], e.current[static_cast<std::size_t>(t)]);
                    for (int u = 0; u < 4; ++u)
                        add_j(rows[t], rows[u],
                              e.didv[static_cast<std::size_t>(t)][static_cast<std::size_t>(u)]);
                }
                break;
            }
        }
    }

    if (caps && dt > 0.0) {
        for (const auto& cc : *caps) {
            if (cc.c <= 0.0) continue;
            const double g_eq = 2.0 * cc.c / dt;
            const double va = cc.node_a >= 0 ? x[cc.node_a] : 0.0;
            const double vb = cc.node_b >= 0 ? x[cc.node_b] : 0.0;
            const double i = g_eq * ((va - vb) - cc.v_prev) - cc.i_prev;
            add_j(cc.node_a, cc.node_a, g_eq);
            add_j(cc.node_b, cc.node_b, g_eq);
            add_j(cc.node_a, cc.node_b, -g_eq);
            add_j(cc.node_b, cc.node_a, -g_eq);
            add_f(cc.node_a, i);
            add_f(cc.node_b, -i);
        }
    }

    if (gmin > 0.0) {
        for (int r = 0; r < m.n_nodes; ++r) {
            m.jac(r, r) += gmin;
            m.res(r) += gmin * x[r];
        }
    }
}

struct NewtonOutcome {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

inline NewtonOutcome newton(const Circuit& c, Eigen::VectorXd& x, const SolveOptions& opt,
                            double gmin, double source_scale,
                            const std::vector<CapCompanion>* caps, double dt, Mna& m) {
    const int nn = c.node_count() - 1;
    NewtonOutcome out;
    bool dx_small = false;
    for (int iter = 0; iter < opt.max_iters; ++iter) {
        stamp(c, x, opt.temperature_c, gmin, source_scale, caps, dt, m);
        double r_node = 0.0, r_branch = 0.0;
        for (int i = 0; i < nn; ++i) r_node = std::max(r_node, std::fabs(m.res(i)));
        for (int i = nn; i < m.res.size(); ++i)
            r_branch = std::max(r_branch, std::fabs(m.res(i)));
        out.residual = std::max(r_node, r_branch);  // diagnostic: both row kinds
        out.iterations = iter;
        if (!std::isfinite(r_node)) return out;
        if (dx_small && r_node < opt.abs_tol_current && r_branch < 1e-9) {
            out.converged = true;
            return out;
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(m.jac);
        if (!lu.isInvertible())
            raise(Errc::SingularMatrix, "MNA matrix is singular (structural defect?)");
        Eigen::VectorXd dx = lu.solve(-m.res);

        double dv_max = 0.0;
        for (int i = 0; i < nn; ++i) dv_max = std::max(dv_max, std::fabs(dx[i]));
        if (dv_max > opt.damping) dx *= opt.damping / dv_max;

        x += dx;
        dx_small = true;
        for (int i = 0; i < nn; ++i) {
            if (std::fabs(dx[i]) > opt.rel_tol_voltage * std::max(1.0, std::fabs(x[i]))) {
                dx_small = false;
                break;
            }
        }
    }
    return out;
}

}  // namespace detail

/// Fresh per-node KCL residual of a candidate solution (no gmin, no damping
/// state): the convergence audit used by tests and diagnostics.
inline Eigen::VectorXd kcl_residual(const Circuit& c, const Eigen::VectorXd& x,
                                    double temperature_c = 25.0) {
    detail::Mna m;
    detail::stamp(c, x, temperature_c, 0.0, 1.0, nullptr, 0.0, m);
    return m.res.head(c.node_count() - 1);
}

inline DcSolution dc_solve(const Circuit& c, const SolveOptions& opt = {},
                           const Eigen::VectorXd* initial_guess = nullptr) {
    opt.check();
    c.validate_connectivity();
    const int n = c.system_size();
    DcSolution sol;
    sol.node_voltages.setZero(c.node_count());
    sol.branch_currents.setZero(c.branch_count());
    if (n == 0) {
        sol.converged = true;
        sol.stage = "empty";
        return sol;
    }

    detail::Mna m;
    Eigen::VectorXd x0 = (initial_guess && initial_guess->size() == n)
                             ? *initial_guess
                             : Eigen::VectorXd::Zero(n);

    Eigen::VectorXd best_x = x0;
    double best_res = std::numeric_limits<double>::infinity();
    int total_iters = 0;
    auto track = [&](const Eigen::VectorXd& x, const detail::NewtonOutcome& o) {
        total_iters += o.iterations;
        if (o.residual < best_res) {
            best_res = o.residual;
            best_x = x;
        }
        return o.converged;
    };

    Eigen::VectorXd x = x0;
    bool ok = false;
    std::string stage;

    {  // rung 1: plain Newton
        auto o = detail::newton(c, x, opt, 0.0, 1.0, nullptr, 0.0, m);
        ok = track(x, o);
        stage = "newton";
    }
    if (!ok) {  // rung 2: gmin stepping, then a clean polish without gmin
        x = x0;
        bool ladder_ok = true;
        for (double g = opt.gmin_start; g >= opt.gmin_floor; g /= 10.0) {
            auto o = detail::newton(c, x, opt, g, 1.0, nullptr, 0.0, m);
            if (!o.converged) {
                ladder_ok = false;
                break;
            }
        }
        if (ladder_ok) {
            auto o = detail::newton(c, x, opt, 0.0, 1.0, nullptr, 0.0, m);
            ok = track(x, o);
        }
        stage = "gmin";
    }
    if (!ok) {  // rung 3: source stepping from a dead circuit
        x.setZero(n);
        bool ramp_ok = true;
        for (int k = 1; k <= opt.source_steps; ++k) {
            const double scale = static_cast<double>(k) / opt.source_steps;
            auto o = detail::newton(c, x, opt, 0.0, scale, nullptr, 0.0, m);
            if (!o.converged) {
                ramp_ok = false;
                break;
            }
        }
        if (ramp_ok) {
            auto o = detail::newton(c, x, opt, 0.0, 1.0, nullptr, 0.0, m);
            ok = track(x, o);
        }
        stage = "source";
    }

    const Eigen::VectorXd& xf = ok ? x : best_x;
    sol.converged = ok;
    sol.iterations = total_iters;
    sol.stage = ok ? stage : "exhausted";
    const int nn = c.node_count() - 1;
    for (int i = 0; i < nn; ++i) sol.node_voltages[i + 1] = xf[i];
    for (int b = 0; b < c.branch_count(); ++b) sol.branch_currents[b] = xf[nn + b];
    sol.residual = ok ? kcl_residual(c, xf, opt.temperature_c).cwiseAbs().maxCoeff()
                      : best_res;
    return sol;
}

/// Warm-started sweep of one source; y is the current through the circuit's
/// current probe (the first one, and there must be one).
inline Trace dc_sweep(const Circuit& circuit, std::string_view source_label, double start,
                      double stop, int samples, const SolveOptions& opt = {}) {
    if (samples < 2) raise(Errc::Precondition, "sweep needs at least 2 samples");
    const DeviceInstance* probe = nullptr;
    for (const auto& d : circuit.devices())
        if (d.kind == DeviceKind::CurrentProbe) {
            probe = &d;
            break;
        }
    if (!probe) raise(Errc::ProbeMissing, "sweep needs a current probe in the circuit");

    Circuit c = circuit;
    (void)c.source(source_label);  // raises UnknownSource early

    Trace t;
    t.x.resize(static_cast<std::size_t>(samples));
    t.y.resize(static_cast<std::size_t>(samples));

    Eigen::VectorXd guess;
    const Eigen::VectorXd* guess_ptr = nullptr;
    for (int i = 0; i < samples; ++i) {
        const double v = start + (stop - start) * static_cast<double>(i) /
                                     static_cast<double>(samples - 1);
        c.set_source(source_label, v);
        DcSolution s = dc_solve(c, opt, guess_ptr);
        if (!s.converged) {
            char detail[128];
            std::snprintf(detail, sizeof(detail),
                          "sweep point %d (V=%.6g) did not converge; stage=%s residual=%.3e",
                          i, v, s.stage.c_str(), s.residual);
            raise(Errc::NoConvergence, detail);
        }
        t.x[static_cast<std::size_t>(i)] = v;
        t.y[static_cast<std::size_t>(i)] = s.branch_currents[probe->branch];

        const int nn = c.node_count() - 1;
        guess.resize(c.system_size());
        for (int k = 0; k < nn; ++k) guess[k] = s.node_voltages[k + 1];
        for (int b = 0; b < c.branch_count(); ++b) guess[nn + b] = s.branch_currents[b];
        guess_ptr = &guess;
    }
    return t;
}

/// Fixed-step transient with trapezoidal integration of the MOSFET gate
/// capacitances. Initial condition is the DC solution at the t=0 stimuli.
inline TransientResult transient(const Circuit& circuit,
                                 const std::map<std::string, Waveform>& stimuli,
                                 double t_stop, double dt, const SolveOptions& opt = {}) {
    if (!(dt > 0.0) || !(t_stop >= 0.0)) raise(Errc::Precondition, "need dt > 0, t_stop >= 0");
    Circuit c = circuit;
    for (const auto& [label, wf] : stimuli) {
        (void)wf;
        (void)c.source(label);  // raises UnknownSource for bad labels
    }

    // gate-source capacitance companions
    std::vector<detail::CapCompanion> caps;
    for (const auto& d : c.devices()) {
        if (d.kind != DeviceKind::Mosfet) continue;
        const auto& p = std::get<MosfetParams>(d.params);
        if (p.cap_gate <= 0.0) continue;
        detail::CapCompanion cc;
        cc.node_a = detail::row_of(d.terminals[1]);  // gate
        cc.node_b = detail::row_of(d.terminals[2]);  // source
        cc.c = p.cap_gate;
        caps.push_back(cc);
    }

    const int steps = static_cast<int>(std::llround(t_stop / dt));
    const int nn = c.node_count() - 1;
    TransientResult out;
    out.times.resize(static_cast<std::size_t>(steps) + 1);
    out.node_voltages.setZero(steps + 1, c.node_count());
    out.branch_currents.setZero(steps + 1, c.branch_count());
    out.branch_labels.resize(static_cast<std::size_t>(c.branch_count()));
    for (const auto& d : c.devices())
        if (d.branch >= 0) out.branch_labels[static_cast<std::size_t>(d.branch)] = d.label;

    auto apply_stimuli = [&](double t) {
        for (const auto& [label, wf] : stimuli) c.set_source(label, wf.at(t));
    };

    apply_stimuli(0.0);
    DcSolution s0 = dc_solve(c, opt);
    if (!s0.converged) raise(Errc::NoConvergence, "transient initial DC point did not converge");

    Eigen::VectorXd x(c.system_size());
    for (int k = 0; k < nn; ++k) x[k] = s0.node_voltages[k + 1];
    for (int b = 0; b < c.branch_count(); ++b) x[nn + b] = s0.branch_currents[b];

    auto record = [&](int step) {
        out.times[static_cast<std::size_t>(step)] = static_cast<double>(step) * dt;
        out.node_voltages(step, 0) = 0.0;
        for (int k = 0; k < nn; ++k) out.node_voltages(step, k + 1) = x[k];
        for (int b = 0; b < c.branch_count(); ++b) out.branch_currents(step, b) = x[nn + b];
    };
    auto cap_voltage = [&](const detail::CapCompanion& cc) {
        const double va = cc.node_a >= 0 ? x[cc.node_a] : 0.0;
        const double vb = cc.node_b >= 0 ? x[cc.node_b] : 0.0;
        return va - vb;
    };

    for (auto& cc : caps) {
        cc.v_prev = cap_voltage(cc);
        cc.i_prev = 0.0;  // steady state at t=0
    }
    record(0);

    detail::Mna m;
    for (int step = 1; step <= steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        apply_stimuli(t);
        auto o = detail::newton(c, x, opt, 0.0, 1.0, &caps, dt, m);
        if (!o.converged) {
            // one gmin rescue, then give up with the failing timestamp
            for (double g = opt.gmin_start; g >= opt.gmin_floor; g /= 10.0)
                detail::newton(c, x, opt, g, 1.0, &caps, dt, m);
            o = detail::newton(c, x, opt, 0.0, 1.0, &caps, dt, m);
            if (!o.converged)
                raise(Errc::NoConvergence,
                      "transient step at t=" + std::to_string(t) + " s did not converge");
        }
        for (auto& cc : caps) {
            const double v = cap_voltage(cc);
            const double i = 2.0 * cc.c / dt * (v - cc.v_prev) - cc.i_prev;
            cc.v_prev = v;
            cc.i_prev = i;
        }
        record(step);
    }
    return out;
}

}  // namespace camsim
