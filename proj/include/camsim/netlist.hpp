#pragma once

// Circuit graph: nodes, device instances, terminal bindings and sources.
// Ground is implicit node 0. A built Circuit is treated as immutable when
// shared; experiment drivers mutate private copies (value semantics).

#include "camsim/devices.hpp"
#include "camsim/errors.hpp"

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace camsim {

struct NodeId {
    int index = 0;

    [[nodiscard]] constexpr bool is_ground() const noexcept { return index == 0; }
    constexpr auto operator<=>(const NodeId&) const = default;
};

inline constexpr NodeId kGround{0};

enum class DeviceKind { Resistor, Mosfet, Memristor, VoltageSource, CurrentProbe };

inline constexpr int terminal_arity(DeviceKind k) {
    return k == DeviceKind::Mosfet ? 4 : 2;
}

inline const char* kind_name(DeviceKind k) {
    switch (k) {
        case DeviceKind::Resistor: return "resistor";
        case DeviceKind::Mosfet: return "mosfet";
        case DeviceKind::Memristor: return "memristor";
        case DeviceKind::VoltageSource: return "vsource";
        case DeviceKind::CurrentProbe: return "probe";
    }
    return "?";
}

struct ResistorParams {
    double resistance = 0.0;  // ohm
    bool operator==(const ResistorParams&) const = default;
};

struct SourceParams {
    double value = 0.0;  // V
    bool operator==(const SourceParams&) const = default;
};

struct ProbeParams {
    bool operator==(const ProbeParams&) const = default;
};

using DeviceParams =
    std::variant<ResistorParams, MosfetParams, MemristorState, SourceParams, ProbeParams>;

struct DeviceInstance {
    DeviceKind kind = DeviceKind::Resistor;
    std::string label;
    std::vector<NodeId> terminals;
    DeviceParams params;
    int branch = -1;  // MNA branch index for V-sources and probes

    bool operator==(const DeviceInstance&) const = default;
};

class Circuit {
public:
    Circuit() = default;

    // ---- nodes ----
    NodeId add_node() { return NodeId{node_count_++}; }

    [[nodiscard]] int node_count() const noexcept { return node_count_; }
    [[nodiscard]] int branch_count() const noexcept { return branch_count_; }
    [[nodiscard]] int system_size() const noexcept { return node_count_ - 1 + branch_count_; }

    // ---- devices ----
    Circuit& add_device(DeviceInstance inst) {
        if (label_to_index_.count(inst.label))
            raise(Errc::DuplicateLabel, "device label already used: " + inst.label);
        if (static_cast<int>(inst.terminals.size()) != terminal_arity(inst.kind))
            raise(Errc::BadArity, std::string(kind_name(inst.kind)) + " '" + inst.label +
                                      "' needs " + std::to_string(terminal_arity(inst.kind)) +
                                      " terminals");
        for (NodeId n : inst.terminals)
            if (n.index < 0 || n.index >= node_count_)
                raise(Errc::DanglingNode,
                      "device '" + inst.label + "' references unknown node " +
                          std::to_string(n.index));
        if (const auto* r = std::get_if<ResistorParams>(&inst.params)) {
            if (!(r->resistance > 0.0) || !std::isfinite(r->resistance))
                raise(Errc::NonPositiveResistance,
                      "resistor '" + inst.label + "' must have finite positive resistance");
        }
        if (const auto* m = std::get_if<MemristorState>(&inst.params)) validate(*m);
        if (const auto* f = std::get_if<MosfetParams>(&inst.params)) validate(*f);

        inst.branch = -1;
        if (inst.kind == DeviceKind::VoltageSource || inst.kind == DeviceKind::CurrentProbe)
            inst.branch = branch_count_++;
        label_to_index_[inst.label] = devices_.size();
        devices_.push_back(std::move(inst));
        return *this;
    }

    Circuit& add_resistor(std::string label, NodeId a, NodeId b, double ohms) {
        return add_device({DeviceKind::Resistor, std::move(label), {a, b},
                           ResistorParams{ohms}});
    }

    Circuit& add_memristor(std::string label, NodeId a, NodeId b, MemristorState s) {
        return add_device({DeviceKind::Memristor, std::move(label), {a, b}, std::move(s)});
    }

    Circuit& add_mosfet(std::string label, NodeId d, NodeId g, NodeId s, NodeId b,
                        MosfetParams p) {
        return add_device({DeviceKind::Mosfet, std::move(label), {d, g, s, b}, std::move(p)});
    }

    Circuit& add_vsource(std::string label, NodeId pos, NodeId neg, double volts) {
        return add_device({DeviceKind::VoltageSource, std::move(label), {pos, neg},
                           SourceParams{volts}});
    }

    /// 0 V source in series; its MNA branch current is the measurement.
    Circuit& add_probe(std::string label, NodeId pos, NodeId neg) {
        return add_device({DeviceKind::CurrentProbe, std::move(label), {pos, neg},
                           ProbeParams{}});
    }

    void remove_device(std::string_view label) {
        const std::size_t i = index_of(label);
        devices_.erase(devices_.begin() + static_cast<std::ptrdiff_t>(i));
        reindex();
    }

    [[nodiscard]] const std::vector<DeviceInstance>& devices() const noexcept {
        return devices_;
    }

    [[nodiscard]] bool has_device(std::string_view label) const {
        return label_to_index_.count(std::string(label)) != 0;
    }

    [[nodiscard]] const DeviceInstance& device(std::string_view label) const {
        return devices_[index_of(label)];
    }

    [[nodiscard]] DeviceInstance& device(std::string_view label) {
        return devices_[index_of(label)];
    }

    // ---- sources ----
    void set_source(std::string_view label, double volts) {
        DeviceInstance& d = source_device(label);
        std::get<SourceParams>(d.params).value = volts;
    }

    [[nodiscard]] double source(std::string_view label) const {
        return std::get<SourceParams>(source_device(label).params).value;
    }

    // ---- dynamic resistances (resistor- or memristor-backed) ----
    void set_resistance(std::string_view label, double ohms) {
        DeviceInstance& d = device(label);
        if (auto* r = std::get_if<ResistorParams>(&d.params)) {
            if (!(ohms > 0.0) || !std::isfinite(ohms))
                raise(Errc::NonPositiveResistance, "resistance must be finite and positive");
            r->resistance = ohms;
        } else if (auto* m = std::get_if<MemristorState>(&d.params)) {
            if (!(ohms >= m->r_min && ohms <= m->r_max))
                raise(Errc::NonPositiveResistance, "memristor state outside bounds");
            m->resistance = ohms;
        } else {
            raise(Errc::UnknownElement, "device '" + std::string(label) + "' has no resistance");
        }
    }

    [[nodiscard]] double resistance(std::string_view label) const {
        const DeviceInstance& d = device(label);
        if (const auto* r = std::get_if<ResistorParams>(&d.params)) return r->resistance;
        if (const auto* m = std::get_if<MemristorState>(&d.params)) return m->resistance;
        raise(Errc::UnknownElement, "device '" + std::string(label) + "' has no resistance");
    }

    template <class Fn>
    void for_each_mosfet(Fn&& fn) {
        for (auto& d : devices_)
            if (d.kind == DeviceKind::Mosfet) fn(d.label, std::get<MosfetParams>(d.params));
    }

    /// Structural validation: dense node binding plus a DC path from every
    /// node to ground (MOSFETs conduct drain-source only). Run before solves.
    void validate_connectivity() const {
        if (node_count_ <= 1 && devices_.empty()) return;
        std::vector<char> bound(static_cast<std::size_t>(node_count_), 0);
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(node_count_));
        auto link = [&](NodeId a, NodeId b) {
            adj[static_cast<std::size_t>(a.index)].push_back(b.index);
            adj[static_cast<std::size_t>(b.index)].push_back(a.index);
        };
        for (const auto& d : devices_) {
            for (NodeId n : d.terminals) bound[static_cast<std::size_t>(n.index)] = 1;
            if (d.kind == DeviceKind::Mosfet)
                link(d.terminals[0], d.terminals[2]);  // channel only
            else
                link(d.terminals[0], d.terminals[1]);
        }
        for (int i = 1; i < node_count_; ++i)
            if (!bound[static_cast<std::size_t>(i)])
                raise(Errc::UnboundNode, "node " + std::to_string(i) + " has no terminal");
        std::vector<char> seen(static_cast<std::size_t>(node_count_), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int n = stack.back();
            stack.pop_back();
            for (int m : adj[static_cast<std::size_t>(n)])
                if (!seen[static_cast<std::size_t>(m)]) {
                    seen[static_cast<std::size_t>(m)] = 1;
                    stack.push_back(m);
                }
        }
        for (int i = 1; i < node_count_; ++i)
            if (!seen[static_cast<std::size_t>(i)])
                raise(Errc::NoDcPath, "node " + std::to_string(i) + " has no DC path to ground");
    }

    bool operator==(const Circuit& o) const {
        return node_count_ == o.node_count_ && devices_ == o.devices_;
    }

private:
    [[nodiscard]] std::size_t index_of(std::string_view label) const {
        auto it = label_to_index_.find(std::string(label));
        if (it == label_to_index_.end())
            raise(Errc::UnknownDevice, "no device labeled '" + std::string(label) + "'");
        return it->second;
    }

    [[nodiscard]] const DeviceInstance& source_device(std::string_view label) const {
        auto it = label_to_index_.find(std::string(label));
        if (it == label_to_index_.end() ||
            devices_[it->second].kind != DeviceKind::VoltageSource)
            raise(Errc::UnknownSource, "no voltage source labeled '" + std::string(label) + "'");
        return devices_[it->second];
    }

    [[nodiscard]] DeviceInstance& source_device(std::string_view label) {
        return const_cast<DeviceInstance&>(std::as_const(*this).source_device(label));
    }

    void reindex() {
        label_to_index_.clear();
        branch_count_ = 0;
        for (std::size_t i = 0; i < devices_.size(); ++i) {
            label_to_index_[devices_[i].label] = i;
            devices_[i].branch = -1;
            if (devices_[i].kind == DeviceKind::VoltageSource ||
                devices_[i].kind == DeviceKind::CurrentProbe)
                devices_[i].branch = branch_count_++;
        }
    }

    int node_count_ = 1;  // ground pre-exists
    int branch_count_ = 0;
    std::vector<DeviceInstance> devices_;
    std::unordered_map<std::string, std::size_t> label_to_index_;
};

}  // namespace camsim
