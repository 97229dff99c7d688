#include "pneulogic/stdcells.hpp"

#include <algorithm>
#include <set>

#include "pneulogic/error.hpp"

namespace pneulogic {

Defaults CellParams::resolve(const Defaults& base) const {
    Defaults d = base;
    if (g_pullup) d.g_pullup = *g_pullup;
    if (g_open) d.g_open = *g_open;
    if (capacitance) d.capacitance = *capacitance;
    if (theta_open) d.theta_open = *theta_open;
    if (theta_close) d.theta_close = *theta_close;
    return d;
}

namespace {

void require_distinct(std::initializer_list<const std::string*> ports, const NetlistBuilder& b) {
    std::set<std::string> seen;
    for (const std::string* p : ports) {
        if (p->empty()) {
            throw NetlistError("cell port left unbound");
        }
        if (*p == b.vacuum_id() || *p == b.atmosphere_id()) {
            continue;
        }
        if (!seen.insert(*p).second) {
            throw NetlistError("port collision on node '" + *p + "'");
        }
    }
}

void require_not_rail(const NetlistBuilder& b, const std::string& id, const char* what) {
    if (id == b.vacuum_id() || id == b.atmosphere_id()) {
        throw NetlistError(std::string(what) + " cannot be a rail ('" + id + "')");
    }
}

Valve pulldown(std::string id, const std::string& gate, const std::string& src, const std::string& drn,
               const Defaults& d) {
    Valve v;
    v.id = std::move(id);
    v.gate = gate;
    v.source = src;
    v.drain = drn;
    v.g_open = d.g_open;
    v.theta_open = d.theta_open;
    v.theta_close = d.theta_close;
    return v;
}

}  // namespace

void add_not(NetlistBuilder& b, const std::string& in, const std::string& out, const Defaults& d) {
    require_distinct({&in, &out}, b);
    require_not_rail(b, out, "NOT output");
    b.ensure_node(in, d.capacitance);
    b.ensure_node(out, d.capacitance);
    b.add_channel(b.vacuum_id(), out, d.g_pullup);
    b.add_valve(pulldown(out + ".pd", in, out, b.atmosphere_id(), d));
}

void add_nand(NetlistBuilder& b, std::span<const std::string> inputs, const std::string& out, const Defaults& d) {
    const int k = static_cast<int>(inputs.size());
    if (k < 2 || k > kMaxNandFanin) {
        throw NetlistError("invalid NAND fan-in " + std::to_string(k) + " (device supports 2.." +
                           std::to_string(kMaxNandFanin) + ")");
    }
    std::set<std::string> seen{out};
    for (const std::string& in : inputs) {
        if (in == b.vacuum_id() || in == b.atmosphere_id()) {
            continue;
        }
        if (!seen.insert(in).second) {
            throw NetlistError("port collision on node '" + in + "'");
        }
    }
    require_not_rail(b, out, "NAND output");
    b.ensure_node(out, d.capacitance);
    for (const std::string& in : inputs) {
        b.ensure_node(in, d.capacitance);
    }
    b.add_channel(b.vacuum_id(), out, d.g_pullup);
    std::string upper = out;
    for (int i = 0; i < k; ++i) {
        std::string lower = i + 1 == k ? b.atmosphere_id() : out + ".s" + std::to_string(i + 1);
        if (i + 1 < k) {
            b.add_node(lower, d.capacitance);
        }
        b.add_valve(pulldown(out + ".pd" + std::to_string(i), inputs[i], upper, lower, d));
        upper = lower;
    }
}

void add_buf(NetlistBuilder& b, const std::string& in, const std::string& out, const Defaults& d) {
    require_distinct({&in, &out}, b);
    add_not(b, in, out + ".n", d);
    add_not(b, out + ".n", out, d);
}

void add_indicator(NetlistBuilder& b, const std::string& signal, const std::string& out, const Defaults& d) {
    add_not(b, signal, out, d);
    b.add_probe(Probe::Kind::Node, out);
    b.add_probe(Probe::Kind::Valve, out + ".pd");
}

DffNodes dff_nodes(const DffPorts& ports) {
    return DffNodes{ports.q + ".L", ports.q + ".Lr", ports.q + ".F", ports.clk_inv.value_or(ports.q + ".clkn")};
}

void add_dff(NetlistBuilder& b, const DffPorts& ports, const Defaults& d) {
    const DffNodes n = dff_nodes(ports);
    if (ports.clk_inv) {
        require_distinct({&ports.d, &ports.clk, &ports.q, &ports.qbar, &*ports.clk_inv}, b);
    } else {
        require_distinct({&ports.d, &ports.clk, &ports.q, &ports.qbar}, b);
    }
    require_not_rail(b, ports.q, "DFF q");
    require_not_rail(b, ports.qbar, "DFF qbar");
    b.ensure_node(ports.d, d.capacitance);
    b.ensure_node(ports.clk, d.capacitance);
    if (!ports.clk_inv) {
        add_not(b, ports.clk, n.clk_inv, d);
    }
    b.ensure_node(n.clk_inv, d.capacitance);
    b.add_node(n.leader, d.capacitance);
    b.add_node(n.follower, d.capacitance);

    // Leader: transparent while clk is high.
    b.add_valve(pulldown(ports.q + ".lead", ports.clk, ports.d, n.leader, d));
    add_not(b, n.leader, ports.q + ".Lb", d);
    add_not(b, ports.q + ".Lb", n.restored, d);
    // Follower: transparent while clk is low, so q moves on the falling edge.
    b.add_valve(pulldown(ports.q + ".follow", n.clk_inv, n.restored, n.follower, d));
    add_not(b, n.follower, ports.qbar, d);
    add_not(b, ports.qbar, ports.q, d);
}

int ring_tap_stage(int stages, int tap) {
    return (2 * tap) % stages;
}

void add_ring_osc(NetlistBuilder& b, int stages, std::span<const std::string> taps, const std::string& name,
                  const Defaults& d) {
    if (stages < 3 || stages % 2 == 0) {
        throw NetlistError("ring oscillator needs an odd stage count >= 3, got " + std::to_string(stages));
    }
    if (static_cast<int>(taps.size()) > stages) {
        throw NetlistError("ring oscillator has more taps than stages");
    }
    const std::string base = !name.empty() ? name : taps.empty() ? std::string("ring") : taps.front();
    std::vector<std::string> stage(stages);
    for (int k = 0; k < stages; ++k) {
        stage[k] = base + ".st" + std::to_string(k);
    }
    for (int i = 0; i < static_cast<int>(taps.size()); ++i) {
        stage[ring_tap_stage(stages, i)] = taps[i];
    }
    std::set<std::string> seen;
    for (const std::string& s : stage) {
        require_not_rail(b, s, "ring stage");
        if (!seen.insert(s).second) {
            throw NetlistError("port collision on node '" + s + "'");
        }
        if (b.has_node(s)) {
            continue;
        }
        const int k = static_cast<int>(&s - stage.data());
        b.add_node(s, d.capacitance, k % 2 == 0 ? kVacuumPressure : kAtmospherePressure);
    }
    for (int k = 0; k < stages; ++k) {
        add_not(b, stage[(k + stages - 1) % stages], stage[k], d);
    }
}

ButtonPorts button_ports(const std::string& out) {
    return ButtonPorts{out, out + ".port", out + ".short"};
}

ButtonPorts add_button(NetlistBuilder& b, const std::string& out, const Defaults& d) {
    require_not_rail(b, out, "BUTTON output");
    ButtonPorts p = button_ports(out);
    b.ensure_node(out, d.capacitance);
    // The port node starts uncovered (open to atmosphere).
    b.add_node(p.control, d.capacitance, kVacuumPressure);
    b.add_channel(b.vacuum_id(), out, d.g_pullup);
    b.add_valve(pulldown(p.valve, p.control, out, b.atmosphere_id(), d));
    return p;
}

// ---- fragments -------------------------------------------------------------

namespace {

const std::string& port(const CellSpec& spec, const char* name) {
    auto it = spec.ports.find(name);
    if (it == spec.ports.end()) {
        throw NetlistError(std::string("missing port '") + name + "'");
    }
    return it->second;
}

void only_ports(const CellSpec& spec, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : spec.ports) {
        bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
        if (!ok) {
            throw NetlistError("unknown port '" + k + "'");
        }
    }
}

}  // namespace

void add_cell(NetlistBuilder& b, const CellSpec& spec, const Defaults& base) {
    const Defaults d = spec.params.resolve(base);
    switch (spec.kind) {
    case CellKind::Not:
        only_ports(spec, {"in", "out"});
        add_not(b, port(spec, "in"), port(spec, "out"), d);
        break;
    case CellKind::Nand: {
        const int k = spec.size;
        if (k < 2 || k > kMaxNandFanin) {
            throw NetlistError("invalid NAND fan-in " + std::to_string(k) + " (device supports 2.." +
                               std::to_string(kMaxNandFanin) + ")");
        }
        static const char* const names[] = {"a", "b", "c"};
        only_ports(spec, {"a", "b", "c", "out"});
        std::vector<std::string> inputs;
        for (int i = 0; i < k; ++i) {
            inputs.push_back(port(spec, names[i]));
        }
        if (k == 2 && spec.ports.count("c")) {
            throw NetlistError("unknown port 'c' for NAND2");
        }
        add_nand(b, inputs, port(spec, "out"), d);
        break;
    }
    case CellKind::Buf:
        only_ports(spec, {"in", "out"});
        add_buf(b, port(spec, "in"), port(spec, "out"), d);
        break;
    case CellKind::Indicator:
        only_ports(spec, {"in", "out"});
        add_indicator(b, port(spec, "in"), port(spec, "out"), d);
        break;
    case CellKind::Dff: {
        only_ports(spec, {"d", "clk", "q", "qbar", "clkn"});
        DffPorts p{port(spec, "d"), port(spec, "clk"), port(spec, "q"), port(spec, "qbar"), std::nullopt};
        if (auto it = spec.ports.find("clkn"); it != spec.ports.end()) {
            p.clk_inv = it->second;
        }
        add_dff(b, p, d);
        break;
    }
    case CellKind::RingOsc:
        only_ports(spec, {});
        add_ring_osc(b, spec.size, spec.taps, spec.name, d);
        break;
    case CellKind::Button:
        only_ports(spec, {"out"});
        add_button(b, port(spec, "out"), d);
        break;
    }
}

Netlist expand_cell(const CellSpec& spec, const Defaults& d) {
    NetlistBuilder b = NetlistBuilder::with_rails();
    add_cell(b, spec, d);
    return b.build();
}

Netlist expand_dff(const DffPorts& ports, const Defaults& d) {
    NetlistBuilder b = NetlistBuilder::with_rails();
    add_dff(b, ports, d);
    return b.build();
}

Netlist expand_ring_osc(int stages, const std::vector<std::string>& taps, const Defaults& d) {
    NetlistBuilder b = NetlistBuilder::with_rails();
    add_ring_osc(b, stages, taps, "", d);
    return b.build();
}

ButtonFragment expand_button(const std::string& out, const Defaults& d) {
    NetlistBuilder b = NetlistBuilder::with_rails();
    ButtonPorts p = add_button(b, out, d);
    return ButtonFragment{b.build(), p};
}

// ---- text directives -------------------------------------------------------

namespace {

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = s.find(',', start);
        out.push_back(s.substr(start, comma - start));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

CellSpec spec_from_directive(const Directive& d) {
    if (d.args.empty()) {
        throw ParseError("cell needs a kind", d.line, 1);
    }
    const Directive::Token& kind = d.args.front();
    CellSpec spec;
    const std::string& k = kind.text;
    if (k == "NOT") {
        spec.kind = CellKind::Not;
    } else if (k == "NAND2" || k == "NAND3") {
        spec.kind = CellKind::Nand;
        spec.size = k.back() - '0';
    } else if (k.rfind("NAND", 0) == 0) {
        throw ParseError("invalid NAND fan-in in '" + k + "' (device supports 2..3)", d.line, kind.column);
    } else if (k == "BUF") {
        spec.kind = CellKind::Buf;
    } else if (k == "INDICATOR") {
        spec.kind = CellKind::Indicator;
    } else if (k == "DFF") {
        spec.kind = CellKind::Dff;
    } else if (k == "BUTTON") {
        spec.kind = CellKind::Button;
    } else if (k.rfind("RING", 0) == 0 && k.size() > 4 &&
               std::all_of(k.begin() + 4, k.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        spec.kind = CellKind::RingOsc;
        spec.size = std::stoi(k.substr(4));
    } else {
        throw ParseError("unknown cell kind '" + k + "'", d.line, kind.column);
    }

    Directive rest = d;
    rest.args.erase(rest.args.begin());
    for (const auto& [key, value] : rest.key_values()) {
        if (key == "g") {
            spec.params.g_open = parse_float(value, d.line);
        } else if (key == "gpu") {
            spec.params.g_pullup = parse_float(value, d.line);
        } else if (key == "cap") {
            spec.params.capacitance = parse_float(value, d.line);
        } else if (key == "topen") {
            spec.params.theta_open = parse_float(value, d.line);
        } else if (key == "tclose") {
            spec.params.theta_close = parse_float(value, d.line);
        } else if (key == "name") {
            spec.name = value.text;
        } else if (key == "taps" && spec.kind == CellKind::RingOsc) {
            spec.taps = split_commas(value.text);
        } else {
            if (value.text.empty()) {
                throw ParseError("empty binding for port '" + key + "'", d.line, value.column);
            }
            spec.ports[key] = value.text;
        }
    }
    return spec;
}

}  // namespace

DirectiveHandler cell_directives(const Defaults& defaults) {
    return [defaults](const Directive& d, NetlistBuilder& b) {
        if (d.keyword != "cell") {
            return false;
        }
        add_cell(b, spec_from_directive(d), defaults);
        return true;
    };
}

Netlist parse_circuit(std::string_view text, const Defaults& d) {
    return parse_netlist(text, cell_directives(d));
}

}  // namespace pneulogic
