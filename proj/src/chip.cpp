#include "pneulogic/chip.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pneulogic/error.hpp"
#include "pneulogic/stdcells.hpp"

namespace pneulogic {

ChipNodes chip_nodes(ClockSource clock) {
    ChipNodes n;
    for (int b = 0; b < kStateBits; ++b) {
        DffNodes dn = dff_nodes(DffPorts{n.d[b], n.clk, n.q[b], n.qbar[b], n.clk_inv});
        n.leader[b] = dn.leader;
        n.follower[b] = dn.follower;
    }
    if (clock == ClockSource::Button) {
        n.button_control = button_ports(n.clk).control;
    }
    return n;
}

FsmChip build_chip(const HolePattern& pattern, ClockSource clock, const Defaults& d) {
    FsmChip chip;
    chip.nodes = chip_nodes(clock);
    const ChipNodes& n = chip.nodes;
    NetlistBuilder b = NetlistBuilder::with_rails();
    if (clock == ClockSource::Button) {
        add_button(b, n.clk, d);
    }
    add_not(b, n.input, "An", d);
    add_not(b, "An", "Ab", d);
    add_not(b, n.clk, n.clk_inv, d);
    for (int bit = 0; bit < kStateBits; ++bit) {
        add_dff(b, DffPorts{n.d[bit], n.clk, n.q[bit], n.qbar[bit], n.clk_inv}, d);
    }
    PlaPorts ports;
    ports.literals = {n.q[0], n.qbar[0], n.q[1], n.qbar[1], "Ab", "An"};
    ports.outputs = {n.d[0], n.d[1]};
    add_pla(b, pattern, ports, d);
    for (int bit = 0; bit < kStateBits; ++bit) {
        b.add_probe(Probe::Kind::Node, n.q[bit]);
    }
    b.add_probe(Probe::Kind::Node, n.clk);
    b.add_probe(Probe::Kind::Node, n.input);
    b.set_metadata("chip", "fsm");
    chip.netlist = b.build();
    return chip;
}

NodePressures chip_initial_pressures(const FsmChip& chip, int state, bool a, double clk_level) {
    const ChipNodes& n = chip.nodes;
    NodePressures driven;
    if (n.button_control) {
        // uncovered port for a low clock, covered for a high one
        driven[*n.button_control] = clk_level >= 0.5 ? 0.0 : 1.0;
    } else {
        driven[n.clk] = clk_level;
    }
    driven[n.input] = a ? 1.0 : 0.0;
    for (int bit = 0; bit < kStateBits; ++bit) {
        const double level = (state >> (kStateBits - 1 - bit)) & 1 ? 1.0 : 0.0;
        driven[n.leader[bit]] = level;
        driven[n.follower[bit]] = level;
    }
    QuasiStaticResult r = run_quasistatic(chip.netlist, driven);
    NodePressures out;
    for (std::size_t i = 0; i < chip.netlist.nodes().size(); ++i) {
        const Node& node = chip.netlist.nodes()[i];
        if (!node.is_rail()) {
            out[node.id] = r.pressure[i];
        }
    }
    return out;
}

std::optional<int> read_state(const FsmChip& chip, std::span<const double> pressures) {
    int s = 0;
    for (int bit = 0; bit < kStateBits; ++bit) {
        Logic l = read_logic(pressures[*chip.netlist.node_index(chip.nodes.q[bit])]);
        if (l == Logic::Unknown) {
            return std::nullopt;
        }
        s = 2 * s + (l == Logic::One ? 1 : 0);
    }
    return s;
}

TransitionCheck check_transition(const FsmChip& chip, const TransitionTable& table, int state, bool a,
                                 double period, const VerifyOptions& options) {
    const ChipNodes& n = chip.nodes;
    if (n.button_control) {
        throw SimulationError("verify needs an externally clocked chip");
    }
    TransitionCheck row;
    row.state = state;
    row.a = a;
    row.expected = table.next_state(state, a);

    // Register starts in the complement so the loaded state has to travel
    // through the follower and the PLA within the clock period.
    const int complement = (kStates - 1) ^ state;
    Simulator sim(chip.netlist, options.dt, chip_initial_pressures(chip, complement, a, 0.0));
    const std::size_t clk = sim.index(n.clk);
    std::array<std::size_t, kStateBits> leader{}, d{}, q{}, qbar{};
    for (int bit = 0; bit < kStateBits; ++bit) {
        leader[bit] = sim.index(n.leader[bit]);
        d[bit] = sim.index(n.d[bit]);
        q[bit] = sim.index(n.q[bit]);
        qbar[bit] = sim.index(n.qbar[bit]);
    }
    auto bit_level = [&](int s, int bit) { return (s >> (kStateBits - 1 - bit)) & 1 ? 1.0 : 0.0; };

    sim.drive(clk, 0.0);
    sim.drive(n.input, a ? 1.0 : 0.0);
    for (int bit = 0; bit < kStateBits; ++bit) {
        sim.drive(leader[bit], bit_level(complement, bit));
    }

    const auto steps_at = [&](double t) { return static_cast<std::uint64_t>(std::llround(t / options.dt)); };
    const std::uint64_t load = steps_at(options.t_pre);
    const std::uint64_t rise = steps_at(options.t_pre + period / 2.0);
    const std::uint64_t fall = steps_at(options.t_pre + period);
    const std::uint64_t end = steps_at(options.t_pre + period + options.t_post);
    for (std::uint64_t k = 0; k < end; ++k) {
        if (k == load) {
            for (int bit = 0; bit < kStateBits; ++bit) {
                sim.drive(leader[bit], bit_level(state, bit));
            }
        }
        if (k == rise) {
            for (int bit = 0; bit < kStateBits; ++bit) {
                sim.release(leader[bit]);
            }
            sim.drive(clk, 1.0);
        }
        if (k == fall) {
            for (int bit = 0; bit < kStateBits; ++bit) {
                if (read_logic(sim.pressures()[d[bit]]) == Logic::Unknown) {
                    row.d_unknown_at_edge = true;
                }
            }
            sim.drive(clk, 0.0);
        }
        sim.step();
    }
    sim.update_valves();

    int observed = 0;
    bool known = true;
    for (int bit = 0; bit < kStateBits; ++bit) {
        Logic lq = read_logic(sim.pressures()[q[bit]]);
        Logic lqb = read_logic(sim.pressures()[qbar[bit]]);
        if (lq == Logic::Unknown) {
            known = false;
        }
        if (lqb == Logic::Unknown || lqb == lq) {
            row.qbar_mismatch = true;
        }
        observed = 2 * observed + (lq == Logic::One ? 1 : 0);
    }
    if (known) {
        row.observed = observed;
    }
    row.pass = known && observed == row.expected && !row.d_unknown_at_edge && !row.qbar_mismatch;
    return row;
}

std::vector<TransitionCheck> check_all(const FsmChip& chip, const TransitionTable& table, double period,
                                       const VerifyOptions& options) {
    std::vector<TransitionCheck> rows;
    for (int s = 0; s < kStates; ++s) {
        for (int a = 0; a < 2; ++a) {
            rows.push_back(check_transition(chip, table, s, a, period, options));
        }
    }
    return rows;
}

bool VerifyReport::all_pass() const {
    return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const TransitionCheck& r) { return r.pass; });
}

std::vector<TransitionCheck> VerifyReport::failures() const {
    std::vector<TransitionCheck> out;
    for (const TransitionCheck& r : rows) {
        if (!r.pass) {
            out.push_back(r);
        }
    }
    return out;
}

std::string VerifyReport::to_string() const {
    std::ostringstream out;
    out << "state\tA\texpected\tobserved\tresult\n";
    for (const TransitionCheck& r : rows) {
        out << state_label(r.state) << '\t' << (r.a ? 1 : 0) << '\t' << state_label(r.expected) << '\t'
            << (r.observed ? state_label(*r.observed) : std::string("xx")) << '\t' << (r.pass ? "pass" : "FAIL");
        if (r.d_unknown_at_edge) {
            out << " (D unknown at clock edge)";
        }
        if (r.qbar_mismatch) {
            out << " (Qbar != NOT Q)";
        }
        out << '\n';
    }
    std::size_t passed = rows.size() - failures().size();
    out << "passed " << passed << "/" << rows.size() << " at period " << format_float(period) << '\n';
    if (min_period) {
        out << "minimum period " << format_float(*min_period) << '\n';
    } else {
        out << "minimum period not found\n";
    }
    return out.str();
}

VerifyReport verify_chip(const FsmChip& chip, const TransitionTable& table, const VerifyOptions& options) {
    VerifyReport report;
    report.period = options.period;
    report.rows = check_all(chip, table, options.period, options);
    report.simulations = report.rows.size();
    if (!options.search_min_period) {
        return report;
    }
    auto passes = [&](double period) {
        report.simulations += kStates * 2;
        for (const TransitionCheck& r : check_all(chip, table, period, options)) {
            if (!r.pass) {
                return false;
            }
        }
        return true;
    };

    double hi = options.period;
    bool found = report.all_pass();
    while (!found && hi < options.max_period) {
        hi *= 2.0;
        found = passes(hi);
    }
    if (!found) {
        return report;
    }
    // Halve until a failure brackets the threshold.
    double lo = hi / 2.0;
    const double floor = 20.0 * options.dt;
    while (lo > floor && passes(lo)) {
        hi = lo;
        lo /= 2.0;
    }
    for (int i = 0; i < options.bisection_steps; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (passes(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    report.min_period = hi;
    return report;
}

VerifyReport verify(const HolePattern& pattern, const TransitionTable& table, const VerifyOptions& options) {
    return verify_chip(build_chip(pattern, ClockSource::External, options.defaults), table, options);
}

}  // namespace pneulogic
