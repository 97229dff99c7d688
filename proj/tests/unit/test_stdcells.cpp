#include "doctest.h"

#include <cmath>

#include "pneulogic/engine.hpp"
#include "pneulogic/error.hpp"
#include "pneulogic/stdcells.hpp"

using namespace pneulogic;

namespace {

std::size_t internal_nodes(const Netlist& net) {
    std::size_t n = 0;
    for (const Node& node : net.nodes()) {
        n += !node.is_rail();
    }
    return n;
}

}  // namespace

TEST_CASE("NOT expands to one valve and one pull-up") {
    Netlist net = expand_cell(CellSpec{CellKind::Not, 0, {{"in", "a"}, {"out", "y"}}});
    CHECK(net.valves().size() == 1);
    CHECK(net.channels().size() == 1);
    CHECK(net.channels()[0].a == "VAC");
    CHECK(net.channels()[0].b == "y");
    CHECK(net.valves()[0].gate == "a");
    CHECK(net.valves()[0].source == "y");
    CHECK(net.valves()[0].drain == "ATM");
}

TEST_CASE("NAND3 is three series valves with two internal nodes") {
    Netlist net = expand_cell(CellSpec{CellKind::Nand, 3, {{"a", "x0"}, {"b", "x1"}, {"c", "x2"}, {"out", "y"}}});
    CHECK(net.valves().size() == 3);
    CHECK(net.channels().size() == 1);
    // x0 x1 x2 y plus two series nodes
    CHECK(internal_nodes(net) == 6);
    CHECK(net.valves().front().source == "y");
    CHECK(net.valves().back().drain == "ATM");
    for (std::size_t i = 1; i < net.valves().size(); ++i) {
        CHECK(net.valves()[i].source == net.valves()[i - 1].drain);
    }
}

TEST_CASE("NAND fan-in is limited") {
    CHECK_THROWS_AS(expand_cell(CellSpec{CellKind::Nand, 4, {{"a", "p"}, {"b", "q"}, {"c", "r"}, {"d", "s"}, {"out", "y"}}}),
                    NetlistError);
    CHECK_THROWS_AS(expand_cell(CellSpec{CellKind::Nand, 1, {{"a", "p"}, {"out", "y"}}}), NetlistError);
}

TEST_CASE("port collision is rejected") {
    CHECK_THROWS_AS(expand_cell(CellSpec{CellKind::Nand, 2, {{"a", "p"}, {"b", "p"}, {"out", "p"}}}), NetlistError);
    CHECK_THROWS_AS(expand_dff(DffPorts{"d", "clk", "d", "qb", std::nullopt}), NetlistError);
}

TEST_CASE("BUF is two inverters and follows its input") {
    Netlist net = expand_cell(CellSpec{CellKind::Buf, 0, {{"in", "a"}, {"out", "y"}}});
    CHECK(net.valves().size() == 2);
    for (Logic l : {Logic::Zero, Logic::One}) {
        CHECK(run_quasistatic(net, std::map<std::string, Logic>{{"a", l}}).level_of(net, "y") == l);
    }
}

TEST_CASE("indicator reads without loading the signal") {
    Netlist net = expand_cell(CellSpec{CellKind::Indicator, 0, {{"in", "s"}, {"out", "led"}}});
    CHECK(net.probes().size() == 2);
    for (const Valve& v : net.valves()) {
        CHECK(v.source != "s");
        CHECK(v.drain != "s");
    }
    for (const Channel& c : net.channels()) {
        CHECK(c.a != "s");
        CHECK(c.b != "s");
    }
}

TEST_CASE("expanded cells pass validation cleanly") {
    std::vector<Netlist> cells{
        expand_cell(CellSpec{CellKind::Not, 0, {{"in", "a"}, {"out", "y"}}}),
        expand_cell(CellSpec{CellKind::Nand, 2, {{"a", "a"}, {"b", "b"}, {"out", "y"}}}),
        expand_cell(CellSpec{CellKind::Nand, 3, {{"a", "a"}, {"b", "b"}, {"c", "c"}, {"out", "y"}}}),
        expand_cell(CellSpec{CellKind::Buf, 0, {{"in", "a"}, {"out", "y"}}}),
        expand_cell(CellSpec{CellKind::Indicator, 0, {{"in", "a"}, {"out", "y"}}}),
        expand_dff(DffPorts{"d", "clk", "q", "qb", std::nullopt}),
        expand_ring_osc(5, {"p0", "p1", "p2"}),
        expand_button("clk").netlist,
    };
    for (const Netlist& n : cells) {
        ValidationReport r = validate(n);
        CHECK_MESSAGE(r.empty(), r.to_string());
    }
}

TEST_CASE("flip-flop valve counts") {
    CHECK(expand_dff(DffPorts{"d", "clk", "q", "qb", std::nullopt}).valves().size() == 7);

    NetlistBuilder b = NetlistBuilder::with_rails();
    add_not(b, "clk", "clkn");
    add_dff(b, DffPorts{"d1", "clk", "q1", "q1b", std::string("clkn")});
    add_dff(b, DffPorts{"d0", "clk", "q0", "q0b", std::string("clkn")});
    Netlist reg = b.build();
    CHECK(reg.valves().size() == 13);
    CHECK(validate(reg).empty());
}

TEST_CASE("ring oscillator structure") {
    Netlist r5 = expand_ring_osc(5, {"p0", "p1", "p2"});
    CHECK(r5.valves().size() == 5);
    CHECK(r5.channels().size() == 5);
    CHECK(ring_tap_stage(5, 0) == 0);
    CHECK(ring_tap_stage(5, 1) == 2);
    CHECK(ring_tap_stage(5, 2) == 4);
    CHECK_THROWS_AS(expand_ring_osc(4, {}), NetlistError);
    CHECK_THROWS_AS(expand_ring_osc(1, {}), NetlistError);
}

TEST_CASE("button levels and a single cover/release pulse") {
    ButtonFragment f = expand_button("clk");
    const Netlist& net = f.netlist;
    QuasiStaticResult open = run_quasistatic(net, NodePressures{{f.ports.control, 1.0}});
    CHECK(open.pressure_of(net, "clk") == doctest::Approx(1.0 / 101.0));
    CHECK(open.level_of(net, "clk") == Logic::Zero);
    QuasiStaticResult covered = run_quasistatic(net, NodePressures{{f.ports.control, 0.0}});
    CHECK(covered.pressure_of(net, "clk") == 1.0);

    Stimulus stim;
    stim.schedule.push_back({0.0, f.ports.control, 1.0});
    stim.schedule.push_back({2.0, f.ports.control, 0.0});
    stim.schedule.push_back({12.0, f.ports.control, 1.0});
    TimedOptions opt;
    opt.extra_node_probes = {"clk"};
    Waveform w = run_timed(net, stim, 20.0, 1e-3, opt);
    int rises = 0, falls = 0;
    for (const LogicEvent& e : w.events) {
        if (e.signal != "clk" || e.from == Logic::Unknown) {
            continue;
        }
        rises += e.to == Logic::One;
        falls += e.to == Logic::Zero;
    }
    CHECK(rises == 1);
    CHECK(falls == 1);
}

TEST_CASE("flip-flop captures D on the falling clock edge only") {
    Netlist net = expand_dff(DffPorts{"d", "clk", "q", "qb", std::nullopt});
    Stimulus stim = parse_stimulus(
        "0 clk 1\n0 d 1\n"
        "10 clk 0\n"   // falling edge: q <- 1
        "20 clk 1\n"
        "25 d 0\n"     // mid-high change, must wait for the edge
        "30 clk 0\n"   // q <- 0
        "35 d 1\n"     // change while low is ignored
        "40 clk 1\n");
    TimedOptions opt;
    opt.extra_node_probes = {"q", "qb"};
    Waveform w = run_timed(net, stim, 48.0, 1e-3, opt);
    auto at = [&](const std::string& s, double t) {
        return read_logic(w.node(s)[static_cast<std::size_t>(std::llround(t / w.dt))]);
    };
    CHECK(at("q", 19.9) == Logic::One);
    CHECK(at("q", 29.9) == Logic::One);
    CHECK(at("q", 39.9) == Logic::Zero);
    CHECK(at("q", 47.9) == Logic::Zero);
    for (double t : {19.9, 29.9, 39.9, 47.9}) {
        CHECK(at("qb", t) != at("q", t));
        CHECK(at("qb", t) != Logic::Unknown);
    }
}

TEST_CASE("cell lines in the text format") {
    Netlist net = parse_circuit(
        "rail VAC vacuum\nrail ATM atmosphere\n"
        "cell NOT in=a out=b\n"
        "cell NAND3 a=a b=b c=c out=y g=50\n"
        "cell RING5 taps=p0,p1,p2\n");
    CHECK(net.valves().size() == 1 + 3 + 5);
    CHECK(net.valves()[1].g_open == 50.0);
    CHECK_THROWS_AS(parse_circuit("rail VAC vacuum\nrail ATM atmosphere\ncell NAND4 a=a out=y\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("rail VAC vacuum\nrail ATM atmosphere\ncell RING4\n"), ParseError);
}
