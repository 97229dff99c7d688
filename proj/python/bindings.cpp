#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pneulogic/chip.hpp"
#include "pneulogic/cosim.hpp"
#include "pneulogic/error.hpp"
#include "pneulogic/fluidics.hpp"
#include "pneulogic/fsmc.hpp"
#include "pneulogic/pla.hpp"

namespace py = pybind11;
using namespace pneulogic;

namespace {

py::dict snapshot_dict(const Snapshot& s) {
    py::dict d;
    d["program"] = s.program;
    d["topology"] = s.topology;
    d["sim_time"] = s.time;
    d["state"] = s.state ? py::object(py::str(state_label(*s.state))) : py::object(py::none());
    d["clk"] = s.clk;
    d["button_covered"] = s.button_covered;
    d["pump_cycles"] = s.pump_cycles;
    d["transitions"] = s.transitions;
    py::dict outputs;
    for (const auto& [name, level] : s.outputs) {
        outputs[py::str(name)] = level;
    }
    d["outputs"] = outputs;
    py::dict comps;
    for (const Compartment& c : s.compartments) {
        comps[py::str(c.id)] = c.composition;
    }
    d["compartments"] = comps;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pneumatic logic toolchain core";

    // translators run newest first, so the base class goes in first
    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
    py::register_exception<SimulationError>(m, "SimulationError", base.ptr());

    py::class_<HolePattern>(m, "HolePattern")
        .def(py::init<>())
        .def_readwrite("and_plane", &HolePattern::and_plane)
        .def_readwrite("or_plane", &HolePattern::or_plane)
        .def("eval", [](const HolePattern& p, bool s1, bool s0, bool a) { return eval_pattern(p, s1, s0, a); })
        .def("encode", [](const HolePattern& p) { return encode_membrane(p); })
        .def("truth_table",
             [](const HolePattern& p) {
                 // valve-level (N1, N0) per row (S1, S0, A) in binary order; None when UNKNOWN
                 const Netlist net = expand_pla(p);
                 std::vector<std::pair<py::object, py::object>> rows;
                 auto level = [](Logic l) {
                     return l == Logic::Unknown ? py::object(py::none()) : py::object(py::bool_(l == Logic::One));
                 };
                 for (int r = 0; r < 8; ++r) {
                     const auto [n1, n0] = pla_outputs(net, r & 4, r & 2, r & 1);
                     rows.emplace_back(level(n1), level(n0));
                 }
                 return rows;
             })
        .def("__eq__", [](const HolePattern& a, const HolePattern& b) { return a == b; });
    m.def("decode_membrane", &decode_membrane, py::arg("text"));

    py::class_<Compilation>(m, "Compilation")
        .def_property_readonly("name", [](const Compilation& c) { return c.diagram.name; })
        .def_property_readonly("initial", [](const Compilation& c) { return state_label(c.diagram.initial); })
        .def_property_readonly("membrane", [](const Compilation& c) { return c.membrane; })
        .def_property_readonly("pattern", [](const Compilation& c) { return c.pattern; })
        .def_property_readonly("next_states", [](const Compilation& c) { return c.table.next; })
        .def_property_readonly("table_tsv", [](const Compilation& c) { return c.table.to_tsv(); })
        .def_property_readonly("equations", [](const Compilation& c) { return c.equations.to_string(); })
        .def_property_readonly("product_rows", [](const Compilation& c) { return c.equations.distinct_products(); });
    m.def("compile", &compile, py::arg("dsl"));

    m.def(
        "verify",
        [](const std::string& dsl, double period, double dt, bool search) {
            const Compilation c = compile(dsl);
            VerifyOptions o;
            o.period = period;
            o.dt = dt;
            o.search_min_period = search;
            const VerifyReport rep = verify(c.pattern, c.table, o);
            py::dict d;
            d["all_pass"] = rep.all_pass();
            d["passed"] = rep.rows.size() - rep.failures().size();
            d["min_period"] = rep.min_period ? py::object(py::float_(*rep.min_period)) : py::object(py::none());
            d["report"] = rep.to_string();
            return d;
        },
        py::arg("dsl"), py::arg("period") = 40.0, py::arg("dt") = 1e-3, py::arg("search") = true);

    py::class_<RotaryMixer>(m, "RotaryMixer")
        .def(py::init([](double ring_volume, double q, int n_mix) {
                 return RotaryMixer(MixerParams{ring_volume, q, n_mix});
             }),
             py::arg("ring_volume") = 1.0, py::arg("q") = 0.05, py::arg("n_mix") = 30)
        .def("cycle", &RotaryMixer::cycle, py::arg("state"))
        .def("run", &RotaryMixer::run, py::arg("state"), py::arg("cycles"))
        .def("fraction", [](const RotaryMixer& m, const std::string& s) { return m.fraction(s); })
        .def("left", [](const RotaryMixer& m) { return m.left().composition; })
        .def("right", [](const RotaryMixer& m) { return m.right().composition; });

    py::class_<DilutionLadder>(m, "DilutionLadder")
        .def(py::init([](std::vector<double> volumes, int n_mix) { return DilutionLadder(LadderParams{volumes, n_mix}); }),
             py::arg("rung_volumes") = std::vector<double>{1, 1, 1, 1, 1}, py::arg("n_mix") = 30)
        .def("dilute", &DilutionLadder::dilute, py::arg("line"))
        .def("cycle", &DilutionLadder::cycle, py::arg("active_lines"))
        .def_property_readonly("concentrations", &DilutionLadder::concentrations)
        .def_property_readonly("solute", &DilutionLadder::solute)
        .def_property_readonly("refill_input", &DilutionLadder::refill_input)
        .def_property_readonly("initial_solute", &DilutionLadder::initial_solute);

    py::class_<EmbeddedSession>(m, "EmbeddedSession")
        .def(py::init([](const std::string& dsl, const std::string& plant) {
                 return std::make_unique<EmbeddedSession>(compile(dsl), parse_plant_config(plant));
             }),
             py::arg("dsl"), py::arg("plant"))
        .def("press", &EmbeddedSession::press)
        .def("release", &EmbeddedSession::release)
        .def("ticks", &EmbeddedSession::ticks, py::arg("n"))
        .def("run_until", &EmbeddedSession::run_until, py::arg("t"))
        .def("run_script",
             [](EmbeddedSession& s, const std::string& script, double t_end) {
                 s.run_script(parse_script(script), t_end);
             },
             py::arg("script"), py::arg("t_end"))
        .def_property_readonly("time", &EmbeddedSession::time)
        .def_property_readonly("state",
                               [](const EmbeddedSession& s) {
                                   return s.state() ? py::object(py::str(state_label(*s.state())))
                                                    : py::object(py::none());
                               })
        .def_property_readonly("transitions", &EmbeddedSession::transitions)
        .def_property_readonly("pump_cycles", &EmbeddedSession::pump_cycles)
        .def("snapshot", [](const EmbeddedSession& s) { return snapshot_dict(s.snapshot()); })
        .def("history_tsv", [](const EmbeddedSession& s) { return history_tsv(s.history()); });
}
