#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pneulogic/chip.hpp"
#include "pneulogic/cosim.hpp"
#include "pneulogic/error.hpp"
#include "pneulogic/fsmc.hpp"
#include "pneulogic/panel.hpp"
#include "pneulogic/stdcells.hpp"

#ifndef PNEULOGIC_PROGRAM_DIR
#define PNEULOGIC_PROGRAM_DIR "programs"
#endif

namespace pneulogic::cli {

namespace {

// A file or usage problem, reported with exit code 2.
struct UsageError : Error {
    using Error::Error;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot read " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out || !(out << text)) {
        throw UsageError("cannot write " + path);
    }
}

// Engine defaults from `key = value` lines.
struct Config {
    Defaults defaults;
    double dt = 1e-3;
    double period = 40.0;
    double pace_ms = 100.0;
};

Config load_config(const std::string& path) {
    Config c;
    if (path.empty()) {
        return c;
    }
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto eq = line.find('=');
        std::istringstream k(line.substr(0, eq)), v(eq == std::string::npos ? "" : line.substr(eq + 1));
        std::string key;
        double value = 0.0;
        if (eq == std::string::npos || !(k >> key) || !(v >> value)) {
            throw ParseError("expected key = number", n, 1);
        }
        if (key == "dt") c.dt = value;
        else if (key == "period") c.period = value;
        else if (key == "pace_ms") c.pace_ms = value;
        else if (key == "g_pullup") c.defaults.g_pullup = value;
        else if (key == "g_open") c.defaults.g_open = value;
        else if (key == "capacitance") c.defaults.capacitance = value;
        else if (key == "theta_open") c.defaults.theta_open = value;
        else if (key == "theta_close") c.defaults.theta_close = value;
        else throw ParseError("unknown key " + key, n, 1);
    }
    return c;
}

Compilation compile_file(const std::string& path) { return compile(read_text(path)); }

// Flips one membrane hole: `AND:P<row>:<literal>` or `OR:<N1|N0>:P<row>`.
HolePattern inject_fault(HolePattern p, const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ':');) {
        parts.push_back(part);
    }
    auto row_of = [&](const std::string& t) {
        if (t.size() != 2 || t[0] != 'P' || t[1] < '1' || t[1] > '0' + kPlaProducts) {
            throw UsageError("bad product row " + t);
        }
        return t[1] - '1';
    };
    if (parts.size() == 3 && parts[0] == "AND") {
        const int row = row_of(parts[1]);
        for (int l = 0; l < kPlaLiterals; ++l) {
            if (kLiteralNames[l] == parts[2]) {
                p.and_plane[row][l] = !p.and_plane[row][l];
                return p;
            }
        }
        throw UsageError("bad literal " + parts[2]);
    }
    if (parts.size() == 3 && parts[0] == "OR") {
        for (int o = 0; o < kPlaOutputs; ++o) {
            if (kOutputNames[o] == parts[1]) {
                const int row = row_of(parts[2]);
                p.or_plane[o][row] = !p.or_plane[o][row];
                return p;
            }
        }
        throw UsageError("bad output " + parts[1]);
    }
    throw UsageError("fault spec must be AND:P<n>:<literal> or OR:<output>:P<n>");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pneumatic logic toolchain: FSM compiler, valve-level simulator and fluidic demos", "pneulogic"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "engine defaults file (key = value); overrides $PNEULOGIC_CONFIG");

    // compile
    auto* c_compile = app.add_subcommand("compile", "compile a state-diagram program to a membrane file");
    std::string fsm_path, membrane_out;
    bool show_table = false, show_sop = false;
    c_compile->add_option("program", fsm_path, "state-diagram program")->required();
    c_compile->add_option("-o,--output", membrane_out, "membrane file to write (stdout when omitted)");
    c_compile->add_flag("--table", show_table, "print the transition table");
    c_compile->add_flag("--sop", show_sop, "print the minimized equations");

    // simulate
    auto* c_sim = app.add_subcommand("simulate", "timed simulation with a value-change dump");
    std::string netlist_path, membrane_path, stimulus_path, vcd_path, initial_state = "00", signals;
    std::vector<std::string> clocks;
    double t_end = 0.0;
    std::optional<double> dt_flag;
    c_sim->add_option("netlist", netlist_path, "circuit file, merged with the chip when --membrane is given");
    c_sim->add_option("--membrane", membrane_path, "build the FSM chip with this membrane");
    c_sim->add_option("--clock", clocks, "clock spec, e.g. 'clk period=20 duty=0.5'");
    c_sim->add_option("--stimulus", stimulus_path, "stimulus TSV");
    c_sim->add_option("--vcd", vcd_path, "value-change dump to write (stdout when omitted)");
    c_sim->add_option("--t-end", t_end, "simulated duration")->required();
    c_sim->add_option("--dt", dt_flag, "time step");
    c_sim->add_option("--state", initial_state, "initial register state of the chip");
    c_sim->add_option("--signals", signals, "comma-separated signals to dump (probes when omitted)");

    // truthtable
    auto* c_tt = app.add_subcommand("truthtable", "valve-level PLA outputs next to the Boolean reference");
    std::string fault;
    c_tt->add_option("--membrane", membrane_path, "membrane file")->required();
    c_tt->add_option("--inject-fault", fault)->group("");  // test hook

    // demo
    auto* c_demo = app.add_subcommand("demo", "run the mixer or dilution co-simulation");
    std::string demo_name, script_path, plant_path, history_path, programs_dir = PNEULOGIC_PROGRAM_DIR;
    std::optional<double> demo_end;
    bool serve_flag = false;
    int port = 8765;
    std::optional<double> pace_flag;
    c_demo->add_option("name", demo_name, "mixer or dilution")->required()->check(CLI::IsMember({"mixer", "dilution"}));
    c_demo->add_option("--script", script_path, "button script: '<time> press|release' lines");
    c_demo->add_option("--plant", plant_path, "plant configuration overriding the profile's");
    c_demo->add_option("--history", history_path, "composition history TSV to write");
    c_demo->add_option("--t-end", demo_end, "simulated duration (mixer 600, dilution 1000)");
    c_demo->add_option("--programs", programs_dir, "directory with <name>.fsm and <name>.plant");
    c_demo->add_flag("--serve", serve_flag, "hand the session to the panel service instead");
    c_demo->add_option("--port", port, "panel service port");
    c_demo->add_option("--pace-ms", pace_flag, "wall-clock ms per simulated time unit");

    // verify
    auto* c_verify = app.add_subcommand("verify", "check every transition on the valve-level chip");
    std::optional<double> period_flag;
    bool no_search = false;
    c_verify->add_option("program", fsm_path, "state-diagram program")->required();
    c_verify->add_option("--membrane", membrane_path, "verify this membrane instead of the compiled one");
    c_verify->add_option("--period", period_flag, "clock period for the pass/fail table");
    c_verify->add_option("--dt", dt_flag, "time step");
    c_verify->add_flag("--no-search", no_search, "skip the minimum-period search");

    // serve
    auto* c_serve = app.add_subcommand("serve", "panel session service (NDJSON over TCP)");
    std::string host = "127.0.0.1";
    c_serve->add_option("--port", port, "port");
    c_serve->add_option("--host", host, "address to bind");
    c_serve->add_option("--programs", programs_dir, "directory with chip profiles");
    c_serve->add_option("--pace-ms", pace_flag, "wall-clock ms per simulated time unit");

    std::vector<const char*> argv{"pneulogic"};
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        if (e.get_exit_code() != 0 && app.get_subcommands().size() == 1) {
            err << app.get_subcommands().front()->help();
        }
        return kUsage;
    }

    std::string current_file;
    try {
        if (config_path.empty()) {
            if (const char* env = std::getenv("PNEULOGIC_CONFIG")) {
                config_path = env;
            }
        }
        current_file = config_path;
        const Config cfg = load_config(config_path);
        const double dt = dt_flag.value_or(cfg.dt);
        const double pace = pace_flag.value_or(cfg.pace_ms);

        if (c_compile->parsed()) {
            current_file = fsm_path;
            const Compilation comp = compile_file(fsm_path);
            if (show_table) {
                out << comp.table.to_tsv();
            }
            if (show_sop) {
                out << comp.equations.to_string();
            }
            if (membrane_out.empty()) {
                out << comp.membrane;
            } else {
                write_text(membrane_out, comp.membrane);
                out << "wrote " << membrane_out << " (" << comp.equations.distinct_products() << " product rows)\n";
            }
            return kOk;
        }

        if (c_sim->parsed()) {
            if (netlist_path.empty() && membrane_path.empty()) {
                throw UsageError("simulate needs a netlist, a --membrane, or both");
            }
            Netlist net;
            NodePressures initial;
            if (!membrane_path.empty()) {
                current_file = membrane_path;
                const FsmChip chip = build_chip(decode_membrane(read_text(membrane_path)), ClockSource::External,
                                                cfg.defaults);
                const int s = parse_state_label(initial_state);
                if (s < 0) {
                    throw UsageError("bad --state " + initial_state);
                }
                initial = chip_initial_pressures(chip, s, false, 0.0);
                net = chip.netlist;
            }
            if (!netlist_path.empty()) {
                current_file = netlist_path;
                Netlist circuit = parse_circuit(read_text(netlist_path), cfg.defaults);
                net = membrane_path.empty() ? circuit : merge(net, circuit, "");
            }
            Stimulus stim;
            if (!stimulus_path.empty()) {
                current_file = stimulus_path;
                stim = parse_stimulus(read_text(stimulus_path));
            }
            current_file.clear();
            for (const std::string& spec : clocks) {
                stim.clocks.push_back(parse_clock(spec));
            }
            TimedOptions opt;
            opt.initial = initial;
            const Waveform w = run_timed(net, stim, t_end, dt, opt);
            const std::string vcd = export_vcd(w, split_list(signals));
            if (vcd_path.empty()) {
                out << vcd;
            } else {
                write_text(vcd_path, vcd);
                out << "wrote " << vcd_path << " (" << w.samples() << " samples, " << w.events.size()
                    << " logic events)\n";
            }
            return kOk;
        }

        if (c_tt->parsed()) {
            current_file = membrane_path;
            const HolePattern pattern = decode_membrane(read_text(membrane_path));
            current_file.clear();
            const HolePattern built = fault.empty() ? pattern : inject_fault(pattern, fault);
            const Netlist net = expand_pla(built, {}, cfg.defaults);
            int mismatches = 0;
            out << "S1\tS0\tA\tN1\tN0\tN1_ref\tN0_ref\tmatch\n";
            for (int row = 0; row < 8; ++row) {
                const bool s1 = row & 4, s0 = row & 2, a = row & 1;
                const auto [n1, n0] = pla_outputs(net, s1, s0, a);
                const auto [r1, r0] = eval_pattern(pattern, s1, s0, a);
                const bool ok = n1 == (r1 ? Logic::One : Logic::Zero) && n0 == (r0 ? Logic::One : Logic::Zero);
                mismatches += ok ? 0 : 1;
                out << s1 << '\t' << s0 << '\t' << a << '\t' << logic_char(n1) << '\t' << logic_char(n0) << '\t' << r1
                    << '\t' << r0 << '\t' << (ok ? "ok" : "MISMATCH") << '\n';
            }
            if (mismatches == 0) {
                out << "all 8 rows agree\n";
                return kOk;
            }
            out << mismatches << " of 8 rows differ\n";
            return kVerifyFailed;
        }

        if (c_demo->parsed()) {
            const ChipProfile profile = [&] {
                try {
                    return directory_profiles(programs_dir)(demo_name);
                } catch (const ParseError&) {
                    throw;
                } catch (const Error& e) {
                    throw UsageError(e.what());
                }
            }();
            PlantConfig plant = profile.plant;
            if (!plant_path.empty()) {
                current_file = plant_path;
                plant = parse_plant_config(read_text(plant_path), plant);
            }
            if (serve_flag) {
                ServerOptions so;
                so.port = port;
                so.ms_per_unit = pace;
                PanelServer server(directory_profiles(programs_dir), so);
                out << "listening on " << so.host << ':' << server.listen() << " (load profile \"" << demo_name
                    << "\")" << std::endl;
                server.run();
                return kOk;
            }
            std::vector<ScriptEvent> events;
            if (!script_path.empty()) {
                current_file = script_path;
                events = parse_script(read_text(script_path));
            }
            current_file.clear();
            EmbeddedSession session(profile.program, plant);
            if (!events.empty() && !session.button_clocked()) {
                throw UsageError("the " + demo_name + " chip has no button; --script does not apply");
            }
            session.run_script(events, demo_end.value_or(demo_name == "mixer" ? 600.0 : 1000.0));
            out << snapshot_text(session.snapshot());
            if (const DilutionLadder* ladder = session.ladder()) {
                out << "series";
                for (double c : ladder->concentrations()) {
                    out << ' ' << format_float(c);
                }
                out << "\nrefill " << format_float(ladder->refill_input()) << '\n';
            } else {
                const Composition ring = session.mixer()->ring();
                out << "ring";
                for (const auto& [src, f] : ring) {
                    out << ' ' << src << '=' << format_float(f);
                }
                out << '\n';
            }
            if (!history_path.empty()) {
                write_text(history_path, history_tsv(session.history()));
            }
            return kOk;
        }

        if (c_verify->parsed()) {
            current_file = fsm_path;
            const Compilation comp = compile_file(fsm_path);
            HolePattern pattern = comp.pattern;
            if (!membrane_path.empty()) {
                current_file = membrane_path;
                pattern = decode_membrane(read_text(membrane_path));
            }
            current_file.clear();
            VerifyOptions vo;
            vo.period = period_flag.value_or(cfg.period);
            vo.dt = dt;
            vo.search_min_period = !no_search;
            vo.defaults = cfg.defaults;
            const VerifyReport report = verify(pattern, comp.table, vo);
            out << report.to_string();
            return report.all_pass() ? kOk : kVerifyFailed;
        }

        if (c_serve->parsed()) {
            ServerOptions so;
            so.host = host;
            so.port = port;
            so.ms_per_unit = pace;
            PanelServer server(directory_profiles(programs_dir), so);
            out << "listening on " << host << ':' << server.listen() << std::endl;
            server.run();
            return kOk;
        }
    } catch (const CapacityError& e) {
        err << "capacity error: " << e.what() << '\n';
        return kCapacity;
    } catch (const ParseError& e) {
        err << (current_file.empty() ? std::string("input") : current_file);
        if (e.line()) {
            err << ':' << e.line();
            if (e.column()) {
                err << ':' << e.column();
            }
        }
        err << ": error: " << e.message() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace pneulogic::cli
