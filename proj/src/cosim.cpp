#include "pneulogic/cosim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "pneulogic/error.hpp"
#include "pneulogic/stdcells.hpp"

namespace pneulogic {

std::vector<ScriptEvent> parse_script(std::string_view text) {
    std::vector<ScriptEvent> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto hash = raw.find('#'); hash != std::string::npos) {
            raw.erase(hash);
        }
        std::istringstream fields(raw);
        std::string time_text, action, extra;
        if (!(fields >> time_text)) {
            continue;
        }
        if (!(fields >> action) || (fields >> extra)) {
            throw ParseError("expected '<time> press|release'", line, 1);
        }
        double t = 0.0;
        auto [p, ec] = std::from_chars(time_text.data(), time_text.data() + time_text.size(), t);
        if (ec != std::errc() || p != time_text.data() + time_text.size() || !(t >= 0.0)) {
            throw ParseError("bad time '" + time_text + "'", line, 1);
        }
        if (!out.empty() && t < out.back().time) {
            throw ParseError("script times must not decrease", line, 1);
        }
        ScriptEvent::Kind kind;
        if (action == "press") {
            kind = ScriptEvent::Kind::Press;
        } else if (action == "release") {
            kind = ScriptEvent::Kind::Release;
        } else {
            throw ParseError("unknown action '" + action + "'", line, raw.find(action) + 1);
        }
        out.push_back(ScriptEvent{t, kind});
    }
    return out;
}

namespace {

constexpr const char* kPumpPrefix = "pump.";
constexpr double kSettle = 1.0;

Netlist controller(const FsmChip& chip, int stages) {
    const std::vector<std::string> taps{"p0", "p1", "p2"};
    return merge(chip.netlist, expand_ring_osc(stages, taps), kPumpPrefix);
}

std::vector<std::string> sources_of(const PlantConfig& c) {
    if (c.topology == "mixer") {
        return {std::string(kReservoir1), std::string(kReservoir2)};
    }
    return {std::string(kSample), std::string(kBuffer)};
}

}  // namespace

EmbeddedSession::EmbeddedSession(Compilation program, PlantConfig config)
    : program_(std::move(program)),
      config_(std::move(config)),
      chip_(build_chip(program_.pattern,
                       config_.topology == "mixer" ? ClockSource::Button : ClockSource::External)),
      sim_(controller(chip_, config_.ring_stages), config_.dt,
           chip_initial_pressures(chip_, program_.diagram.initial, false, 0.0)) {
    clk_ = sim_.index(chip_.nodes.clk);
    if (chip_.nodes.button_control) {
        control_ = sim_.index(*chip_.nodes.button_control);
        sim_.drive(*control_, 1.0);
    } else {
        // high during the second half of each period: falling edges at k*period
        clock_ = ClockSpec{chip_.nodes.clk, config_.clock_period, 0.5, config_.clock_period / 2.0};
    }
    sim_.drive(chip_.nodes.input, 0.0);
    for (int p = 0; p < 3; ++p) {
        taps_[p] = sim_.index(std::string(kPumpPrefix) + "p" + std::to_string(p));
    }
    steps_per_tick_ = static_cast<std::uint64_t>(std::max(1LL, std::llround(config_.tick / config_.dt)));

    const std::vector<MooreOutput>& outs = program_.diagram.outputs;
    output_role_.assign(outs.size(), -1);
    if (config_.topology == "mixer") {
        mixer_.emplace(MixerParams{config_.ring_volume, config_.q * config_.ring_volume, config_.n_mix});
        const std::vector<std::pair<std::string, int>> roles{
            {"LOAD_R1", 0b10}, {"LOAD_R2_HALF", 0b11}, {"LOAD_R2", 0b01}, {"MIX", 0b00}};
        for (const auto& [name, role] : roles) {
            auto it = std::find_if(outs.begin(), outs.end(), [&](const MooreOutput& o) { return o.name == name; });
            if (it == outs.end()) {
                throw Error("mixer program lacks output " + name);
            }
            output_role_[it - outs.begin()] = role;
        }
    } else if (config_.topology == "dilution") {
        ladder_.emplace(LadderParams{config_.rung_volumes, config_.n_mix});
        for (std::size_t k = 0; k < ladder_->lines(); ++k) {
            const std::string name = "L" + std::to_string(k);
            auto it = std::find_if(outs.begin(), outs.end(), [&](const MooreOutput& o) { return o.name == name; });
            if (it == outs.end()) {
                throw Error("dilution program lacks output " + name);
            }
            output_role_[it - outs.begin()] = static_cast<int>(k);
        }
    } else {
        throw Error("unknown topology " + config_.topology);
    }
    sim_.update_valves();
    state_ = read_state(chip_, sim_.pressures());
    candidate_ = state_;
    if (state_) {
        trace_.emplace_back(0.0, *state_);
    }
}

void EmbeddedSession::press() {
    if (!control_) {
        throw Error("this session runs on a free-running clock");
    }
    covered_ = true;
    sim_.drive(*control_, 0.0);
}

void EmbeddedSession::release() {
    if (!control_) {
        throw Error("this session runs on a free-running clock");
    }
    covered_ = false;
    sim_.drive(*control_, 1.0);
}

std::vector<bool> EmbeddedSession::output_levels() const {
    if (!state_) {
        return std::vector<bool>(program_.diagram.outputs.size(), false);
    }
    return program_.diagram.output_levels(*state_);
}

void EmbeddedSession::plant_cycle() {
    const std::vector<bool> levels = output_levels();
    if (mixer_) {
        std::optional<int> action;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (levels[i] && output_role_[i] >= 0) {
                if (action) {
                    throw Error("mixer outputs are not one-hot in state " + state_label(*state_));
                }
                action = output_role_[i];
            }
        }
        if (action) {
            mixer_->cycle(*action);
        }
    } else {
        std::vector<bool> lines(ladder_->lines(), false);
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (levels[i] && output_role_[i] >= 0) {
                lines[output_role_[i]] = true;
            }
        }
        ladder_->cycle(lines);
        const int k = static_cast<int>(std::find(lines.begin(), lines.end(), true) - lines.begin());
        if (activations_.empty() || activations_.back().first != k) {
            activations_.emplace_back(k, 0);
        }
        ++activations_.back().second;
    }
    record();
}

void EmbeddedSession::record() {
    const std::vector<Compartment> parts = mixer_ ? mixer_->compartments() : ladder_->compartments();
    for (const Compartment& c : parts) {
        for (const std::string& src : sources_of(config_)) {
            auto it = c.composition.find(src);
            history_.push_back(HistoryRow{pump_.cycles(), c.id, src, it == c.composition.end() ? 0.0 : it->second});
        }
    }
}

void EmbeddedSession::tick() {
    for (std::uint64_t k = 0; k < steps_per_tick_; ++k) {
        if (clock_) {
            sim_.drive(clk_, clock_->level_at(sim_.time()));
        }
        sim_.step();
        const auto p = sim_.pressures();
        const std::array<Logic, 3> phases{tap_level_[0].update(p[taps_[0]]), tap_level_[1].update(p[taps_[1]]),
                                          tap_level_[2].update(p[taps_[2]])};
        if (pump_.update(phases) > 0) {
            plant_cycle();
        }
    }
    ++ticks_;
    // Register bits do not flip together; a reading is taken as the state
    // once it has held for kSettle time units.
    const std::optional<int> s = read_state(chip_, sim_.pressures());
    if (s != candidate_) {
        candidate_ = s;
        candidate_ticks_ = 0;
    }
    ++candidate_ticks_;
    if (candidate_ && candidate_ != state_ &&
        static_cast<double>(candidate_ticks_) * config_.tick >= kSettle - 1e-9) {
        state_ = candidate_;
    }
    if (state_ && (trace_.empty() || trace_.back().second != *state_)) {
        if (!trace_.empty()) {
            ++transitions_;
        }
        trace_.emplace_back(time(), *state_);
    }
}

void EmbeddedSession::ticks(long n) {
    for (long i = 0; i < n; ++i) {
        tick();
    }
}

void EmbeddedSession::run_until(double t) {
    while (time() < t - 1e-9) {
        tick();
    }
}

void EmbeddedSession::run_script(const std::vector<ScriptEvent>& events, double t_end) {
    for (const ScriptEvent& e : events) {
        run_until(e.time);
        if (e.kind == ScriptEvent::Kind::Press) {
            press();
        } else {
            release();
        }
    }
    run_until(t_end);
}

Snapshot EmbeddedSession::snapshot() const {
    Snapshot s;
    s.program = program_.diagram.name;
    s.topology = config_.topology;
    s.time = time();
    s.state = state_;
    s.clk = read_logic(sim_.pressures()[clk_]) == Logic::One;
    s.button_covered = covered_;
    s.pump_cycles = pump_.cycles();
    s.transitions = transitions_;
    const std::vector<bool> levels = output_levels();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        s.outputs.emplace_back(program_.diagram.outputs[i].name, levels[i]);
    }
    const Netlist& net = sim_.netlist();
    for (std::size_t v = 0; v < net.valves().size(); ++v) {
        s.valves.emplace_back(net.valves()[v].id, sim_.valve_open(v));
    }
    for (const Probe& p : net.probes()) {
        if (p.kind == Probe::Kind::Node) {
            s.probes.emplace_back(p.id, sim_.pressure(p.id));
        } else {
            s.probes.emplace_back(p.id, sim_.valve_open(p.id) ? 1.0 : 0.0);
        }
    }
    s.compartments = mixer_ ? mixer_->compartments() : ladder_->compartments();
    return s;
}

std::string snapshot_text(const Snapshot& s) {
    std::ostringstream out;
    out << "program " << s.program << " (" << s.topology << ")\n";
    out << "time " << format_float(s.time) << '\n';
    out << "state " << (s.state ? state_label(*s.state) : std::string("xx")) << '\n';
    out << "clk " << (s.clk ? 1 : 0) << '\n';
    out << "button " << (s.button_covered ? "covered" : "uncovered") << '\n';
    out << "pump_cycles " << s.pump_cycles << '\n';
    out << "transitions " << s.transitions << '\n';
    for (const auto& [name, level] : s.outputs) {
        out << "output " << name << ' ' << (level ? 1 : 0) << '\n';
    }
    for (const Compartment& c : s.compartments) {
        out << "compartment " << c.id;
        for (const auto& [src, f] : c.composition) {
            out << ' ' << src << '=' << format_float(f);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace pneulogic
