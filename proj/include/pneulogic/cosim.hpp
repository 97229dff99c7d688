#pragma once

// Embedded controller co-simulation: the valve-level FSM chip, a ring
// oscillator whose taps drive a three-phase pump, and a liquid plant fed by
// the chip's Moore outputs. Mixer plants are clocked by the on-chip button,
// dilution plants by a free-running clock.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pneulogic/chip.hpp"
#include "pneulogic/fluidics.hpp"

namespace pneulogic {

struct ScriptEvent {
    enum class Kind { Press, Release };
    double time;
    Kind kind;
};

// `time<ws>press|release` per line, '#' comments, times non-decreasing.
std::vector<ScriptEvent> parse_script(std::string_view text);

struct Snapshot {
    std::string program;
    std::string topology;
    double time = 0.0;
    std::optional<int> state;
    bool clk = false;
    bool button_covered = false;
    long pump_cycles = 0;
    long transitions = 0;
    std::vector<std::pair<std::string, bool>> outputs;
    std::vector<std::pair<std::string, bool>> valves;     // open?
    std::vector<std::pair<std::string, double>> probes;   // pressure, or 1/0 for valve probes
    std::vector<Compartment> compartments;
};

// Summary without the valve and probe lists.
std::string snapshot_text(const Snapshot& s);

class EmbeddedSession {
public:
    EmbeddedSession(Compilation program, PlantConfig config);

    bool button_clocked() const { return chip_.nodes.button_control.has_value(); }
    // Cover / uncover the button port. Throws Error on a free-running clock.
    void press();
    void release();
    bool covered() const { return covered_; }

    // One co-simulation tick (config.tick time units).
    void tick();
    void ticks(long n);
    // Ticks until time() >= t.
    void run_until(double t);
    // Applies each event at the first tick boundary at or after its time,
    // then runs to t_end.
    void run_script(const std::vector<ScriptEvent>& events, double t_end);

    double time() const { return static_cast<double>(ticks_) * config_.tick; }
    long tick_count() const { return ticks_; }
    // Debounced register state; the raw Q reading must hold for one time
    // unit before it replaces the previous state.
    std::optional<int> state() const { return state_; }
    long transitions() const { return transitions_; }
    long pump_cycles() const { return pump_.cycles(); }
    Snapshot snapshot() const;

    const std::vector<HistoryRow>& history() const { return history_; }
    // (time, state) at every observed state change, starting with the initial state.
    const std::vector<std::pair<double, int>>& state_trace() const { return trace_; }
    // Pump cycles delivered to each activation of a dilution line.
    const std::vector<std::pair<int, int>>& activations() const { return activations_; }

    const Compilation& program() const { return program_; }
    const PlantConfig& config() const { return config_; }
    const FsmChip& chip() const { return chip_; }
    const RotaryMixer* mixer() const { return mixer_ ? &*mixer_ : nullptr; }
    const DilutionLadder* ladder() const { return ladder_ ? &*ladder_ : nullptr; }

private:
    void plant_cycle();
    void record();
    std::vector<bool> output_levels() const;

    Compilation program_;
    PlantConfig config_;
    FsmChip chip_;
    Simulator sim_;
    std::optional<ClockSpec> clock_;
    std::size_t clk_ = 0;
    std::optional<std::size_t> control_;
    std::array<std::size_t, 3> taps_{};
    std::array<LogicTracker, 3> tap_level_;
    PumpCounter pump_;
    std::optional<RotaryMixer> mixer_;
    std::optional<DilutionLadder> ladder_;
    std::vector<int> output_role_;  // plant action of each Moore output
    bool covered_ = false;
    long ticks_ = 0;
    std::uint64_t steps_per_tick_ = 1;
    std::optional<int> state_;
    std::optional<int> candidate_;
    long candidate_ticks_ = 0;
    long transitions_ = 0;
    std::vector<HistoryRow> history_;
    std::vector<std::pair<double, int>> trace_;
    std::vector<std::pair<int, int>> activations_;
};

}  // namespace pneulogic
