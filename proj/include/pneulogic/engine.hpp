#pragma once

// Simulation of a Netlist.
//
// Two modes share the same resistive model:
//  - quasi-static: alternate a Kirchhoff steady-state solve with single
//    threshold valve updates until the valve states repeat;
//  - timed: explicit Euler on dp/dt = sum g_ij (p_j - p_i) / c_i with rails
//    and driven nodes clamped, valves switching with hysteresis.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pneulogic/error.hpp"
#include "pneulogic/netlist.hpp"

namespace pneulogic {

enum class Logic : std::uint8_t { Zero, One, Unknown };

inline constexpr double kLogicHigh = 0.7;
inline constexpr double kLogicLow = 0.3;

// ONE at or above 0.7, ZERO at or below 0.3, UNKNOWN in between.
Logic read_logic(double pressure);
char logic_char(Logic l);

// Logic reading that holds its last known level while the pressure crosses
// the UNKNOWN band. Starts UNKNOWN until the first decisive sample.
class LogicTracker {
public:
    Logic update(double pressure);
    Logic level() const { return level_; }

private:
    Logic level_ = Logic::Unknown;
};

using NodePressures = std::map<std::string, double>;

// ---- quasi-static ----------------------------------------------------------

struct StaticSolution {
    std::vector<double> pressure;  // indexed like net.nodes()
    std::vector<std::string> warnings;
};

// Steady state of the resistive network for fixed valve states. `driven`
// clamps non-rail nodes. Nodes in a component without a rail or driven node
// take the capacitance-weighted mean of `previous` (0.0 with a warning when
// no previous pressures are given).
StaticSolution solve_static(const Netlist& net, const std::vector<bool>& valve_open, const NodePressures& driven = {},
                            std::span<const double> previous = {});

class OscillationDetected : public Error {
public:
    OscillationDetected(std::vector<std::vector<bool>> cycle, std::vector<std::string> valve_ids);

    // Valve-state vectors forming the cycle, in visiting order.
    const std::vector<std::vector<bool>>& cycle() const { return cycle_; }

private:
    std::vector<std::vector<bool>> cycle_;
};

struct QuasiStaticResult {
    std::vector<bool> valve_open;
    std::vector<double> pressure;
    std::vector<Logic> level;
    std::size_t iterations = 0;

    Logic level_of(const Netlist& net, std::string_view node) const;
    double pressure_of(const Netlist& net, std::string_view node) const;
};

// Valves open iff gate >= theta_open (no hysteresis). Throws
// OscillationDetected when no fixpoint is reached within 2*valves+4 rounds.
QuasiStaticResult run_quasistatic(const Netlist& net, const NodePressures& driven);
QuasiStaticResult run_quasistatic(const Netlist& net, const std::map<std::string, Logic>& inputs);

// ---- stimulus --------------------------------------------------------------

struct DriveEvent {
    double time = 0.0;
    std::string node;
    std::optional<double> level;  // nullopt releases the node
};

// Square wave: high during [phase + k*period, phase + (k + duty)*period).
struct ClockSpec {
    std::string node;
    double period = 1.0;
    double duty = 0.5;
    double phase = 0.0;

    double level_at(double t) const;
};

struct Stimulus {
    std::vector<DriveEvent> schedule;
    std::vector<ClockSpec> clocks;

    // Throws SimulationError on rails, unknown nodes or non-monotone times.
    void check(const Netlist& net) const;
};

// TSV lines `time<ws>node<ws>value` with value 0, 1, z or a pressure in
// [0, 1], plus `clock <node> period=<f> duty=<f> [phase=<f>]` lines.
Stimulus parse_stimulus(std::string_view text);
ClockSpec parse_clock(std::string_view spec);

// ---- timed -----------------------------------------------------------------

// Largest dt the explicit integrator accepts for this netlist.
double max_stable_dt(const Netlist& net);

// A single-threaded timed simulation session.
class Simulator {
public:
    // Throws SimulationError when dt exceeds max_stable_dt(net) or the netlist
    // has validation errors. Missing initial pressures default to 0.0.
    Simulator(Netlist net, double dt, const NodePressures& initial = {});

    const Netlist& netlist() const { return net_; }
    double dt() const { return dt_; }
    double time() const { return static_cast<double>(steps_) * dt_; }
    std::uint64_t steps() const { return steps_; }

    std::size_t index(std::string_view node) const;  // throws NetlistError
    void drive(std::size_t node, double pressure);
    void drive(std::string_view node, double pressure) { drive(index(node), pressure); }
    void release(std::size_t node);
    void release(std::string_view node) { release(index(node)); }
    bool driven(std::size_t node) const { return fixed_[node] != 0; }

    // Re-evaluates valves with hysteresis against the present pressures.
    void update_valves();
    // Advances time by dt (integration only).
    void integrate();
    // update_valves() followed by integrate().
    void step() {
        update_valves();
        integrate();
    }

    std::span<const double> pressures() const { return pressure_; }
    double pressure(std::string_view node) const { return pressure_[index(node)]; }
    bool valve_open(std::size_t valve) const { return open_[valve] != 0; }
    bool valve_open(std::string_view valve) const;
    // max |dp/dt| over free nodes as of the last integrate().
    double max_rate() const { return max_rate_; }

private:
    struct Edge {
        std::uint32_t a;
        std::uint32_t b;
        double g;
    };
    struct ValveRec {
        std::uint32_t gate;
        std::uint32_t a;
        std::uint32_t b;
        double g;
        double open_at;
        double close_at;
    };

    Netlist net_;
    double dt_;
    std::uint64_t steps_ = 0;
    std::vector<double> pressure_;
    std::vector<double> inv_cap_;
    std::vector<std::uint8_t> fixed_;
    std::vector<std::uint8_t> open_;
    std::vector<Edge> channels_;
    std::vector<ValveRec> valves_;
    std::vector<double> flow_;
    double max_rate_ = 0.0;
};

struct LogicEvent {
    double time = 0.0;
    std::string signal;
    Logic from = Logic::Unknown;
    Logic to = Logic::Unknown;
};

struct Waveform {
    double dt = 0.0;  // sample spacing
    std::vector<std::string> node_names;
    std::vector<std::vector<double>> series;
    std::vector<std::string> valve_names;
    std::vector<std::vector<std::uint8_t>> valve_series;
    std::vector<LogicEvent> events;

    std::size_t samples() const;
    double time_at(std::size_t i) const { return static_cast<double>(i) * dt; }
    const std::vector<double>& node(std::string_view name) const;  // throws Error
    const std::vector<std::uint8_t>& valve(std::string_view name) const;
};

struct TimedOptions {
    NodePressures initial;
    std::vector<std::string> extra_node_probes;
    std::size_t sample_every = 1;
};

// Samples at t = 0, dt, ..., t_end. Each step applies stimulus entries due at
// or before t, updates valves, records, then integrates.
Waveform run_timed(const Netlist& net, const Stimulus& stim, double t_end, double dt,
                   const TimedOptions& options = {});

// Value-change dump of the selected signals (all when empty). Levels are
// 0/1/x from a LogicTracker reading; valves dump 1 while open.
std::string export_vcd(const Waveform& w, const std::vector<std::string>& signals = {});

}  // namespace pneulogic
