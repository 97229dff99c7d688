#pragma once

// Complete valve-level FSM chip: input buffering, the PLA and a 2-bit
// negative-edge register sharing one clock inverter.
//
//   A -> NOT -> An -> NOT -> Ab          literal columns S1 S1n S0 S0n Ab An
//   clk -> NOT -> clkn                    shared by both flip-flops
//   DFF(d=N1, q=S1, qbar=S1n), DFF(d=N0, q=S0, qbar=S0n)

#include <optional>
#include <string>
#include <vector>

#include "pneulogic/engine.hpp"
#include "pneulogic/fsmc.hpp"
#include "pneulogic/pla.hpp"

namespace pneulogic {

enum class ClockSource {
    External,  // clk is driven by the stimulus
    Button,    // clk is the output of an on-chip push button
};

struct ChipNodes {
    std::string clk = "clk";
    std::string clk_inv = "clkn";
    std::string input = "A";
    std::array<std::string, kStateBits> q{"S1", "S0"};
    std::array<std::string, kStateBits> qbar{"S1n", "S0n"};
    std::array<std::string, kStateBits> d{"N1", "N0"};
    std::array<std::string, kStateBits> leader;
    std::array<std::string, kStateBits> follower;
    std::optional<std::string> button_control;
};

struct FsmChip {
    Netlist netlist;
    ChipNodes nodes;
};

FsmChip build_chip(const HolePattern& pattern, ClockSource clock = ClockSource::External, const Defaults& d = {});

// Node ids the builder uses, without building anything.
ChipNodes chip_nodes(ClockSource clock = ClockSource::External);

// Steady pressures for every non-rail node with the register holding
// `state`, clk at `clk_level` and the input at `a`.
NodePressures chip_initial_pressures(const FsmChip& chip, int state, bool a, double clk_level = 0.0);

// State read from the Q nodes; nullopt when a bit is UNKNOWN.
std::optional<int> read_state(const FsmChip& chip, std::span<const double> pressures);

// ---- verification ----------------------------------------------------------

struct VerifyOptions {
    double period = 40.0;  // clock period used for the pass/fail table
    double dt = 1e-3;
    double t_pre = 2.0;    // settle before the state is loaded
    double t_post = 15.0;  // settle after the capturing edge
    bool search_min_period = true;
    int bisection_steps = 10;
    double max_period = 1280.0;
    Defaults defaults;
};

struct TransitionCheck {
    int state = 0;
    bool a = false;
    int expected = 0;
    std::optional<int> observed;  // nullopt when a Q bit read UNKNOWN
    bool d_unknown_at_edge = false;
    bool qbar_mismatch = false;
    bool pass = false;
};

struct VerifyReport {
    double period = 0.0;
    std::vector<TransitionCheck> rows;
    std::optional<double> min_period;  // smallest passing period found
    std::size_t simulations = 0;

    bool all_pass() const;
    std::vector<TransitionCheck> failures() const;
    // TSV table plus a summary line.
    std::string to_string() const;
};

// One clocked transition from `state` with input `a` at the given period.
TransitionCheck check_transition(const FsmChip& chip, const TransitionTable& table, int state, bool a,
                                 double period, const VerifyOptions& options);

// All 8 transitions at one period.
std::vector<TransitionCheck> check_all(const FsmChip& chip, const TransitionTable& table, double period,
                                       const VerifyOptions& options);

// Expands `pattern` into a chip and checks it against `table`. Never throws
// for logic mismatches; they are reported per transition.
VerifyReport verify(const HolePattern& pattern, const TransitionTable& table, const VerifyOptions& options = {});
VerifyReport verify_chip(const FsmChip& chip, const TransitionTable& table, const VerifyOptions& options = {});

}  // namespace pneulogic
