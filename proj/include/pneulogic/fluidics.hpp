#pragma once

// Liquid-handling plants driven by controller signals: a peristaltic pump
// counter, a rotary mixer and a serial-dilution ladder. Compositions map a
// source label to a volume fraction.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pneulogic/engine.hpp"

namespace pneulogic {

using Composition = std::map<std::string, double>;

struct Compartment {
    std::string id;
    double volume = 1.0;
    Composition composition;
};

// Drops zero entries and rescales to sum 1. Throws Error on negative or
// all-zero input.
void normalize(Composition& c);
// sum_i w_i c_i / sum_i w_i
Composition blend(const std::vector<std::pair<double, const Composition*>>& parts);

// Counts peristaltic cycles from three phase levels: phases must rise once
// each in the order 0, 1, 2. A rise out of order discards the partial cycle.
class PumpCounter {
public:
    // Returns the number of cycles completed by this sample (0 or 1).
    int update(const std::array<Logic, 3>& phases);
    long cycles() const { return cycles_; }
    void reset();

private:
    std::array<Logic, 3> last_{Logic::Unknown, Logic::Unknown, Logic::Unknown};
    int expected_ = 0;
    long cycles_ = 0;
};

// ---- rotary mixer ----------------------------------------------------------

inline constexpr std::string_view kReservoir1 = "R1";
inline constexpr std::string_view kReservoir2 = "R2";

struct MixerParams {
    double ring_volume = 1.0;
    double q = 0.05;  // volume moved per pump cycle
    int n_mix = 30;
};

// The ring is treated as a path of length ring_volume from the fill inlet;
// the first half is the left half. Fill states push reservoir fluid in as
// plugs: 10 fills the whole path with R1, 11 the left half with R2 (outlet
// at the midpoint), 01 the whole path with R2. In 00 the valves to the
// reservoirs are shut and the contents relax linearly to their mean,
// uniform after n_mix cycles.
class RotaryMixer {
public:
    explicit RotaryMixer(MixerParams p = {});

    // One pump cycle in `state` (2-bit code 00..11).
    void cycle(int state);
    void run(int state, int cycles);

    Compartment left() const;
    Compartment right() const;
    Composition ring() const;
    double fraction(std::string_view source) const;
    std::vector<Compartment> compartments() const { return {left(), right()}; }
    const MixerParams& params() const { return p_; }

private:
    struct Plug {
        double length;
        Composition c;
    };
    void push(const Composition& in, double outlet);
    Composition average(double from, double to) const;
    void compact();

    MixerParams p_;
    std::vector<Plug> plugs_;  // from the inlet onwards, lengths sum to ring_volume
    int mix_cycles_ = 0;
    int last_state_ = -1;
};

// ---- dilution ladder -------------------------------------------------------

inline constexpr std::string_view kSample = "sample";
inline constexpr std::string_view kBuffer = "buffer";

struct LadderParams {
    std::vector<double> rung_volumes{1.0, 1.0, 1.0, 1.0, 1.0};
    int n_mix = 30;
};

// Line k joins rungs k and k+1 into a circulation loop. After n_mix pump
// cycles on one activation both rungs hold their volume-weighted mean, then
// rung k is topped back up to its previous concentration from the upstream
// supply so the series keeps every step.
class DilutionLadder {
public:
    explicit DilutionLadder(LadderParams p = {});

    std::size_t lines() const { return c_.size() - 1; }
    // Throws Error unless exactly one line is active.
    void cycle(const std::vector<bool>& active_lines);
    // Mix the pair on line k and refill; the step an activation triggers.
    void dilute(std::size_t line);

    const std::vector<double>& concentrations() const { return c_; }
    double solute() const;  // sum of concentration * volume
    double refill_input() const { return refilled_; }
    double initial_solute() const { return initial_solute_; }
    int dilutions() const { return dilutions_; }
    std::vector<Compartment> compartments() const;
    const LadderParams& params() const { return p_; }

private:
    LadderParams p_;
    std::vector<double> c_;
    double refilled_ = 0.0;
    double initial_solute_ = 0.0;
    int dilutions_ = 0;
    std::optional<std::size_t> active_;
    int active_cycles_ = 0;
    bool done_ = false;
};

// ---- configuration and history --------------------------------------------

struct PlantConfig {
    std::string topology = "mixer";  // mixer | dilution
    double q = 0.05;
    int n_mix = 30;
    double ring_volume = 1.0;
    std::vector<double> rung_volumes{1.0, 1.0, 1.0, 1.0, 1.0};
    double clock_period = 250.0;  // free-running controller clock, dilution only
    double tick = 0.1;            // co-simulation tick
    double dt = 1e-3;
    int ring_stages = 5;
};

// `key = value` lines; '#' comments. Keys: topology, q, n_mix, ring_volume,
// rung_volumes (comma separated), clock_period, tick, dt, ring_stages.
PlantConfig parse_plant_config(std::string_view text, PlantConfig base = {});

struct HistoryRow {
    long cycle;
    std::string compartment;
    std::string source;
    double fraction;
};

// TSV `cycle compartment source fraction` with a header row.
std::string history_tsv(const std::vector<HistoryRow>& rows);

}  // namespace pneulogic
