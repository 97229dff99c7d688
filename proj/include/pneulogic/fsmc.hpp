#pragma once

// FSM compiler: state-diagram DSL -> transition table -> minimized
// sum-of-products -> PLA hole pattern -> membrane file.
//
// Device profile: two state bits (S1 S0) and one input (A). States are
// written as bit strings, "10" meaning S1=1, S0=0; internally a state is the
// integer 2*S1 + S0.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pneulogic/pla.hpp"

namespace pneulogic {

inline constexpr int kStateBits = 2;
inline constexpr int kStates = 4;

std::string state_label(int state);
int parse_state_label(std::string_view text);  // -1 when malformed

struct MooreOutput {
    std::string name;
    std::vector<int> states;  // output is 1 in these states
};

struct StateDiagram {
    std::string name = "fsm";
    std::string input = "A";
    int initial = 0;
    std::vector<int> states;  // declared states, ascending
    // next[state][a]; undeclared states go to the initial state.
    std::array<std::array<int, 2>, kStates> next{};
    std::vector<MooreOutput> outputs;

    std::size_t transition_count() const { return states.size() * 2; }
    // Moore output levels for a state, in declaration order.
    std::vector<bool> output_levels(int state) const;
};

// Throws ParseError (with line/column) on syntax errors, non-total or
// duplicated transitions and unknown state labels.
StateDiagram parse_fsm(std::string_view text);

struct TransitionTable {
    // next[2*state + a]
    std::array<int, 2 * kStates> next{};

    int next_state(int state, bool a) const { return next[2 * state + (a ? 1 : 0)]; }
    bool next_bit(int bit, int state, bool a) const { return (next_state(state, a) >> bit) & 1; }
    bool operator==(const TransitionTable&) const = default;

    // TSV with header S1 S0 A N1 N0, rows in (S1, S0, A) binary order.
    std::string to_tsv() const;
};

TransitionTable to_table(const StateDiagram& d);
TransitionTable table_from_pattern(const HolePattern& pattern);

// A product is a sorted list of literal column indices (see pla.hpp). An
// empty product is the constant 1.
using Product = std::vector<int>;

struct SopEquations {
    // terms[0] is N1, terms[1] is N0.
    std::array<std::vector<Product>, kPlaOutputs> terms;

    bool eval(int output, bool s1, bool s0, bool a) const;
    std::size_t distinct_products() const;
    // "N1 = S1*S0n*A + S1n*S0*A" lines; "0" for an empty sum.
    std::string to_string() const;
};

std::string product_string(const Product& p);

// Exact two-level minimization per output bit. Ties break on fewer products,
// then fewer literals, then the lexicographically smallest sorted list of
// products.
SopEquations derive_sop(const TransitionTable& t);
std::vector<Product> minimize(const std::array<bool, 8>& on_set);

// Assigns distinct products to rows in order of first use (N1 first), shared
// products sharing a row. Throws CapacityError naming the violated limit.
HolePattern fit_pla(const SopEquations& eqs, const PlaShape& shape = device_shape());

struct Compilation {
    StateDiagram diagram;
    TransitionTable table;
    SopEquations equations;
    HolePattern pattern;
    std::string membrane;
};

Compilation compile(std::string_view dsl);

}  // namespace pneulogic
