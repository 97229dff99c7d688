#pragma once

// NAND-NAND programmable logic array and its membrane (hole pattern) file.
//
// Literal columns S1 S1n S0 S0n A An feed four 3-input product NANDs; two
// 3-input output NANDs combine the inverted products, so each output is an
// OR of ANDs. A hole in the AND plane connects a literal to a product gate,
// a hole in the OR plane connects a product to an output gate.

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "pneulogic/engine.hpp"
#include "pneulogic/netlist.hpp"

namespace pneulogic {

struct PlaShape {
    int literals = 6;
    int products = 4;
    int outputs = 2;
    int and_fanin = 3;
    int or_fanin = 3;
};

inline constexpr int kPlaLiterals = 6;
inline constexpr int kPlaProducts = 4;
inline constexpr int kPlaOutputs = 2;
inline constexpr int kPlaFanin = 3;

// Column order is fixed; a literal's index is also its sort key.
enum Literal : int { S1 = 0, S1n = 1, S0 = 2, S0n = 3, A = 4, An = 5 };
inline constexpr std::array<std::string_view, kPlaLiterals> kLiteralNames{"S1", "S1n", "S0", "S0n", "A", "An"};
inline constexpr std::array<std::string_view, kPlaOutputs> kOutputNames{"N1", "N0"};

PlaShape device_shape();

struct HolePattern {
    std::array<std::array<bool, kPlaLiterals>, kPlaProducts> and_plane{};
    std::array<std::array<bool, kPlaProducts>, kPlaOutputs> or_plane{};

    bool operator==(const HolePattern&) const = default;

    int and_holes(int product) const;
    int or_holes(int output) const;
    bool product_empty(int product) const { return and_holes(product) == 0; }
    // Throws CapacityError naming the first row over its fan-in.
    void check(const PlaShape& shape = device_shape()) const;
};

// Node bindings for an expansion. Product gate outputs are `<prefix>P1`...
struct PlaPorts {
    std::array<std::string, kPlaLiterals> literals{"S1", "S1n", "S0", "S0n", "A", "An"};
    std::array<std::string, kPlaOutputs> outputs{"N1", "N0"};
    std::string prefix = "pla.";
};

// Always 18 valves: unused gate inputs are tied to vacuum, and an OR hole on
// an empty product row is tied off too, so an empty row contributes 0.
void add_pla(NetlistBuilder& b, const HolePattern& pattern, const PlaPorts& ports = {}, const Defaults& d = {});
Netlist expand_pla(const HolePattern& pattern, const PlaPorts& ports = {}, const Defaults& d = {});

// Boolean reference: (n1, n0).
std::pair<bool, bool> eval_pattern(const HolePattern& pattern, bool s1, bool s0, bool a);
bool eval_literal(int literal, bool s1, bool s0, bool a);

// Valve-level (N1, N0) from a quasi-static solve with the literal columns
// present in `net` driven to rail levels.
std::pair<Logic, Logic> pla_outputs(const Netlist& net, bool s1, bool s0, bool a, const PlaPorts& ports = {});

std::string encode_membrane(const HolePattern& pattern);
// Throws ParseError on malformed documents and fan-in violations.
HolePattern decode_membrane(std::string_view text);

}  // namespace pneulogic
