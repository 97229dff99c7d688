#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pneulogic/fsmc.hpp"

namespace testsupport {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string program_path(const std::string& name) {
    return std::string(PNEULOGIC_SOURCE_DIR) + "/programs/" + name;
}

inline std::string read_program(const std::string& name) { return read_file(program_path(name)); }

// Table from a next-state function f(state, a).
template <class F>
pneulogic::TransitionTable table_of(F f) {
    pneulogic::TransitionTable t;
    for (int s = 0; s < 4; ++s) {
        for (int a = 0; a < 2; ++a) {
            t.next[2 * s + a] = f(s, a != 0);
        }
    }
    return t;
}

// Behaviour readings of the shipped programs, written independently of
// the DSL files.
inline pneulogic::TransitionTable counter_reset_oracle() {
    return table_of([](int s, bool a) { return a ? (s + 1) % 4 : 0; });
}
inline pneulogic::TransitionTable counter_hold_oracle() {
    return table_of([](int s, bool a) { return s == 3 ? (a ? 0 : 3) : s + 1; });
}
// Bits toggle in phase when A=0 and out of phase when A=1.
inline pneulogic::TransitionTable phase_toggle_oracle() {
    return table_of([](int s, bool a) {
        const bool s0 = s & 1;
        const bool n0 = !s0;
        const bool n1 = a ? s0 : !s0;
        return (n1 ? 2 : 0) + (n0 ? 1 : 0);
    });
}
// Loops {00, 11} and {01, 10}: A=1 moves to the loop partner, A=0 hops.
inline pneulogic::TransitionTable loop_branch_oracle() {
    return table_of([](int s, bool a) { return a ? s ^ 3 : s ^ 1; });
}

}  // namespace testsupport
