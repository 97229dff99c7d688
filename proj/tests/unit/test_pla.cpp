#include "doctest.h"

#include <random>

#include "pla_support.hpp"
#include "pneulogic/engine.hpp"
#include "pneulogic/error.hpp"
#include "pneulogic/pla.hpp"

using namespace pneulogic;

namespace {

// N0 = A * S0'
HolePattern a_and_not_s0() {
    HolePattern p;
    p.and_plane[0][A] = true;
    p.and_plane[0][S0n] = true;
    p.or_plane[1][0] = true;
    return p;
}

}  // namespace

TEST_CASE("expansion always has 18 valves") {
    std::mt19937 rng(1);
    for (int i = 0; i < 50; ++i) {
        CHECK(expand_pla(testsupport::random_pattern(rng)).valves().size() == 18);
    }
    CHECK(expand_pla(HolePattern{}).valves().size() == 18);
}

TEST_CASE("empty pattern gives constant zero outputs") {
    HolePattern empty;
    Netlist net = expand_pla(empty);
    for (int row = 0; row < 8; ++row) {
        bool s1 = row & 4, s0 = row & 2, a = row & 1;
        CHECK(eval_pattern(empty, s1, s0, a) == std::pair{false, false});
        auto levels = testsupport::pla_levels(net, s1, s0, a);
        CHECK(levels.first == Logic::Zero);
        CHECK(levels.second == Logic::Zero);
    }
}

TEST_CASE("single product pattern matches its Boolean function") {
    HolePattern p = a_and_not_s0();
    CHECK(eval_pattern(p, false, false, true).second == true);
    Netlist net = expand_pla(p);
    for (int row = 0; row < 8; ++row) {
        bool s1 = row & 4, s0 = row & 2, a = row & 1;
        const bool expect = a && !s0;
        CHECK(eval_pattern(p, s1, s0, a).second == expect);
        CHECK(testsupport::pla_levels(net, s1, s0, a).second == (expect ? Logic::One : Logic::Zero));
        CHECK(testsupport::pla_levels(net, s1, s0, a).first == Logic::Zero);
    }
}

TEST_CASE("OR hole on an empty product row is inert") {
    HolePattern p;
    p.or_plane[0][2] = true;
    Netlist net = expand_pla(p);
    for (int row = 0; row < 8; ++row) {
        CHECK(eval_pattern(p, row & 4, row & 2, row & 1).first == false);
        CHECK(testsupport::pla_levels(net, row & 4, row & 2, row & 1).first == Logic::Zero);
    }
}

TEST_CASE("membrane file format") {
    const std::string expected =
        "MEMBRANE v1\n"
        "literals: S1 S1n S0 S0n A An\n"
        "AND P1: S0n\n"
        "AND P2:\n"
        "AND P3:\n"
        "AND P4:\n"
        "OR N1:\n"
        "OR N0: P1\n";
    HolePattern p;
    p.and_plane[0][S0n] = true;
    p.or_plane[1][0] = true;
    CHECK(encode_membrane(p) == expected);
    CHECK(decode_membrane(expected) == p);
    CHECK(decode_membrane(encode_membrane(HolePattern{})) == HolePattern{});
}

TEST_CASE("membrane round trip on random patterns") {
    std::mt19937 rng(2);
    for (int i = 0; i < 200; ++i) {
        HolePattern p = testsupport::random_pattern(rng);
        CHECK(decode_membrane(encode_membrane(p)) == p);
    }
}

TEST_CASE("membrane decoding errors") {
    const std::string base = encode_membrane(HolePattern{});
    auto replace_line = [&](int line, const std::string& text) {
        std::string out;
        std::size_t pos = 0;
        for (int i = 1; pos < base.size(); ++i) {
            std::size_t end = base.find('\n', pos);
            out += (i == line ? text : base.substr(pos, end - pos)) + "\n";
            pos = end + 1;
        }
        return out;
    };
    SUBCASE("fan-in names the row") {
        try {
            decode_membrane(replace_line(4, "AND P2: S1 S0 A An S0n"));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.message() == "AND P2: fan-in 5 > 3");
            CHECK(e.line() == 4);
        }
    }
    SUBCASE("unknown token") {
        CHECK_THROWS_WITH_AS(decode_membrane(replace_line(3, "AND P1: S2")), doctest::Contains("unknown token 'S2'"),
                             ParseError);
        CHECK_THROWS_AS(decode_membrane(replace_line(8, "OR N0: P5")), ParseError);
    }
    SUBCASE("wrong dimensions") {
        CHECK_THROWS_AS(decode_membrane(base + "AND P5:\n"), ParseError);
        CHECK_THROWS_AS(decode_membrane(replace_line(6, "OR N1:")), ParseError);
        CHECK_THROWS_AS(decode_membrane(replace_line(2, "literals: S1 S0")), ParseError);
    }
    SUBCASE("header") {
        CHECK_THROWS_AS(decode_membrane(replace_line(1, "MEMBRANE v2")), ParseError);
    }
    SUBCASE("duplicate hole") {
        CHECK_THROWS_AS(decode_membrane(replace_line(3, "AND P1: A A")), ParseError);
    }
}

TEST_CASE("capacity check on patterns") {
    HolePattern p;
    p.and_plane[1] = {true, false, true, false, true, true};
    CHECK_THROWS_WITH_AS(p.check(), "AND row P2: fan-in 4 > 3", CapacityError);
    CHECK_THROWS_AS(expand_pla(p), CapacityError);
}

TEST_CASE("valve-level PLA agrees with the Boolean evaluation on random patterns") {
    std::mt19937 rng(20240611);
    int compared = 0;
    for (int i = 0; i < 200; ++i) {
        HolePattern p = testsupport::random_pattern(rng);
        Netlist net = expand_pla(p);
        for (int row = 0; row < 8; ++row) {
            bool s1 = row & 4, s0 = row & 2, a = row & 1;
            auto want = eval_pattern(p, s1, s0, a);
            auto got = testsupport::pla_levels(net, s1, s0, a);
            CHECK(got.first == (want.first ? Logic::One : Logic::Zero));
            CHECK(got.second == (want.second ? Logic::One : Logic::Zero));
            ++compared;
        }
    }
    CHECK(compared == 1600);
}
