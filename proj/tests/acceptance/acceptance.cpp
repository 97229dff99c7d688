// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "pla_support.hpp"
#include "programs.hpp"
#include "pneulogic/chip.hpp"
#include "pneulogic/cosim.hpp"
#include "pneulogic/stdcells.hpp"

using namespace pneulogic;

namespace {

// Pinned tolerances and budgets.
constexpr int kRandomPatterns = 200;
constexpr double kPlaBudgetSeconds = 60.0;
constexpr double kDilutionRelTol = 0.01;
constexpr double kMassTol = 1e-9;
constexpr double kDilutionBudgetSeconds = 120.0;
constexpr double kFullR2Tol = 1e-9;
constexpr double kHalfR2Tol = 1e-6;
constexpr int kFlushDurations = 11;  // 0..10 cycles of the flush step
constexpr double kPeriodShiftTol = 0.05;
constexpr double kRestoredLow = 0.01;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome pla_faithfulness() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(2024);
    int agree = 0, total = 0;
    for (int i = 0; i < kRandomPatterns; ++i) {
        const HolePattern p = testsupport::random_pattern(rng);
        const Netlist net = expand_pla(p);
        for (int row = 0; row < 8; ++row) {
            const bool s1 = row & 4, s0 = row & 2, a = row & 1;
            const auto [r1, r0] = eval_pattern(p, s1, s0, a);
            const auto [n1, n0] = pla_outputs(net, s1, s0, a);
            agree += (n1 == (r1 ? Logic::One : Logic::Zero) && n0 == (r0 ? Logic::One : Logic::Zero)) ? 1 : 0;
            ++total;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << agree << "/" << total << " rows agree over " << kRandomPatterns << " patterns in " << secs << " s";
    return {agree == total && secs < kPlaBudgetSeconds, d.str()};
}

Outcome three_programs() {
    struct Case {
        const char* file;
        TransitionTable oracle;
    };
    const std::vector<Case> cases{{"counter_reset.fsm", testsupport::counter_reset_oracle()},
                                  {"counter_hold.fsm", testsupport::counter_hold_oracle()},
                                  {"phase_toggle.fsm", testsupport::phase_toggle_oracle()}};
    bool ok = true;
    std::ostringstream d;
    for (const Case& c : cases) {
        const Compilation comp = compile(testsupport::read_program(c.file));
        VerifyOptions o;
        o.search_min_period = false;
        const VerifyReport r = verify(comp.pattern, c.oracle, o);
        const std::size_t passed = r.rows.size() - r.failures().size();
        const bool table_ok = comp.table == c.oracle;
        ok = ok && table_ok && r.all_pass();
        d << c.file << " " << passed << "/8" << (table_ok ? "" : " (table differs)") << "; ";
    }
    const Compilation hold = compile(testsupport::read_program("counter_hold.fsm"));
    const std::size_t rows = hold.equations.distinct_products();
    ok = ok && rows == 4;
    d << "counter_hold uses " << rows << " product rows";
    return {ok, d.str()};
}

Outcome structural_counts() {
    const std::size_t pla = expand_pla(HolePattern{}).valves().size();
    NetlistBuilder b = NetlistBuilder::with_rails();
    add_not(b, "clk", "clkn");
    add_dff(b, DffPorts{"d1", "clk", "q1", "q1b", std::string("clkn")});
    add_dff(b, DffPorts{"d0", "clk", "q0", "q0b", std::string("clkn")});
    const std::size_t reg = b.build().valves().size();
    const std::size_t ring = expand_ring_osc(5, {"p0", "p1", "p2"}).valves().size();
    std::ostringstream d;
    d << "PLA " << pla << ", register " << reg << ", 5-stage ring " << ring;
    return {pla == 18 && reg == 13 && ring == 5, d.str()};
}

Outcome loop_machine() {
    const Compilation comp = compile(testsupport::read_program("loop_branch.fsm"));
    const FsmChip chip = build_chip(comp.pattern);
    VerifyOptions o;
    o.search_min_period = false;
    const auto loop_of = [](int s) { return (s == 0b00 || s == 0b11) ? 0 : 1; };
    int good = 0;
    std::ostringstream d;
    for (const TransitionCheck& row : check_all(chip, comp.table, o.period, o)) {
        // judged on the observed valve-level state alone
        bool ok = row.observed.has_value() && !row.d_unknown_at_edge && !row.qbar_mismatch;
        if (ok) {
            const int next = *row.observed;
            ok = row.a ? (next != row.state && loop_of(next) == loop_of(row.state))
                       : (loop_of(next) != loop_of(row.state));
        }
        good += ok ? 1 : 0;
        d << state_label(row.state) << "/" << row.a << "->"
          << (row.observed ? state_label(*row.observed) : std::string("xx")) << " ";
    }
    d << "(" << good << "/8)";
    return {good == 8, d.str()};
}

Outcome serial_dilution() {
    const auto t0 = std::chrono::steady_clock::now();
    EmbeddedSession s(compile(testsupport::read_program("dilution.fsm")),
                      parse_plant_config(testsupport::read_program("dilution.plant")));
    s.run_until(1000.0);
    const double secs = seconds_since(t0);
    const DilutionLadder& l = *s.ladder();
    const std::vector<double> want{1.0, 0.5, 0.25, 0.125, 0.0625};
    bool ok = secs < kDilutionBudgetSeconds;
    std::ostringstream d;
    d << "rungs";
    for (std::size_t i = 0; i < want.size(); ++i) {
        const double c = l.concentrations()[i];
        ok = ok && std::abs(c - want[i]) <= kDilutionRelTol * want[i];
        d << " " << c;
    }
    const double mass_err = std::abs(l.solute() - (l.initial_solute() + l.refill_input()));
    ok = ok && mass_err <= kMassTol;
    d << "; mass error " << mass_err << "; " << secs << " s";
    return {ok, d.str()};
}

Outcome rotary_mixer() {
    EmbeddedSession s(compile(testsupport::read_program("mixer.fsm")),
                      parse_plant_config(testsupport::read_program("mixer.plant")));
    s.run_script(parse_script(testsupport::read_program("mixer_presses.tsv")), 600.0);
    const double full = s.mixer()->fraction("R2");

    auto after_flush = [](int cycles) {
        RotaryMixer m;
        m.run(0b10, 20);
        m.run(0b11, 10);
        m.run(0b01, cycles);
        m.run(0b00, 30);
        return m.fraction("R2");
    };
    const double skipped = after_flush(0);
    bool monotone = true;
    double last = -1.0;
    std::ostringstream curve;
    for (int c = 0; c < kFlushDurations; ++c) {
        const double f = after_flush(c);
        monotone = monotone && f > last;
        last = f;
        curve << (c ? "," : "") << f;
    }
    std::ostringstream d;
    d << "scripted run R2=" << full << " (" << s.transitions() << " button steps); skipped flush R2=" << skipped
      << "; flush 0.." << kFlushDurations - 1 << " cycles -> " << curve.str();
    const bool ok = std::abs(full - 1.0) <= kFullR2Tol && std::abs(skipped - 0.5) <= kHalfR2Tol && monotone &&
                    s.transitions() == 3;
    return {ok, d.str()};
}

Outcome clock_reporting() {
    bool ok = true;
    std::ostringstream d;
    for (const char* file :
         {"counter_reset.fsm", "counter_hold.fsm", "phase_toggle.fsm", "loop_branch.fsm", "mixer.fsm", "dilution.fsm"}) {
        const Compilation comp = compile(testsupport::read_program(file));
        VerifyOptions coarse;
        VerifyOptions fine;
        fine.dt = coarse.dt / 2.0;
        const VerifyReport a = verify(comp.pattern, comp.table, coarse);
        const VerifyReport b = verify(comp.pattern, comp.table, fine);
        if (!a.min_period || !b.min_period) {
            ok = false;
            d << file << " no period; ";
            continue;
        }
        const double shift = std::abs(*b.min_period - *a.min_period) / *a.min_period;
        ok = ok && shift < kPeriodShiftTol;
        d << file << " " << *a.min_period << "/" << *b.min_period << " (" << 100.0 * shift << "%); ";
    }
    return {ok, d.str()};
}

Outcome restoration() {
    NetlistBuilder b = NetlistBuilder::with_rails();
    add_not(b, "in", "mid");
    add_not(b, "mid", "out");
    const Netlist net = b.build();
    int good = 0;
    for (int i = 0; i < 64; ++i) {
        const double p = i < 32 ? 0.65 * i / 31.0 : 0.75 + 0.25 * (i - 32) / 31.0;
        const QuasiStaticResult r = run_quasistatic(net, NodePressures{{"in", p}});
        const double mid = r.pressure_of(net, "mid");
        const double out = r.pressure_of(net, "out");
        const bool ok = p >= 0.75 ? (mid <= kRestoredLow && out == 1.0) : (mid == 1.0 && out <= kRestoredLow);
        good += ok ? 1 : 0;
    }
    std::ostringstream d;
    d << good << "/64 grid inputs restored";
    return {good == 64, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"PLA valve-level output matches the Boolean pattern", pla_faithfulness},
        {"reset/hold/phase programs verify on the valve-level chip", three_programs},
        {"structural valve counts", structural_counts},
        {"two-loop machine: loop alternation and loop switching", loop_machine},
        {"serial dilution co-simulation", serial_dilution},
        {"rotary mixer compositions", rotary_mixer},
        {"minimum clock period is stable under dt halving", clock_reporting},
        {"double inversion restores logic levels", restoration},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
