#pragma once

// Gate-level macros expanded into valve-level sub-netlists.
//
//   NOT        1 valve (gate=in, out->ATM) + pull-up channel VAC->out
//   NANDk      k series valves out->...->ATM, k-1 internal nodes, pull-up
//   BUF        two chained NOTs
//   INDICATOR  probed NOT-shaped readout; the monitored line only sees a gate
//   DFF        negative-edge leader/follower register with dynamic storage:
//              6 valves plus a clock inverter that may be shared
//   RING_OSC   odd number of NOTs in a loop
//   BUTTON     pull-up to VAC shorted to ATM through an uncovered port

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pneulogic/netlist.hpp"

namespace pneulogic {

enum class CellKind { Not, Nand, Buf, Indicator, Dff, RingOsc, Button };

struct CellParams {
    std::optional<double> g_pullup;
    std::optional<double> g_open;
    std::optional<double> capacitance;
    std::optional<double> theta_open;
    std::optional<double> theta_close;

    Defaults resolve(const Defaults& base) const;
};

struct CellSpec {
    CellKind kind = CellKind::Not;
    int size = 0;  // NAND fan-in or ring stage count
    std::map<std::string, std::string> ports;
    std::vector<std::string> taps;  // ring oscillator only
    CellParams params;
    std::string name;  // prefix for internal ids; derived from ports when empty
};

inline constexpr int kMaxNandFanin = 3;

// All add_* functions write into an existing builder that already has rails.
// Port nodes are declared on demand with the default capacitance; internal
// node and valve ids derive from the output port name.
void add_not(NetlistBuilder& b, const std::string& in, const std::string& out, const Defaults& d = {});
void add_nand(NetlistBuilder& b, std::span<const std::string> inputs, const std::string& out,
              const Defaults& d = {});
void add_buf(NetlistBuilder& b, const std::string& in, const std::string& out, const Defaults& d = {});
void add_indicator(NetlistBuilder& b, const std::string& signal, const std::string& out, const Defaults& d = {});

struct DffPorts {
    std::string d;
    std::string clk;
    std::string q;
    std::string qbar;
    // Inverted clock from a shared inverter; the flip-flop builds its own
    // inverter when unset.
    std::optional<std::string> clk_inv;
};

// Storage node ids inside a flip-flop, derived from the q port.
struct DffNodes {
    std::string leader;    // dynamic storage written while clk is high
    std::string restored;  // leader after two inverters
    std::string follower;  // dynamic storage written while clk is low
    std::string clk_inv;
};
DffNodes dff_nodes(const DffPorts& ports);

void add_dff(NetlistBuilder& b, const DffPorts& ports, const Defaults& d = {});

// Stage k's input is stage k-1's output. Tap i exposes stage (2*i mod n),
// so taps rise in list order. Stage outputs start alternating 1/0 from
// stage 0 to place the ring in its single-wave mode.
void add_ring_osc(NetlistBuilder& b, int stages, std::span<const std::string> taps, const std::string& name = "",
                  const Defaults& d = {});
int ring_tap_stage(int stages, int tap);

struct ButtonPorts {
    std::string out;
    std::string control;  // drive 1.0 while uncovered, 0.0 while covered
    std::string valve;
};
ButtonPorts button_ports(const std::string& out);
ButtonPorts add_button(NetlistBuilder& b, const std::string& out, const Defaults& d = {});

// Stand-alone fragments (rails VAC/ATM included).
Netlist expand_cell(const CellSpec& spec, const Defaults& d = {});
void add_cell(NetlistBuilder& b, const CellSpec& spec, const Defaults& d = {});
Netlist expand_dff(const DffPorts& ports, const Defaults& d = {});
Netlist expand_ring_osc(int stages, const std::vector<std::string>& taps, const Defaults& d = {});

struct ButtonFragment {
    Netlist netlist;
    ButtonPorts ports;
};
ButtonFragment expand_button(const std::string& out, const Defaults& d = {});

// `cell KIND port=node ...` lines for parse_netlist. KIND is NOT, NAND2,
// NAND3, BUF, INDICATOR, DFF, RING<n> or BUTTON; g/gpu/cap/topen/tclose
// override element parameters.
DirectiveHandler cell_directives(const Defaults& d = {});

// parse_netlist with cell lines enabled.
Netlist parse_circuit(std::string_view text, const Defaults& d = {});

}  // namespace pneulogic
