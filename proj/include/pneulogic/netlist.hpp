#pragma once

// Valve/channel/node level description of a pneumatic circuit.
//
// Pressures are normalized: 0.0 is atmosphere, 1.0 is full vacuum. Vacuum is
// logic 1. Valves are normally closed, symmetric between source and drain,
// and conduct nothing while closed.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pneulogic {

enum class Rail { None, Vacuum, Atmosphere };

inline constexpr double kVacuumPressure = 1.0;
inline constexpr double kAtmospherePressure = 0.0;

// Element defaults, overridable per element and through the config file.
struct Defaults {
    double g_pullup = 1.0;
    double g_open = 100.0;
    double capacitance = 1.0;
    double theta_open = 0.75;
    double theta_close = 0.65;
};

struct Node {
    std::string id;
    double capacitance = 1.0;
    Rail rail = Rail::None;
    double initial_pressure = 0.0;  // starting point for timed runs

    bool is_rail() const { return rail != Rail::None; }
    double rail_pressure() const { return rail == Rail::Vacuum ? kVacuumPressure : kAtmospherePressure; }
};

struct Channel {
    std::string a;
    std::string b;
    double conductance = 1.0;
};

struct Valve {
    std::string id;
    std::string gate;
    std::string source;
    std::string drain;
    double g_open = 100.0;
    double theta_open = 0.75;
    double theta_close = 0.65;
    bool initially_open = false;
};

struct Probe {
    enum class Kind { Node, Valve };
    Kind kind = Kind::Node;
    std::string id;

    bool operator==(const Probe&) const = default;
};

class NetlistBuilder;

// Immutable once built. Declaration order is preserved.
class Netlist {
public:
    Netlist() = default;

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Channel>& channels() const { return channels_; }
    const std::vector<Valve>& valves() const { return valves_; }
    const std::vector<Probe>& probes() const { return probes_; }
    const std::vector<std::pair<std::string, std::string>>& metadata() const { return metadata_; }

    std::optional<std::size_t> node_index(std::string_view id) const;
    std::optional<std::size_t> valve_index(std::string_view id) const;
    const Node& node(std::string_view id) const;  // throws NetlistError

    std::size_t vacuum_index() const { return vacuum_; }
    std::size_t atmosphere_index() const { return atmosphere_; }
    const std::string& vacuum_id() const { return nodes_[vacuum_].id; }
    const std::string& atmosphere_id() const { return nodes_[atmosphere_].id; }

    bool empty() const { return valves_.empty() && channels_.empty() && nodes_.size() <= 2; }

private:
    friend class NetlistBuilder;

    std::vector<Node> nodes_;
    std::vector<Channel> channels_;
    std::vector<Valve> valves_;
    std::vector<Probe> probes_;
    std::vector<std::pair<std::string, std::string>> metadata_;
    std::unordered_map<std::string, std::size_t> node_lookup_;
    std::unordered_map<std::string, std::size_t> valve_lookup_;
    std::size_t vacuum_ = 0;
    std::size_t atmosphere_ = 0;
};

bool structurally_equal(const Netlist& a, const Netlist& b);

// Incremental construction. Structural invariants (unique ids, resolved
// references, one rail of each kind) are checked by build(); parameter ranges
// are left to validate() so that bad values can be reported rather than
// rejected outright.
class NetlistBuilder {
public:
    NetlistBuilder() = default;

    // Builder pre-populated with rails "VAC" and "ATM".
    static NetlistBuilder with_rails();

    void add_rail(std::string id, Rail kind);
    void add_node(std::string id, double capacitance, double initial_pressure = 0.0);
    // Declares the node with `capacitance` unless it already exists.
    void ensure_node(const std::string& id, double capacitance);
    void add_channel(std::string a, std::string b, double conductance);
    void add_valve(Valve v);
    void add_probe(Probe::Kind kind, std::string id);
    void set_metadata(std::string key, std::string value);

    // Copies every element of `other` into this builder with non-rail ids
    // prefixed. other's rails are mapped onto this builder's rails. When
    // `share_nodes` is set, a prefixed node id that already exists is reused
    // instead of being reported as a collision.
    void include(const Netlist& other, const std::string& prefix, bool share_nodes = false);

    bool has_node(std::string_view id) const;
    bool has_valve(std::string_view id) const;
    const std::string& vacuum_id() const;
    const std::string& atmosphere_id() const;
    std::size_t valve_count() const { return net_.valves_.size(); }

    Netlist build() const;

private:
    Netlist net_;
    std::optional<std::string> vacuum_;
    std::optional<std::string> atmosphere_;
};

// ---- text format ---------------------------------------------------------

// One tokenized line of the netlist format, handed to extension handlers.
struct Directive {
    struct Token {
        std::string text;
        std::size_t column = 0;
    };
    std::size_t line = 0;
    std::string keyword;
    std::vector<Token> args;

    // key=value arguments; throws ParseError on a token without '=' or a
    // duplicated key.
    std::map<std::string, Token> key_values() const;
};

// Handles a directive the core grammar does not know. Returns false if the
// keyword is not recognized either.
using DirectiveHandler = std::function<bool(const Directive&, NetlistBuilder&)>;

Netlist parse_netlist(std::string_view text, const DirectiveHandler& extension = {});
std::string serialize(const Netlist& net);

// Parses a decimal float with optional exponent; throws ParseError.
double parse_float(const Directive::Token& token, std::size_t line);
std::string format_float(double value);

// ---- checks and composition ---------------------------------------------

struct Diagnostic {
    enum class Severity { Warning, Error };
    Severity severity = Severity::Warning;
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<Diagnostic> entries;

    bool empty() const { return entries.empty(); }
    bool has_errors() const;
    std::string to_string() const;
};

ValidationReport validate(const Netlist& net);

// Disjoint union: b's non-rail nodes, valves and probes get `prefix`
// prepended; rails are shared. Throws NetlistError on a collision.
Netlist merge(const Netlist& a, const Netlist& b, const std::string& prefix);

}  // namespace pneulogic
