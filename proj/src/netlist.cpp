#include "pneulogic/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "pneulogic/error.hpp"

namespace pneulogic {

// ---- Netlist ---------------------------------------------------------------

std::optional<std::size_t> Netlist::node_index(std::string_view id) const {
    auto it = node_lookup_.find(std::string(id));
    if (it == node_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> Netlist::valve_index(std::string_view id) const {
    auto it = valve_lookup_.find(std::string(id));
    if (it == valve_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Node& Netlist::node(std::string_view id) const {
    auto idx = node_index(id);
    if (!idx) {
        throw NetlistError("undefined node '" + std::string(id) + "'");
    }
    return nodes_[*idx];
}

bool structurally_equal(const Netlist& a, const Netlist& b) {
    auto same_node = [](const Node& x, const Node& y) {
        return x.id == y.id && x.rail == y.rail &&
               (x.is_rail() || (x.capacitance == y.capacitance && x.initial_pressure == y.initial_pressure));
    };
    auto same_channel = [](const Channel& x, const Channel& y) {
        return x.a == y.a && x.b == y.b && x.conductance == y.conductance;
    };
    auto same_valve = [](const Valve& x, const Valve& y) {
        return x.id == y.id && x.gate == y.gate && x.source == y.source && x.drain == y.drain &&
               x.g_open == y.g_open && x.theta_open == y.theta_open && x.theta_close == y.theta_close &&
               x.initially_open == y.initially_open;
    };
    return std::equal(a.nodes().begin(), a.nodes().end(), b.nodes().begin(), b.nodes().end(), same_node) &&
           std::equal(a.channels().begin(), a.channels().end(), b.channels().begin(), b.channels().end(),
                      same_channel) &&
           std::equal(a.valves().begin(), a.valves().end(), b.valves().begin(), b.valves().end(), same_valve) &&
           a.probes() == b.probes() && a.metadata() == b.metadata();
}

// ---- NetlistBuilder --------------------------------------------------------

NetlistBuilder NetlistBuilder::with_rails() {
    NetlistBuilder b;
    b.add_rail("VAC", Rail::Vacuum);
    b.add_rail("ATM", Rail::Atmosphere);
    return b;
}

void NetlistBuilder::add_rail(std::string id, Rail kind) {
    if (kind == Rail::None) {
        throw NetlistError("rail '" + id + "' needs a kind");
    }
    auto& slot = kind == Rail::Vacuum ? vacuum_ : atmosphere_;
    if (slot) {
        throw NetlistError(std::string("second ") + (kind == Rail::Vacuum ? "vacuum" : "atmosphere") +
                           " rail '" + id + "' (already have '" + *slot + "')");
    }
    if (has_node(id)) {
        throw NetlistError("duplicate id '" + id + "'");
    }
    slot = id;
    net_.node_lookup_.emplace(id, net_.nodes_.size());
    net_.nodes_.push_back(Node{std::move(id), 1.0, kind, kind == Rail::Vacuum ? kVacuumPressure : kAtmospherePressure});
}

void NetlistBuilder::add_node(std::string id, double capacitance, double initial_pressure) {
    if (id.empty()) {
        throw NetlistError("empty node id");
    }
    if (has_node(id)) {
        throw NetlistError("duplicate id '" + id + "'");
    }
    net_.node_lookup_.emplace(id, net_.nodes_.size());
    net_.nodes_.push_back(Node{std::move(id), capacitance, Rail::None, initial_pressure});
}

void NetlistBuilder::ensure_node(const std::string& id, double capacitance) {
    if (!has_node(id)) {
        add_node(id, capacitance);
    }
}

void NetlistBuilder::add_channel(std::string a, std::string b, double conductance) {
    net_.channels_.push_back(Channel{std::move(a), std::move(b), conductance});
}

void NetlistBuilder::add_valve(Valve v) {
    if (v.id.empty()) {
        throw NetlistError("empty valve id");
    }
    if (has_valve(v.id)) {
        throw NetlistError("duplicate id '" + v.id + "'");
    }
    net_.valve_lookup_.emplace(v.id, net_.valves_.size());
    net_.valves_.push_back(std::move(v));
}

void NetlistBuilder::add_probe(Probe::Kind kind, std::string id) {
    Probe p{kind, std::move(id)};
    if (std::find(net_.probes_.begin(), net_.probes_.end(), p) == net_.probes_.end()) {
        net_.probes_.push_back(std::move(p));
    }
}

void NetlistBuilder::set_metadata(std::string key, std::string value) {
    for (auto& [k, v] : net_.metadata_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    net_.metadata_.emplace_back(std::move(key), std::move(value));
}

bool NetlistBuilder::has_node(std::string_view id) const {
    return net_.node_lookup_.count(std::string(id)) != 0;
}

bool NetlistBuilder::has_valve(std::string_view id) const {
    return net_.valve_lookup_.count(std::string(id)) != 0;
}

const std::string& NetlistBuilder::vacuum_id() const {
    if (!vacuum_) {
        throw NetlistError("missing vacuum rail");
    }
    return *vacuum_;
}

const std::string& NetlistBuilder::atmosphere_id() const {
    if (!atmosphere_) {
        throw NetlistError("missing atmosphere rail");
    }
    return *atmosphere_;
}

void NetlistBuilder::include(const Netlist& other, const std::string& prefix, bool share_nodes) {
    std::unordered_map<std::string, std::string> rename;
    for (const Node& n : other.nodes()) {
        if (n.is_rail()) {
            auto& slot = n.rail == Rail::Vacuum ? vacuum_ : atmosphere_;
            if (!slot) {
                add_rail(n.id, n.rail);
            }
            rename[n.id] = *slot;
            continue;
        }
        std::string id = prefix + n.id;
        if (has_node(id)) {
            if (!share_nodes) {
                throw NetlistError("id collision after prefixing: '" + id + "'");
            }
        } else {
            add_node(id, n.capacitance, n.initial_pressure);
        }
        rename[n.id] = id;
    }
    auto mapped = [&](const std::string& id) {
        auto it = rename.find(id);
        return it == rename.end() ? prefix + id : it->second;
    };
    for (const Channel& c : other.channels()) {
        add_channel(mapped(c.a), mapped(c.b), c.conductance);
    }
    for (const Valve& v : other.valves()) {
        Valve copy = v;
        copy.id = prefix + v.id;
        if (has_valve(copy.id)) {
            throw NetlistError("id collision after prefixing: '" + copy.id + "'");
        }
        copy.gate = mapped(v.gate);
        copy.source = mapped(v.source);
        copy.drain = mapped(v.drain);
        add_valve(std::move(copy));
    }
    for (const Probe& p : other.probes()) {
        add_probe(p.kind, p.kind == Probe::Kind::Node ? mapped(p.id) : prefix + p.id);
    }
    for (const auto& [k, v] : other.metadata()) {
        bool present = std::any_of(net_.metadata_.begin(), net_.metadata_.end(),
                                   [&](const auto& kv) { return kv.first == k; });
        if (!present) {
            net_.metadata_.emplace_back(k, v);
        }
    }
}

Netlist NetlistBuilder::build() const {
    if (!vacuum_) {
        throw NetlistError("missing vacuum rail");
    }
    if (!atmosphere_) {
        throw NetlistError("missing atmosphere rail");
    }
    auto require = [&](const std::string& id) {
        if (!has_node(id)) {
            throw NetlistError("undefined node '" + id + "'");
        }
    };
    for (const Channel& c : net_.channels_) {
        require(c.a);
        require(c.b);
    }
    for (const Valve& v : net_.valves_) {
        require(v.gate);
        require(v.source);
        require(v.drain);
    }
    for (const Probe& p : net_.probes_) {
        if (p.kind == Probe::Kind::Node) {
            require(p.id);
        } else if (!has_valve(p.id)) {
            throw NetlistError("undefined valve '" + p.id + "'");
        }
    }
    Netlist out = net_;
    out.vacuum_ = *net_.node_index(*vacuum_);
    out.atmosphere_ = *net_.node_index(*atmosphere_);
    return out;
}

// ---- text format -----------------------------------------------------------

namespace {

std::vector<Directive::Token> tokenize(std::string_view line) {
    std::vector<Directive::Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i >= line.size() || line[i] == '#') {
            break;
        }
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '#') {
            ++i;
        }
        out.push_back({std::string(line.substr(start, i - start)), start + 1});
    }
    return out;
}

struct PendingRef {
    std::string id;
    std::size_t line;
    std::size_t column;
    bool valve = false;
};

Rail parse_rail_kind(const Directive::Token& t, std::size_t line) {
    if (t.text == "vacuum") {
        return Rail::Vacuum;
    }
    if (t.text == "atmosphere") {
        return Rail::Atmosphere;
    }
    throw ParseError("unknown rail kind '" + t.text + "'", line, t.column);
}

void expect_args(const Directive& d, std::size_t min, std::size_t max) {
    if (d.args.size() < min) {
        throw ParseError("'" + d.keyword + "' expects at least " + std::to_string(min) + " argument(s)", d.line, 1);
    }
    if (d.args.size() > max) {
        throw ParseError("unexpected token '" + d.args[max].text + "'", d.line, d.args[max].column);
    }
}

}  // namespace

std::map<std::string, Directive::Token> Directive::key_values() const {
    std::map<std::string, Token> out;
    for (const Token& t : args) {
        auto eq = t.text.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ParseError("expected key=value, got '" + t.text + "'", line, t.column);
        }
        std::string key = t.text.substr(0, eq);
        Token value{t.text.substr(eq + 1), t.column + eq + 1};
        if (!out.emplace(key, value).second) {
            throw ParseError("duplicate key '" + key + "'", line, t.column);
        }
    }
    return out;
}

double parse_float(const Directive::Token& token, std::size_t line) {
    double value = 0.0;
    const char* first = token.text.data();
    const char* last = first + token.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc() || ptr != last || token.text.empty() || !std::isfinite(value) ||
        std::isalpha(static_cast<unsigned char>(token.text.front()))) {
        throw ParseError("malformed number '" + token.text + "'", line, token.column);
    }
    return value;
}

std::string format_float(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

Netlist parse_netlist(std::string_view text, const DirectiveHandler& extension) {
    NetlistBuilder builder;
    std::vector<PendingRef> refs;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        auto tokens = tokenize(line);
        if (tokens.empty()) {
            continue;
        }
        Directive d;
        d.line = line_no;
        d.keyword = tokens.front().text;
        d.args.assign(tokens.begin() + 1, tokens.end());
        const std::size_t anchor = d.args.empty() ? tokens.front().column : d.args.front().column;

        try {
            if (d.keyword == "rail") {
                expect_args(d, 2, 2);
                builder.add_rail(d.args[0].text, parse_rail_kind(d.args[1], line_no));
            } else if (d.keyword == "node") {
                expect_args(d, 1, 3);
                Directive rest = d;
                rest.args.erase(rest.args.begin());
                double cap = 1.0;
                double p0 = 0.0;
                for (const auto& [k, v] : rest.key_values()) {
                    if (k == "cap") {
                        cap = parse_float(v, line_no);
                    } else if (k == "p0") {
                        p0 = parse_float(v, line_no);
                        if (p0 < 0.0 || p0 > 1.0) {
                            throw ParseError("p0 outside [0, 1]", line_no, v.column);
                        }
                    } else {
                        throw ParseError("unknown key '" + k + "'", line_no, v.column - k.size() - 1);
                    }
                }
                builder.add_node(d.args[0].text, cap, p0);
            } else if (d.keyword == "chan") {
                expect_args(d, 3, 3);
                Directive rest = d;
                rest.args.erase(rest.args.begin(), rest.args.begin() + 2);
                auto kv = rest.key_values();
                auto g = kv.find("g");
                if (g == kv.end()) {
                    throw ParseError("chan requires g=<float>", line_no, d.args[2].column);
                }
                for (const auto& [k, v] : kv) {
                    if (k != "g") {
                        throw ParseError("unknown key '" + k + "'", line_no, v.column - k.size() - 1);
                    }
                }
                refs.push_back({d.args[0].text, line_no, d.args[0].column});
                refs.push_back({d.args[1].text, line_no, d.args[1].column});
                builder.add_channel(d.args[0].text, d.args[1].text, parse_float(g->second, line_no));
            } else if (d.keyword == "valve") {
                expect_args(d, 4, 8);
                Directive rest = d;
                rest.args.erase(rest.args.begin());
                auto kv = rest.key_values();
                Valve v;
                v.id = d.args[0].text;
                for (const char* required : {"gate", "src", "drn"}) {
                    if (!kv.count(required)) {
                        throw ParseError(std::string("valve requires ") + required + "=<node>", line_no,
                                         d.args[0].column);
                    }
                }
                for (const auto& [k, t] : kv) {
                    if (k == "gate" || k == "src" || k == "drn") {
                        (k == "gate" ? v.gate : k == "src" ? v.source : v.drain) = t.text;
                        refs.push_back({t.text, line_no, t.column});
                    } else if (k == "g") {
                        v.g_open = parse_float(t, line_no);
                    } else if (k == "topen") {
                        v.theta_open = parse_float(t, line_no);
                    } else if (k == "tclose") {
                        v.theta_close = parse_float(t, line_no);
                    } else if (k == "init") {
                        if (t.text != "open" && t.text != "closed") {
                            throw ParseError("init must be open or closed", line_no, t.column);
                        }
                        v.initially_open = t.text == "open";
                    } else {
                        throw ParseError("unknown key '" + k + "'", line_no, t.column - k.size() - 1);
                    }
                }
                builder.add_valve(std::move(v));
            } else if (d.keyword == "probe") {
                expect_args(d, 2, 2);
                if (d.args[0].text == "node") {
                    refs.push_back({d.args[1].text, line_no, d.args[1].column});
                    builder.add_probe(Probe::Kind::Node, d.args[1].text);
                } else if (d.args[0].text == "valve") {
                    refs.push_back({d.args[1].text, line_no, d.args[1].column, true});
                    builder.add_probe(Probe::Kind::Valve, d.args[1].text);
                } else {
                    throw ParseError("probe kind must be node or valve", line_no, d.args[0].column);
                }
            } else if (d.keyword == "meta") {
                expect_args(d, 1, 1);
                auto kv = d.key_values();
                builder.set_metadata(kv.begin()->first, kv.begin()->second.text);
            } else if (!extension || !extension(d, builder)) {
                throw ParseError("unknown directive '" + d.keyword + "'", line_no, tokens.front().column);
            }
        } catch (const NetlistError& e) {
            throw ParseError(e.what(), line_no, anchor);
        }
    }

    for (const PendingRef& r : refs) {
        bool ok = r.valve ? builder.has_valve(r.id) : builder.has_node(r.id);
        if (!ok) {
            throw ParseError(std::string("undefined ") + (r.valve ? "valve" : "node") + " '" + r.id + "'", r.line,
                             r.column);
        }
    }
    try {
        return builder.build();
    } catch (const NetlistError& e) {
        throw ParseError(e.what());
    }
}

std::string serialize(const Netlist& net) {
    std::ostringstream out;
    for (const auto& [k, v] : net.metadata()) {
        out << "meta " << k << '=' << v << '\n';
    }
    for (const Node& n : net.nodes()) {
        if (n.is_rail()) {
            out << "rail " << n.id << ' ' << (n.rail == Rail::Vacuum ? "vacuum" : "atmosphere") << '\n';
        }
    }
    for (const Node& n : net.nodes()) {
        if (!n.is_rail()) {
            out << "node " << n.id << " cap=" << format_float(n.capacitance);
            if (n.initial_pressure != 0.0) {
                out << " p0=" << format_float(n.initial_pressure);
            }
            out << '\n';
        }
    }
    for (const Channel& c : net.channels()) {
        out << "chan " << c.a << ' ' << c.b << " g=" << format_float(c.conductance) << '\n';
    }
    for (const Valve& v : net.valves()) {
        out << "valve " << v.id << " gate=" << v.gate << " src=" << v.source << " drn=" << v.drain
            << " g=" << format_float(v.g_open) << " topen=" << format_float(v.theta_open)
            << " tclose=" << format_float(v.theta_close);
        if (v.initially_open) {
            out << " init=open";
        }
        out << '\n';
    }
    for (const Probe& p : net.probes()) {
        out << "probe " << (p.kind == Probe::Kind::Node ? "node " : "valve ") << p.id << '\n';
    }
    return out.str();
}

// ---- validation ------------------------------------------------------------

bool ValidationReport::has_errors() const {
    return std::any_of(entries.begin(), entries.end(),
                       [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; });
}

std::string ValidationReport::to_string() const {
    std::string out;
    for (const Diagnostic& d : entries) {
        out += d.severity == Diagnostic::Severity::Error ? "error: " : "warning: ";
        out += d.message;
        out += '\n';
    }
    return out;
}

ValidationReport validate(const Netlist& net) {
    ValidationReport report;
    auto add = [&](Diagnostic::Severity s, std::string code, std::string message) {
        report.entries.push_back({s, std::move(code), std::move(message)});
    };
    using S = Diagnostic::Severity;

    const std::size_t n = net.nodes().size();
    std::vector<bool> touched(n, false);     // any channel end, valve terminal or gate
    std::vector<bool> conductive(n, false);  // channel end or valve terminal
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };

    for (const Node& node : net.nodes()) {
        if (!node.is_rail() && !(node.capacitance > 0.0)) {
            add(S::Error, "capacitance", "node '" + node.id + "' has non-positive capacitance");
        }
    }
    for (const Channel& c : net.channels()) {
        auto a = *net.node_index(c.a);
        auto b = *net.node_index(c.b);
        touched[a] = touched[b] = conductive[a] = conductive[b] = true;
        if (a == b) {
            add(S::Error, "self-channel", "channel connects '" + c.a + "' to itself");
        }
        if (!(c.conductance > 0.0)) {
            add(S::Error, "conductance", "channel " + c.a + "-" + c.b + " has non-positive conductance");
        }
        unite(a, b);
    }
    for (const Valve& v : net.valves()) {
        auto g = *net.node_index(v.gate);
        auto s = *net.node_index(v.source);
        auto d = *net.node_index(v.drain);
        touched[g] = touched[s] = touched[d] = true;
        conductive[s] = conductive[d] = true;
        if (!(v.theta_close < v.theta_open)) {
            add(S::Error, "hysteresis", "valve '" + v.id + "': hysteresis order violated (tclose " +
                                            format_float(v.theta_close) + " >= topen " +
                                            format_float(v.theta_open) + ")");
        }
        if (!(v.theta_close > 0.0) || !(v.theta_open < 1.0)) {
            add(S::Error, "threshold-range", "valve '" + v.id + "': thresholds must lie in (0, 1)");
        }
        if (!(v.g_open > 0.0)) {
            add(S::Error, "conductance", "valve '" + v.id + "' has non-positive open conductance");
        }
        if (g != net.atmosphere_index()) {
            unite(s, d);
        }
    }

    const std::size_t vac_root = find(net.vacuum_index());
    const std::size_t atm_root = find(net.atmosphere_index());
    // Islands joined only by valves are pass networks (dynamic storage fed
    // from an input); an island held together by channels has nothing to
    // define its pressure.
    std::vector<bool> passive_island(n, false);
    for (const Channel& c : net.channels()) {
        passive_island[find(*net.node_index(c.a))] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Node& node = net.nodes()[i];
        if (node.is_rail()) {
            continue;
        }
        if (!touched[i]) {
            add(S::Warning, "dangling", "dangling node '" + node.id + "'");
        } else if (conductive[i] && find(i) != vac_root && find(i) != atm_root && passive_island[find(i)]) {
            add(S::Warning, "unreachable", "unreachable node '" + node.id + "' (no path to a rail)");
        }
    }
    return report;
}

Netlist merge(const Netlist& a, const Netlist& b, const std::string& prefix) {
    NetlistBuilder builder;
    builder.include(a, "");
    if (!b.nodes().empty()) {
        builder.include(b, prefix);
    }
    return builder.build();
}

}  // namespace pneulogic
