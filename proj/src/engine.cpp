#include "pneulogic/engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace pneulogic {

Logic read_logic(double pressure) {
    if (pressure >= kLogicHigh) {
        return Logic::One;
    }
    if (pressure <= kLogicLow) {
        return Logic::Zero;
    }
    return Logic::Unknown;
}

char logic_char(Logic l) {
    switch (l) {
    case Logic::Zero: return '0';
    case Logic::One: return '1';
    default: return 'x';
    }
}

Logic LogicTracker::update(double pressure) {
    Logic raw = read_logic(pressure);
    if (raw != Logic::Unknown) {
        level_ = raw;
    }
    return level_;
}

// ---- quasi-static ----------------------------------------------------------

namespace {

std::size_t require_node(const Netlist& net, std::string_view id) {
    auto idx = net.node_index(id);
    if (!idx) {
        throw NetlistError("undefined node '" + std::string(id) + "'");
    }
    return *idx;
}

struct UnionFind {
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
    std::vector<std::size_t> parent;
};

}  // namespace

StaticSolution solve_static(const Netlist& net, const std::vector<bool>& valve_open, const NodePressures& driven,
                            std::span<const double> previous) {
    const std::size_t n = net.nodes().size();
    if (valve_open.size() != net.valves().size()) {
        throw Error("solve_static: valve state vector has wrong length");
    }
    StaticSolution out;
    out.pressure.assign(n, 0.0);

    std::vector<bool> fixed(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const Node& node = net.nodes()[i];
        if (node.is_rail()) {
            fixed[i] = true;
            out.pressure[i] = node.rail_pressure();
        }
    }
    for (const auto& [id, p] : driven) {
        std::size_t i = require_node(net, id);
        if (net.nodes()[i].is_rail()) {
            throw SimulationError("cannot drive rail '" + id + "'");
        }
        fixed[i] = true;
        out.pressure[i] = p;
    }

    struct Link {
        std::size_t a, b;
        double g;
    };
    std::vector<Link> links;
    for (const Channel& c : net.channels()) {
        links.push_back({*net.node_index(c.a), *net.node_index(c.b), c.conductance});
    }
    for (std::size_t v = 0; v < net.valves().size(); ++v) {
        if (valve_open[v]) {
            const Valve& valve = net.valves()[v];
            links.push_back({*net.node_index(valve.source), *net.node_index(valve.drain), valve.g_open});
        }
    }

    UnionFind uf(n);
    for (const Link& l : links) {
        uf.unite(l.a, l.b);
    }
    std::vector<bool> anchored(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (fixed[i]) {
            anchored[uf.find(i)] = true;
        }
    }

    // Unknowns: free nodes whose component touches a fixed node.
    std::vector<int> unknown(n, -1);
    int m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!fixed[i] && anchored[uf.find(i)]) {
            unknown[i] = m++;
        }
    }

    if (m > 0) {
        std::vector<Eigen::Triplet<double>> triplets;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        for (const Link& l : links) {
            if (l.a == l.b) {
                continue;
            }
            const int ua = unknown[l.a];
            const int ub = unknown[l.b];
            if (ua >= 0) {
                triplets.emplace_back(ua, ua, l.g);
            }
            if (ub >= 0) {
                triplets.emplace_back(ub, ub, l.g);
            }
            if (ua >= 0 && ub >= 0) {
                triplets.emplace_back(ua, ub, -l.g);
                triplets.emplace_back(ub, ua, -l.g);
            } else if (ua >= 0 && fixed[l.b]) {
                rhs[ua] += l.g * out.pressure[l.b];
            } else if (ub >= 0 && fixed[l.a]) {
                rhs[ub] += l.g * out.pressure[l.a];
            }
        }
        Eigen::SparseMatrix<double> lap(m, m);
        lap.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lap);
        if (solver.info() != Eigen::Success) {
            throw Error("solve_static: singular conductance matrix");
        }
        Eigen::VectorXd x = solver.solve(rhs);
        for (std::size_t i = 0; i < n; ++i) {
            if (unknown[i] >= 0) {
                out.pressure[i] = std::clamp(x[unknown[i]], 0.0, 1.0);
            }
        }
    }

    // Floating components conserve charge.
    std::unordered_map<std::size_t, std::pair<double, double>> floating;  // root -> (sum c*p, sum c)
    for (std::size_t i = 0; i < n; ++i) {
        if (!fixed[i] && !anchored[uf.find(i)]) {
            const double c = net.nodes()[i].capacitance;
            const double p = previous.empty() ? net.nodes()[i].initial_pressure : previous[i];
            auto& acc = floating[uf.find(i)];
            acc.first += c * p;
            acc.second += c;
        }
    }
    bool warned = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!fixed[i] && !anchored[uf.find(i)]) {
            const auto& acc = floating[uf.find(i)];
            out.pressure[i] = acc.second > 0.0 ? acc.first / acc.second : 0.0;
            if (previous.empty() && !warned) {
                out.warnings.push_back("isolated node '" + net.nodes()[i].id +
                                       "' has no initial pressure; using 0.0");
                warned = true;
            }
        }
    }
    return out;
}

namespace {

std::string describe_cycle(const std::vector<std::vector<bool>>& cycle, const std::vector<std::string>& ids) {
    std::ostringstream out;
    out << "no quasi-static fixpoint: valve states cycle with length " << cycle.size();
    for (std::size_t k = 0; k < cycle.size(); ++k) {
        out << (k == 0 ? " [" : " -> [");
        bool first = true;
        for (std::size_t v = 0; v < cycle[k].size(); ++v) {
            if (cycle[k][v]) {
                out << (first ? "" : " ") << ids[v];
                first = false;
            }
        }
        out << ']';
    }
    return out.str();
}

}  // namespace

OscillationDetected::OscillationDetected(std::vector<std::vector<bool>> cycle, std::vector<std::string> valve_ids)
    : Error(describe_cycle(cycle, valve_ids)), cycle_(std::move(cycle)) {}

Logic QuasiStaticResult::level_of(const Netlist& net, std::string_view node) const {
    return level[require_node(net, node)];
}

double QuasiStaticResult::pressure_of(const Netlist& net, std::string_view node) const {
    return pressure[require_node(net, node)];
}

QuasiStaticResult run_quasistatic(const Netlist& net, const NodePressures& driven) {
    const std::size_t nv = net.valves().size();
    std::vector<std::size_t> gate(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        gate[v] = *net.node_index(net.valves()[v].gate);
    }

    std::vector<bool> state(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        state[v] = net.valves()[v].initially_open;
    }
    std::vector<std::vector<bool>> history{state};
    std::vector<double> previous;
    for (const Node& node : net.nodes()) {
        previous.push_back(node.initial_pressure);
    }
    const std::size_t limit = 2 * nv + 4;

    for (std::size_t iter = 1; iter <= limit; ++iter) {
        StaticSolution sol = solve_static(net, state, driven, previous);
        std::vector<bool> next(nv);
        for (std::size_t v = 0; v < nv; ++v) {
            next[v] = sol.pressure[gate[v]] >= net.valves()[v].theta_open;
        }
        if (next == state) {
            QuasiStaticResult r;
            r.valve_open = std::move(state);
            r.level.reserve(sol.pressure.size());
            for (double p : sol.pressure) {
                r.level.push_back(read_logic(p));
            }
            r.pressure = std::move(sol.pressure);
            r.iterations = iter;
            return r;
        }
        auto seen = std::find(history.begin(), history.end(), next);
        if (seen != history.end()) {
            std::vector<std::string> ids;
            for (const Valve& v : net.valves()) {
                ids.push_back(v.id);
            }
            throw OscillationDetected(std::vector<std::vector<bool>>(seen, history.end()), std::move(ids));
        }
        history.push_back(next);
        state = std::move(next);
        previous = std::move(sol.pressure);
    }
    std::vector<std::string> ids;
    for (const Valve& v : net.valves()) {
        ids.push_back(v.id);
    }
    throw OscillationDetected({state}, std::move(ids));
}

QuasiStaticResult run_quasistatic(const Netlist& net, const std::map<std::string, Logic>& inputs) {
    NodePressures driven;
    for (const auto& [id, level] : inputs) {
        if (level == Logic::Unknown) {
            throw SimulationError("input '" + id + "' cannot be driven UNKNOWN");
        }
        driven[id] = level == Logic::One ? kVacuumPressure : kAtmospherePressure;
    }
    return run_quasistatic(net, driven);
}

// ---- stimulus --------------------------------------------------------------

double ClockSpec::level_at(double t) const {
    const double x = (t - phase) / period;
    const double frac = x - std::floor(x);
    return frac < duty - 1e-12 ? kVacuumPressure : kAtmospherePressure;
}

void Stimulus::check(const Netlist& net) const {
    auto check_node = [&](const std::string& id) {
        auto idx = net.node_index(id);
        if (!idx) {
            throw SimulationError("stimulus references undefined node '" + id + "'");
        }
        if (net.nodes()[*idx].is_rail()) {
            throw SimulationError("stimulus drives rail '" + id + "'");
        }
    };
    std::map<std::string, double> last;
    for (const DriveEvent& e : schedule) {
        check_node(e.node);
        if (e.time < 0.0) {
            throw SimulationError("negative stimulus time for '" + e.node + "'");
        }
        if (e.level && (*e.level < 0.0 || *e.level > 1.0)) {
            throw SimulationError("drive level for '" + e.node + "' outside [0, 1]");
        }
        auto it = last.find(e.node);
        if (it != last.end() && e.time < it->second) {
            throw SimulationError("stimulus times for '" + e.node + "' decrease");
        }
        last[e.node] = e.time;
    }
    for (const ClockSpec& c : clocks) {
        check_node(c.node);
        if (!(c.period > 0.0) || c.duty < 0.0 || c.duty > 1.0) {
            throw SimulationError("bad clock on '" + c.node + "'");
        }
    }
}

namespace {

std::vector<Directive::Token> split_ws(std::string_view line) {
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
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        out.push_back({std::string(line.substr(start, i - start)), start + 1});
    }
    return out;
}

ClockSpec clock_from_tokens(const std::vector<Directive::Token>& tokens, std::size_t line) {
    if (tokens.empty()) {
        throw ParseError("clock needs a node", line);
    }
    Directive d;
    d.line = line;
    d.args.assign(tokens.begin() + 1, tokens.end());
    ClockSpec c;
    c.node = tokens[0].text;
    bool have_period = false;
    for (const auto& [k, v] : d.key_values()) {
        if (k == "period") {
            c.period = parse_float(v, line);
            have_period = true;
        } else if (k == "duty") {
            c.duty = parse_float(v, line);
        } else if (k == "phase") {
            c.phase = parse_float(v, line);
        } else {
            throw ParseError("unknown key '" + k + "'", line, v.column - k.size() - 1);
        }
    }
    if (!have_period) {
        throw ParseError("clock requires period=<float>", line, tokens[0].column);
    }
    if (!(c.period > 0.0) || c.duty < 0.0 || c.duty > 1.0) {
        throw ParseError("clock period must be > 0 and duty in [0, 1]", line, tokens[0].column);
    }
    return c;
}

}  // namespace

ClockSpec parse_clock(std::string_view spec) {
    return clock_from_tokens(split_ws(spec), 0);
}

Stimulus parse_stimulus(std::string_view text) {
    Stimulus stim;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto tokens = split_ws(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (tokens.empty()) {
            continue;
        }
        if (tokens[0].text == "clock") {
            stim.clocks.push_back(clock_from_tokens({tokens.begin() + 1, tokens.end()}, line_no));
            continue;
        }
        if (tokens[0].text == "time") {
            continue;  // header row
        }
        if (tokens.size() != 3) {
            throw ParseError("expected 'time node value'", line_no, tokens[0].column);
        }
        DriveEvent e;
        e.time = parse_float(tokens[0], line_no);
        e.node = tokens[1].text;
        if (tokens[2].text == "z" || tokens[2].text == "Z") {
            e.level = std::nullopt;
        } else {
            double v = parse_float(tokens[2], line_no);
            if (v < 0.0 || v > 1.0) {
                throw ParseError("drive value outside [0, 1]", line_no, tokens[2].column);
            }
            e.level = v;
        }
        if (e.time < 0.0) {
            throw ParseError("negative time", line_no, tokens[0].column);
        }
        stim.schedule.push_back(std::move(e));
    }
    return stim;
}

// ---- timed -----------------------------------------------------------------

double max_stable_dt(const Netlist& net) {
    double c_min = std::numeric_limits<double>::infinity();
    double g_max = 0.0;
    std::vector<double> g_sum(net.nodes().size(), 0.0);
    for (const Node& n : net.nodes()) {
        if (!n.is_rail()) {
            c_min = std::min(c_min, n.capacitance);
        }
    }
    for (const Channel& c : net.channels()) {
        g_max = std::max(g_max, c.conductance);
        g_sum[*net.node_index(c.a)] += c.conductance;
        g_sum[*net.node_index(c.b)] += c.conductance;
    }
    for (const Valve& v : net.valves()) {
        g_max = std::max(g_max, v.g_open);
        g_sum[*net.node_index(v.source)] += v.g_open;
        g_sum[*net.node_index(v.drain)] += v.g_open;
    }
    if (g_max == 0.0 || !std::isfinite(c_min)) {
        return std::numeric_limits<double>::infinity();
    }
    double limit = 0.1 * c_min / g_max;
    // Keep every update a convex combination even for nodes with many
    // strong neighbours.
    for (std::size_t i = 0; i < net.nodes().size(); ++i) {
        const Node& n = net.nodes()[i];
        if (!n.is_rail() && g_sum[i] > 0.0) {
            limit = std::min(limit, n.capacitance / g_sum[i]);
        }
    }
    return limit;
}

Simulator::Simulator(Netlist net, double dt, const NodePressures& initial) : net_(std::move(net)), dt_(dt) {
    ValidationReport report = validate(net_);
    if (report.has_errors()) {
        throw SimulationError("netlist failed validation:\n" + report.to_string());
    }
    const double limit = max_stable_dt(net_);
    if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "dt=" << dt << " exceeds stability limit " << limit << " (0.1 * c_min / g_max)";
        throw SimulationError(msg.str());
    }

    const std::size_t n = net_.nodes().size();
    pressure_.assign(n, 0.0);
    inv_cap_.assign(n, 0.0);
    fixed_.assign(n, 0);
    flow_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Node& node = net_.nodes()[i];
        if (node.is_rail()) {
            fixed_[i] = 1;
            pressure_[i] = node.rail_pressure();
        } else {
            inv_cap_[i] = 1.0 / node.capacitance;
            pressure_[i] = node.initial_pressure;
        }
    }
    for (const auto& [id, p] : initial) {
        std::size_t i = index(id);
        if (!fixed_[i]) {
            pressure_[i] = std::clamp(p, 0.0, 1.0);
        }
    }
    for (const Channel& c : net_.channels()) {
        channels_.push_back({static_cast<std::uint32_t>(*net_.node_index(c.a)),
                             static_cast<std::uint32_t>(*net_.node_index(c.b)), c.conductance});
    }
    for (const Valve& v : net_.valves()) {
        valves_.push_back({static_cast<std::uint32_t>(*net_.node_index(v.gate)),
                           static_cast<std::uint32_t>(*net_.node_index(v.source)),
                           static_cast<std::uint32_t>(*net_.node_index(v.drain)), v.g_open, v.theta_open,
                           v.theta_close});
        open_.push_back(v.initially_open ? 1 : 0);
    }
}

std::size_t Simulator::index(std::string_view node) const {
    return require_node(net_, node);
}

void Simulator::drive(std::size_t node, double pressure) {
    if (net_.nodes()[node].is_rail()) {
        throw SimulationError("cannot drive rail '" + net_.nodes()[node].id + "'");
    }
    fixed_[node] = 1;
    pressure_[node] = std::clamp(pressure, 0.0, 1.0);
}

void Simulator::release(std::size_t node) {
    if (!net_.nodes()[node].is_rail()) {
        fixed_[node] = 0;
    }
}

bool Simulator::valve_open(std::string_view valve) const {
    auto idx = net_.valve_index(valve);
    if (!idx) {
        throw NetlistError("undefined valve '" + std::string(valve) + "'");
    }
    return open_[*idx] != 0;
}

void Simulator::update_valves() {
    for (std::size_t v = 0; v < valves_.size(); ++v) {
        const double g = pressure_[valves_[v].gate];
        if (open_[v]) {
            if (g <= valves_[v].close_at) {
                open_[v] = 0;
            }
        } else if (g >= valves_[v].open_at) {
            open_[v] = 1;
        }
    }
}

void Simulator::integrate() {
    std::fill(flow_.begin(), flow_.end(), 0.0);
    for (const Edge& e : channels_) {
        const double f = e.g * (pressure_[e.b] - pressure_[e.a]);
        flow_[e.a] += f;
        flow_[e.b] -= f;
    }
    for (std::size_t v = 0; v < valves_.size(); ++v) {
        if (open_[v]) {
            const ValveRec& r = valves_[v];
            const double f = r.g * (pressure_[r.b] - pressure_[r.a]);
            flow_[r.a] += f;
            flow_[r.b] -= f;
        }
    }
    double max_rate = 0.0;
    for (std::size_t i = 0; i < pressure_.size(); ++i) {
        if (fixed_[i]) {
            continue;
        }
        const double rate = flow_[i] * inv_cap_[i];
        max_rate = std::max(max_rate, std::abs(rate));
        pressure_[i] = std::clamp(pressure_[i] + dt_ * rate, 0.0, 1.0);
    }
    max_rate_ = max_rate;
    ++steps_;
}

std::size_t Waveform::samples() const {
    if (!series.empty()) {
        return series.front().size();
    }
    if (!valve_series.empty()) {
        return valve_series.front().size();
    }
    return 0;
}

const std::vector<double>& Waveform::node(std::string_view name) const {
    for (std::size_t i = 0; i < node_names.size(); ++i) {
        if (node_names[i] == name) {
            return series[i];
        }
    }
    throw Error("waveform has no node '" + std::string(name) + "'");
}

const std::vector<std::uint8_t>& Waveform::valve(std::string_view name) const {
    for (std::size_t i = 0; i < valve_names.size(); ++i) {
        if (valve_names[i] == name) {
            return valve_series[i];
        }
    }
    throw Error("waveform has no valve '" + std::string(name) + "'");
}

Waveform run_timed(const Netlist& net, const Stimulus& stim, double t_end, double dt, const TimedOptions& options) {
    stim.check(net);
    if (options.sample_every == 0) {
        throw SimulationError("sample_every must be positive");
    }
    Simulator sim(net, dt, options.initial);

    Waveform w;
    w.dt = dt * static_cast<double>(options.sample_every);
    std::vector<std::size_t> node_idx;
    std::vector<std::size_t> valve_idx;
    for (const Probe& p : net.probes()) {
        if (p.kind == Probe::Kind::Node) {
            w.node_names.push_back(p.id);
            node_idx.push_back(*net.node_index(p.id));
        } else {
            w.valve_names.push_back(p.id);
            valve_idx.push_back(*net.valve_index(p.id));
        }
    }
    for (const std::string& extra : options.extra_node_probes) {
        if (std::find(w.node_names.begin(), w.node_names.end(), extra) == w.node_names.end()) {
            w.node_names.push_back(extra);
            node_idx.push_back(sim.index(extra));
        }
    }
    w.series.resize(node_idx.size());
    w.valve_series.resize(valve_idx.size());
    std::vector<LogicTracker> trackers(node_idx.size());

    std::vector<DriveEvent> schedule = stim.schedule;
    std::stable_sort(schedule.begin(), schedule.end(),
                     [](const DriveEvent& a, const DriveEvent& b) { return a.time < b.time; });
    std::vector<std::size_t> event_node;
    for (const DriveEvent& e : schedule) {
        event_node.push_back(sim.index(e.node));
    }
    std::vector<std::size_t> clock_node;
    for (const ClockSpec& c : stim.clocks) {
        clock_node.push_back(sim.index(c.node));
    }

    const auto total = static_cast<std::uint64_t>(std::llround(t_end / dt));
    const std::size_t reserve = static_cast<std::size_t>(total / options.sample_every + 1);
    for (auto& s : w.series) {
        s.reserve(reserve);
    }
    for (auto& s : w.valve_series) {
        s.reserve(reserve);
    }
    const double eps = dt * 1e-6;
    std::size_t next_event = 0;
    std::size_t sample = 0;
    for (std::uint64_t k = 0; k <= total; ++k) {
        const double t = static_cast<double>(k) * dt;
        while (next_event < schedule.size() && schedule[next_event].time <= t + eps) {
            const DriveEvent& e = schedule[next_event];
            if (e.level) {
                sim.drive(event_node[next_event], *e.level);
            } else {
                sim.release(event_node[next_event]);
            }
            ++next_event;
        }
        for (std::size_t c = 0; c < clock_node.size(); ++c) {
            sim.drive(clock_node[c], stim.clocks[c].level_at(t));
        }
        sim.update_valves();
        if (k % options.sample_every == 0) {
            const double ts = w.time_at(sample++);
            for (std::size_t i = 0; i < node_idx.size(); ++i) {
                const double p = sim.pressures()[node_idx[i]];
                w.series[i].push_back(p);
                Logic before = trackers[i].level();
                Logic after = trackers[i].update(p);
                if (after != before) {
                    w.events.push_back({ts, w.node_names[i], before, after});
                }
            }
            for (std::size_t i = 0; i < valve_idx.size(); ++i) {
                w.valve_series[i].push_back(sim.valve_open(valve_idx[i]) ? 1 : 0);
            }
        }
        if (k < total) {
            sim.integrate();
        }
    }
    return w;
}

// ---- value-change dump -----------------------------------------------------

namespace {

std::string vcd_id(std::size_t n) {
    std::string id;
    do {
        id.push_back(static_cast<char>('!' + n % 94));
        n /= 94;
    } while (n > 0);
    return id;
}

// Picks the power-of-ten time unit not larger than the sample spacing.
std::pair<std::string, double> vcd_timescale(double dt) {
    static const char* const units[] = {"s", "ms", "us", "ns", "ps", "fs"};
    int e = static_cast<int>(std::floor(std::log10(dt) + 1e-9));
    e = std::clamp(e, -15, 2);
    const int group = e >= 0 ? 0 : (-e + 2) / 3;
    const int mult_exp = e + 3 * group;
    const char* mult = mult_exp == 0 ? "1" : mult_exp == 1 ? "10" : "100";
    return {std::string(mult) + " " + units[group], std::pow(10.0, e)};
}

}  // namespace

std::string export_vcd(const Waveform& w, const std::vector<std::string>& signals) {
    if (w.samples() == 0) {
        throw Error("export_vcd: empty waveform");
    }
    struct Signal {
        std::string name;
        const std::vector<double>* pressure = nullptr;
        const std::vector<std::uint8_t>* valve = nullptr;
    };
    std::vector<Signal> selected;
    if (signals.empty()) {
        for (std::size_t i = 0; i < w.node_names.size(); ++i) {
            selected.push_back({w.node_names[i], &w.series[i], nullptr});
        }
        for (std::size_t i = 0; i < w.valve_names.size(); ++i) {
            selected.push_back({w.valve_names[i], nullptr, &w.valve_series[i]});
        }
    } else {
        for (const std::string& s : signals) {
            auto n = std::find(w.node_names.begin(), w.node_names.end(), s);
            if (n != w.node_names.end()) {
                selected.push_back({s, &w.series[n - w.node_names.begin()], nullptr});
                continue;
            }
            auto v = std::find(w.valve_names.begin(), w.valve_names.end(), s);
            if (v != w.valve_names.end()) {
                selected.push_back({s, nullptr, &w.valve_series[v - w.valve_names.begin()]});
                continue;
            }
            throw Error("export_vcd: unknown signal '" + s + "'");
        }
    }

    auto [scale, unit] = vcd_timescale(w.dt);
    std::ostringstream out;
    out << "$comment pneulogic waveform, 1 s = 1 normalized time unit, dt = " << format_float(w.dt)
        << " $end\n";
    out << "$timescale " << scale << " $end\n";
    out << "$scope module chip $end\n";
    for (std::size_t i = 0; i < selected.size(); ++i) {
        out << "$var wire 1 " << vcd_id(i) << ' ' << selected[i].name << " $end\n";
    }
    out << "$upscope $end\n$enddefinitions $end\n";

    std::vector<LogicTracker> trackers(selected.size());
    std::vector<char> last(selected.size(), '?');
    auto value_at = [&](std::size_t s, std::size_t k) {
        if (selected[s].valve) {
            return (*selected[s].valve)[k] ? '1' : '0';
        }
        return logic_char(trackers[s].update((*selected[s].pressure)[k]));
    };

    out << "#0\n$dumpvars\n";
    for (std::size_t s = 0; s < selected.size(); ++s) {
        last[s] = value_at(s, 0);
        out << last[s] << vcd_id(s) << '\n';
    }
    out << "$end\n";
    for (std::size_t k = 1; k < w.samples(); ++k) {
        bool stamped = false;
        for (std::size_t s = 0; s < selected.size(); ++s) {
            const char v = value_at(s, k);
            if (v != last[s]) {
                if (!stamped) {
                    out << '#' << std::llround(w.time_at(k) / unit) << '\n';
                    stamped = true;
                }
                out << v << vcd_id(s) << '\n';
                last[s] = v;
            }
        }
    }
    return out.str();
}

}  // namespace pneulogic
