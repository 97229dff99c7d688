#include "pneulogic/fsmc.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "pneulogic/error.hpp"

namespace pneulogic {

std::string state_label(int state) {
    std::string s(kStateBits, '0');
    for (int b = 0; b < kStateBits; ++b) {
        if ((state >> (kStateBits - 1 - b)) & 1) {
            s[b] = '1';
        }
    }
    return s;
}

int parse_state_label(std::string_view text) {
    if (text.size() != kStateBits) {
        return -1;
    }
    int v = 0;
    for (char c : text) {
        if (c != '0' && c != '1') {
            return -1;
        }
        v = 2 * v + (c - '0');
    }
    return v;
}

std::vector<bool> StateDiagram::output_levels(int state) const {
    std::vector<bool> out;
    for (const MooreOutput& o : outputs) {
        out.push_back(std::find(o.states.begin(), o.states.end(), state) != o.states.end());
    }
    return out;
}

// ---- DSL -------------------------------------------------------------------

namespace {

struct Piece {
    std::string_view text;
    std::size_t column;  // 1-based column of text[0]
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

Piece trim(Piece p) {
    std::size_t a = 0;
    while (a < p.text.size() && is_space(p.text[a])) {
        ++a;
    }
    std::size_t b = p.text.size();
    while (b > a && is_space(p.text[b - 1])) {
        --b;
    }
    return {p.text.substr(a, b - a), p.column + a};
}

std::vector<Piece> split(Piece p, char sep) {
    std::vector<Piece> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= p.text.size(); ++i) {
        if (i == p.text.size() || p.text[i] == sep) {
            out.push_back(trim({p.text.substr(start, i - start), p.column + start}));
            start = i + 1;
        }
    }
    return out;
}

std::vector<Piece> words(Piece p) {
    std::vector<Piece> out;
    std::size_t i = 0;
    while (i < p.text.size()) {
        while (i < p.text.size() && is_space(p.text[i])) {
            ++i;
        }
        std::size_t start = i;
        while (i < p.text.size() && !is_space(p.text[i])) {
            ++i;
        }
        if (i > start) {
            out.push_back({p.text.substr(start, i - start), p.column + start});
        }
    }
    return out;
}

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

// Splits "lhs -> rhs".
std::optional<std::pair<Piece, Piece>> arrow(Piece p) {
    auto pos = p.text.find("->");
    if (pos == std::string_view::npos) {
        return std::nullopt;
    }
    return std::pair{trim({p.text.substr(0, pos), p.column}), trim({p.text.substr(pos + 2), p.column + pos + 2})};
}

struct PendingRule {
    int next;
    std::size_t line;
    std::size_t column;
};

class FsmParser {
public:
    StateDiagram parse(std::string_view text) {
        std::size_t pos = 0;
        std::size_t line_no = 0;
        while (pos <= text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos) {
                end = text.size();
            }
            std::string_view line = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string_view::npos) {
                line = line.substr(0, hash);
            }
            Piece whole = trim({line, 1});
            if (!whole.text.empty()) {
                statement_line(whole, line_no);
            }
            if (end == text.size()) {
                break;
            }
        }
        return finish(line_no);
    }

private:
    [[noreturn]] static void fail(const std::string& msg, std::size_t line, std::size_t col) {
        throw ParseError(msg, line, col);
    }

    int state_at(Piece p, std::size_t line) {
        int s = parse_state_label(p.text);
        if (s < 0) {
            fail("malformed state label '" + std::string(p.text) + "'", line, p.column);
        }
        return s;
    }

    void statement_line(Piece whole, std::size_t line) {
        auto w = words(whole);
        const std::string_view kw = w[0].text;
        if (kw == "from") {
            from_line(whole, line);
            return;
        }
        if (kw == "output") {
            for (Piece stmt : split(whole, ';')) {
                if (!stmt.text.empty()) {
                    output_stmt(stmt, line);
                }
            }
            return;
        }
        auto expect_args = [&](std::size_t n) {
            if (w.size() != n + 1) {
                fail("'" + std::string(kw) + "' expects " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"),
                     line, w[0].column);
            }
        };
        if (kw == "fsm") {
            expect_args(1);
            d_.name = std::string(w[1].text);
        } else if (kw == "bits") {
            expect_args(1);
            if (w[1].text != "2") {
                fail("device supports 2 state bits, got '" + std::string(w[1].text) + "'", line, w[1].column);
            }
        } else if (kw == "input") {
            expect_args(1);
            if (!is_identifier(w[1].text)) {
                fail("bad input name '" + std::string(w[1].text) + "'", line, w[1].column);
            }
            d_.input = std::string(w[1].text);
        } else if (kw == "initial") {
            expect_args(1);
            initial_ = state_at(w[1], line);
            initial_pos_ = {line, w[1].column};
        } else if (kw == "states") {
            if (w.size() < 2) {
                fail("'states' needs at least one state", line, w[0].column);
            }
            if (declared_) {
                fail("duplicate 'states' line", line, w[0].column);
            }
            declared_ = true;
            for (std::size_t i = 1; i < w.size(); ++i) {
                int s = state_at(w[i], line);
                if (!states_.insert(s).second) {
                    fail("state " + std::string(w[i].text) + " listed twice", line, w[i].column);
                }
            }
        } else {
            fail("unknown statement '" + std::string(kw) + "'", line, w[0].column);
        }
    }

    void from_line(Piece whole, std::size_t line) {
        auto colon = whole.text.find(':');
        if (colon == std::string_view::npos) {
            fail("expected 'from <state>:'", line, whole.column);
        }
        Piece head = trim({whole.text.substr(4, colon - 4), whole.column + 4});
        const int from = state_at(head, line);
        Piece rest{whole.text.substr(colon + 1), whole.column + colon + 1};
        for (Piece clause : split(rest, ';')) {
            if (clause.text.empty()) {
                continue;
            }
            auto parts = arrow(clause);
            if (!parts) {
                fail("expected '<input>=<0|1> -> <state>' or 'default -> <state>'", line, clause.column);
            }
            auto [lhs, rhs] = *parts;
            const int to = state_at(rhs, line);
            PendingRule rule{to, line, clause.column};
            used_.push_back({from, line, head.column});
            used_.push_back({to, line, rhs.column});
            if (lhs.text == "default") {
                if (defaults_.count(from)) {
                    fail("duplicate default for state " + state_label(from), line, lhs.column);
                }
                defaults_.emplace(from, rule);
                continue;
            }
            auto eq = lhs.text.find('=');
            if (eq == std::string_view::npos) {
                fail("expected '<input>=<0|1>'", line, lhs.column);
            }
            Piece name = trim({lhs.text.substr(0, eq), lhs.column});
            Piece value = trim({lhs.text.substr(eq + 1), lhs.column + eq + 1});
            if (name.text != d_.input) {
                fail("unknown input '" + std::string(name.text) + "'", line, name.column);
            }
            if (value.text != "0" && value.text != "1") {
                fail("input value must be 0 or 1", line, value.column);
            }
            const int a = value.text == "1" ? 1 : 0;
            if (!rules_.emplace(std::pair{from, a}, rule).second) {
                fail("duplicate transition for (" + state_label(from) + ", " + d_.input + "=" + std::to_string(a) + ")",
                     line, lhs.column);
            }
        }
    }

    void output_stmt(Piece stmt, std::size_t line) {
        auto w = words(stmt);
        if (w.empty() || w[0].text != "output") {
            fail("expected 'output <name> = state==<state>'", line, stmt.column);
        }
        Piece body = trim({stmt.text.substr(6), stmt.column + 6});
        auto eq = body.text.find('=');
        if (eq == std::string_view::npos) {
            fail("expected 'output <name> = state==<state>'", line, body.column);
        }
        Piece name = trim({body.text.substr(0, eq), body.column});
        if (!is_identifier(name.text)) {
            fail("bad output name '" + std::string(name.text) + "'", line, name.column);
        }
        for (const MooreOutput& o : d_.outputs) {
            if (o.name == name.text) {
                fail("duplicate output '" + o.name + "'", line, name.column);
            }
        }
        MooreOutput out{std::string(name.text), {}};
        for (Piece alt : split({body.text.substr(eq + 1), body.column + eq + 1}, '|')) {
            const std::string_view prefix = "state==";
            if (alt.text.substr(0, prefix.size()) != prefix) {
                fail("expected 'state==<state>'", line, alt.column);
            }
            Piece label = trim({alt.text.substr(prefix.size()), alt.column + prefix.size()});
            const int s = state_at(label, line);
            used_.push_back({s, line, label.column});
            out.states.push_back(s);
        }
        d_.outputs.push_back(std::move(out));
    }

    StateDiagram finish(std::size_t last_line) {
        if (!initial_) {
            fail("missing 'initial' statement", last_line, 1);
        }
        if (!declared_) {
            for (int s = 0; s < kStates; ++s) {
                states_.insert(s);
            }
        }
        if (!states_.count(*initial_)) {
            fail("unknown state label " + state_label(*initial_), initial_pos_.first, initial_pos_.second);
        }
        for (const PendingRule& u : used_) {
            if (!states_.count(u.next)) {
                fail("unknown state label " + state_label(u.next), u.line, u.column);
            }
        }
        d_.initial = *initial_;
        d_.states.assign(states_.begin(), states_.end());
        for (int s = 0; s < kStates; ++s) {
            for (int a = 0; a < 2; ++a) {
                if (!states_.count(s)) {
                    d_.next[s][a] = d_.initial;
                    continue;
                }
                auto it = rules_.find({s, a});
                if (it != rules_.end()) {
                    d_.next[s][a] = it->second.next;
                } else if (auto def = defaults_.find(s); def != defaults_.end()) {
                    d_.next[s][a] = def->second.next;
                } else {
                    fail("missing transition for (" + state_label(s) + ", " + d_.input + "=" + std::to_string(a) +
                             ") and no default",
                         last_line, 1);
                }
            }
        }
        return d_;
    }

    StateDiagram d_;
    std::optional<int> initial_;
    std::pair<std::size_t, std::size_t> initial_pos_{0, 0};
    bool declared_ = false;
    std::set<int> states_;
    std::map<std::pair<int, int>, PendingRule> rules_;
    std::map<int, PendingRule> defaults_;
    std::vector<PendingRule> used_;
};

}  // namespace

StateDiagram parse_fsm(std::string_view text) { return FsmParser{}.parse(text); }

// ---- tables ----------------------------------------------------------------

TransitionTable to_table(const StateDiagram& d) {
    TransitionTable t;
    for (int s = 0; s < kStates; ++s) {
        for (int a = 0; a < 2; ++a) {
            t.next[2 * s + a] = d.next[s][a];
        }
    }
    return t;
}

TransitionTable table_from_pattern(const HolePattern& pattern) {
    TransitionTable t;
    for (int s = 0; s < kStates; ++s) {
        for (int a = 0; a < 2; ++a) {
            auto [n1, n0] = eval_pattern(pattern, s & 2, s & 1, a);
            t.next[2 * s + a] = (n1 ? 2 : 0) + (n0 ? 1 : 0);
        }
    }
    return t;
}

std::string TransitionTable::to_tsv() const {
    std::ostringstream out;
    out << "S1\tS0\tA\tN1\tN0\n";
    for (int m = 0; m < 8; ++m) {
        const int s = m / 2;
        out << ((s >> 1) & 1) << '\t' << (s & 1) << '\t' << (m & 1) << '\t' << ((next[m] >> 1) & 1) << '\t'
            << (next[m] & 1) << '\n';
    }
    return out.str();
}

// ---- minimization ----------------------------------------------------------

namespace {

// A cube fixes some of (S1, S0, A); care bit i set means variable i fixed to
// the matching value bit. Variable 0 is S1 (minterm bit 2).
struct Cube {
    int care = 0;
    int value = 0;

    bool covers(int m) const {
        for (int v = 0; v < 3; ++v) {
            const int bit = (m >> (2 - v)) & 1;
            if ((care >> v) & 1 && ((value >> v) & 1) != bit) {
                return false;
            }
        }
        return true;
    }
    bool contains(const Cube& o) const {
        // every variable fixed here is fixed identically in o
        return (care & o.care) == care && (value & care) == (o.value & care);
    }
    Product literals() const {
        Product p;
        for (int v = 0; v < 3; ++v) {
            if ((care >> v) & 1) {
                p.push_back(2 * v + (((value >> v) & 1) ? 0 : 1));
            }
        }
        return p;
    }
};

}  // namespace

std::vector<Product> minimize(const std::array<bool, 8>& on_set) {
    std::vector<Cube> implicants;
    for (int care = 0; care < 8; ++care) {
        for (int value = 0; value < 8; ++value) {
            if ((value & ~care) != 0) {
                continue;
            }
            Cube c{care, value};
            bool inside = true;
            for (int m = 0; m < 8 && inside; ++m) {
                inside = !c.covers(m) || on_set[m];
            }
            if (inside) {
                implicants.push_back(c);
            }
        }
    }
    std::vector<Cube> primes;
    for (const Cube& c : implicants) {
        bool prime = true;
        for (const Cube& o : implicants) {
            if (o.care != c.care && o.contains(c)) {
                prime = false;
                break;
            }
        }
        if (prime) {
            primes.push_back(c);
        }
    }

    std::optional<std::vector<Product>> best;
    std::size_t best_literals = 0;
    const std::size_t n = primes.size();
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        bool covered = true;
        for (int m = 0; m < 8 && covered; ++m) {
            if (!on_set[m]) {
                continue;
            }
            bool hit = false;
            for (std::size_t i = 0; i < n && !hit; ++i) {
                hit = ((mask >> i) & 1) && primes[i].covers(m);
            }
            covered = hit;
        }
        if (!covered) {
            continue;
        }
        std::vector<Product> cand;
        std::size_t lits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1) {
                cand.push_back(primes[i].literals());
                lits += cand.back().size();
            }
        }
        std::sort(cand.begin(), cand.end());
        const bool better = !best || cand.size() < best->size() ||
                            (cand.size() == best->size() &&
                             (lits < best_literals || (lits == best_literals && cand < *best)));
        if (better) {
            best = std::move(cand);
            best_literals = lits;
        }
    }
    return best ? *best : std::vector<Product>{};
}

SopEquations derive_sop(const TransitionTable& t) {
    SopEquations eqs;
    for (int o = 0; o < kPlaOutputs; ++o) {
        const int bit = kPlaOutputs - 1 - o;  // N1 is bit 1
        std::array<bool, 8> on{};
        for (int m = 0; m < 8; ++m) {
            on[m] = (t.next[m] >> bit) & 1;
        }
        eqs.terms[o] = minimize(on);
    }
    return eqs;
}

bool SopEquations::eval(int output, bool s1, bool s0, bool a) const {
    for (const Product& p : terms[output]) {
        bool v = true;
        for (int l : p) {
            v = v && eval_literal(l, s1, s0, a);
        }
        if (v) {
            return true;
        }
    }
    return false;
}

std::size_t SopEquations::distinct_products() const {
    std::set<Product> all;
    for (const auto& t : terms) {
        all.insert(t.begin(), t.end());
    }
    return all.size();
}

std::string product_string(const Product& p) {
    if (p.empty()) {
        return "1";
    }
    std::string s;
    for (int l : p) {
        if (!s.empty()) {
            s += '*';
        }
        s += kLiteralNames[l];
    }
    return s;
}

std::string SopEquations::to_string() const {
    std::ostringstream out;
    for (int o = 0; o < kPlaOutputs; ++o) {
        out << kOutputNames[o] << " = ";
        if (terms[o].empty()) {
            out << '0';
        }
        for (std::size_t i = 0; i < terms[o].size(); ++i) {
            out << (i ? " + " : "") << product_string(terms[o][i]);
        }
        out << '\n';
    }
    return out.str();
}

// ---- fitting ---------------------------------------------------------------

HolePattern fit_pla(const SopEquations& eqs, const PlaShape& shape) {
    // An empty product row means 0 on the device, so the constant 1 is
    // spelled S1 + S1n.
    std::array<std::vector<Product>, kPlaOutputs> terms;
    for (int o = 0; o < kPlaOutputs; ++o) {
        for (const Product& p : eqs.terms[o]) {
            if (p.empty()) {
                terms[o].push_back({S1});
                terms[o].push_back({S1n});
            } else {
                terms[o].push_back(p);
            }
        }
    }

    std::vector<Product> rows;
    for (const auto& t : terms) {
        for (const Product& p : t) {
            if (std::find(rows.begin(), rows.end(), p) == rows.end()) {
                rows.push_back(p);
            }
        }
    }
    if (static_cast<int>(rows.size()) > shape.products) {
        throw CapacityError("products " + std::to_string(rows.size()) + " > " + std::to_string(shape.products));
    }
    for (const Product& p : rows) {
        if (static_cast<int>(p.size()) > shape.and_fanin) {
            throw CapacityError("product " + product_string(p) + ": literals " + std::to_string(p.size()) + " > " +
                                std::to_string(shape.and_fanin));
        }
    }
    for (int o = 0; o < kPlaOutputs; ++o) {
        if (static_cast<int>(terms[o].size()) > shape.or_fanin) {
            throw CapacityError("output " + std::string(kOutputNames[o]) + ": products " +
                                std::to_string(terms[o].size()) + " > " + std::to_string(shape.or_fanin));
        }
    }

    HolePattern pattern;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (int l : rows[r]) {
            pattern.and_plane[r][l] = true;
        }
    }
    for (int o = 0; o < kPlaOutputs; ++o) {
        for (const Product& p : terms[o]) {
            auto r = std::find(rows.begin(), rows.end(), p) - rows.begin();
            pattern.or_plane[o][r] = true;
        }
    }
    return pattern;
}

Compilation compile(std::string_view dsl) {
    Compilation c;
    c.diagram = parse_fsm(dsl);
    c.table = to_table(c.diagram);
    c.equations = derive_sop(c.table);
    c.pattern = fit_pla(c.equations);
    c.membrane = encode_membrane(c.pattern);
    return c;
}

}  // namespace pneulogic
