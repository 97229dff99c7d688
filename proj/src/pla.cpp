#include "pneulogic/pla.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

#include "pneulogic/error.hpp"
#include "pneulogic/stdcells.hpp"

namespace pneulogic {

PlaShape device_shape() { return PlaShape{}; }

int HolePattern::and_holes(int product) const {
    return static_cast<int>(std::count(and_plane[product].begin(), and_plane[product].end(), true));
}

int HolePattern::or_holes(int output) const {
    return static_cast<int>(std::count(or_plane[output].begin(), or_plane[output].end(), true));
}

void HolePattern::check(const PlaShape& shape) const {
    for (int p = 0; p < kPlaProducts; ++p) {
        if (and_holes(p) > shape.and_fanin) {
            throw CapacityError("AND row P" + std::to_string(p + 1) + ": fan-in " + std::to_string(and_holes(p)) +
                                " > " + std::to_string(shape.and_fanin));
        }
    }
    for (int o = 0; o < kPlaOutputs; ++o) {
        if (or_holes(o) > shape.or_fanin) {
            throw CapacityError("OR row " + std::string(kOutputNames[o]) + ": fan-in " +
                                std::to_string(or_holes(o)) + " > " + std::to_string(shape.or_fanin));
        }
    }
}

void add_pla(NetlistBuilder& b, const HolePattern& pattern, const PlaPorts& ports, const Defaults& d) {
    pattern.check();
    const std::string& vac = b.vacuum_id();
    std::array<std::string, kPlaProducts> product_node;
    for (int p = 0; p < kPlaProducts; ++p) {
        product_node[p] = ports.prefix + "P" + std::to_string(p + 1);
        std::vector<std::string> in;
        for (int l = 0; l < kPlaLiterals; ++l) {
            if (pattern.and_plane[p][l]) {
                in.push_back(ports.literals[l]);
            }
        }
        in.resize(kPlaFanin, vac);
        add_nand(b, in, product_node[p], d);
    }
    for (int o = 0; o < kPlaOutputs; ++o) {
        std::vector<std::string> in;
        for (int p = 0; p < kPlaProducts; ++p) {
            if (pattern.or_plane[o][p] && !pattern.product_empty(p)) {
                in.push_back(product_node[p]);
            }
        }
        in.resize(kPlaFanin, vac);
        add_nand(b, in, ports.outputs[o], d);
    }
}

Netlist expand_pla(const HolePattern& pattern, const PlaPorts& ports, const Defaults& d) {
    NetlistBuilder b = NetlistBuilder::with_rails();
    add_pla(b, pattern, ports, d);
    return b.build();
}

bool eval_literal(int literal, bool s1, bool s0, bool a) {
    switch (literal) {
    case S1: return s1;
    case S1n: return !s1;
    case S0: return s0;
    case S0n: return !s0;
    case A: return a;
    default: return !a;
    }
}

std::pair<bool, bool> eval_pattern(const HolePattern& pattern, bool s1, bool s0, bool a) {
    std::array<bool, kPlaProducts> product{};
    for (int p = 0; p < kPlaProducts; ++p) {
        bool v = !pattern.product_empty(p);
        for (int l = 0; l < kPlaLiterals; ++l) {
            if (pattern.and_plane[p][l]) {
                v = v && eval_literal(l, s1, s0, a);
            }
        }
        product[p] = v;
    }
    std::array<bool, kPlaOutputs> out{};
    for (int o = 0; o < kPlaOutputs; ++o) {
        for (int p = 0; p < kPlaProducts; ++p) {
            out[o] = out[o] || (pattern.or_plane[o][p] && product[p]);
        }
    }
    return {out[0], out[1]};
}

std::string encode_membrane(const HolePattern& pattern) {
    std::ostringstream out;
    out << "MEMBRANE v1\nliterals:";
    for (auto name : kLiteralNames) {
        out << ' ' << name;
    }
    out << '\n';
    for (int p = 0; p < kPlaProducts; ++p) {
        out << "AND P" << p + 1 << ':';
        for (int l = 0; l < kPlaLiterals; ++l) {
            if (pattern.and_plane[p][l]) {
                out << ' ' << kLiteralNames[l];
            }
        }
        out << '\n';
    }
    for (int o = 0; o < kPlaOutputs; ++o) {
        out << "OR " << kOutputNames[o] << ':';
        for (int p = 0; p < kPlaProducts; ++p) {
            if (pattern.or_plane[o][p]) {
                out << " P" << p + 1;
            }
        }
        out << '\n';
    }
    return out.str();
}

namespace {

struct Word {
    std::string text;
    std::size_t column;
};

std::vector<Word> words(std::string_view line) {
    std::vector<Word> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        if (i > start) {
            out.push_back({std::string(line.substr(start, i - start)), start + 1});
        }
    }
    return out;
}

}  // namespace

HolePattern decode_membrane(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    // Trailing blank lines are tolerated, nothing else is.
    while (!lines.empty() && words(lines.back()).empty()) {
        lines.pop_back();
    }

    std::vector<std::string> expected{"MEMBRANE v1", "literals:"};
    for (int p = 0; p < kPlaProducts; ++p) {
        expected.push_back("AND P" + std::to_string(p + 1) + ":");
    }
    for (auto name : kOutputNames) {
        expected.push_back("OR " + std::string(name) + ":");
    }
    if (lines.size() != expected.size()) {
        throw ParseError("expected " + std::to_string(expected.size()) + " lines, found " +
                             std::to_string(lines.size()),
                         std::min(lines.size(), expected.size()) + 1, 1);
    }

    HolePattern pattern;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        auto w = words(lines[i]);
        if (i == 0) {
            if (w.size() != 2 || w[0].text != "MEMBRANE" || w[1].text != "v1") {
                throw ParseError("expected header 'MEMBRANE v1'", line_no, 1);
            }
            continue;
        }
        if (i == 1) {
            if (w.empty() || w[0].text != "literals:" || w.size() != 1 + kLiteralNames.size()) {
                throw ParseError("expected 'literals: S1 S1n S0 S0n A An'", line_no, 1);
            }
            for (std::size_t l = 0; l < kLiteralNames.size(); ++l) {
                if (w[l + 1].text != kLiteralNames[l]) {
                    throw ParseError("unexpected literal column '" + w[l + 1].text + "'", line_no, w[l + 1].column);
                }
            }
            continue;
        }
        const bool is_and = i < 2 + kPlaProducts;
        const std::string& head = expected[i];
        const std::size_t head_words = 2;
        if (w.size() < head_words || w[0].text + " " + w[1].text != head) {
            throw ParseError("expected '" + head + "'", line_no, 1);
        }
        int holes = 0;
        for (std::size_t k = head_words; k < w.size(); ++k) {
            const Word& tok = w[k];
            bool* cell = nullptr;
            if (is_and) {
                auto it = std::find(kLiteralNames.begin(), kLiteralNames.end(), tok.text);
                if (it != kLiteralNames.end()) {
                    cell = &pattern.and_plane[i - 2][it - kLiteralNames.begin()];
                }
            } else if (tok.text.size() == 2 && tok.text[0] == 'P' && tok.text[1] >= '1' &&
                       tok.text[1] < '1' + kPlaProducts) {
                cell = &pattern.or_plane[i - 2 - kPlaProducts][tok.text[1] - '1'];
            }
            if (cell == nullptr) {
                throw ParseError("unknown token '" + tok.text + "'", line_no, tok.column);
            }
            if (*cell) {
                throw ParseError("duplicate hole '" + tok.text + "'", line_no, tok.column);
            }
            *cell = true;
            ++holes;
        }
        if (holes > kPlaFanin) {
            std::string row = head.substr(0, head.size() - 1);
            throw ParseError(row + ": fan-in " + std::to_string(holes) + " > " + std::to_string(kPlaFanin), line_no,
                             1);
        }
    }
    return pattern;
}

std::pair<Logic, Logic> pla_outputs(const Netlist& net, bool s1, bool s0, bool a, const PlaPorts& ports) {
    NodePressures in;
    for (int l = 0; l < kPlaLiterals; ++l) {
        if (net.node_index(ports.literals[l])) {
            in[ports.literals[l]] = eval_literal(l, s1, s0, a) ? 1.0 : 0.0;
        }
    }
    QuasiStaticResult r = run_quasistatic(net, in);
    return {r.level_of(net, ports.outputs[0]), r.level_of(net, ports.outputs[1])};
}

}  // namespace pneulogic
