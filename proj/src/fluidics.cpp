#include "pneulogic/fluidics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pneulogic/error.hpp"
#include "pneulogic/netlist.hpp"

namespace pneulogic {

namespace {

constexpr double kSliver = 1e-12;

bool same(const Composition& a, const Composition& b) {
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        if (std::abs(v - (it == b.end() ? 0.0 : it->second)) > kSliver) {
            return false;
        }
    }
    for (const auto& [k, v] : b) {
        if (!a.contains(k) && std::abs(v) > kSliver) {
            return false;
        }
    }
    return true;
}

Composition pure(std::string_view source) { return Composition{{std::string(source), 1.0}}; }

}  // namespace

void normalize(Composition& c) {
    double total = 0.0;
    for (const auto& [k, v] : c) {
        if (v < 0.0) {
            throw Error("negative fraction for " + k);
        }
        total += v;
    }
    if (total <= 0.0) {
        throw Error("empty composition");
    }
    std::erase_if(c, [](const auto& kv) { return kv.second == 0.0; });
    for (auto& [k, v] : c) {
        v /= total;
    }
}

Composition blend(const std::vector<std::pair<double, const Composition*>>& parts) {
    Composition out;
    double w = 0.0;
    for (const auto& [weight, c] : parts) {
        for (const auto& [k, v] : *c) {
            out[k] += weight * v;
        }
        w += weight;
    }
    if (w <= 0.0) {
        return out;
    }
    for (auto& [k, v] : out) {
        v /= w;
    }
    return out;
}

// ---- pump ------------------------------------------------------------------

int PumpCounter::update(const std::array<Logic, 3>& phases) {
    int done = 0;
    for (int p = 0; p < 3; ++p) {
        const bool rose = phases[p] == Logic::One && last_[p] == Logic::Zero;
        if (phases[p] != Logic::Unknown) {
            last_[p] = phases[p];
        }
        if (!rose) {
            continue;
        }
        if (p == expected_) {
            expected_ = (p + 1) % 3;
            if (p == 2) {
                ++cycles_;
                ++done;
            }
        } else {
            // out of order: a fresh sequence can only start at phase 0
            expected_ = p == 0 ? 1 : 0;
        }
    }
    return done;
}

void PumpCounter::reset() { *this = PumpCounter{}; }

// ---- mixer -----------------------------------------------------------------

RotaryMixer::RotaryMixer(MixerParams p) : p_(p) {
    if (p_.ring_volume <= 0.0 || p_.q <= 0.0 || p_.n_mix < 1) {
        throw Error("mixer needs positive ring volume, stroke volume and n_mix");
    }
    plugs_.push_back(Plug{p_.ring_volume, pure(kReservoir1)});
}

void RotaryMixer::push(const Composition& in, double outlet) {
    // Fluid in [0, outlet) shifts downstream by q; what passes the outlet
    // leaves the ring. Downstream of the outlet nothing moves.
    std::vector<Plug> front{Plug{std::min(p_.q, outlet), in}};
    std::vector<Plug> back;
    double pos = 0.0;
    for (const Plug& plug : plugs_) {
        const double end = pos + plug.length;
        if (end <= outlet) {
            front.push_back(plug);
        } else if (pos >= outlet) {
            back.push_back(plug);
        } else {
            front.push_back(Plug{outlet - pos, plug.c});
            back.push_back(Plug{end - outlet, plug.c});
        }
        pos = end;
    }
    double room = outlet;
    std::vector<Plug> kept;
    for (Plug& plug : front) {
        if (room <= kSliver) {
            break;
        }
        plug.length = std::min(plug.length, room);
        room -= plug.length;
        kept.push_back(std::move(plug));
    }
    kept.insert(kept.end(), back.begin(), back.end());
    plugs_ = std::move(kept);
    compact();
}

void RotaryMixer::compact() {
    std::vector<Plug> out;
    for (Plug& plug : plugs_) {
        if (plug.length <= kSliver) {
            continue;
        }
        if (!out.empty() && same(out.back().c, plug.c)) {
            out.back().length += plug.length;
        } else {
            out.push_back(std::move(plug));
        }
    }
    plugs_ = std::move(out);
}

Composition RotaryMixer::average(double from, double to) const {
    std::vector<std::pair<double, const Composition*>> parts;
    double pos = 0.0;
    for (const Plug& plug : plugs_) {
        const double lo = std::max(pos, from);
        const double hi = std::min(pos + plug.length, to);
        if (hi > lo) {
            parts.emplace_back(hi - lo, &plug.c);
        }
        pos += plug.length;
    }
    return blend(parts);
}

void RotaryMixer::cycle(int state) {
    if (state < 0 || state >= 4) {
        throw Error("mixer state out of range");
    }
    if (state != 0) {
        mix_cycles_ = 0;
    }
    const double full = p_.ring_volume;
    switch (state) {
        case 0b10: push(pure(kReservoir1), full); break;
        case 0b11: push(pure(kReservoir2), full / 2.0); break;
        case 0b01: push(pure(kReservoir2), full); break;
        default: {
            const Composition mean = ring();
            const int remaining = p_.n_mix - mix_cycles_;
            if (remaining <= 1) {
                plugs_ = {Plug{full, mean}};
            } else {
                // linear decay of every deviation, zero after n_mix cycles
                for (Plug& plug : plugs_) {
                    Composition c = mean;
                    for (auto& [k, v] : c) {
                        auto it = plug.c.find(k);
                        const double own = it == plug.c.end() ? 0.0 : it->second;
                        v = own + (v - own) / remaining;
                    }
                    plug.c = std::move(c);
                }
                compact();
            }
            ++mix_cycles_;
        }
    }
    last_state_ = state;
}

void RotaryMixer::run(int state, int cycles) {
    for (int i = 0; i < cycles; ++i) {
        cycle(state);
    }
}

Compartment RotaryMixer::left() const {
    return Compartment{"left", p_.ring_volume / 2.0, average(0.0, p_.ring_volume / 2.0)};
}

Compartment RotaryMixer::right() const {
    return Compartment{"right", p_.ring_volume / 2.0, average(p_.ring_volume / 2.0, p_.ring_volume)};
}

Composition RotaryMixer::ring() const { return average(0.0, p_.ring_volume); }

double RotaryMixer::fraction(std::string_view source) const {
    const Composition c = ring();
    auto it = c.find(std::string(source));
    return it == c.end() ? 0.0 : it->second;
}

// ---- ladder ----------------------------------------------------------------

DilutionLadder::DilutionLadder(LadderParams p) : p_(std::move(p)) {
    if (p_.rung_volumes.size() < 2) {
        throw Error("dilution ladder needs at least two rungs");
    }
    for (double v : p_.rung_volumes) {
        if (v <= 0.0) {
            throw Error("rung volumes must be positive");
        }
    }
    c_.assign(p_.rung_volumes.size(), 0.0);
    c_[0] = 1.0;
    initial_solute_ = solute();
}

void DilutionLadder::cycle(const std::vector<bool>& active_lines) {
    if (active_lines.size() != lines()) {
        throw Error("dilution ladder has " + std::to_string(lines()) + " lines, got " +
                    std::to_string(active_lines.size()));
    }
    const auto n = std::count(active_lines.begin(), active_lines.end(), true);
    if (n != 1) {
        throw Error("dilution ladder needs exactly one active line, got " + std::to_string(n));
    }
    const auto k = static_cast<std::size_t>(std::find(active_lines.begin(), active_lines.end(), true) -
                                            active_lines.begin());
    if (active_ != k) {
        active_ = k;
        active_cycles_ = 0;
        done_ = false;
    }
    ++active_cycles_;
    if (!done_ && active_cycles_ >= p_.n_mix) {
        dilute(k);
        done_ = true;
    }
}

void DilutionLadder::dilute(std::size_t k) {
    if (k >= lines()) {
        throw Error("no dilution line " + std::to_string(k));
    }
    const double vk = p_.rung_volumes[k];
    const double vn = p_.rung_volumes[k + 1];
    const double before = c_[k];
    const double mean = (vk * c_[k] + vn * c_[k + 1]) / (vk + vn);
    c_[k + 1] = mean;
    refilled_ += vk * (before - mean);
    c_[k] = before;
    ++dilutions_;
}

double DilutionLadder::solute() const {
    return std::inner_product(c_.begin(), c_.end(), p_.rung_volumes.begin(), 0.0);
}

std::vector<Compartment> DilutionLadder::compartments() const {
    std::vector<Compartment> out;
    for (std::size_t i = 0; i < c_.size(); ++i) {
        Composition c{{std::string(kSample), c_[i]}, {std::string(kBuffer), 1.0 - c_[i]}};
        out.push_back(Compartment{"rung" + std::to_string(i), p_.rung_volumes[i], std::move(c)});
    }
    return out;
}

// ---- config ----------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(std::string_view v, std::size_t line) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
        throw ParseError("expected a number, got '" + std::string(v) + "'", line);
    }
    return out;
}

}  // namespace

PlantConfig parse_plant_config(std::string_view text, PlantConfig cfg) {
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view s = raw;
        if (auto hash = s.find('#'); hash != std::string_view::npos) {
            s = s.substr(0, hash);
        }
        s = trim(s);
        if (s.empty()) {
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("expected key = value", line, 1);
        }
        const std::string key(trim(s.substr(0, eq)));
        const std::string_view value = trim(s.substr(eq + 1));
        auto positive = [&](double v) {
            if (v <= 0.0) {
                throw ParseError(key + " must be positive", line);
            }
            return v;
        };
        if (key == "topology") {
            if (value != "mixer" && value != "dilution") {
                throw ParseError("topology must be mixer or dilution", line);
            }
            cfg.topology = std::string(value);
        } else if (key == "q") {
            cfg.q = positive(to_double(value, line));
        } else if (key == "n_mix") {
            cfg.n_mix = static_cast<int>(positive(to_double(value, line)));
        } else if (key == "ring_volume") {
            cfg.ring_volume = positive(to_double(value, line));
        } else if (key == "rung_volumes") {
            cfg.rung_volumes.clear();
            std::string_view rest = value;
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                cfg.rung_volumes.push_back(positive(to_double(trim(rest.substr(0, comma)), line)));
                rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            }
            if (cfg.rung_volumes.size() < 2) {
                throw ParseError("rung_volumes needs at least two rungs", line);
            }
        } else if (key == "clock_period") {
            cfg.clock_period = positive(to_double(value, line));
        } else if (key == "tick") {
            cfg.tick = positive(to_double(value, line));
        } else if (key == "dt") {
            cfg.dt = positive(to_double(value, line));
        } else if (key == "ring_stages") {
            cfg.ring_stages = static_cast<int>(to_double(value, line));
            if (cfg.ring_stages < 3 || cfg.ring_stages % 2 == 0) {
                throw ParseError("ring_stages must be odd and at least 3", line);
            }
        } else {
            throw ParseError("unknown key " + key, line, 1);
        }
    }
    return cfg;
}

std::string history_tsv(const std::vector<HistoryRow>& rows) {
    std::ostringstream out;
    out << "cycle\tcompartment\tsource\tfraction\n";
    for (const HistoryRow& r : rows) {
        out << r.cycle << '\t' << r.compartment << '\t' << r.source << '\t' << format_float(r.fraction) << '\n';
    }
    return out.str();
}

}  // namespace pneulogic
