#pragma once

// Minimal value-change-dump reader for checking exported traces.

#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

struct VcdChange {
    long long time = 0;
    char value = 'x';
};

struct VcdTrace {
    std::string timescale;
    std::map<std::string, std::vector<VcdChange>> changes;  // by signal name
};

inline VcdTrace read_vcd(const std::string& text) {
    VcdTrace out;
    std::map<std::string, std::string> name_of;
    std::istringstream in(text);
    std::string line;
    long long now = 0;
    bool body = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (!body) {
            std::istringstream ls(line);
            std::string kw;
            ls >> kw;
            if (kw == "$var") {
                std::string type, width, id, name;
                ls >> type >> width >> id >> name;
                name_of[id] = name;
                out.changes[name];
            } else if (kw == "$timescale") {
                ls >> out.timescale;
            } else if (kw == "$enddefinitions") {
                body = true;
            }
            continue;
        }
        if (line[0] == '#') {
            now = std::stoll(line.substr(1));
        } else if (line[0] == '0' || line[0] == '1' || line[0] == 'x') {
            auto it = name_of.find(line.substr(1));
            if (it != name_of.end()) {
                out.changes[it->second].push_back({now, line[0]});
            }
        }
    }
    return out;
}

}  // namespace testsupport
