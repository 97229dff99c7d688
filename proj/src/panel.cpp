#include "pneulogic/panel.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pneulogic/error.hpp"

namespace pneulogic {

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ProfileLoader directory_profiles(std::string dir) {
    return [dir = std::move(dir)](const std::string& name) {
        if (name.empty() || name.find_first_of("/\\.") != std::string::npos) {
            throw Error("bad profile name '" + name + "'");
        }
        ChipProfile p{compile(slurp(dir + "/" + name + ".fsm")), parse_plant_config(slurp(dir + "/" + name + ".plant"))};
        return p;
    };
}

json error_message(const std::string& message) {
    return json{{"v", kProtocolVersion}, {"type", "error"}, {"message", message}};
}

json snapshot_json(const Snapshot& s, bool running, std::string_view reason) {
    json j;
    j["v"] = kProtocolVersion;
    j["type"] = "snapshot";
    j["reason"] = reason;
    j["program"] = s.program;
    j["topology"] = s.topology;
    j["sim_time"] = s.time;
    j["running"] = running;
    if (s.state) {
        j["state"] = state_label(*s.state);
        j["state_bits"] = {(*s.state >> 1) & 1, *s.state & 1};
    } else {
        j["state"] = nullptr;
        j["state_bits"] = nullptr;
    }
    j["clk"] = s.clk;
    j["button_covered"] = s.button_covered;
    j["pump_cycles"] = s.pump_cycles;
    j["transitions"] = s.transitions;
    j["outputs"] = json::object();
    for (const auto& [name, level] : s.outputs) {
        j["outputs"][name] = level;
    }
    j["valves"] = json::object();
    for (const auto& [id, open] : s.valves) {
        j["valves"][id] = open;
    }
    j["probes"] = json::object();
    for (const auto& [id, p] : s.probes) {
        j["probes"][id] = p;
    }
    j["compartments"] = json::array();
    for (const Compartment& c : s.compartments) {
        j["compartments"].push_back({{"id", c.id}, {"volume", c.volume}, {"composition", c.composition}});
    }
    return j;
}

PanelSession::PanelSession(ProfileLoader loader) : loader_(std::move(loader)) {}

json PanelSession::snapshot(std::string_view reason) const {
    return snapshot_json(session_->snapshot(), running_, reason);
}

std::vector<json> PanelSession::handle_line(std::string_view line) {
    json cmd;
    try {
        cmd = json::parse(line);
    } catch (const json::parse_error& e) {
        return {error_message(std::string("malformed command: ") + e.what())};
    }
    return handle(cmd);
}

std::vector<json> PanelSession::handle(const json& cmd) {
    if (!cmd.is_object() || !cmd.contains("cmd") || !cmd["cmd"].is_string()) {
        return {error_message("malformed command: expected an object with a \"cmd\" string")};
    }
    if (!cmd.contains("v") || cmd["v"] != kProtocolVersion) {
        return {error_message("unsupported protocol version")};
    }
    const std::string name = cmd["cmd"];
    try {
        if (name == "load") {
            const std::string profile = cmd.value("profile", std::string());
            session_.reset();
            profile_.reset();
            running_ = false;
            try {
                profile_ = loader_(profile);
            } catch (const std::exception& e) {
                return {error_message("load failed: " + std::string(e.what()))};
            }
            profile_name_ = profile;
            session_ = std::make_unique<EmbeddedSession>(profile_->program, profile_->plant);
            return {snapshot("load")};
        }
        if (!session_) {
            return {error_message("no chip loaded")};
        }
        if (name == "reset") {
            running_ = false;
            session_ = std::make_unique<EmbeddedSession>(profile_->program, profile_->plant);
            return {snapshot("reset")};
        }
        if (name == "start") {
            running_ = true;
            return {snapshot("start")};
        }
        if (name == "pause") {
            running_ = false;
            return {snapshot("pause")};
        }
        if (name == "press_button" || name == "release_button") {
            if (!session_->button_clocked()) {
                return {error_message("no button on chip")};
            }
            name == "press_button" ? session_->press() : session_->release();
            return {snapshot(name)};
        }
        if (name == "step") {
            const json n = cmd.value("n", json(1));
            if (!n.is_number_integer() || n.get<long>() < 0) {
                return {error_message("step needs a non-negative integer n")};
            }
            std::vector<json> out = advance(n.get<long>());
            out.push_back(snapshot("step"));
            return out;
        }
        if (name == "snapshot") {
            return {snapshot("snapshot")};
        }
    } catch (const std::exception& e) {
        return {error_message(e.what())};
    }
    return {error_message("unknown command " + name)};
}

std::vector<json> PanelSession::advance(long ticks) {
    std::vector<json> out;
    for (long i = 0; i < ticks; ++i) {
        const auto before = session_->state();
        session_->tick();
        if (session_->state() != before) {
            out.push_back(snapshot("state_change"));
        }
    }
    return out;
}

std::vector<json> PanelSession::on_tick() {
    if (!running_ || !session_) {
        return {};
    }
    std::vector<json> out = advance(1);
    if (++since_periodic_ >= periodic_ticks) {
        since_periodic_ = 0;
        if (out.empty()) {
            out.push_back(snapshot("periodic"));
        }
    }
    return out;
}

// ---- transport -------------------------------------------------------------

PanelServer::PanelServer(ProfileLoader loader, ServerOptions options)
    : loader_(std::move(loader)), options_(std::move(options)) {}

PanelServer::~PanelServer() {
    stop();
    for (std::thread& t : clients_) {
        if (t.joinable()) {
            t.join();
        }
    }
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
    }
}

int PanelServer::listen() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        throw Error(std::string("socket: ") + std::strerror(errno));
    }
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
    if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
        throw Error("bad host " + options_.host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 8) < 0) {
        throw Error("cannot listen on " + options_.host + ":" + std::to_string(options_.port) + ": " +
                    std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

void PanelServer::run() {
    if (listen_fd_ < 0) {
        listen();
    }
    while (!stopping_) {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) {
            continue;
        }
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            continue;
        }
        std::lock_guard lock(mutex_);
        clients_.emplace_back([this, fd] { serve_client(fd); });
    }
}

void PanelServer::stop() { stopping_ = true; }

namespace {

bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

bool send_messages(int fd, const std::vector<json>& msgs) {
    std::string out;
    for (const json& m : msgs) {
        out += m.dump();
        out += '\n';
    }
    return out.empty() || send_all(fd, out);
}

}  // namespace

void PanelServer::serve_client(int fd) {
    using clock = std::chrono::steady_clock;
    // Reading, command handling and ticking share this thread, so commands
    // apply strictly in arrival order between ticks.
    PanelSession session(loader_);
    std::string buffer;
    auto next_tick = clock::now();
    bool open = true;
    while (open && !stopping_) {
        const auto tick_period = std::chrono::duration<double, std::milli>(session.tick_length() * options_.ms_per_unit);
        int timeout = 100;
        if (session.running()) {
            const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - clock::now()).count();
            timeout = static_cast<int>(std::clamp<long long>(wait, 0, 100));
        }
        pollfd p{fd, POLLIN, 0};
        if (::poll(&p, 1, timeout) > 0) {
            char chunk[4096];
            const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
            if (n <= 0) {
                break;
            }
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t nl;
            while (open && (nl = buffer.find('\n')) != std::string::npos) {
                std::string line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                if (line.find_first_not_of(" \t\r") == std::string::npos) {
                    continue;
                }
                const bool was_running = session.running();
                open = send_messages(fd, session.handle_line(line));
                if (session.running() && !was_running) {
                    next_tick = clock::now();
                }
            }
        }
        if (session.running() && clock::now() >= next_tick) {
            open = open && send_messages(fd, session.on_tick());
            next_tick += std::chrono::duration_cast<clock::duration>(tick_period);
            if (clock::now() - next_tick > std::chrono::seconds(1)) {
                next_tick = clock::now();  // fell far behind: drop the backlog
            }
        }
    }
    ::close(fd);
}

}  // namespace pneulogic
