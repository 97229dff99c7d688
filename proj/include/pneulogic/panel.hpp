#pragma once

// Interactive session service: newline-delimited JSON over TCP. Each
// connection owns one co-simulation; see docs/panel-protocol.md.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "pneulogic/cosim.hpp"

namespace pneulogic {

inline constexpr int kProtocolVersion = 1;

struct ChipProfile {
    Compilation program;
    PlantConfig plant;
};

// Resolves a profile name such as "mixer"; throws Error when unknown.
using ProfileLoader = std::function<ChipProfile(const std::string&)>;

// Loads `<dir>/<name>.fsm` and `<dir>/<name>.plant`.
ProfileLoader directory_profiles(std::string dir);

nlohmann::json snapshot_json(const Snapshot& s, bool running, std::string_view reason);

// Command interpreter for one client, independent of any transport.
class PanelSession {
public:
    explicit PanelSession(ProfileLoader loader);

    // One request line in, zero or more reply messages out.
    std::vector<nlohmann::json> handle_line(std::string_view line);
    std::vector<nlohmann::json> handle(const nlohmann::json& cmd);

    // Advances one tick when running. Emits a snapshot when the FSM state
    // changes and every `periodic_ticks` ticks.
    std::vector<nlohmann::json> on_tick();

    bool running() const { return running_; }
    bool loaded() const { return session_ != nullptr; }
    const EmbeddedSession* session() const { return session_.get(); }
    double tick_length() const { return session_ ? session_->config().tick : 0.1; }

    long periodic_ticks = 10;

private:
    std::vector<nlohmann::json> advance(long ticks);
    nlohmann::json snapshot(std::string_view reason) const;

    ProfileLoader loader_;
    std::optional<ChipProfile> profile_;
    std::string profile_name_;
    std::unique_ptr<EmbeddedSession> session_;
    bool running_ = false;
    long since_periodic_ = 0;
};

nlohmann::json error_message(const std::string& message);

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8765;  // 0 picks a free port
    double ms_per_unit = 100.0;  // wall-clock pacing while running
};

class PanelServer {
public:
    PanelServer(ProfileLoader loader, ServerOptions options = {});
    ~PanelServer();

    // Binds and listens; returns the bound port. Throws Error.
    int listen();
    // Accept loop; returns after stop().
    void run();
    void stop();

private:
    void serve_client(int fd);

    ProfileLoader loader_;
    ServerOptions options_;
    int listen_fd_ = -1;
    std::atomic<bool> stopping_{false};
    std::mutex mutex_;
    std::vector<std::thread> clients_;
};

}  // namespace pneulogic
