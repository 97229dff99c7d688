#include "doctest.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <thread>

#include "programs.hpp"
#include "pneulogic/panel.hpp"

using namespace pneulogic;
using nlohmann::json;

namespace {

ProfileLoader programs() { return directory_profiles(std::string(PNEULOGIC_SOURCE_DIR) + "/programs"); }

json cmd(const std::string& name, json extra = json::object()) {
    extra["v"] = 1;
    extra["cmd"] = name;
    return extra;
}

json last(const std::vector<json>& msgs) {
    REQUIRE_FALSE(msgs.empty());
    return msgs.back();
}

// Command stream that replays a button script on the session's tick grid.
std::vector<json> replay_commands(const std::vector<ScriptEvent>& events, double tick, double t_end) {
    std::vector<json> out{cmd("load", {{"profile", "mixer"}})};
    long at = 0;
    auto step_to = [&](double t) {
        const long target = static_cast<long>(std::ceil(t / tick - 1e-9));
        if (target > at) {
            out.push_back(cmd("step", {{"n", target - at}}));
            at = target;
        }
    };
    for (const ScriptEvent& e : events) {
        step_to(e.time);
        out.push_back(cmd(e.kind == ScriptEvent::Kind::Press ? "press_button" : "release_button"));
    }
    step_to(t_end);
    out.push_back(cmd("snapshot"));
    return out;
}

}  // namespace

TEST_CASE("each press-release pair advances the FSM once") {
    PanelSession s(programs());
    CHECK(last(s.handle(cmd("load", {{"profile", "mixer"}})))["state"] == "10");
    s.handle(cmd("step", {{"n", 200}}));
    const std::vector<std::string> want{"11", "01", "00", "10", "11"};
    for (const std::string& next : want) {
        int changes = 0;
        auto count = [&](const std::vector<json>& msgs) {
            for (const json& m : msgs) {
                if (m["reason"] == "state_change") ++changes;
            }
        };
        count(s.handle(cmd("press_button")));
        count(s.handle(cmd("step", {{"n", 50}})));
        count(s.handle(cmd("release_button")));
        count(s.handle(cmd("step", {{"n", 150}})));
        CHECK(changes == 1);
        CHECK(last(s.handle(cmd("snapshot")))["state"] == next);
    }
}

TEST_CASE("snapshots while paused are identical") {
    PanelSession s(programs());
    s.handle(cmd("load", {{"profile", "mixer"}}));
    s.handle(cmd("step", {{"n", 123}}));
    json a = last(s.handle(cmd("snapshot")));
    json b = last(s.handle(cmd("snapshot")));
    CHECK(a == b);
    CHECK(a["sim_time"].get<double>() == doctest::Approx(12.3));
    CHECK(a["valves"].size() == 34 + 5);
    CHECK(a["probes"].contains("S1"));
    // state bits agree with the register probes
    CHECK(a["state_bits"][0] == (a["probes"]["S1"].get<double>() >= 0.7 ? 1 : 0));
    CHECK(a["state_bits"][1] == (a["probes"]["S0"].get<double>() >= 0.7 ? 1 : 0));
}

TEST_CASE("errors leave the session usable") {
    PanelSession s(programs());
    CHECK(last(s.handle(cmd("snapshot")))["message"] == "no chip loaded");
    json bad = last(s.handle(cmd("load", {{"profile", "nonesuch"}})));
    CHECK(bad["type"] == "error");
    CHECK_FALSE(s.loaded());
    CHECK(last(s.handle_line("{not json"))["type"] == "error");
    CHECK(last(s.handle_line(R"({"v":2,"cmd":"snapshot"})"))["message"] == "unsupported protocol version");
    CHECK(last(s.handle_line(R"({"v":1})"))["type"] == "error");

    s.handle(cmd("load", {{"profile", "dilution"}}));
    CHECK(last(s.handle(cmd("press_button")))["message"] == "no button on chip");
    CHECK(last(s.handle(cmd("step", {{"n", -1}})))["type"] == "error");
    CHECK(last(s.handle(cmd("step", {{"n", "x"}})))["type"] == "error");
    CHECK(last(s.handle(cmd("warp"))) ["message"] == "unknown command warp");
    json snap = last(s.handle(cmd("step", {{"n", 10}})));
    CHECK(snap["type"] == "snapshot");
    CHECK(snap["sim_time"].get<double>() == doctest::Approx(1.0));
    json reset = last(s.handle(cmd("reset")));
    CHECK(reset["sim_time"] == 0.0);
    CHECK(reset["state"] == "00");
}

TEST_CASE("start and pause gate paced ticks") {
    PanelSession s(programs());
    s.handle(cmd("load", {{"profile", "mixer"}}));
    CHECK(s.on_tick().empty());
    CHECK(last(s.handle(cmd("start")))["running"] == true);
    double t = 0.0;
    for (int i = 0; i < 30; ++i) {
        for (const json& m : s.on_tick()) {
            CHECK(m["sim_time"].get<double>() >= t);
            t = m["sim_time"];
        }
    }
    CHECK(t == doctest::Approx(3.0));
    s.handle(cmd("pause"));
    CHECK(s.on_tick().empty());
}

TEST_CASE("scripted replay through the service matches the batch run") {
    const auto events = parse_script(testsupport::read_program("mixer_presses.tsv"));
    ChipProfile p = programs()("mixer");
    EmbeddedSession batch(p.program, p.plant);
    batch.run_script(events, 600.0);
    const json want = snapshot_json(batch.snapshot(), false, "snapshot");

    PanelSession s(programs());
    double t = 0.0;
    json got;
    for (const json& c : replay_commands(events, p.plant.tick, 600.0)) {
        for (const json& m : s.handle(c)) {
            REQUIRE(m["type"] == "snapshot");
            CHECK(m["sim_time"].get<double>() >= t);
            t = m["sim_time"];
            got = m;
        }
    }
    CHECK(got["compartments"] == want["compartments"]);
    CHECK(got == want);
}

TEST_CASE("NDJSON over TCP") {
    ServerOptions opt;
    opt.port = 0;
    opt.ms_per_unit = 1.0;
    PanelServer server(programs(), opt);
    const int port = server.listen();
    std::thread loop([&] { server.run(); });

    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);

    std::string buffer;
    auto send = [&](const std::string& line) { ::send(fd, (line + "\n").data(), line.size() + 1, 0); };
    auto read_msg = [&]() {
        std::size_t nl;
        while ((nl = buffer.find('\n')) == std::string::npos) {
            char chunk[4096];
            const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
            REQUIRE(n > 0);
            buffer.append(chunk, static_cast<std::size_t>(n));
        }
        json j = json::parse(buffer.substr(0, nl));
        buffer.erase(0, nl + 1);
        return j;
    };
    // replies to one command carry its reason last
    auto until = [&](const std::string& reason) {
        json m;
        do {
            m = read_msg();
        } while (m["type"] == "snapshot" && m["reason"] != reason);
        return m;
    };

    // two commands in one write are applied in order
    send(R"({"v":1,"cmd":"load","profile":"mixer"})" "\n" R"({"v":1,"cmd":"step","n":100})");
    CHECK(until("load")["sim_time"] == 0.0);
    CHECK(until("step")["sim_time"].get<double>() == doctest::Approx(10.0));
    send(R"({"v":1,"cmd":"bogus"})");
    CHECK(read_msg()["type"] == "error");

    send(R"({"v":1,"cmd":"start"})");
    until("start");
    std::this_thread::sleep_for(std::chrono::milliseconds(150));
    send(R"({"v":1,"cmd":"pause"})");
    json paused = until("pause");
    CHECK(paused["sim_time"].get<double>() > 10.0);
    send(R"({"v":1,"cmd":"snapshot"})");
    json a = until("snapshot");
    send(R"({"v":1,"cmd":"snapshot"})");
    json b = until("snapshot");
    CHECK(a == b);
    CHECK(a["sim_time"] == paused["sim_time"]);

    send(R"({"v":1,"cmd":"press_button"})");
    until("press_button");
    send(R"({"v":1,"cmd":"step","n":50})");
    until("step");
    send(R"({"v":1,"cmd":"release_button"})");
    until("release_button");
    send(R"({"v":1,"cmd":"step","n":100})");
    json changed = read_msg();
    CHECK(changed["reason"] == "state_change");
    CHECK(changed["state"] == "11");
    CHECK(until("step")["state"] == "11");

    ::close(fd);
    server.stop();
    loop.join();
}
