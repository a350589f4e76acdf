#include <doctest.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "tribo/error.hpp"
#include "tribo/gateway/client.hpp"
#include "tribo/gateway/net.hpp"
#include "tribo/gateway/nmea.hpp"
#include "tribo/gateway/protocol.hpp"
#include "tribo/gateway/server.hpp"
#include "tribo/rng.hpp"

using namespace tribo;
using namespace tribo::gw;
using namespace std::chrono_literals;

namespace {

struct Quiet {
    Quiet() { spdlog::set_level(spdlog::level::err); }
} quiet;

template <typename F>
bool wait_until(F pred, std::chrono::milliseconds timeout = 5000ms) {
    const auto end = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < end) {
        if (pred()) return true;
        std::this_thread::sleep_for(10ms);
    }
    return pred();
}

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::InvalidInput;
}

std::shared_ptr<nn::Model> small_model() {
    auto m = std::make_shared<nn::Model>(nn::ModelConfig{}, 3);
    std::vector<std::string> labels;
    for (GaitClass c : kAllGaitClasses) labels.emplace_back(to_string(c));
    m->set_labels(labels);
    return m;
}

GatewayConfig local_config() {
    GatewayConfig c;
    c.node_port = 0;
    c.terminal_port = 0;
    c.heartbeat_s = 3600.0;
    return c;
}

// Collects events from one terminal client running on its own thread.
struct TermCollector {
    std::atomic<bool> stop{false};
    std::mutex m;
    std::vector<nlohmann::json> events;
    std::vector<std::string> errors;
    TerminalReport report;
    std::thread th;

    explicit TermCollector(TerminalConfig cfg) {
        th = std::thread([this, cfg] {
            report = run_terminal(
                cfg, stop,
                [this](const nlohmann::json& e) {
                    std::lock_guard l(m);
                    events.push_back(e);
                },
                [this](const std::string& s) {
                    std::lock_guard l(m);
                    errors.push_back(s);
                });
        });
    }
    ~TermCollector() { finish(); }
    void finish() {
        stop = true;
        if (th.joinable()) th.join();
    }
    std::size_t count() {
        std::lock_guard l(m);
        return events.size();
    }
};

TerminalConfig term_for(const Gateway& g) {
    TerminalConfig t;
    t.port = g.terminal_port();
    t.backoff.initial_s = 0.05;
    return t;
}

}  // namespace

TEST_CASE("zero sensor packet encodes to the documented header") {
    const auto bytes = encode_frame(to_frame(SensorPacket{}));
    REQUIRE(bytes.size() == 33);
    CHECK(bytes[0] == 0x01);
    CHECK(bytes[1] == 0x1C);
    CHECK(bytes[2] == 0);
    CHECK(bytes[3] == 0);
    CHECK(bytes[4] == 0);
    for (std::size_t i = 5; i < bytes.size(); ++i) CHECK(bytes[i] == 0);
}

TEST_CASE("sensor and heart packets round-trip") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        SensorPacket p{rng.next(), static_cast<std::uint32_t>(rng.next()), {}};
        for (float& v : p.values) v = static_cast<float>(rng.normal() * 3.0);
        CHECK(decode_sensor(decode_frame(encode_frame(to_frame(p)))) == p);
        HeartPacket h{rng.next(), static_cast<std::uint32_t>(rng.next()), static_cast<float>(rng.uniform())};
        CHECK(decode_heart(decode_frame(encode_frame(to_frame(h)))) == h);
    }
}

TEST_CASE("little-endian field layout") {
    const auto b = encode_frame(to_frame(SensorPacket{0x0102030405060708ull, 0x0A0B0C0Du, {1.0f, 0, 0, 0}}));
    CHECK(b[5] == 0x08);
    CHECK(b[12] == 0x01);
    CHECK(b[13] == 0x0D);
    CHECK(b[16] == 0x0A);
    // 1.0f = 0x3F800000
    CHECK(b[17] == 0x00);
    CHECK(b[20] == 0x3F);
    CHECK(b[19] == 0x80);
}

TEST_CASE("truncated and malformed frames are protocol errors") {
    auto bytes = encode_frame(to_frame(SensorPacket{}));
    SUBCASE("27 of 28 payload bytes") {
        bytes.pop_back();
        CHECK(kind_of([&] { decode_frame(bytes); }) == ErrorKind::ProtocolError);
        Frame f{FrameType::Sensor, std::vector<std::uint8_t>(27)};
        CHECK(kind_of([&] { decode_sensor(f); }) == ErrorKind::ProtocolError);
    }
    SUBCASE("trailing byte") {
        bytes.push_back(0);
        CHECK(kind_of([&] { decode_frame(bytes); }) == ErrorKind::ProtocolError);
    }
    SUBCASE("unknown type") {
        bytes[0] = 0x7F;
        CHECK(kind_of([&] { decode_frame(bytes); }) == ErrorKind::ProtocolError);
    }
    SUBCASE("oversize length") {
        std::vector<std::uint8_t> h{0x03, 0x01, 0x00, 0x01, 0x00};
        CHECK(kind_of([&] { decode_frame(h); }) == ErrorKind::ProtocolError);
        FrameDecoder d;
        d.feed(h);
        CHECK(kind_of([&] { d.next(); }) == ErrorKind::ProtocolError);
    }
    SUBCASE("non-finite value") {
        SensorPacket p;
        p.values[2] = std::nanf("");
        CHECK(kind_of([&] { decode_sensor(to_frame(p)); }) == ErrorKind::ProtocolError);
    }
    SUBCASE("wrong type for decoder") {
        CHECK(kind_of([&] { decode_heart(to_frame(SensorPacket{})); }) == ErrorKind::ProtocolError);
    }
}

TEST_CASE("stream decoder reassembles frames fed byte by byte") {
    std::vector<std::uint8_t> stream;
    std::vector<Frame> sent;
    for (std::uint32_t i = 0; i < 20; ++i) {
        sent.push_back(i % 3 == 0 ? gps_frame("$GPGGA,x*00") : to_frame(SensorPacket{i, i, {}}));
        const auto b = encode_frame(sent.back());
        stream.insert(stream.end(), b.begin(), b.end());
    }
    FrameDecoder d;
    std::vector<Frame> got;
    for (std::uint8_t byte : stream) {
        d.feed(std::span(&byte, 1));
        while (auto f = d.next()) got.push_back(*f);
    }
    CHECK(got == sent);
    CHECK(d.buffered() == 0);
}

TEST_CASE("GGA sentence parses to decimal degrees") {
    const auto fix = parse_nmea("$GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,*47\r\n");
    CHECK(fix.sentence == "GGA");
    CHECK(fix.latitude == doctest::Approx(48.1173).epsilon(1e-9));
    CHECK(fix.longitude == doctest::Approx(11.516667).epsilon(1e-6));
    CHECK(fix.quality == 1);
    CHECK(fix.satellites == 8);
    CHECK(fix.valid);
    CHECK(fix.time_utc == "123519");
}

TEST_CASE("NMEA error cases") {
    CHECK(kind_of([] { parse_nmea("$GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,*48"); }) ==
          ErrorKind::ChecksumError);
    const std::string gsv = "GPGSV,1,1,00";
    CHECK(kind_of([&] { parse_nmea("$" + gsv + "*" + nmea_checksum(gsv)); }) == ErrorKind::Unsupported);
    CHECK(kind_of([] { parse_nmea("GPGGA,1*00"); }) == ErrorKind::ParseError);
    const std::string bad = "GPGGA,123519,48x7.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,";
    CHECK(kind_of([&] { parse_nmea("$" + bad + "*" + nmea_checksum(bad)); }) == ErrorKind::ParseError);
}

TEST_CASE("RMC with void status is invalid") {
    const std::string body = "GPRMC,123519,V,4807.038,N,01131.000,W,022.4,084.4,230394,003.1,W";
    const auto fix = parse_nmea("$" + body + "*" + nmea_checksum(body));
    CHECK(fix.sentence == "RMC");
    CHECK_FALSE(fix.valid);
    CHECK(fix.longitude == doctest::Approx(-11.516667).epsilon(1e-6));
    REQUIRE(fix.speed_knots);
    CHECK(*fix.speed_knots == doctest::Approx(22.4));
    const std::string active = "GNRMC,123519,A,4807.038,S,01131.000,E,022.4,084.4,230394,003.1,W";
    const auto a = parse_nmea("$" + active + "*" + nmea_checksum(active));
    CHECK(a.valid);
    CHECK(a.latitude == doctest::Approx(-48.1173));
}

TEST_CASE("format_gga round-trips") {
    const auto line = format_gga(-33.8688, 151.2093, 2, 11, "010203");
    const auto fix = parse_nmea(line);
    CHECK(fix.latitude == doctest::Approx(-33.8688).epsilon(1e-6));
    CHECK(fix.longitude == doctest::Approx(151.2093).epsilon(1e-6));
    CHECK(fix.quality == 2);
    CHECK(fix.satellites == 11);
}

TEST_CASE("backoff grows geometrically and caps") {
    Backoff b;
    CHECK(b.delay(0) == doctest::Approx(0.1));
    CHECK(b.delay(1) == doctest::Approx(0.2));
    CHECK(b.delay(3) == doctest::Approx(0.8));
    CHECK(b.delay(20) == doctest::Approx(5.0));
}

TEST_CASE("event schema validation") {
    nlohmann::json ok{{"seq", 1}, {"ts", "t"}, {"kind", "posture"}, {"class", "Running"},
                      {"confidence", 0.9}, {"alert", false}, {"latency_ms", 3.0}};
    CHECK_FALSE(validate_event(ok));
    auto bad = ok;
    bad["confidence"] = 1.5;
    CHECK(validate_event(bad));
    bad = ok;
    bad.erase("seq");
    CHECK(validate_event(bad));
    bad = ok;
    bad["kind"] = "weather";
    CHECK(validate_event(bad));
    CHECK(validate_event(nlohmann::json{{"seq", 2}, {"ts", "t"}, {"kind", "gps"}, {"lat", 91.0}, {"lon", 0.0}}));
}

TEST_CASE("gateway config from JSON with environment override") {
    auto c = GatewayConfig::from_json({{"window_s", 4.0}, {"node_port", 9000}});
    CHECK(c.window_s == 4.0);
    CHECK(c.stride_s == 1.0);
    CHECK(c.node_port == 9000);
    ::setenv("TRIBO_NODE_PORT", "9100", 1);
    CHECK(GatewayConfig::from_json({{"node_port", 9000}}).node_port == 9100);
    ::setenv("TRIBO_NODE_PORT", "abc", 1);
    CHECK(kind_of([] { GatewayConfig::from_json(nlohmann::json::object()); }) == ErrorKind::InvalidSpec);
    ::unsetenv("TRIBO_NODE_PORT");
    CHECK(kind_of([] { GatewayConfig::from_json({{"stride_s", -1.0}}); }) == ErrorKind::InvalidSpec);
    CHECK(kind_of([] { GatewayConfig::from_json({{"stride_s", "x"}}); }) == ErrorKind::ParseError);
}

TEST_CASE("sensor node streams 1000 packets in 10 s at 100 Hz") {
    Listener l = listen_tcp("127.0.0.1", 0);
    std::vector<SensorPacket> got;
    std::thread server([&] {
        Socket s = accept_for(l.socket, 5000ms);
        REQUIRE(s.valid());
        FrameDecoder d;
        std::vector<std::uint8_t> buf(4096);
        while (true) {
            auto n = s.recv_some(buf, 15000ms);
            if (!n || *n == 0) break;
            d.feed(std::span(buf.data(), *n));
            while (auto f = d.next()) got.push_back(decode_sensor(*f));
        }
    });
    NodeConfig cfg;
    cfg.port = l.port;
    cfg.duration_s = 10.0;
    cfg.seed = 5;
    std::atomic<bool> stop{false};
    const auto t0 = std::chrono::steady_clock::now();
    const NodeReport r = run_node(cfg, stop);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    server.join();
    CHECK(r.sent == 1000);
    REQUIRE(got.size() == 1000);
    for (std::uint32_t i = 0; i < 1000; ++i) CHECK(got[i].seq == i);
    CHECK(got[100].timestamp_us == 1000000);
    CHECK(elapsed == doctest::Approx(9.99).epsilon(0.05));
}

TEST_CASE("stationary GPS node reports a constant fix") {
    Listener l = listen_tcp("127.0.0.1", 0);
    std::vector<GpsFix> fixes;
    std::thread server([&] {
        Socket s = accept_for(l.socket, 5000ms);
        FrameDecoder d;
        std::vector<std::uint8_t> buf(4096);
        while (true) {
            auto n = s.recv_some(buf, 5000ms);
            if (!n || *n == 0) break;
            d.feed(std::span(buf.data(), *n));
            while (auto f = d.next()) fixes.push_back(parse_nmea(decode_text(*f)));
        }
    });
    NodeConfig cfg;
    cfg.kind = NodeKind::Gps;
    cfg.port = l.port;
    cfg.rate_hz = 1.0;
    cfg.duration_s = 5.0;
    cfg.realtime = false;
    std::atomic<bool> stop{false};
    run_node(cfg, stop);
    server.join();
    REQUIRE(fixes.size() == 5);
    for (const auto& f : fixes) {
        CHECK(f.latitude == doctest::Approx(48.1173).epsilon(1e-6));
        CHECK(f.longitude == doctest::Approx(11.5167).epsilon(1e-6));
        CHECK(f.valid);
    }
}

TEST_CASE("node gives up after the configured attempts") {
    Listener l = listen_tcp("127.0.0.1", 0);
    const auto port = l.port;
    l.socket.close();
    NodeConfig cfg;
    cfg.port = port;
    cfg.backoff = Backoff{0.01, 0.02, 2.0, 3};
    std::atomic<bool> stop{false};
    const auto r = run_node(cfg, stop);
    CHECK(r.sent == 0);
    CHECK(r.failed_attempts == 3);
}

TEST_CASE("gateway end to end: heart, gps, posture and fan-out") {
    auto cfg = local_config();
    cfg.heart_window_s = 8.0;
    Gateway g(cfg, small_model());
    g.start();
    TermCollector a(term_for(g)), b(term_for(g));
    REQUIRE(wait_until([&] { return g.stats().terminals_connected == 2; }));

    std::atomic<bool> stop{false};
    NodeConfig heart;
    heart.kind = NodeKind::Heart;
    heart.port = g.node_port();
    heart.duration_s = 10.0;
    heart.realtime = false;
    run_node(heart, stop);

    NodeConfig gps;
    gps.kind = NodeKind::Gps;
    gps.port = g.node_port();
    gps.rate_hz = 1.0;
    gps.duration_s = 3.0;
    gps.realtime = false;
    run_node(gps, stop);

    NodeConfig sensor;
    sensor.port = g.node_port();
    sensor.duration_s = 7.0;
    sensor.realtime = false;
    sensor.gait = GaitClass::Running;
    run_node(sensor, stop);

    // heart: 5 s to 10 s in 1 s strides = 6; gps 3; posture: 5 s to 7 s = 3
    const bool all_seen = wait_until([&] { return a.count() >= 12 && b.count() >= 12; });
    if (!all_seen) {
        for (const auto& e : a.events) MESSAGE(e.dump());
        for (const auto& e : a.errors) MESSAGE(e);
    }
    REQUIRE(all_seen);
    std::this_thread::sleep_for(200ms);
    a.finish();
    b.finish();
    g.stop();

    CHECK(a.events == b.events);
    CHECK(a.report.gaps == 0);
    CHECK(a.report.schema_errors == 0);
    std::size_t hearts = 0, gpss = 0, postures = 0;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        const auto& e = a.events[i];
        CHECK(e["seq"].get<std::uint64_t>() == i);
        const std::string kind = e["kind"];
        if (kind == "heart") {
            ++hearts;
            CHECK(e["bpm"].get<double>() == doctest::Approx(60.0).epsilon(2.0 / 60.0));
            CHECK(e["valid"].get<bool>());
        } else if (kind == "gps") {
            ++gpss;
            CHECK(e["lat"].get<double>() == doctest::Approx(48.1173).epsilon(1e-6));
        } else if (kind == "posture") {
            ++postures;
            CHECK(parse_gait_class(e["class"].get<std::string>()));
            CHECK(e["latency_ms"].get<double>() >= 0.0);
        }
    }
    CHECK(hearts == 6);
    CHECK(gpss == 3);
    CHECK(postures == 3);
    const auto s = g.stats();
    CHECK(s.windows_enqueued == 3);
    CHECK(s.latencies_ms.size() == 3);
}

TEST_CASE("idle gateway still emits status heartbeats") {
    auto cfg = local_config();
    cfg.heartbeat_s = 0.2;
    Gateway g(cfg, small_model());
    g.start();
    TermCollector t(term_for(g));
    REQUIRE(wait_until([&] { return t.count() >= 2; }, 3000ms));
    t.finish();
    g.stop();
    for (const auto& e : t.events) {
        CHECK(e["kind"] == "status");
        CHECK(e.contains("nodes"));
        CHECK(e.contains("dropped_windows"));
    }
}

TEST_CASE("a dead terminal does not disturb the others") {
    Gateway g(local_config(), small_model());
    g.start();
    TermCollector a(term_for(g)), b(term_for(g));
    {
        Socket c = connect_tcp("127.0.0.1", g.terminal_port());
        REQUIRE(wait_until([&] { return g.stats().terminals_connected == 3; }));
        for (int i = 0; i < 10; ++i) g.publish({{"kind", "status"}});
    }
    for (int i = 0; i < 200; ++i) {
        g.publish({{"kind", "status"}});
        std::this_thread::sleep_for(1ms);
    }
    REQUIRE(wait_until([&] { return a.count() == 210 && b.count() == 210; }));
    CHECK(wait_until([&] { return g.stats().terminals_connected == 2; }));
    a.finish();
    b.finish();
    g.stop();
    CHECK(a.events == b.events);
    CHECK(a.report.gaps == 0);
    CHECK(b.report.gaps == 0);
}

TEST_CASE("gateway drops a node on a protocol error and discards seq regressions") {
    Gateway g(local_config(), small_model());
    g.start();
    {
        Socket s = connect_tcp("127.0.0.1", g.node_port());
        s.send_all(encode_frame(to_frame(SensorPacket{0, 5, {}})));
        s.send_all(encode_frame(to_frame(SensorPacket{0, 3, {}})));
        s.send_all(encode_frame(to_frame(SensorPacket{0, 6, {}})));
        const std::uint8_t junk[] = {0x55, 0, 0, 0, 0};
        s.send_all(std::span(junk));
        REQUIRE(wait_until([&] { return g.stats().protocol_errors == 1; }));
    }
    const auto s = g.stats();
    CHECK(s.seq_regressions == 1);
    g.stop();
}

TEST_CASE("terminal client reports schema violations and seq gaps") {
    Listener l = listen_tcp("127.0.0.1", 0);
    std::thread server([&] {
        Socket s = accept_for(l.socket, 5000ms);
        s.send_all(std::string_view(R"({"seq":0,"ts":"t","kind":"status"})" "\n"));
        s.send_all(std::string_view(R"({"seq":1,"ts":"t","kind":"heart","bpm":60})" "\n"));
        s.send_all(std::string_view("not json\n"));
        s.send_all(std::string_view(R"({"seq":5,"ts":"t","kind":"status"})" "\n"));
        std::this_thread::sleep_for(300ms);
    });
    TerminalConfig cfg;
    cfg.port = l.port;
    cfg.max_events = 2;
    cfg.duration_s = 3.0;
    std::atomic<bool> stop{false};
    std::vector<std::string> errors;
    std::size_t seen = 0;
    const auto r = run_terminal(cfg, stop, [&](const nlohmann::json&) { ++seen; },
                                [&](const std::string& e) { errors.push_back(e); });
    server.join();
    CHECK(seen == 2);
    CHECK(r.schema_errors == 1);
    CHECK(r.parse_errors == 1);
    CHECK(r.gaps == 1);
    REQUIRE(errors.size() >= 2);
    CHECK(errors[0].find("schema violation") != std::string::npos);
}
