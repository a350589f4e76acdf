#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tribo/gait.hpp"

namespace tribo::gw {

struct Backoff {
    double initial_s = 0.1;
    double max_s = 5.0;
    double factor = 2.0;
    std::size_t max_attempts = 0;  // consecutive failures before giving up; 0 = never

    /// Delay before retry number `attempt` (0-based): initial * factor^attempt, capped.
    double delay(std::size_t attempt) const;
};

enum class NodeKind { Sensor, Gps, Heart };

std::string_view to_string(NodeKind k);
NodeKind parse_node_kind(std::string_view s);

struct NodeConfig {
    NodeKind kind = NodeKind::Sensor;
    std::string host = "127.0.0.1";
    std::uint16_t port = 7700;
    double rate_hz = 100.0;    // packets per second (GPS: sentences per second)
    double duration_s = 0.0;   // 0 = until stopped
    bool realtime = true;      // pace packets by the wall clock
    // sensor
    GaitClass gait = GaitClass::NormalWalking;
    int subject = 1;
    // heart
    double bpm = 60.0;
    // gps: start point and per-second step in degrees
    double lat = 48.1173;
    double lon = 11.5167;
    double step_lat = 0.0;
    double step_lon = 0.0;
    std::uint64_t seed = 0;
    Backoff backoff{};
};

struct NodeReport {
    std::size_t sent = 0;
    std::size_t connections = 0;
    std::size_t failed_attempts = 0;
};

/// Streams until duration elapses, `stop` is set, or backoff gives up.
NodeReport run_node(const NodeConfig& cfg, const std::atomic<bool>& stop);

struct TerminalConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 7701;
    double duration_s = 0.0;      // 0 = until stopped
    std::size_t max_events = 0;   // 0 = unbounded
    Backoff backoff{};
};

struct TerminalReport {
    std::size_t events = 0;
    std::size_t schema_errors = 0;
    std::size_t parse_errors = 0;
    std::size_t gaps = 0;  // breaks in the seq numbering
    std::size_t connections = 0;
};

/// Subscribes and hands every valid event to `on_event`. Invalid lines are
/// reported through `on_error` and skipped. Reconnects with backoff.
TerminalReport run_terminal(const TerminalConfig& cfg, const std::atomic<bool>& stop,
                            const std::function<void(const nlohmann::json&)>& on_event,
                            const std::function<void(const std::string&)>& on_error = {});

}  // namespace tribo::gw
