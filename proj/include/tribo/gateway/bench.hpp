#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "json.hpp"
#include "tribo/gateway/server.hpp"
#include "tribo/nn/model.hpp"

namespace tribo::gw {

struct BenchConfig {
    std::size_t nodes = 4;
    double rate_hz = 100.0;
    double duration_s = 60.0;
    std::uint64_t seed = 0;
    GatewayConfig gateway{};  // ports are replaced by ephemeral ones
};

struct LatencySummary {
    std::size_t count = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
};

/// Nearest-rank percentile, q in [0, 100]. Empty input gives 0.
double percentile(std::vector<double> values, double q);
LatencySummary summarize_latency(const std::vector<double>& ms);

struct BenchReport {
    LatencySummary latency;
    std::size_t packets_sent = 0;
    std::size_t windows = 0;
    std::size_t dropped_windows = 0;
    std::size_t terminal_events = 0;
    std::size_t terminal_gaps = 0;
    double wall_s = 0.0;

    nlohmann::json to_json() const;
};

/// In-process gateway on loopback with `nodes` real-time sensor simulators
/// (gaits and subjects cycled) and one terminal subscriber.
BenchReport run_bench(const BenchConfig& cfg, std::shared_ptr<nn::Model> posture,
                      std::shared_ptr<nn::Model> identity = nullptr, const std::atomic<bool>* stop = nullptr);

}  // namespace tribo::gw
