#include "tribo/gateway/bench.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "tribo/gateway/client.hpp"
#include "tribo/rng.hpp"
#include "tribo/synth.hpp"

namespace tribo::gw {

using namespace std::chrono_literals;

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

LatencySummary summarize_latency(const std::vector<double>& ms) {
    LatencySummary s;
    s.count = ms.size();
    if (ms.empty()) return s;
    s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
    s.p50_ms = percentile(ms, 50.0);
    s.p95_ms = percentile(ms, 95.0);
    s.max_ms = *std::max_element(ms.begin(), ms.end());
    return s;
}

nlohmann::json BenchReport::to_json() const {
    return {{"packets_sent", packets_sent},
            {"windows", windows},
            {"dropped_windows", dropped_windows},
            {"terminal_events", terminal_events},
            {"terminal_gaps", terminal_gaps},
            {"wall_s", wall_s},
            {"latency_ms",
             {{"count", latency.count},
              {"mean", latency.mean_ms},
              {"p50", latency.p50_ms},
              {"p95", latency.p95_ms},
              {"max", latency.max_ms}}}};
}

BenchReport run_bench(const BenchConfig& cfg, std::shared_ptr<nn::Model> posture, std::shared_ptr<nn::Model> identity,
                      const std::atomic<bool>* stop) {
    static const std::atomic<bool> never{false};
    const std::atomic<bool>& halt = stop ? *stop : never;
    GatewayConfig gc = cfg.gateway;
    gc.node_port = 0;
    gc.terminal_port = 0;
    gc.sample_rate_hz = cfg.rate_hz;
    Gateway gateway(gc, std::move(posture), std::move(identity));
    gateway.start();
    const auto t0 = std::chrono::steady_clock::now();

    std::atomic<bool> term_stop{false};
    TerminalReport term;
    TerminalConfig tc;
    tc.port = gateway.terminal_port();
    std::thread terminal([&] { term = run_terminal(tc, term_stop, [](const nlohmann::json&) {}); });
    for (int i = 0; i < 500 && gateway.stats().terminals_connected == 0; ++i) std::this_thread::sleep_for(10ms);

    const auto subjects = default_subjects();
    std::vector<NodeReport> reports(cfg.nodes);
    std::vector<std::thread> nodes;
    for (std::size_t i = 0; i < cfg.nodes; ++i) {
        NodeConfig nc;
        nc.port = gateway.node_port();
        nc.rate_hz = cfg.rate_hz;
        nc.duration_s = cfg.duration_s;
        nc.gait = kAllGaitClasses[i % kAllGaitClasses.size()];
        nc.subject = subjects[i % subjects.size()].id;
        nc.seed = derive_seed(cfg.seed, i);
        nodes.emplace_back([&reports, &halt, nc, i] { reports[i] = run_node(nc, halt); });
    }
    for (auto& t : nodes) t.join();

    // let the inference queue drain
    for (int i = 0; i < 1000; ++i) {
        const auto s = gateway.stats();
        if (s.latencies_ms.size() + s.windows_dropped >= s.windows_enqueued) break;
        std::this_thread::sleep_for(10ms);
    }
    std::this_thread::sleep_for(200ms);
    term_stop = true;
    terminal.join();
    gateway.stop();

    const auto s = gateway.stats();
    BenchReport r;
    r.latency = summarize_latency(s.latencies_ms);
    for (const auto& n : reports) r.packets_sent += n.sent;
    r.windows = s.windows_enqueued;
    r.dropped_windows = s.windows_dropped;
    r.terminal_events = term.events;
    r.terminal_gaps = term.gaps;
    r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace tribo::gw
