#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "cli.hpp"
#include "tribo/error.hpp"
#include "tribo/gateway/bench.hpp"
#include "tribo/gateway/client.hpp"
#include "tribo/gateway/server.hpp"
#include "tribo/nn/model.hpp"

namespace tribo::cli {

namespace {

std::atomic<bool> g_stop{false};

void install_stop_handler() {
    auto handler = [](int) { g_stop = true; };
    std::signal(SIGINT, handler);
    std::signal(SIGTERM, handler);
}

std::shared_ptr<nn::Model> load_shared(const std::string& path) {
    return std::make_shared<nn::Model>(nn::load_model(path));
}

void add_serve(CLI::App& app) {
    struct Opts {
        std::string config, host, posture, identity;
        std::optional<std::uint16_t> node_port, terminal_port;
        std::optional<double> heartbeat;
        double duration = 0.0;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("serve", "Run the gateway until SIGINT/SIGTERM");
    c->add_option("--config", o->config, "Gateway JSON config")->check(CLI::ExistingFile);
    c->add_option("--host", o->host, "Bind address (overrides config)");
    c->add_option("--node-port", o->node_port, "Node port, 0 = ephemeral (overrides config)");
    c->add_option("--terminal-port", o->terminal_port, "Terminal port, 0 = ephemeral (overrides config)");
    c->add_option("--posture-model", o->posture, "Posture model (overrides config)");
    c->add_option("--identity-model", o->identity, "Identity model (overrides config)");
    c->add_option("--heartbeat", o->heartbeat, "Status event interval, s (overrides config)");
    c->add_option("--duration", o->duration, "Stop after this many seconds; 0 = run until signaled")->capture_default_str();
    c->callback([o] {
        gw::GatewayConfig gc;
        if (!o->config.empty()) {
            gc = gw::GatewayConfig::load(o->config);
        } else {
            gc.apply_env();
        }
        if (!o->host.empty()) gc.host = o->host;
        if (o->node_port) gc.node_port = *o->node_port;
        if (o->terminal_port) gc.terminal_port = *o->terminal_port;
        if (!o->posture.empty()) gc.posture_model = o->posture;
        if (!o->identity.empty()) gc.identity_model = o->identity;
        if (o->heartbeat) gc.heartbeat_s = *o->heartbeat;
        gc.validate();
        if (gc.posture_model.empty()) throw Error(ErrorKind::ModelError, "no posture model configured");
        auto posture = load_shared(gc.posture_model);
        auto identity = gc.identity_model.empty() ? nullptr : load_shared(gc.identity_model);
        gw::Gateway gateway(gc, posture, identity);
        install_stop_handler();
        gateway.start();
        print_json({{"node_port", gateway.node_port()}, {"terminal_port", gateway.terminal_port()}});
        const auto start = std::chrono::steady_clock::now();
        while (!g_stop) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
            if (o->duration > 0.0 &&
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= o->duration) {
                break;
            }
        }
        gateway.stop();
        const auto s = gateway.stats();
        const auto lat = gw::summarize_latency(s.latencies_ms);
        print_json({{"events", s.events_published},
                    {"windows", s.windows_enqueued},
                    {"dropped_windows", s.windows_dropped},
                    {"protocol_errors", s.protocol_errors},
                    {"terminals_dropped", s.terminals_dropped},
                    {"latency_p95_ms", lat.p95_ms}});
    });
}

void add_node(CLI::App& app) {
    struct Opts {
        gw::NodeConfig cfg;
        std::string kind = "sensor", gait = "NormalWalking";
        std::optional<double> rate;
        bool no_realtime = false;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("node", "Simulate a sensor, GPS or heart node streaming to the gateway");
    c->add_option("--kind", o->kind, "sensor, gps or heart")->check(CLI::IsMember({"sensor", "gps", "heart"}))->capture_default_str();
    c->add_option("--host", o->cfg.host, "Gateway host")->capture_default_str();
    c->add_option("--port", o->cfg.port, "Gateway node port")->capture_default_str();
    c->add_option("--rate", o->rate, "Packets per second (default 100; gps 1)");
    c->add_option("--duration", o->cfg.duration_s, "Seconds to stream; 0 = until signaled")->capture_default_str();
    c->add_flag("--no-realtime", o->no_realtime, "Send as fast as possible");
    c->add_option("--gait", o->gait, "Sensor: gait class")->capture_default_str();
    c->add_option("--subject", o->cfg.subject, "Sensor: subject profile id")->capture_default_str();
    c->add_option("--bpm", o->cfg.bpm, "Heart: rate")->capture_default_str();
    c->add_option("--lat", o->cfg.lat, "GPS: start latitude")->capture_default_str();
    c->add_option("--lon", o->cfg.lon, "GPS: start longitude")->capture_default_str();
    c->add_option("--step-lat", o->cfg.step_lat, "GPS: latitude change per second")->capture_default_str();
    c->add_option("--step-lon", o->cfg.step_lon, "GPS: longitude change per second")->capture_default_str();
    c->add_option("--max-attempts", o->cfg.backoff.max_attempts, "Consecutive connect failures before giving up; 0 = never")
        ->capture_default_str();
    c->add_option("--seed", o->cfg.seed, "Random seed")->capture_default_str();
    c->callback([o] {
        gw::NodeConfig cfg = o->cfg;
        cfg.kind = gw::parse_node_kind(o->kind);
        cfg.gait = gait_from(o->gait);
        cfg.rate_hz = o->rate.value_or(cfg.kind == gw::NodeKind::Gps ? 1.0 : 100.0);
        cfg.realtime = !o->no_realtime;
        install_stop_handler();
        const auto r = gw::run_node(cfg, g_stop);
        print_json({{"kind", o->kind}, {"sent", r.sent}, {"connections", r.connections}, {"failed_attempts", r.failed_attempts}});
        if (r.connections == 0) throw Error(ErrorKind::IoError, "never connected to the gateway");
    });
}

void add_terminal(CLI::App& app) {
    struct Opts {
        gw::TerminalConfig cfg;
        std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("terminal", "Subscribe to the gateway and print events as NDJSON");
    c->add_option("--host", o->cfg.host, "Gateway host")->capture_default_str();
    c->add_option("--port", o->cfg.port, "Gateway terminal port")->capture_default_str();
    c->add_option("--duration", o->cfg.duration_s, "Seconds to listen; 0 = until signaled")->capture_default_str();
    c->add_option("--max-events", o->cfg.max_events, "Stop after this many events; 0 = unbounded")->capture_default_str();
    c->add_option("--max-attempts", o->cfg.backoff.max_attempts, "Consecutive connect failures before giving up; 0 = never")
        ->capture_default_str();
    c->add_option("--out", o->out, "Write events here instead of stdout");
    c->callback([o] {
        std::ofstream file;
        if (!o->out.empty()) {
            file.open(o->out);
            if (!file) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", o->out));
        }
        std::ostream& os = o->out.empty() ? std::cout : file;
        install_stop_handler();
        const auto r = gw::run_terminal(
            o->cfg, g_stop, [&](const nlohmann::json& e) { os << e.dump() << std::endl; },
            [](const std::string& m) { spdlog::warn("{}", m); });
        std::cerr << nlohmann::json{{"events", r.events},
                                    {"schema_errors", r.schema_errors},
                                    {"parse_errors", r.parse_errors},
                                    {"gaps", r.gaps},
                                    {"connections", r.connections}}
                         .dump()
                  << std::endl;
    });
}

void add_bench(CLI::App& app) {
    struct Opts {
        gw::BenchConfig cfg;
        std::string model, out;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("bench", "Window-close-to-event latency with simulated nodes on loopback");
    c->add_option("--model", o->model, "Posture model (default: untrained default architecture)");
    c->add_option("--nodes", o->cfg.nodes, "Sensor nodes")->capture_default_str();
    c->add_option("--rate", o->cfg.rate_hz, "Packets per second per node")->capture_default_str();
    c->add_option("--duration", o->cfg.duration_s, "Streaming time, s")->capture_default_str();
    c->add_option("--seed", o->cfg.seed, "Seeds the node streams and the default model")->capture_default_str();
    c->add_option("--out", o->out, "Report JSON (- for stdout)")->capture_default_str();
    c->callback([o] {
        std::shared_ptr<nn::Model> model;
        if (o->model.empty()) {
            model = std::make_shared<nn::Model>(nn::ModelConfig{}, init_seed(o->cfg.seed));
        } else {
            model = load_shared(o->model);
        }
        install_stop_handler();
        const auto r = gw::run_bench(o->cfg, model, nullptr, &g_stop);
        auto j = r.to_json();
        j["nodes"] = o->cfg.nodes;
        j["rate_hz"] = o->cfg.rate_hz;
        j["duration_s"] = o->cfg.duration_s;
        write_text(o->out, j.dump(2) + "\n");
    });
}

}  // namespace

void add_net_commands(CLI::App& app) {
    add_serve(app);
    add_node(app);
    add_terminal(app);
    add_bench(app);
}

}  // namespace tribo::cli
