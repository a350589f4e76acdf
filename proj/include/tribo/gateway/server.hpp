#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "tribo/gateway/net.hpp"
#include "tribo/gateway/queue.hpp"
#include "tribo/nn/model.hpp"
#include "tribo/pipeline.hpp"

namespace tribo::gw {

struct GatewayConfig {
    std::string host = "127.0.0.1";
    std::uint16_t node_port = 7700;
    std::uint16_t terminal_port = 7701;
    std::string posture_model;
    std::string identity_model;  // optional
    double window_s = 5.0;
    double stride_s = 1.0;
    double sample_rate_hz = 100.0;
    double heart_rate_hz = 100.0;
    double heart_window_s = 8.0;
    std::size_t inference_queue = 16;
    std::size_t terminal_queue = 1024;
    double heartbeat_s = 10.0;
    bool denoise = true;

    void validate() const;
    /// Missing keys keep their defaults. TRIBO_NODE_PORT and TRIBO_TERMINAL_PORT override the ports.
    static GatewayConfig from_json(const nlohmann::json& j);
    static GatewayConfig load(const std::filesystem::path& path);
    void apply_env();
    nlohmann::json to_json() const;
};

struct GatewayStats {
    std::size_t nodes_connected = 0;
    std::size_t terminals_connected = 0;
    std::size_t windows_enqueued = 0;
    std::size_t windows_dropped = 0;
    std::size_t events_published = 0;
    std::size_t protocol_errors = 0;
    std::size_t seq_regressions = 0;
    std::size_t terminals_dropped = 0;
    std::vector<double> latencies_ms;  // posture events, publish order
};

/// Node ingestion, sliding-window inference and NDJSON fan-out to terminals.
class Gateway {
public:
    Gateway(GatewayConfig cfg, std::shared_ptr<nn::Model> posture, std::shared_ptr<nn::Model> identity = nullptr);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Binds both ports and starts the service threads.
    void start();
    void stop();

    std::uint16_t node_port() const noexcept { return node_port_; }
    std::uint16_t terminal_port() const noexcept { return terminal_port_; }
    GatewayStats stats() const;

    /// Assigns the next sequence number and timestamp, then fans out.
    void publish(nlohmann::json event);

private:
    struct Window {
        std::string node;
        MultiChannelRecord record;
        std::chrono::steady_clock::time_point closed_at;
    };
    struct Terminal {
        Socket socket;
        BoundedQueue<std::string> queue;
        std::atomic<bool> dead{false};
        std::thread writer;
        explicit Terminal(Socket s, std::size_t cap) : socket(std::move(s)), queue(cap) {}
    };

    void accept_nodes();
    void accept_terminals();
    void serve_node(Socket s, std::string name);
    void run_inference();
    void run_heartbeat();
    void write_terminal(Terminal* t);
    void reap_terminals(bool all);

    GatewayConfig cfg_;
    std::shared_ptr<nn::Model> posture_, identity_;
    PreprocessConfig prep_;
    Listener nodes_, terminals_;
    std::uint16_t node_port_ = 0, terminal_port_ = 0;
    std::atomic<bool> running_{false};
    BoundedQueue<Window> windows_;

    std::mutex threads_m_;
    std::vector<std::thread> node_threads_;
    std::thread node_acceptor_, terminal_acceptor_, inference_, heartbeat_;

    std::mutex fanout_m_;  // guards terminals_list_ and event ordering
    std::list<std::unique_ptr<Terminal>> terminals_list_;
    std::uint64_t next_seq_ = 0;

    mutable std::mutex stats_m_;
    GatewayStats stats_;
    std::atomic<std::size_t> node_counter_{0};
};

/// Schema check for one terminal event; returns the problem or nullopt.
std::optional<std::string> validate_event(const nlohmann::json& e);

/// ISO-8601 UTC wall-clock time with milliseconds.
std::string utc_timestamp();

}  // namespace tribo::gw
