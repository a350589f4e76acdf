#include "tribo/gateway/server.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>

#include "tribo/error.hpp"
#include "tribo/gateway/nmea.hpp"
#include "tribo/gateway/protocol.hpp"

namespace tribo::gw {

using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;

void GatewayConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidSpec, m); };
    if (!(window_s > 0.0 && stride_s > 0.0)) fail("window and stride must be positive");
    if (!(sample_rate_hz > 0.0 && heart_rate_hz > 0.0)) fail("sample rates must be positive");
    if (inference_queue == 0 || terminal_queue == 0) fail("queue bounds must be positive");
    if (!(heartbeat_s > 0.0)) fail("heartbeat interval must be positive");
    if (!(heart_window_s >= 5.0)) fail("heart window must be at least 5 s");
}

GatewayConfig GatewayConfig::from_json(const nlohmann::json& j) {
    GatewayConfig c;
    try {
        c.host = j.value("host", c.host);
        c.node_port = j.value("node_port", c.node_port);
        c.terminal_port = j.value("terminal_port", c.terminal_port);
        c.posture_model = j.value("posture_model", c.posture_model);
        c.identity_model = j.value("identity_model", c.identity_model);
        c.window_s = j.value("window_s", c.window_s);
        c.stride_s = j.value("stride_s", c.stride_s);
        c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
        c.heart_rate_hz = j.value("heart_rate_hz", c.heart_rate_hz);
        c.heart_window_s = j.value("heart_window_s", c.heart_window_s);
        c.inference_queue = j.value("inference_queue", c.inference_queue);
        c.terminal_queue = j.value("terminal_queue", c.terminal_queue);
        c.heartbeat_s = j.value("heartbeat_s", c.heartbeat_s);
        c.denoise = j.value("denoise", c.denoise);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, fmt::format("gateway config: {}", e.what()));
    }
    c.apply_env();
    c.validate();
    return c;
}

GatewayConfig GatewayConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::IoError, fmt::format("cannot open config {}", path.string()));
    try {
        return from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::ParseError, fmt::format("{}: {}", path.string(), e.what()));
    }
}

void GatewayConfig::apply_env() {
    auto port = [](const char* name, std::uint16_t& dst) {
        const char* v = std::getenv(name);
        if (!v || !*v) return;
        char* end = nullptr;
        const long p = std::strtol(v, &end, 10);
        if (*end != '\0' || p < 0 || p > 65535) throw Error(ErrorKind::InvalidSpec, fmt::format("bad {}='{}'", name, v));
        dst = static_cast<std::uint16_t>(p);
    };
    port("TRIBO_NODE_PORT", node_port);
    port("TRIBO_TERMINAL_PORT", terminal_port);
}

nlohmann::json GatewayConfig::to_json() const {
    return {{"host", host},
            {"node_port", node_port},
            {"terminal_port", terminal_port},
            {"posture_model", posture_model},
            {"identity_model", identity_model},
            {"window_s", window_s},
            {"stride_s", stride_s},
            {"sample_rate_hz", sample_rate_hz},
            {"heart_rate_hz", heart_rate_hz},
            {"heart_window_s", heart_window_s},
            {"inference_queue", inference_queue},
            {"terminal_queue", terminal_queue},
            {"heartbeat_s", heartbeat_s},
            {"denoise", denoise}};
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)),
                       static_cast<int>(ms));
}

std::optional<std::string> validate_event(const nlohmann::json& e) {
    if (!e.is_object()) return "event is not an object";
    if (!e.contains("seq") || !e["seq"].is_number_integer() || e["seq"].get<std::int64_t>() < 0) {
        return "missing or invalid 'seq'";
    }
    if (!e.contains("ts") || !e["ts"].is_string()) return "missing or invalid 'ts'";
    if (!e.contains("kind") || !e["kind"].is_string()) return "missing or invalid 'kind'";
    const std::string kind = e["kind"];
    auto number_in = [&](const char* key, double lo, double hi) -> std::optional<std::string> {
        if (!e.contains(key) || !e[key].is_number()) return fmt::format("{} event lacks numeric '{}'", kind, key);
        const double v = e[key].get<double>();
        if (!(v >= lo && v <= hi)) return fmt::format("'{}' = {} outside [{}, {}]", key, v, lo, hi);
        return std::nullopt;
    };
    if (kind == "posture") {
        if (!e.contains("class") || !e["class"].is_string()) return "posture event lacks 'class'";
        if (!e.contains("alert") || !e["alert"].is_boolean()) return "posture event lacks 'alert'";
        if (auto err = number_in("confidence", 0.0, 1.0)) return err;
        if (auto err = number_in("latency_ms", 0.0, 1e12)) return err;
        return std::nullopt;
    }
    if (kind == "gps") {
        if (auto err = number_in("lat", -90.0, 90.0)) return err;
        if (auto err = number_in("lon", -180.0, 180.0)) return err;
        return std::nullopt;
    }
    if (kind == "heart") {
        if (auto err = number_in("bpm", 0.0, 1e6)) return err;
        if (auto err = number_in("confidence", 0.0, 1.0)) return err;
        return std::nullopt;
    }
    if (kind == "status") return std::nullopt;
    return fmt::format("unknown kind '{}'", kind);
}

Gateway::Gateway(GatewayConfig cfg, std::shared_ptr<nn::Model> posture, std::shared_ptr<nn::Model> identity)
    : cfg_(std::move(cfg)), posture_(std::move(posture)), identity_(std::move(identity)), windows_(cfg_.inference_queue) {
    cfg_.validate();
    if (!posture_) throw Error(ErrorKind::ModelError, "gateway needs a posture model");
    prep_.denoise = cfg_.denoise;
    prep_.window = static_cast<std::size_t>(std::lround(cfg_.window_s * cfg_.sample_rate_hz));
    if (prep_.window < prep_.points) throw Error(ErrorKind::InvalidSpec, "window is shorter than the model input");
}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
    if (running_.exchange(true)) return;
    nodes_ = listen_tcp(cfg_.host, cfg_.node_port);
    terminals_ = listen_tcp(cfg_.host, cfg_.terminal_port);
    node_port_ = nodes_.port;
    terminal_port_ = terminals_.port;
    spdlog::info("gateway listening: nodes on {}:{}, terminals on {}:{}", cfg_.host, node_port_, cfg_.host,
                 terminal_port_);
    node_acceptor_ = std::thread([this] { accept_nodes(); });
    terminal_acceptor_ = std::thread([this] { accept_terminals(); });
    inference_ = std::thread([this] { run_inference(); });
    heartbeat_ = std::thread([this] { run_heartbeat(); });
}

void Gateway::stop() {
    if (!running_.exchange(false)) return;
    windows_.close();
    for (std::thread* t : {&node_acceptor_, &terminal_acceptor_, &inference_, &heartbeat_}) {
        if (t->joinable()) t->join();
    }
    {
        std::lock_guard lock(threads_m_);
        for (auto& t : node_threads_) {
            if (t.joinable()) t.join();
        }
        node_threads_.clear();
    }
    reap_terminals(true);
    nodes_.socket.close();
    terminals_.socket.close();
    spdlog::info("gateway stopped");
}

GatewayStats Gateway::stats() const {
    std::lock_guard lock(stats_m_);
    return stats_;
}

void Gateway::publish(nlohmann::json event) {
    std::lock_guard lock(fanout_m_);
    event["seq"] = next_seq_++;
    event["ts"] = utc_timestamp();
    const std::string line = event.dump() + "\n";
    for (auto& t : terminals_list_) {
        if (t->dead) continue;
        if (!t->queue.try_push(line)) {
            spdlog::warn("terminal queue full ({} events); disconnecting it", cfg_.terminal_queue);
            t->dead = true;
            t->queue.close();
            t->socket.shutdown();
            std::lock_guard s(stats_m_);
            ++stats_.terminals_dropped;
        }
    }
    std::lock_guard s(stats_m_);
    ++stats_.events_published;
}

void Gateway::accept_nodes() {
    while (running_) {
        Socket s = accept_for(nodes_.socket, 100ms);
        if (!s.valid()) continue;
        const std::string name = fmt::format("node-{}", ++node_counter_);
        spdlog::info("{} connected", name);
        std::lock_guard lock(threads_m_);
        node_threads_.emplace_back([this, sock = std::move(s), name]() mutable { serve_node(std::move(sock), name); });
    }
}

void Gateway::serve_node(Socket s, std::string name) {
    {
        std::lock_guard lock(stats_m_);
        ++stats_.nodes_connected;
    }
    const auto window_n = prep_.window;
    const auto stride_n = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg_.stride_s * cfg_.sample_rate_hz)));
    const auto heart_n = static_cast<std::size_t>(std::lround(cfg_.heart_window_s * cfg_.heart_rate_hz));
    const auto heart_min = static_cast<std::size_t>(std::lround(5.0 * cfg_.heart_rate_hz));
    const auto heart_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg_.stride_s * cfg_.heart_rate_hz)));

    std::array<std::deque<double>, kChannelCount> ring;
    std::deque<double> heart;
    std::size_t since = 0, heart_since = 0;
    std::optional<std::uint32_t> last_seq, last_heart_seq;
    FrameDecoder dec;
    std::vector<std::uint8_t> buf(8192);

    auto regression = [&](std::uint32_t seq, std::uint32_t last) {
        spdlog::warn("{}: seq {} after {}; dropping stale packet", name, seq, last);
        std::lock_guard lock(stats_m_);
        ++stats_.seq_regressions;
    };

    try {
        while (running_) {
            const auto n = s.recv_some(buf, 200ms);
            if (!n) continue;
            if (*n == 0) break;
            dec.feed(std::span(buf.data(), *n));
            while (auto f = dec.next()) {
                switch (f->type) {
                    case FrameType::Sensor: {
                        const SensorPacket p = decode_sensor(*f);
                        if (last_seq && p.seq <= *last_seq) {
                            regression(p.seq, *last_seq);
                            break;
                        }
                        last_seq = p.seq;
                        for (std::size_t c = 0; c < kChannelCount; ++c) {
                            ring[c].push_back(p.values[c]);
                            if (ring[c].size() > window_n) ring[c].pop_front();
                        }
                        ++since;
                        if (ring[0].size() == window_n && since >= stride_n) {
                            since = 0;
                            Window w{name, {}, Clock::now()};
                            for (std::size_t c = 0; c < kChannelCount; ++c) {
                                w.record.channels[c] = Signal({ring[c].begin(), ring[c].end()}, cfg_.sample_rate_hz);
                            }
                            const bool evicted = windows_.push_drop_oldest(std::move(w));
                            std::lock_guard lock(stats_m_);
                            ++stats_.windows_enqueued;
                            if (evicted) ++stats_.windows_dropped;
                        }
                        break;
                    }
                    case FrameType::Heart: {
                        const HeartPacket p = decode_heart(*f);
                        if (last_heart_seq && p.seq <= *last_heart_seq) {
                            regression(p.seq, *last_heart_seq);
                            break;
                        }
                        last_heart_seq = p.seq;
                        heart.push_back(p.value);
                        if (heart.size() > heart_n) heart.pop_front();
                        if (++heart_since >= heart_stride && heart.size() >= heart_min) {
                            heart_since = 0;
                            try {
                                const auto r = heart_rate(Signal({heart.begin(), heart.end()}, cfg_.heart_rate_hz));
                                publish({{"kind", "heart"}, {"node", name}, {"bpm", r.bpm}, {"confidence", r.confidence},
                                         {"valid", r.valid}});
                            } catch (const Error& e) {
                                spdlog::debug("{}: {}", name, e.what());
                            }
                        }
                        break;
                    }
                    case FrameType::GpsLine: {
                        try {
                            const GpsFix fix = parse_nmea(decode_text(*f));
                            nlohmann::json ev{{"kind", "gps"},      {"node", name},          {"lat", fix.latitude},
                                              {"lon", fix.longitude}, {"quality", fix.quality}, {"satellites", fix.satellites},
                                              {"valid", fix.valid}};
                            if (fix.speed_knots) ev["speed_knots"] = *fix.speed_knots;
                            if (fix.course_deg) ev["course_deg"] = *fix.course_deg;
                            publish(std::move(ev));
                        } catch (const Error& e) {
                            spdlog::warn("{}: rejected GPS sentence: {}", name, e.what());
                        }
                        break;
                    }
                    case FrameType::Event:
                        spdlog::info("{}: node event {}", name, decode_text(*f));
                        break;
                }
            }
        }
    } catch (const Error& e) {
        spdlog::warn("{}: dropping connection: {}", name, e.what());
        if (e.kind() == ErrorKind::ProtocolError) {
            std::lock_guard lock(stats_m_);
            ++stats_.protocol_errors;
        }
    }
    spdlog::info("{} disconnected", name);
    std::lock_guard lock(stats_m_);
    --stats_.nodes_connected;
}

void Gateway::run_inference() {
    while (running_ || windows_.size() > 0) {
        auto w = windows_.pop_for(200ms);
        if (!w) {
            if (windows_.closed()) break;
            continue;
        }
        try {
            const Classification c = classify(*posture_, w->record, prep_);
            nlohmann::json ev{{"kind", "posture"},
                              {"node", w->node},
                              {"class", std::string(to_string(c.gait))},
                              {"confidence", c.confidence},
                              {"alert", c.gait == GaitClass::FallingDown}};
            if (identity_) {
                const Identification id = identify(*identity_, w->record, prep_);
                ev["subject"] = id.subject;
                ev["subject_confidence"] = id.confidence;
            }
            const double latency = std::chrono::duration<double, std::milli>(Clock::now() - w->closed_at).count();
            ev["latency_ms"] = latency;
            publish(std::move(ev));
            std::lock_guard lock(stats_m_);
            stats_.latencies_ms.push_back(latency);
        } catch (const Error& e) {
            spdlog::warn("{}: inference failed: {}", w->node, e.what());
        }
    }
}

void Gateway::run_heartbeat() {
    auto next = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg_.heartbeat_s));
    while (running_) {
        std::this_thread::sleep_for(50ms);
        if (Clock::now() < next) continue;
        next += std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg_.heartbeat_s));
        GatewayStats s = stats();
        publish({{"kind", "status"},
                 {"nodes", s.nodes_connected},
                 {"terminals", s.terminals_connected},
                 {"windows", s.windows_enqueued},
                 {"dropped_windows", s.windows_dropped}});
    }
}

void Gateway::accept_terminals() {
    while (running_) {
        reap_terminals(false);
        Socket s = accept_for(terminals_.socket, 100ms);
        if (!s.valid()) continue;
        auto t = std::make_unique<Terminal>(std::move(s), cfg_.terminal_queue);
        Terminal* raw = t.get();
        {
            std::lock_guard lock(fanout_m_);
            terminals_list_.push_back(std::move(t));
            raw->writer = std::thread([this, raw] { write_terminal(raw); });
        }
        std::lock_guard lock(stats_m_);
        ++stats_.terminals_connected;
        spdlog::info("terminal connected ({} total)", stats_.terminals_connected);
    }
}

void Gateway::write_terminal(Terminal* t) {
    try {
        while (!t->dead) {
            auto line = t->queue.pop_for(200ms);
            if (!line) continue;
            t->socket.send_all(*line);
        }
    } catch (const Error& e) {
        spdlog::info("terminal gone: {}", e.what());
    }
    t->dead = true;
    t->queue.close();
}

void Gateway::reap_terminals(bool all) {
    std::list<std::unique_ptr<Terminal>> gone;
    {
        std::lock_guard lock(fanout_m_);
        for (auto it = terminals_list_.begin(); it != terminals_list_.end();) {
            if (all || (*it)->dead) {
                (*it)->dead = true;
                (*it)->queue.close();
                (*it)->socket.shutdown();
                gone.push_back(std::move(*it));
                it = terminals_list_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& t : gone) {
        if (t->writer.joinable()) t->writer.join();
    }
    if (!gone.empty()) {
        std::lock_guard lock(stats_m_);
        stats_.terminals_connected -= gone.size();
    }
}

}  // namespace tribo::gw
