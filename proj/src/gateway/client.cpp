#include "tribo/gateway/client.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <thread>

#include "tribo/error.hpp"
#include "tribo/gateway/net.hpp"
#include "tribo/gateway/nmea.hpp"
#include "tribo/gateway/protocol.hpp"
#include "tribo/gateway/server.hpp"
#include "tribo/synth.hpp"

namespace tribo::gw {

using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;

double Backoff::delay(std::size_t attempt) const {
    return std::min(max_s, initial_s * std::pow(factor, static_cast<double>(attempt)));
}

std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Sensor: return "sensor";
        case NodeKind::Gps: return "gps";
        case NodeKind::Heart: return "heart";
    }
    return "?";
}

NodeKind parse_node_kind(std::string_view s) {
    for (NodeKind k : {NodeKind::Sensor, NodeKind::Gps, NodeKind::Heart}) {
        if (s == to_string(k)) return k;
    }
    throw Error(ErrorKind::InvalidInput, fmt::format("unknown node kind '{}'", s));
}

namespace {

constexpr double kSegmentS = 60.0;

// Sleeps in short slices so that `stop` is honoured promptly. Returns false if stopped.
bool sleep_until(Clock::time_point t, const std::atomic<bool>& stop) {
    while (!stop) {
        const auto now = Clock::now();
        if (now >= t) return true;
        std::this_thread::sleep_for(std::min<Clock::duration>(t - now, 50ms));
    }
    return false;
}

// Produces the frame for packet i of the stream, regenerating source segments lazily.
class Source {
public:
    explicit Source(const NodeConfig& cfg) : cfg_(cfg) {
        if (cfg.kind == NodeKind::Sensor) {
            const auto subjects = default_subjects();
            bool found = false;
            for (const auto& s : subjects) {
                if (s.id == cfg.subject) {
                    subject_ = s;
                    found = true;
                }
            }
            if (!found) throw Error(ErrorKind::InvalidInput, fmt::format("no subject profile {}", cfg.subject));
        }
    }

    Frame frame(std::uint64_t i) {
        const auto ts = static_cast<std::uint64_t>(std::llround(static_cast<double>(i) / cfg_.rate_hz * 1e6));
        const auto seq = static_cast<std::uint32_t>(i);
        if (cfg_.kind == NodeKind::Gps) {
            const double t = static_cast<double>(i) / cfg_.rate_hz;
            const auto secs = static_cast<long>(t);
            const std::string hhmmss = fmt::format("{:02d}{:02d}{:02d}", (secs / 3600) % 24, (secs / 60) % 60, secs % 60);
            return gps_frame(format_gga(cfg_.lat + cfg_.step_lat * t, cfg_.lon + cfg_.step_lon * t, 1, 8, hhmmss));
        }
        const auto per_segment = static_cast<std::uint64_t>(std::llround(kSegmentS * cfg_.rate_hz));
        const std::uint64_t seg = i / per_segment;
        if (!loaded_ || seg != segment_) load(seg);
        const auto k = static_cast<std::size_t>(i % per_segment);
        if (cfg_.kind == NodeKind::Heart) {
            return to_frame(HeartPacket{ts, seq, static_cast<float>(ecg_.samples[k])});
        }
        SensorPacket p{ts, seq, {}};
        for (std::size_t c = 0; c < kChannelCount; ++c) p.values[c] = static_cast<float>(record_.channels[c].samples[k]);
        return to_frame(p);
    }

private:
    void load(std::uint64_t seg) {
        segment_ = seg;
        loaded_ = true;
        if (cfg_.kind == NodeKind::Heart) {
            const double period = 60.0 / cfg_.bpm;
            const double t0 = static_cast<double>(seg) * kSegmentS;
            EcgOptions o;
            o.bpm = cfg_.bpm;
            o.duration_s = kSegmentS;
            o.sample_rate_hz = cfg_.rate_hz;
            o.phase_s = std::fmod(period - std::fmod(t0, period), period);
            ecg_ = synth_ecg(o);
            return;
        }
        SynthOptions o;
        o.duration_s = kSegmentS;
        o.sample_rate_hz = cfg_.rate_hz;
        o.drift_rms_v = 0.1;
        o.seed = derive_seed(cfg_.seed, seg);
        record_ = synth_record(cfg_.gait, subject_, o);
    }

    NodeConfig cfg_;
    SubjectProfile subject_{};
    bool loaded_ = false;
    std::uint64_t segment_ = 0;
    MultiChannelRecord record_;
    Signal ecg_;
};

}  // namespace

NodeReport run_node(const NodeConfig& cfg, const std::atomic<bool>& stop) {
    if (!(cfg.rate_hz > 0.0)) throw Error(ErrorKind::InvalidInput, "rate must be positive");
    Source source(cfg);
    NodeReport report;
    const std::uint64_t total =
        cfg.duration_s > 0.0 ? static_cast<std::uint64_t>(std::llround(cfg.duration_s * cfg.rate_hz)) : UINT64_MAX;
    std::uint64_t i = 0;
    std::size_t attempt = 0;
    const auto start = Clock::now();
    while (!stop && i < total) {
        Socket s;
        try {
            s = connect_tcp(cfg.host, cfg.port);
        } catch (const Error& e) {
            ++report.failed_attempts;
            if (cfg.backoff.max_attempts > 0 && attempt + 1 >= cfg.backoff.max_attempts) {
                spdlog::error("{} node: giving up after {} attempts: {}", to_string(cfg.kind), attempt + 1, e.what());
                break;
            }
            const double d = cfg.backoff.delay(attempt++);
            spdlog::warn("{} node: {}; retrying in {:.2f} s", to_string(cfg.kind), e.what(), d);
            sleep_until(Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(d)), stop);
            continue;
        }
        attempt = 0;
        ++report.connections;
        try {
            while (!stop && i < total) {
                if (cfg.realtime) {
                    const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                                 std::chrono::duration<double>(static_cast<double>(i) / cfg.rate_hz));
                    if (!sleep_until(due, stop)) break;
                }
                s.send_all(encode_frame(source.frame(i)));
                ++i;
                ++report.sent;
            }
        } catch (const Error& e) {
            spdlog::warn("{} node: connection lost: {}", to_string(cfg.kind), e.what());
        }
    }
    return report;
}

TerminalReport run_terminal(const TerminalConfig& cfg, const std::atomic<bool>& stop,
                            const std::function<void(const nlohmann::json&)>& on_event,
                            const std::function<void(const std::string&)>& on_error) {
    TerminalReport report;
    const auto deadline = cfg.duration_s > 0.0
                              ? Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.duration_s))
                              : Clock::time_point::max();
    auto done = [&] {
        return stop || Clock::now() >= deadline || (cfg.max_events > 0 && report.events >= cfg.max_events);
    };
    auto error = [&](const std::string& m) {
        if (on_error) on_error(m);
    };
    std::optional<std::uint64_t> last_seq;
    std::size_t attempt = 0;
    std::vector<std::uint8_t> buf(16384);
    while (!done()) {
        Socket s;
        try {
            s = connect_tcp(cfg.host, cfg.port);
        } catch (const Error& e) {
            if (cfg.backoff.max_attempts > 0 && attempt + 1 >= cfg.backoff.max_attempts) {
                error(fmt::format("giving up: {}", e.what()));
                break;
            }
            const double d = cfg.backoff.delay(attempt++);
            error(fmt::format("{}; retrying in {:.2f} s", e.what(), d));
            sleep_until(std::min(deadline, Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(d))), stop);
            continue;
        }
        attempt = 0;
        ++report.connections;
        std::string pending;
        try {
            while (!done()) {
                const auto n = s.recv_some(buf, 100ms);
                if (!n) continue;
                if (*n == 0) break;
                pending.append(reinterpret_cast<const char*>(buf.data()), *n);
                std::size_t nl;
                while ((nl = pending.find('\n')) != std::string::npos && !done()) {
                    const std::string line = pending.substr(0, nl);
                    pending.erase(0, nl + 1);
                    nlohmann::json ev;
                    try {
                        ev = nlohmann::json::parse(line);
                    } catch (const nlohmann::json::exception& e) {
                        ++report.parse_errors;
                        error(fmt::format("unparseable line: {}", e.what()));
                        continue;
                    }
                    if (auto problem = validate_event(ev)) {
                        ++report.schema_errors;
                        error(fmt::format("schema violation: {}", *problem));
                        continue;
                    }
                    const auto seq = ev["seq"].get<std::uint64_t>();
                    if (last_seq && seq != *last_seq + 1) ++report.gaps;
                    last_seq = seq;
                    ++report.events;
                    on_event(ev);
                }
            }
        } catch (const Error& e) {
            error(fmt::format("connection lost: {}", e.what()));
        }
        if (!done()) error("disconnected; reconnecting");
    }
    return report;
}

}  // namespace tribo::gw
