// Acceptance runner: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number, e.g. `acceptance 1 7 12`.

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <set>
#include <thread>

#include "tribo/emd.hpp"
#include "tribo/error.hpp"
#include "tribo/fft.hpp"
#include "tribo/gateway/bench.hpp"
#include "tribo/gateway/client.hpp"
#include "tribo/gateway/nmea.hpp"
#include "tribo/gateway/protocol.hpp"
#include "tribo/gateway/server.hpp"
#include "tribo/nn/gradcheck.hpp"
#include "tribo/nn/model.hpp"
#include "tribo/nn/train.hpp"
#include "tribo/pipeline.hpp"
#include "tribo/rng.hpp"
#include "tribo/stft.hpp"
#include "tribo/synth.hpp"
#include "tribo/wavelet.hpp"

using namespace tribo;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double max_abs(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

std::shared_ptr<nn::Model> g_posture;  // trained by criterion 3, reused by 9

// ---------------------------------------------------------------- 1

Outcome table2_counts() {
    nn::Model m(nn::ModelConfig{}, 1);
    const std::vector<std::pair<std::string, std::size_t>> expected{
        {"conv_layer", 2112},    {"batch_normalization", 256}, {"conv_layer_1", 32784}, {"batch_normalization_1", 64},
        {"bilstm_layer_1", 12544}, {"bilstm_layer_2", 24832},   {"dense", 1032}};
    Outcome o{true, {}};
    for (const auto& [name, count] : expected) {
        const std::size_t got = m.layer(name).param_count();
        if (got != count) {
            o.pass = false;
            o.detail += fmt::format("{}={} (want {}) ", name, got, count);
        }
    }
    if (o.pass) o.detail = fmt::format("7/7 layer counts exact, total {}", m.param_count());
    return o;
}

// ---------------------------------------------------------------- 2

Outcome gradient_oracle() {
    const auto reports = nn::gradient_suite(2024, 20);
    Outcome o{true, {}};
    double worst = 0.0;
    std::string worst_type;
    for (const auto& r : reports) {
        if (r.shapes < 20 || !(r.max_rel_error < 1e-4)) {
            o.pass = false;
            o.detail += fmt::format("{}: {} shapes, max rel {:.2e} at {}; ", r.type, r.shapes, r.max_rel_error, r.worst);
        }
        if (r.max_rel_error > worst) {
            worst = r.max_rel_error;
            worst_type = r.type;
        }
    }
    if (o.pass) o.detail = fmt::format("{} layer types x >= 20 shapes, worst {:.2e} ({})", reports.size(), worst, worst_type);
    return o;
}

// ---------------------------------------------------------------- 3, 4

struct TrainedResult {
    double accuracy;
    std::shared_ptr<nn::Model> model;
    std::size_t train_n, test_n;
};

TrainedResult train_and_test(Task task, const LabeledSet& set, std::size_t epochs, std::uint64_t seed) {
    const DatasetSplit train_split{task, set.train}, test_split{task, set.test};
    const auto labels = class_labels(task, set.train);
    const nn::Dataset train_data = build_dataset(train_split, labels);
    const nn::Dataset test_data = build_dataset(test_split, labels);
    nn::ModelConfig cfg;
    cfg.classes = labels.size();
    auto model = std::make_shared<nn::Model>(cfg, derive_seed(seed, 0x1A17));
    model->set_labels(labels);
    nn::TrainConfig tc;
    tc.epochs = epochs;
    tc.seed = seed;
    nn::train(*model, train_data, tc);
    return {nn::evaluate(*model, test_data).accuracy, model, train_data.size(), test_data.size()};
}

Outcome posture_accuracy() {
    const auto r = train_and_test(Task::Posture, synth_dataset(DatasetSpec{}), 30, 1);
    g_posture = r.model;
    return {r.accuracy >= 0.95, fmt::format("test accuracy {:.4f} ({} train / {} test, 30 epochs)", r.accuracy, r.train_n, r.test_n)};
}

Outcome identity_accuracy() {
    const auto r = train_and_test(Task::Identity, synth_identity_set(IdentitySpec{}), 60, 1);
    return {r.accuracy >= 0.95, fmt::format("test accuracy {:.4f} ({} train / {} test, 60 epochs)", r.accuracy, r.train_n, r.test_n)};
}

// ---------------------------------------------------------------- 5

Outcome emd_completeness() {
    Rng rng(55);
    std::size_t bad_recon = 0, bad_imf = 0, imfs = 0;
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 200 + rng.below(801);
        const double fs = 100.0;
        std::vector<double> x(n);
        const int tones = 1 + static_cast<int>(rng.below(4));
        std::vector<std::array<double, 3>> spec;
        for (int k = 0; k < tones; ++k) spec.push_back({rng.uniform(0.2, 20.0), rng.uniform(0.1, 2.0), rng.uniform(0.0, 6.3)});
        const double slope = rng.uniform(-0.5, 0.5), noise = rng.uniform(0.0, 0.3);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / fs;
            double v = slope * t + noise * rng.normal();
            for (const auto& s : spec) v += s[1] * std::sin(2.0 * std::numbers::pi * s[0] * t + s[2]);
            x[i] = v;
        }
        const auto d = emd(Signal(x, fs));
        std::vector<std::size_t> all(d.size());
        std::iota(all.begin(), all.end(), 0);
        const auto back = reconstruct(d, all, true);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(back.samples[i] - x[i]));
        const double ratio = err / max_abs(x);
        worst_ratio = std::max(worst_ratio, ratio);
        if (!(ratio < 1e-8)) ++bad_recon;
        for (const auto& imf : d.imfs) {
            ++imfs;
            if (!satisfies_imf_property(imf.samples)) ++bad_imf;
        }
    }
    return {bad_recon == 0 && bad_imf == 0,
            fmt::format("100 signals, worst |err|/max {:.2e}, {} reconstruction failures, {}/{} IMFs violate the property",
                        worst_ratio, bad_recon, bad_imf, imfs)};
}

// ---------------------------------------------------------------- 6

double variance(const std::vector<double>& x) {
    double m = 0.0, v = 0.0;
    for (double a : x) m += a;
    m /= static_cast<double>(x.size());
    for (double a : x) v += (a - m) * (a - m);
    return v / static_cast<double>(x.size());
}

Outcome drift_removal() {
    const auto subjects = default_subjects();
    double worst = 1.0;
    std::size_t failures = 0;
    std::map<std::string, int> by_class;
    Rng rng(66);
    for (std::uint64_t i = 0; i < 50; ++i) {
        SynthOptions opt;
        opt.duration_s = 10.0;
        opt.seed = i;
        opt.snr_db.reset();
        const GaitClass gait = kAllGaitClasses[i % kAllGaitClasses.size()];
        const auto rec = synth_record(gait, subjects[i % subjects.size()], opt);
        std::size_t ch = 0;
        for (std::size_t c = 1; c < kChannelCount; ++c) {
            if (variance(rec.channels[c].samples) > variance(rec.channels[ch].samples)) ch = c;
        }
        const Signal& clean = rec.channels[ch];
        const double slope = rng.uniform() < 0.5 ? -0.5 : 0.5;
        const double offset = rng.uniform(-1.0, 1.0);
        Signal drifted = clean;
        for (std::size_t k = 0; k < clean.size(); ++k) {
            drifted.samples[k] += offset + slope * static_cast<double>(k) / clean.sample_rate_hz;
        }
        double r = 0.0;
        try {
            r = pearson(denoise_baseline(drifted), clean);
        } catch (const Error&) {
            r = 0.0;
        }
        worst = std::min(worst, r);
        if (!(r >= 0.99)) {
            ++failures;
            ++by_class[std::string(to_string(gait))];
        }
    }
    std::string detail = fmt::format("50 cases, minimum correlation {:.4f}, {} below 0.99", worst, failures);
    for (const auto& [name, count] : by_class) detail += fmt::format(" {}={}", name, count);
    return {failures == 0, detail};
}

// ---------------------------------------------------------------- 7

Outcome transforms() {
    Rng rng(77);
    double fft_err = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = std::size_t{1} << (trial % 11);
        std::vector<Complex> x(n);
        for (auto& v : x) v = {rng.normal(), rng.normal()};
        const auto a = fft(x), b = dft(x);
        for (std::size_t k = 0; k < n; ++k) fft_err = std::max(fft_err, std::abs(a[k] - b[k]));
    }
    double dwt_err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t levels = 1 + rng.below(5);
        const std::size_t n = (std::size_t{1} << levels) * (4 + rng.below(60));
        std::vector<double> x(n);
        for (auto& v : x) v = rng.normal();
        WaveletConfig cfg;
        cfg.levels = levels;
        const auto back = idwt(dwt(Signal(x, 100.0), cfg));
        for (std::size_t i = 0; i < n; ++i) dwt_err = std::max(dwt_err, std::abs(back.samples[i] - x[i]));
    }
    double parseval = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t w = std::size_t{16} << rng.below(5);
        const std::size_t hop = 1 + rng.below(w);
        std::vector<double> x(w + rng.below(4 * w));
        for (auto& v : x) v = rng.normal();
        const StftParams p{w, hop, trial % 2 ? WindowKind::Rectangular : WindowKind::Hann};
        const Signal s(x, 100.0);
        const auto g = stft(s, p);
        for (std::size_t f = 0; f < g.frames; ++f) {
            double te = 0.0;
            for (double v : windowed_frame(s, f, p)) te += v * v;
            double se = g.at(f, 0) * g.at(f, 0) + g.at(f, w / 2) * g.at(f, w / 2);
            for (std::size_t k = 1; k < w / 2; ++k) se += 2.0 * g.at(f, k) * g.at(f, k);
            se /= static_cast<double>(w);
            parseval = std::max(parseval, std::abs(se - te) / te);
        }
    }
    const bool pass = fft_err <= 1e-9 && dwt_err < 1e-10 && parseval <= 1e-6;
    return {pass, fmt::format("fft vs dft {:.2e}, dwt round trip {:.2e}, stft Parseval rel {:.2e}", fft_err, dwt_err, parseval)};
}

// ---------------------------------------------------------------- 8

Outcome synth_calibration() {
    const auto subjects = default_subjects();
    double lo = 1e9, hi = -1e9;
    std::size_t outside = 0;
    for (GaitClass c : kAllGaitClasses) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            SynthOptions opt;
            opt.seed = seed;
            const auto parts = synth_components(c, subjects[seed % subjects.size()], opt);
            for (std::size_t ch = 0; ch < kChannelCount; ++ch) {
                const double snr = snr_db(parts.record.channels[ch], parts.noise[ch]).snr_db;
                lo = std::min(lo, snr);
                hi = std::max(hi, snr);
                if (!(std::abs(snr - 31.2) <= 2.0)) ++outside;
            }
        }
    }
    const auto a = sensor_response(1.0, 1.0), b = sensor_response(4.0, 1.0);
    const bool endpoints = a.voltage_v == 0.9 && b.voltage_v == 3.5 && a.current_ua == 0.15 && b.current_ua == 0.8;
    return {outside == 0 && endpoints,
            fmt::format("SNR {:.2f}..{:.2f} dB over 320 channels ({} outside 31.2 +/- 2); endpoints {} V, {} V, {} uA, {} uA",
                        lo, hi, outside, a.voltage_v, b.voltage_v, a.current_ua, b.current_ua)};
}

// ---------------------------------------------------------------- 9

Outcome gateway_latency() {
    gw::BenchConfig cfg;
    cfg.nodes = 4;
    cfg.rate_hz = 100.0;
    cfg.duration_s = 60.0;
    cfg.seed = 9;
    auto model = g_posture ? g_posture : std::make_shared<nn::Model>(nn::ModelConfig{}, 9);
    const auto r = gw::run_bench(cfg, model);
    const bool pass = r.latency.count > 0 && r.latency.p95_ms < 1500.0;
    return {pass, fmt::format("{} windows ({} dropped), p50 {:.1f} ms, p95 {:.1f} ms, max {:.1f} ms{}", r.windows,
                              r.dropped_windows, r.latency.p50_ms, r.latency.p95_ms, r.latency.max_ms,
                              g_posture ? "" : " (untrained model)")};
}

// ---------------------------------------------------------------- 10

struct Subscriber {
    std::atomic<bool> stop{false};
    std::mutex m;
    std::vector<nlohmann::json> events;
    gw::TerminalReport report;
    std::thread th;

    explicit Subscriber(std::uint16_t port) {
        gw::TerminalConfig cfg;
        cfg.port = port;
        cfg.backoff.initial_s = 0.05;
        th = std::thread([this, cfg] {
            report = gw::run_terminal(cfg, stop, [this](const nlohmann::json& e) {
                std::lock_guard l(m);
                events.push_back(e);
            });
        });
    }
    ~Subscriber() { kill(); }
    void kill() {
        stop = true;
        if (th.joinable()) th.join();
    }
    std::size_t count() {
        std::lock_guard l(m);
        return events.size();
    }
};

Outcome terminal_resilience() {
    gw::GatewayConfig cfg;
    cfg.node_port = 0;
    cfg.terminal_port = 0;
    cfg.heartbeat_s = 1.0;
    auto model = g_posture ? g_posture : std::make_shared<nn::Model>(nn::ModelConfig{}, 10);
    gw::Gateway g(cfg, model);
    g.start();
    Subscriber a(g.terminal_port()), b(g.terminal_port()), c(g.terminal_port());
    for (int i = 0; i < 500 && g.stats().terminals_connected < 3; ++i) std::this_thread::sleep_for(10ms);
    if (g.stats().terminals_connected < 3) return {false, "terminals failed to connect"};

    std::atomic<bool> stop{false};
    std::vector<std::thread> nodes;
    for (int k = 0; k < 3; ++k) {
        gw::NodeConfig n;
        n.kind = k == 0 ? gw::NodeKind::Sensor : k == 1 ? gw::NodeKind::Heart : gw::NodeKind::Gps;
        n.port = g.node_port();
        n.rate_hz = k == 2 ? 2.0 : 100.0;
        n.duration_s = 20.0;
        n.seed = static_cast<std::uint64_t>(k);
        nodes.emplace_back([n, &stop] { gw::run_node(n, stop); });
    }
    std::this_thread::sleep_for(10s);
    const std::size_t before_kill = c.count();
    c.kill();
    for (auto& t : nodes) t.join();
    std::this_thread::sleep_for(1500ms);
    a.kill();
    b.kill();
    const auto stats = g.stats();
    g.stop();

    bool gap_free = a.report.gaps == 0 && b.report.gaps == 0;
    for (const auto* s : {&a, &b}) {
        for (std::size_t i = 0; i < s->events.size(); ++i) {
            if (s->events[i]["seq"].get<std::uint64_t>() != i) gap_free = false;
        }
    }
    const bool identical = a.events == b.events;
    const bool prefix = c.events.size() <= a.events.size() && std::equal(c.events.begin(), c.events.end(), a.events.begin());
    const bool after = a.events.size() > before_kill + 10;
    return {identical && gap_free && prefix && after,
            fmt::format("survivors {} / {} events, identical={}, gap-free={}, killed terminal stopped at {}, "
                        "{} terminal(s) remained connected before shutdown",
                        a.events.size(), b.events.size(), identical, gap_free, c.events.size(),
                        stats.terminals_connected)};
}

// ---------------------------------------------------------------- 11

Outcome protocol_fuzz() {
    Rng rng(11);
    std::vector<std::vector<std::uint8_t>> seeds;
    for (std::uint32_t i = 0; i < 8; ++i) {
        seeds.push_back(gw::encode_frame(gw::to_frame(gw::SensorPacket{i * 10000ull, i, {0.1f, -0.2f, 0.3f, 1.5f}})));
        seeds.push_back(gw::encode_frame(gw::to_frame(gw::HeartPacket{i * 10ull, i, 0.5f})));
    }
    seeds.push_back(gw::encode_frame(gw::gps_frame(gw::format_gga(48.1173, 11.5167, 1, 8, "123519"))));
    seeds.push_back(gw::encode_frame(gw::event_frame(R"({"kind":"status"})")));

    std::size_t crashes = 0, rejected = 0, accepted = 0, inconsistent = 0;
    for (int iter = 0; iter < 100000; ++iter) {
        std::vector<std::uint8_t> buf = seeds[rng.below(seeds.size())];
        const int mutations = 1 + static_cast<int>(rng.below(4));
        for (int m = 0; m < mutations; ++m) {
            switch (rng.below(5)) {
                case 0:
                    if (!buf.empty()) buf[rng.below(buf.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
                    break;
                case 1:
                    if (!buf.empty()) buf[rng.below(buf.size())] = static_cast<std::uint8_t>(rng.below(256));
                    break;
                case 2:
                    buf.insert(buf.begin() + static_cast<std::ptrdiff_t>(rng.below(buf.size() + 1)),
                               static_cast<std::uint8_t>(rng.below(256)));
                    break;
                case 3:
                    if (!buf.empty()) buf.erase(buf.begin() + static_cast<std::ptrdiff_t>(rng.below(buf.size())));
                    break;
                default:
                    buf.resize(rng.below(buf.size() + 1));
                    break;
            }
        }
        try {
            const gw::Frame f = gw::decode_frame(buf);
            ++accepted;
            if (f.payload.size() + gw::kFrameHeaderSize != buf.size()) ++inconsistent;
            try {
                if (f.type == gw::FrameType::Sensor) gw::decode_sensor(f);
                if (f.type == gw::FrameType::Heart) gw::decode_heart(f);
                if (f.type == gw::FrameType::GpsLine) gw::parse_nmea(gw::decode_text(f));
            } catch (const Error&) {
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ProtocolError) {
                ++rejected;
            } else {
                ++crashes;
            }
        } catch (...) {
            ++crashes;
        }
        try {
            gw::FrameDecoder d;
            std::size_t pos = 0;
            while (pos < buf.size()) {
                const std::size_t chunk = std::min<std::size_t>(buf.size() - pos, 1 + rng.below(8));
                d.feed(std::span(buf.data() + pos, chunk));
                pos += chunk;
                while (auto f = d.next()) {
                    if (f->payload.size() > gw::kMaxPayload) ++inconsistent;
                }
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ProtocolError) ++crashes;
        } catch (...) {
            ++crashes;
        }
    }

    // NMEA: every corruption of the body or the checksum must be refused.
    const std::vector<std::string> sentences{
        "$GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,*47",
        gw::format_gga(-33.8688, 151.2093, 2, 11, "010203"),
    };
    std::vector<std::string> all = sentences;
    const std::string rmc = "GPRMC,123519,A,4807.038,N,01131.000,E,022.4,084.4,230394,003.1,W";
    all.push_back("$" + rmc + "*" + gw::nmea_checksum(rmc));
    std::size_t nmea_accepted = 0, nmea_trials = 0, nmea_crashes = 0;
    for (int iter = 0; iter < 20000; ++iter) {
        std::string s = all[rng.below(all.size())];
        const std::size_t star = s.rfind('*');
        const std::size_t pos = 1 + rng.below(s.size() - 1);
        char c;
        do {
            c = static_cast<char>(rng.below(256));
        } while (c == s[pos]);
        if (pos == star) continue;  // moving the delimiter is a framing change, not a corruption
        s[pos] = c;
        ++nmea_trials;
        try {
            gw::parse_nmea(s);
            ++nmea_accepted;
        } catch (const Error&) {
        } catch (...) {
            ++nmea_crashes;
        }
    }
    const bool pass = crashes == 0 && inconsistent == 0 && nmea_accepted == 0 && nmea_crashes == 0;
    return {pass, fmt::format("frames: {} rejected, {} accepted, {} crashes, {} inconsistent; NMEA: {}/{} corrupted "
                              "sentences accepted, {} crashes",
                              rejected, accepted, crashes, inconsistent, nmea_accepted, nmea_trials, nmea_crashes)};
}

// ---------------------------------------------------------------- 12

Outcome heart_rate_check() {
    EcgOptions o;
    o.bpm = 60.0;
    const double bpm60 = heart_rate(synth_ecg(o)).bpm;
    o.bpm = 90.0;
    const double bpm90 = heart_rate(synth_ecg(o)).bpm;
    double lo = 1e9, hi = -1e9;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        EcgOptions n;
        n.bpm = 60.0;
        n.snr_db = 15.0;
        n.seed = seed;
        const double b = heart_rate(synth_ecg(n)).bpm;
        lo = std::min(lo, b);
        hi = std::max(hi, b);
    }
    const bool pass = bpm60 == 60.0 && bpm90 == 90.0 && lo >= 57.0 && hi <= 63.0;
    return {pass, fmt::format("clean {} / {} bpm; 15 dB over 50 seeds: {}..{} bpm", bpm60, bpm90, lo, hi)};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    const std::vector<Criterion> criteria{
        {1, "parameter counts", 1.0, table2_counts},
        {2, "gradient oracle", 60.0, gradient_oracle},
        {3, "posture accuracy", 600.0, posture_accuracy},
        {4, "identity accuracy", 300.0, identity_accuracy},
        {5, "EMD completeness", 30.0, emd_completeness},
        {6, "drift removal", 30.0, drift_removal},
        {7, "FFT / DWT / STFT", 60.0, transforms},
        {8, "synth calibration", 1.0, synth_calibration},
        {9, "gateway latency", 120.0, gateway_latency},
        {10, "terminal resilience", 120.0, terminal_resilience},
        {11, "protocol robustness", 60.0, protocol_fuzz},
        {12, "heart rate", 10.0, heart_rate_check},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        bool pass = o.pass;
        if (secs > c.budget_s) {
            pass = false;
            o.detail += fmt::format("; over the {:.0f} s budget", c.budget_s);
        }
        if (!pass) ++failures;
        fmt::print("{} [{:2d}] {}: {} ({:.1f} s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail, secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
