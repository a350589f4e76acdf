#include "tribo/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "tribo/csv.hpp"
#include "tribo/error.hpp"

namespace tribo {

namespace fs = std::filesystem;

WindowedSample preprocess(const MultiChannelRecord& record, const PreprocessConfig& cfg) {
    if (cfg.points == 0 || cfg.window < cfg.points) {
        throw Error(ErrorKind::InvalidSpec, "window must hold at least one sample per output point");
    }
    WindowedSample out;
    out.values.reserve(kChannelCount * cfg.points);
    for (const Signal& ch : record.channels) {
        if (ch.size() < cfg.window) {
            throw Error(ErrorKind::TooShort,
                        fmt::format("channel has {} samples, the analysis window needs {}", ch.size(), cfg.window));
        }
        ch.validate();
        Signal s = ch;
        const bool flat = std::all_of(s.samples.begin(), s.samples.end(), [&](double v) { return v == s.samples[0]; });
        if (cfg.denoise && !flat) s = denoise_baseline(s, cfg.sift, cfg.baseline);
        s = normalize(s);
        const std::size_t first = s.size() - cfg.window;
        for (std::size_t j = 0; j < cfg.points; ++j) {
            const std::size_t a = first + j * cfg.window / cfg.points;
            const std::size_t b = first + (j + 1) * cfg.window / cfg.points;
            double acc = 0.0;
            for (std::size_t i = a; i < b; ++i) acc += s.samples[i];
            out.values.push_back(acc / static_cast<double>(b - a));
        }
    }
    if (record.label) out.label = index_of(*record.label);
    return out;
}

namespace {

nn::Matrix as_row(const std::vector<double>& v) {
    return Eigen::Map<const nn::Matrix>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
}

std::pair<std::size_t, std::vector<double>> predict(nn::Model& model, const MultiChannelRecord& record,
                                                    const PreprocessConfig& cfg) {
    const auto w = preprocess(record, cfg);
    const nn::Matrix p = model.predict_proba(as_row(w.values));
    std::vector<double> probs(p.data(), p.data() + p.size());
    return {static_cast<std::size_t>(nn::argmax(p.row(0))), std::move(probs)};
}

}  // namespace

Classification classify(nn::Model& model, const MultiChannelRecord& record, const PreprocessConfig& cfg) {
    auto [k, probs] = predict(model, record, cfg);
    Classification c;
    c.index = k;
    c.confidence = probs[k];
    c.probs = std::move(probs);
    if (const auto g = parse_gait_class(model.labels()[k])) {
        c.gait = *g;
    } else if (k < kGaitClassCount) {
        c.gait = static_cast<GaitClass>(k);
    } else {
        throw Error(ErrorKind::ModelError, "model classes are not posture classes");
    }
    return c;
}

Identification identify(nn::Model& model, const MultiChannelRecord& record, const PreprocessConfig& cfg) {
    auto [k, probs] = predict(model, record, cfg);
    Identification id;
    id.confidence = probs[k];
    id.probs = std::move(probs);
    try {
        id.subject = std::stoi(model.labels()[k]);
    } catch (const std::exception&) {
        throw Error(ErrorKind::ModelError, fmt::format("class label '{}' is not a subject id", model.labels()[k]));
    }
    return id;
}

// ---------------------------------------------------------------- heart rate

namespace {

// Centered moving average; the window shrinks at the edges.
std::vector<double> moving_average(const std::vector<double>& x, std::size_t len) {
    const std::size_t n = x.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
    const std::size_t half = len / 2;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i >= half ? i - half : 0;
        const std::size_t b = std::min(n, i + (len - half));
        y[i] = (prefix[b] - prefix[a]) / static_cast<double>(b - a);
    }
    return y;
}

std::vector<double> rolling_max(const std::vector<double>& x, std::size_t len) {
    const std::size_t n = x.size();
    const std::size_t half = len / 2;
    std::vector<double> y(n);
    std::deque<std::size_t> dq;  // indices with decreasing values
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (const std::size_t hi = std::min(n, i + half + 1); next < hi; ++next) {
            while (!dq.empty() && x[dq.back()] <= x[next]) dq.pop_back();
            dq.push_back(next);
        }
        const std::size_t lo = i >= half ? i - half : 0;
        while (dq.front() < lo) dq.pop_front();
        y[i] = x[dq.front()];
    }
    return y;
}

}  // namespace

std::vector<double> detect_beats(const Signal& ecg, const HeartRateConfig& cfg) {
    ecg.validate();
    const double fs = ecg.sample_rate_hz;
    if (fs < cfg.min_rate_hz) {
        throw Error(ErrorKind::NoBeats, fmt::format("sample rate {} Hz is below {} Hz", fs, cfg.min_rate_hz));
    }
    if (ecg.duration_s() < cfg.min_duration_s) {
        throw Error(ErrorKind::NoBeats, fmt::format("{:.2f} s of signal, at least {} s needed", ecg.duration_s(),
                                                    cfg.min_duration_s));
    }
    // High-pass by subtracting a 1/low_hz moving average, then low-pass with a
    // moving average whose -3 dB point sits at high_hz.
    const auto baseline_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fs / cfg.low_hz)));
    const auto smooth_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.443 * fs / cfg.high_hz)));
    const auto base = moving_average(ecg.samples, baseline_len);
    std::vector<double> hp(ecg.size());
    for (std::size_t i = 0; i < hp.size(); ++i) hp[i] = ecg.samples[i] - base[i];
    const auto x = moving_average(hp, smooth_len);

    const double peak_abs = std::accumulate(x.begin(), x.end(), 0.0, [](double m, double v) { return std::max(m, std::abs(v)); });
    const double scale = std::accumulate(ecg.samples.begin(), ecg.samples.end(), 0.0,
                                         [](double m, double v) { return std::max(m, std::abs(v)); });
    if (!(peak_abs > 1e-9 * std::max(scale, 1e-300))) throw Error(ErrorKind::NoBeats, "flat signal");

    const auto roll = rolling_max(x, std::max<std::size_t>(3, static_cast<std::size_t>(std::lround(cfg.rolling_window_s * fs))));
    const auto refractory = static_cast<double>(cfg.refractory_s * fs);
    std::vector<double> peaks;  // fractional sample positions
    std::vector<double> heights;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (!(x[i] > 0.0 && x[i] >= x[i - 1] && x[i] > x[i + 1] && x[i] >= cfg.threshold * roll[i])) continue;
        // Parabolic refinement through the three samples around the maximum.
        const double a = x[i - 1], b = x[i], c = x[i + 1];
        const double denom = a - 2.0 * b + c;
        const double offset = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
        const double pos = static_cast<double>(i) + offset;
        if (!peaks.empty() && pos - peaks.back() < refractory) {
            if (b > heights.back()) {
                peaks.back() = pos;
                heights.back() = b;
            }
            continue;
        }
        peaks.push_back(pos);
        heights.push_back(b);
    }
    std::vector<double> times(peaks.size());
    for (std::size_t i = 0; i < peaks.size(); ++i) times[i] = peaks[i] / fs;
    return times;
}

HeartRateReading heart_rate(const Signal& ecg, const HeartRateConfig& cfg) {
    const auto beats = detect_beats(ecg, cfg);
    if (beats.size() < 2) throw Error(ErrorKind::NoBeats, fmt::format("{} beat(s) detected", beats.size()));
    std::vector<double> intervals(beats.size() - 1);
    for (std::size_t i = 0; i + 1 < beats.size(); ++i) intervals[i] = beats[i + 1] - beats[i];
    std::vector<double> sorted = intervals;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    const double mean = std::accumulate(intervals.begin(), intervals.end(), 0.0) / static_cast<double>(m);
    double var = 0.0;
    for (double v : intervals) var += (v - mean) * (v - mean);
    const double cv = std::sqrt(var / static_cast<double>(m)) / mean;

    HeartRateReading r;
    r.bpm = std::round(600.0 / median) / 10.0;
    r.confidence = std::clamp(1.0 - cv, 0.0, 1.0);
    r.span_s = ecg.duration_s();
    r.beats = beats.size();
    r.valid = r.bpm >= 20.0 && r.bpm <= 250.0;
    return r;
}

// ---------------------------------------------------------------- datasets

std::string_view to_string(Task t) { return t == Task::Posture ? "posture" : "identity"; }

Task parse_task(std::string_view s) {
    if (s == "posture") return Task::Posture;
    if (s == "identity") return Task::Identity;
    throw Error(ErrorKind::ParseError, fmt::format("unknown task '{}'", s));
}

std::vector<std::string> class_labels(Task task, std::span<const LabeledRecord> records) {
    std::vector<std::string> out;
    if (task == Task::Posture) {
        for (GaitClass c : kAllGaitClasses) out.emplace_back(to_string(c));
        return out;
    }
    std::vector<int> ids;
    for (const auto& r : records) ids.push_back(r.subject);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (int id : ids) out.push_back(std::to_string(id));
    return out;
}

void write_split(const fs::path& dir, const DatasetSplit& split) {
    fs::create_directories(dir);
    fs::path norm = dir.lexically_normal();
    if (norm.filename().empty()) norm = norm.parent_path();
    const std::string split_name = norm.filename().string();
    nlohmann::json records = nlohmann::json::array();
    for (std::size_t i = 0; i < split.records.size(); ++i) {
        const auto& r = split.records[i];
        const std::string file = fmt::format("{:05d}.csv", i);
        csv::write_record(dir / file, r.record);
        records.push_back({{"file", file},
                           {"id", r.id},
                           {"gait", std::string(to_string(r.gait))},
                           {"subject", r.subject},
                           {"seed", r.seed},
                           {"split", split_name}});
    }
    const nlohmann::json manifest{{"task", std::string(to_string(split.task))},
                                  {"labels", class_labels(split.task, split.records)},
                                  {"records", records}};
    std::ofstream os(dir / "manifest.json");
    if (!os) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", (dir / "manifest.json").string()));
    os << manifest.dump(1) << '\n';
}

void write_labeled_set(const fs::path& dir, const LabeledSet& set, Task task) {
    write_split(dir / "train", {task, set.train});
    write_split(dir / "test", {task, set.test});
}

DatasetSplit read_split(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    std::ifstream is(mpath);
    if (!is) throw Error(ErrorKind::IoError, fmt::format("no dataset manifest at {}", mpath.string()));
    DatasetSplit split;
    try {
        const auto manifest = nlohmann::json::parse(is);
        split.task = parse_task(manifest.at("task").get<std::string>());
        for (const auto& e : manifest.at("records")) {
            LabeledRecord r;
            r.id = e.at("id").get<std::string>();
            const auto gait = parse_gait_class(e.at("gait").get<std::string>());
            if (!gait) throw Error(ErrorKind::ParseError, fmt::format("record {}: unknown gait", r.id));
            r.gait = *gait;
            r.subject = e.at("subject").get<int>();
            r.seed = e.at("seed").get<std::uint64_t>();
            r.record = csv::read_record(dir / e.at("file").get<std::string>());
            r.record.label = r.gait;
            r.record.subject = r.subject;
            split.records.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, fmt::format("{}: {}", mpath.string(), e.what()));
    }
    return split;
}

nn::Dataset build_dataset(const DatasetSplit& split, const std::vector<std::string>& labels,
                          const PreprocessConfig& cfg) {
    std::map<std::string, int> index;
    for (std::size_t k = 0; k < labels.size(); ++k) index[labels[k]] = static_cast<int>(k);
    nn::Dataset d;
    d.inputs.resize(static_cast<Eigen::Index>(split.records.size()),
                    static_cast<Eigen::Index>(kChannelCount * cfg.points));
    for (std::size_t i = 0; i < split.records.size(); ++i) {
        const auto& r = split.records[i];
        const std::string key = split.task == Task::Posture ? std::string(to_string(r.gait)) : std::to_string(r.subject);
        const auto it = index.find(key);
        if (it == index.end()) throw Error(ErrorKind::InvalidInput, fmt::format("record {}: label '{}' unknown", r.id, key));
        const auto w = preprocess(r.record, cfg);
        d.inputs.row(static_cast<Eigen::Index>(i)) = as_row(w.values);
        d.labels.push_back(it->second);
    }
    return d;
}

void export_features(nn::Model& model, const DatasetSplit& split, nn::Tap tap, std::ostream& os,
                     const PreprocessConfig& cfg) {
    const auto labels = model.labels();
    std::vector<std::string> names;
    nn::Matrix inputs(static_cast<Eigen::Index>(split.records.size()), static_cast<Eigen::Index>(kChannelCount * cfg.points));
    for (std::size_t i = 0; i < split.records.size(); ++i) {
        const auto& r = split.records[i];
        inputs.row(static_cast<Eigen::Index>(i)) = as_row(preprocess(r.record, cfg).values);
        names.push_back(split.task == Task::Posture ? std::string(to_string(r.gait)) : std::to_string(r.subject));
    }
    const nn::Matrix f = split.records.empty() ? nn::Matrix(0, 0) : model.features(inputs, tap);
    const Eigen::Index width = split.records.empty() ? static_cast<Eigen::Index>(model.features(
                                                           nn::Matrix::Zero(1, static_cast<Eigen::Index>(model.config().input_len)), tap).cols())
                                                     : f.cols();
    os << "id,label";
    for (Eigen::Index j = 0; j < width; ++j) os << ",f" << j;
    os << '\n';
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        os << split.records[static_cast<std::size_t>(i)].id << ',' << names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < f.cols(); ++j) os << ',' << fmt::format("{}", f(i, j));
        os << '\n';
    }
}

}  // namespace tribo
