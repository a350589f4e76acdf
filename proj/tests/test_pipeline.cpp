#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "tribo/error.hpp"
#include "tribo/pipeline.hpp"

using namespace tribo;
namespace fs = std::filesystem;

namespace {

MultiChannelRecord constant_record(double v, std::size_t n) {
    MultiChannelRecord r;
    for (auto& c : r.channels) c = Signal(std::vector<double>(n, v), 100.0);
    return r;
}

MultiChannelRecord walking(std::uint64_t seed, double scale = 1.0) {
    SynthOptions o;
    o.seed = seed;
    o.drift_rms_v = 0.1;
    auto r = synth_record(GaitClass::NormalWalking, default_subjects()[0], o);
    for (auto& c : r.channels) {
        for (double& x : c.samples) x *= scale;
    }
    return r;
}

Signal ecg(double bpm, std::optional<double> snr = std::nullopt, std::uint64_t seed = 0) {
    EcgOptions o;
    o.bpm = bpm;
    o.snr_db = snr;
    o.seed = seed;
    return synth_ecg(o);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / fs::path("tribo_pipe_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("preprocess yields 220 values within [-1, 1]") {
    const auto w = preprocess(walking(1));
    REQUIRE(w.values.size() == 220);
    for (double v : w.values) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("all-zero record gives an all-zero window") {
    const auto w = preprocess(constant_record(0.0, 500));
    REQUIRE(w.values.size() == 220);
    for (double v : w.values) CHECK(v == 0.0);
}

TEST_CASE("preprocess is deterministic and scale invariant") {
    const auto a = preprocess(walking(4));
    const auto b = preprocess(walking(4));
    CHECK(a.values == b.values);
    const auto c = preprocess(walking(4, 3.0));
    REQUIRE(c.values.size() == a.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(c.values[i] == doctest::Approx(a.values[i]).epsilon(1e-9));
}

TEST_CASE("only the most recent window is used") {
    auto longer = walking(9);
    auto tail = longer;
    for (auto& c : longer.channels) c.samples.insert(c.samples.begin(), 300, 0.0);
    PreprocessConfig cfg;
    cfg.denoise = false;
    CHECK(preprocess(longer, cfg).values == preprocess(tail, cfg).values);
}

TEST_CASE("short records are rejected") {
    try {
        preprocess(constant_record(1.0, 499));
        FAIL("expected TooShort");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooShort);
    }
}

TEST_CASE("heart rate of clean traces is exact") {
    const auto r60 = heart_rate(ecg(60.0));
    CHECK(r60.bpm == 60.0);
    CHECK(r60.valid);
    CHECK(r60.confidence > 0.99);
    CHECK(heart_rate(ecg(90.0)).bpm == 90.0);
    CHECK(heart_rate(ecg(45.0)).bpm == 45.0);
    CHECK(heart_rate(ecg(150.0)).bpm == 150.0);
}

TEST_CASE("heart rate at 15 dB SNR stays within 3 bpm") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = heart_rate(ecg(60.0, 15.0, seed));
        CHECK(r.bpm == doctest::Approx(60.0).epsilon(3.0 / 60.0));
    }
}

TEST_CASE("heart rate is amplitude invariant") {
    auto s = ecg(72.0);
    const double bpm = heart_rate(s).bpm;
    for (double& x : s.samples) x *= 0.01;
    CHECK(heart_rate(s).bpm == bpm);
}

TEST_CASE("heart rate failure modes") {
    auto no_beats = [](const Signal& s) {
        try {
            heart_rate(s);
        } catch (const Error& e) {
            return e.kind() == ErrorKind::NoBeats;
        }
        return false;
    };
    CHECK(no_beats(Signal(std::vector<double>(1000, 0.3), 100.0)));
    CHECK(no_beats(Signal(std::vector<double>(400, 0.0), 100.0)));
    EcgOptions slow;
    slow.sample_rate_hz = 40.0;
    CHECK(no_beats(synth_ecg(slow)));
}

TEST_CASE("beat times track R peaks") {
    EcgOptions o;
    o.bpm = 60.0;
    o.phase_s = 0.5;
    const auto beats = detect_beats(synth_ecg(o));
    REQUIRE(beats.size() >= 9);
    for (std::size_t i = 0; i < beats.size(); ++i) {
        CHECK(std::fmod(beats[i], 1.0) == doctest::Approx(0.5).epsilon(0.04));
    }
}

TEST_CASE("dataset round trip through disk") {
    TempDir tmp;
    DatasetSpec spec;
    spec.samples_per_class = 5;
    const LabeledSet set = synth_dataset(spec);
    write_labeled_set(tmp.path, set, Task::Posture);
    CHECK(fs::exists(tmp.path / "train" / "manifest.json"));
    const auto train = read_split(tmp.path / "train");
    CHECK(train.task == Task::Posture);
    REQUIRE(train.records.size() == set.train.size());
    for (std::size_t i = 0; i < train.records.size(); ++i) {
        CHECK(train.records[i].id == set.train[i].id);
        CHECK(train.records[i].gait == set.train[i].gait);
        CHECK(train.records[i].subject == set.train[i].subject);
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto& a = train.records[i].record.channels[c].samples;
            const auto& b = set.train[i].record.channels[c].samples;
            REQUIRE(a.size() == b.size());
            for (std::size_t k = 0; k < a.size(); k += 37) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
        }
    }
    const auto labels = class_labels(Task::Posture, train.records);
    CHECK(labels.size() == 8);
    CHECK(labels[2] == "FallingDown");
    const auto ds = build_dataset(train, labels);
    CHECK(ds.inputs.rows() == static_cast<Eigen::Index>(set.train.size()));
    CHECK(ds.inputs.cols() == 220);
    CHECK(ds.labels[0] == index_of(set.train[0].gait));
}

TEST_CASE("identity labels are sorted subject ids") {
    IdentitySpec spec;
    spec.sets = 2;
    spec.train_sets = 1;
    const auto set = synth_identity_set(spec);
    const auto labels = class_labels(Task::Identity, set.train);
    CHECK(labels == std::vector<std::string>{"1", "2", "3", "4", "5"});
}

TEST_CASE("feature export widths per tap") {
    DatasetSpec spec;
    spec.samples_per_class = 5;
    DatasetSplit split{Task::Posture, synth_dataset(spec).test};
    nn::Model model(nn::ModelConfig{}, 1);
    const std::pair<nn::Tap, std::size_t> taps[] = {
        {nn::Tap::Input, 220}, {nn::Tap::PostCnn, 880}, {nn::Tap::PostBiLstm, 3520}, {nn::Tap::PostAttention, 128}};
    for (auto [tap, width] : taps) {
        std::ostringstream os;
        export_features(model, split, tap, os);
        std::istringstream is(os.str());
        std::string header;
        std::getline(is, header);
        CHECK(static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) == width + 1);
        std::size_t rows = 0;
        for (std::string line; std::getline(is, line);) ++rows;
        CHECK(rows == split.records.size());
    }
}

TEST_CASE("classify maps model labels to gait classes") {
    nn::Model model(nn::ModelConfig{}, 2);
    std::vector<std::string> labels;
    for (GaitClass c : kAllGaitClasses) labels.emplace_back(to_string(c));
    model.set_labels(labels);
    const auto c = classify(model, walking(3));
    CHECK(c.probs.size() == 8);
    CHECK(c.confidence == doctest::Approx(c.probs[c.index]));
    CHECK(index_of(c.gait) == static_cast<int>(c.index));
}
