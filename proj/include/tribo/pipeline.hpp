#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tribo/emd.hpp"
#include "tribo/nn/model.hpp"
#include "tribo/nn/train.hpp"
#include "tribo/synth.hpp"

namespace tribo {

struct PreprocessConfig {
    bool denoise = true;
    SiftConfig sift{};
    DenoiseConfig baseline{};
    std::size_t window = 500;  // analysis window per channel, most recent samples
    std::size_t points = 55;   // block-averaged length per channel
};

struct WindowedSample {
    std::vector<double> values;  // channels concatenated, each in [-1, 1]
    std::string source_id;
    std::optional<int> label;
};

/// Per channel: baseline removal, max-abs normalization, last `window`
/// samples, block averaging to `points`. Throws TooShort for short channels.
WindowedSample preprocess(const MultiChannelRecord& record, const PreprocessConfig& cfg = {});

struct Classification {
    GaitClass gait = GaitClass::NormalWalking;
    std::size_t index = 0;
    double confidence = 0.0;
    std::vector<double> probs;
};

Classification classify(nn::Model& model, const MultiChannelRecord& record, const PreprocessConfig& cfg = {});

struct Identification {
    int subject = 0;
    double confidence = 0.0;
    std::vector<double> probs;
};

/// Model labels are the subject ids as decimal strings.
Identification identify(nn::Model& model, const MultiChannelRecord& record, const PreprocessConfig& cfg = {});

struct HeartRateConfig {
    double low_hz = 0.5;
    double high_hz = 8.0;
    double threshold = 0.6;       // fraction of the rolling maximum
    double rolling_window_s = 4.0;
    double refractory_s = 0.25;
    double min_duration_s = 5.0;
    double min_rate_hz = 50.0;
};

struct HeartRateReading {
    double bpm = 0.0;         // rounded to 0.1
    double confidence = 0.0;  // 1 - coefficient of variation of the beat intervals
    double span_s = 0.0;
    std::size_t beats = 0;
    bool valid = false;       // bpm within [20, 250]
};

/// Beat times in seconds after band limiting and thresholded peak picking.
std::vector<double> detect_beats(const Signal& ecg, const HeartRateConfig& cfg = {});
HeartRateReading heart_rate(const Signal& ecg, const HeartRateConfig& cfg = {});

// ---------------------------------------------------------------- datasets

enum class Task { Posture, Identity };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

struct DatasetSplit {
    Task task = Task::Posture;
    std::vector<LabeledRecord> records;
};

/// One CSV per record plus manifest.json (task, labels, per-record metadata).
void write_split(const std::filesystem::path& dir, const DatasetSplit& split);
/// Writes dir/train and dir/test.
void write_labeled_set(const std::filesystem::path& dir, const LabeledSet& set, Task task);
DatasetSplit read_split(const std::filesystem::path& dir);

/// Output class names for a task: gait names, or subject ids present in `records`.
std::vector<std::string> class_labels(Task task, std::span<const LabeledRecord> records);

/// Preprocesses every record; the class index is the position of the
/// record's gait or subject in `labels`.
nn::Dataset build_dataset(const DatasetSplit& split, const std::vector<std::string>& labels,
                          const PreprocessConfig& cfg = {});

/// CSV with columns id,label,f0..f{n-1}: one row per record at the given tap.
void export_features(nn::Model& model, const DatasetSplit& split, nn::Tap tap, std::ostream& os,
                     const PreprocessConfig& cfg = {});

}  // namespace tribo
