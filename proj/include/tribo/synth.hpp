#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tribo/gait.hpp"
#include "tribo/signal.hpp"

namespace tribo {

/// Piecewise-linear map through two anchor points, extrapolated linearly and
/// clamped at zero.
struct LinearMap {
    double x0, y0, x1, y1;

    double operator()(double x) const noexcept;
};

/// Electrical characteristics of one sensor. The force sweep was measured at
/// 1 Hz and the frequency sweep at 4 N.
struct SensorModel {
    LinearMap voc_vs_force{1.0, 0.9, 4.0, 3.5};    // N -> V
    LinearMap isc_vs_force{1.0, 0.15, 4.0, 0.8};   // N -> uA at 1 Hz
    LinearMap isc_vs_freq{1.0, 0.3, 4.0, 0.8};     // Hz -> uA at 4 N
    double sensitivity_v_per_kpa = 0.1428;
    double response_time_s = 0.026;
    double target_snr_db = 31.2;
    double reference_freq_hz = 1.0;
};

struct SensorOutput {
    double voltage_v = 0.0;
    double current_ua = 0.0;
};

inline constexpr double kMinForceN = 0.5, kMaxForceN = 6.0;
inline constexpr double kMinFreqHz = 0.5, kMaxFreqHz = 6.0;

/// Peak open-circuit voltage and short-circuit current for a press at the
/// given force and rate. Throws InvalidInput outside [0.5, 6] N / [0.5, 6] Hz.
SensorOutput sensor_response(double force_n, double freq_hz, const SensorModel& m = {});

struct SubjectProfile {
    int id = 0;
    double stride_scale = 1.0;
    std::array<double, kChannelCount> amplitude_scale{1.0, 1.0, 1.0, 1.0};
    /// Per-channel timing offset as a fraction of the stride period.
    std::array<double, kChannelCount> phase_offset{0.0, 0.0, 0.0, 0.0};
    /// Relative heights of the five stance phases.
    std::array<double, 5> phase_weights{1.0, 0.45, 0.3, 0.6, 0.8};
    double tremor_hz = 0.0;     // 0 disables; otherwise in [3, 7]
    double tremor_depth = 0.0;  // fraction of the channel peak

    void validate() const;
    bool operator==(const SubjectProfile&) const = default;
};

/// Five fixed profiles (ids 1..5) used for the identity set and as the
/// subject pool of the posture dataset.
std::vector<SubjectProfile> default_subjects();

/// Per-record generation options.
struct SynthOptions {
    double duration_s = 5.0;
    double sample_rate_hz = 100.0;
    /// Noise is calibrated per channel against the clean motion power.
    std::optional<double> snr_db = 31.2;
    /// RMS of the slow baseline drift, volts. 0 disables.
    double drift_rms_v = 0.0;
    std::uint64_t seed = 0;
    /// Disables per-record timing and amplitude randomization (template mode).
    bool canonical = false;
    SensorModel sensor{};
};

/// A record together with its additive parts: record = motion + noise + drift.
struct SynthComponents {
    MultiChannelRecord record;
    std::array<Signal, kChannelCount> motion;
    std::array<Signal, kChannelCount> noise;
    std::array<Signal, kChannelCount> drift;
};

SynthComponents synth_components(GaitClass c, const SubjectProfile& subject, const SynthOptions& opt);
MultiChannelRecord synth_record(GaitClass c, const SubjectProfile& subject, const SynthOptions& opt);

/// One stride of the clean normal-walking waveform, each channel resampled to
/// `points_per_channel` samples and concatenated.
Signal subject_template(const SubjectProfile& subject, std::size_t points_per_channel = 100);

struct LabeledRecord {
    std::string id;
    MultiChannelRecord record;
    GaitClass gait = GaitClass::NormalWalking;
    int subject = 0;
    std::uint64_t seed = 0;
};

struct LabeledSet {
    std::vector<LabeledRecord> train;
    std::vector<LabeledRecord> test;
};

struct DatasetSpec {
    std::vector<GaitClass> classes{kAllGaitClasses.begin(), kAllGaitClasses.end()};
    std::size_t samples_per_class = 100;
    std::vector<SubjectProfile> subjects = default_subjects();
    double duration_s = 5.0;
    double sample_rate_hz = 100.0;
    double snr_db = 31.2;
    double drift_rms_v = 0.1;
    std::uint64_t seed = 1;
    double train_fraction = 0.8;

    void validate() const;
};

/// Stratified per-class split; the first round(n * fraction) items of each
/// class are training data.
LabeledSet synth_dataset(const DatasetSpec& spec);

struct IdentitySpec {
    std::vector<SubjectProfile> subjects = default_subjects();
    std::size_t sets = 50;
    std::size_t train_sets = 40;
    std::size_t samples = 500;
    double sample_rate_hz = 100.0;
    double snr_db = 31.2;
    double drift_rms_v = 0.1;
    std::uint64_t seed = 2;
};

/// Per subject, `sets` normal-walking records of `samples` x 4 samples.
LabeledSet synth_identity_set(const IdentitySpec& spec);

struct EcgOptions {
    double bpm = 60.0;
    double duration_s = 10.0;
    double sample_rate_hz = 100.0;
    /// White noise calibrated against the clean trace. Unset means clean.
    std::optional<double> snr_db;
    double phase_s = 0.0;  // time of the first R peak after t = 0
    std::uint64_t seed = 0;
};

/// ECG-like pulse train: P, Q, R, S, T Gaussian waves per beat, R peak of 1.
Signal synth_ecg(const EcgOptions& opt);

}  // namespace tribo
