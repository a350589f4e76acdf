#include "tribo/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tribo/error.hpp"
#include "tribo/rng.hpp"

namespace tribo {

double LinearMap::operator()(double x) const noexcept {
    const double y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    return std::max(0.0, y);
}

SensorOutput sensor_response(double force_n, double freq_hz, const SensorModel& m) {
    if (!std::isfinite(force_n) || !std::isfinite(freq_hz) || force_n < 0.0 || freq_hz < 0.0) {
        throw Error(ErrorKind::InvalidInput, "force and frequency must be non-negative");
    }
    if (force_n < kMinForceN || force_n > kMaxForceN || freq_hz < kMinFreqHz || freq_hz > kMaxFreqHz) {
        throw Error(ErrorKind::InvalidInput,
                    fmt::format("({} N, {} Hz) outside the characterized range", force_n, freq_hz));
    }
    SensorOutput out;
    // Voltage is frequency independent.
    out.voltage_v = m.voc_vs_force(force_n);
    // Force sweep sets the level at the reference rate; the frequency sweep
    // supplies the relative rate dependence.
    out.current_ua = m.isc_vs_force(force_n) * m.isc_vs_freq(freq_hz) / m.isc_vs_freq(m.reference_freq_hz);
    return out;
}

void SubjectProfile::validate() const {
    if (!(stride_scale > 0.0)) throw Error(ErrorKind::InvalidSpec, "stride_scale must be positive");
    for (double a : amplitude_scale) {
        if (!(a > 0.0)) throw Error(ErrorKind::InvalidSpec, "amplitude scales must be positive");
    }
    if (tremor_hz != 0.0 && (tremor_hz < 3.0 || tremor_hz > 7.0)) {
        throw Error(ErrorKind::InvalidSpec, "tremor frequency must be in [3, 7] Hz");
    }
    if (tremor_depth < 0.0) throw Error(ErrorKind::InvalidSpec, "tremor depth must be non-negative");
}

std::vector<SubjectProfile> default_subjects() {
    std::vector<SubjectProfile> s(5);
    s[0] = {1, 0.90, {1.00, 0.95, 1.00, 0.90}, {0.00, 0.00, 0.00, 0.00}, {1.0, 0.45, 0.30, 0.60, 0.80}, 4.0, 0.06};
    s[1] = {2, 0.95, {0.90, 1.00, 0.95, 1.00}, {0.03, 0.00, 0.04, 0.00}, {1.0, 0.55, 0.25, 0.70, 0.70}, 5.0, 0.05};
    s[2] = {3, 1.00, {1.00, 1.00, 1.00, 1.00}, {0.00, 0.05, 0.00, 0.05}, {1.0, 0.40, 0.35, 0.50, 0.90}, 6.0, 0.06};
    s[3] = {4, 1.05, {0.95, 0.90, 1.00, 0.95}, {0.06, 0.02, 0.02, 0.06}, {1.0, 0.50, 0.30, 0.65, 0.75}, 3.5, 0.05};
    s[4] = {5, 1.10, {1.00, 0.95, 0.90, 1.00}, {0.02, 0.06, 0.06, 0.02}, {1.0, 0.35, 0.40, 0.55, 0.85}, 4.5, 0.06};
    return s;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum Channel : std::size_t { LeftElbow = 0, RightElbow = 1, LeftKnee = 2, RightKnee = 3 };

// Contact-separation pulse pair: a positive contact peak followed by a wider
// negative separation lobe of equal area.
void add_pulse_pair(std::vector<double>& x, double fs, double t_contact, double amp, double width_s) {
    const double sep_width = 1.8 * width_s;
    const double sep_delay = 3.5 * width_s;
    const double sep_amp = -amp * width_s / sep_width;
    const auto add_bump = [&](double center, double a, double w) {
        const double lo = (center - 5.0 * w) * fs;
        const double hi = (center + 5.0 * w) * fs;
        const auto first = static_cast<long>(std::max(0.0, std::ceil(lo)));
        const auto last = static_cast<long>(std::min(static_cast<double>(x.size()) - 1.0, std::floor(hi)));
        for (long i = first; i <= last; ++i) {
            const double z = (static_cast<double>(i) / fs - center) / w;
            x[static_cast<std::size_t>(i)] += a * std::exp(-0.5 * z * z);
        }
    };
    add_bump(t_contact, amp, width_s);
    add_bump(t_contact + sep_delay, sep_amp, sep_width);
}

// Positive-only wide bump (a foot dragging without a clean release).
void add_half_pulse(std::vector<double>& x, double fs, double center, double amp, double width_s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = (static_cast<double>(i) / fs - center) / width_s;
        if (std::abs(z) < 5.0) x[i] += amp * std::exp(-0.5 * z * z);
    }
}

struct Randomness {
    bool canonical;
    Rng rng;

    double uniform(double lo, double hi, double canonical_value) {
        return canonical ? canonical_value : rng.uniform(lo, hi);
    }
    double jitter(double sd) { return canonical ? 0.0 : rng.normal(0.0, sd); }
    double scale(double spread) { return canonical ? 1.0 : rng.uniform(1.0 - spread, 1.0 + spread); }
};

struct GaitShape {
    double period_s;
    double force_n;
    std::array<double, kChannelCount> channel_gain{0.6, 0.6, 1.0, 1.0};
    // Right knee replaced by a dragging half-pulse (hemiplegia).
    bool drag_right_knee = false;
};

constexpr std::array<double, 5> kStanceFractions{0.0, 0.08, 0.20, 0.35, 0.45};

// Walking-type gaits: knees carry the 5-phase stance cluster, elbows a
// forward/back swing pair; left and right sides alternate by half a stride.
void render_gait(std::array<std::vector<double>, kChannelCount>& ch, double fs, double duration, const GaitShape& g,
                 const SubjectProfile& subj, const SensorModel& sensor, Randomness& rnd, double t_end) {
    const double period = g.period_s * subj.stride_scale * rnd.scale(0.015);
    const double freq = std::clamp(1.0 / period, kMinFreqHz, kMaxFreqHz);
    const double peak = sensor_response(g.force_n, freq, sensor).voltage_v;
    const double width = 1.5 * sensor.response_time_s;
    const double start = -rnd.uniform(0.0, period, 0.0);
    const long strides = static_cast<long>(std::ceil(duration / period)) + 2;
    std::array<double, kChannelCount> gain{};
    for (std::size_t c = 0; c < kChannelCount; ++c) gain[c] = g.channel_gain[c] * subj.amplitude_scale[c] * rnd.scale(0.08);

    for (long k = -1; k < strides; ++k) {
        const double t0 = start + static_cast<double>(k) * period + rnd.jitter(0.01 * period);
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const bool right = (c == RightElbow || c == RightKnee);
            const bool knee = (c == LeftKnee || c == RightKnee);
            // Arms swing opposite to the leg on the same side.
            const double side_shift = (right != !knee) ? 0.5 * period : 0.0;
            const double tc = t0 + side_shift + subj.phase_offset[c] * period;
            const double amp = peak * gain[c];
            if (knee && c == RightKnee && g.drag_right_knee) {
                if (tc < t_end) add_half_pulse(ch[c], fs, tc + 0.2 * period, 0.3 * amp, 0.15 * period);
                continue;
            }
            if (knee) {
                for (std::size_t p = 0; p < kStanceFractions.size(); ++p) {
                    const double t = tc + kStanceFractions[p] * period;
                    if (t >= t_end) continue;
                    add_pulse_pair(ch[c], fs, t, amp * subj.phase_weights[p] * rnd.scale(0.05), width);
                }
            } else {
                if (tc < t_end) add_pulse_pair(ch[c], fs, tc, amp * rnd.scale(0.05), width * 1.5);
                if (tc + 0.5 * period < t_end) {
                    add_pulse_pair(ch[c], fs, tc + 0.5 * period, 0.6 * amp * rnd.scale(0.05), width * 1.5);
                }
            }
        }
    }
}

void render_jumps(std::array<std::vector<double>, kChannelCount>& ch, double fs, double duration,
                  const SubjectProfile& subj, const SensorModel& sensor, Randomness& rnd) {
    const double period = 1.3 * subj.stride_scale * rnd.scale(0.03);
    const double takeoff = sensor_response(3.0, 1.0 / period, sensor).voltage_v;
    const double landing = sensor_response(4.5, 1.0 / period, sensor).voltage_v;
    const double width = 2.0 * sensor.response_time_s;
    const double start = -rnd.uniform(0.0, period, 0.0);
    const long jumps = static_cast<long>(std::ceil(duration / period)) + 2;
    for (long k = -1; k < jumps; ++k) {
        const double t0 = start + static_cast<double>(k) * period + rnd.jitter(0.01 * period);
        const double air = 0.4 * rnd.scale(0.05);
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const double g = subj.amplitude_scale[c];
            const double skew = subj.phase_offset[c] * 0.1;
            add_pulse_pair(ch[c], fs, t0 + skew, 0.7 * takeoff * g, width);
            add_pulse_pair(ch[c], fs, t0 + air + skew, landing * g * rnd.scale(0.05), width);
        }
    }
}

void render_fall(std::array<std::vector<double>, kChannelCount>& ch, double fs, double duration,
                 const SubjectProfile& subj, const SensorModel& sensor, Randomness& rnd) {
    const double t_fall = duration * rnd.uniform(0.25, 0.55, 0.4);
    // Walking up to the moment of the fall.
    GaitShape pre{1.0, 2.0};
    std::array<std::vector<double>, kChannelCount> walk;
    for (auto& w : walk) w.assign(ch[0].size(), 0.0);
    render_gait(walk, fs, duration, pre, subj, sensor, rnd, t_fall - 0.1);
    const double impact = sensor_response(5.5, 1.0, sensor).voltage_v;
    const double width = 2.5 * sensor.response_time_s;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        for (std::size_t i = 0; i < walk[c].size(); ++i) ch[c][i] += 0.5 * walk[c][i];
        const double t = t_fall + 0.03 * static_cast<double>(c) + rnd.jitter(0.01);
        const double g = subj.amplitude_scale[c] * rnd.scale(0.1);
        add_pulse_pair(ch[c], fs, t, impact * g, width);
        add_pulse_pair(ch[c], fs, t + 0.25, 0.4 * impact * g, width);
        add_pulse_pair(ch[c], fs, t + 0.5, 0.15 * impact * g, width);
    }
}

void render_taichi(std::array<std::vector<double>, kChannelCount>& ch, double fs, const SubjectProfile& subj,
                   const SensorModel& sensor, Randomness& rnd) {
    const double amp = 0.5 * sensor_response(1.0, 1.0, sensor).voltage_v;
    const double f0 = 0.2 / subj.stride_scale * rnd.scale(0.05);
    const double phase = rnd.uniform(0.0, kTwoPi, 0.0);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const double phi = phase + static_cast<double>(c) * std::numbers::pi / 4.0 + kTwoPi * subj.phase_offset[c];
        const double g = amp * subj.amplitude_scale[c] * rnd.scale(0.08);
        for (std::size_t i = 0; i < ch[c].size(); ++i) {
            const double t = static_cast<double>(i) / fs;
            ch[c][i] += g * (std::sin(kTwoPi * f0 * t + phi) + 0.3 * std::sin(kTwoPi * 3.0 * f0 * t + 2.0 * phi));
        }
    }
}

void render_tremor(std::array<std::vector<double>, kChannelCount>& ch, double fs, const SubjectProfile& subj,
                   Randomness& rnd) {
    if (subj.tremor_hz <= 0.0 || subj.tremor_depth <= 0.0) return;
    const double phase = rnd.uniform(0.0, kTwoPi, 0.0);
    for (auto& x : ch) {
        double peak = 0.0;
        for (double v : x) peak = std::max(peak, std::abs(v));
        const double a = subj.tremor_depth * peak;
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += a * std::sin(kTwoPi * subj.tremor_hz * static_cast<double>(i) / fs + phase);
        }
    }
}

std::vector<double> make_drift(std::size_t n, double fs, double rms, Rng& rng) {
    std::vector<double> d(n, 0.0);
    if (rms <= 0.0) return d;
    double acc = 0.0;
    for (double& v : d) {
        acc += rng.normal();
        v = acc;
    }
    // Zero-phase one-pole low-pass at 0.2 Hz.
    const double alpha = 1.0 - std::exp(-kTwoPi * 0.2 / fs);
    for (std::size_t i = 1; i < n; ++i) d[i] = d[i - 1] + alpha * (d[i] - d[i - 1]);
    for (std::size_t i = n - 1; i-- > 0;) d[i] = d[i + 1] + alpha * (d[i] - d[i + 1]);
    const double base = d[0];
    double power = 0.0;
    for (double& v : d) {
        v -= base;
        power += v * v;
    }
    power /= static_cast<double>(n);
    if (power <= 0.0) return std::vector<double>(n, 0.0);
    const double scale = rms / std::sqrt(power);
    for (double& v : d) v *= scale;
    return d;
}

std::array<std::vector<double>, kChannelCount> render_motion(GaitClass c, const SubjectProfile& subj, double fs,
                                                            double duration, std::size_t n, const SensorModel& sensor,
                                                            Randomness& rnd) {
    std::array<std::vector<double>, kChannelCount> ch;
    for (auto& x : ch) x.assign(n, 0.0);
    const double t_end = duration + 10.0;
    switch (c) {
        case GaitClass::NormalWalking: render_gait(ch, fs, duration, {1.0, 2.5}, subj, sensor, rnd, t_end); break;
        case GaitClass::FastWalking: render_gait(ch, fs, duration, {0.7, 3.2}, subj, sensor, rnd, t_end); break;
        case GaitClass::Running: render_gait(ch, fs, duration, {0.4, 3.8}, subj, sensor, rnd, t_end); break;
        case GaitClass::HemiplegicGait: {
            GaitShape g{1.2, 2.5, {0.6, 0.6, 1.0, 0.3}, true};
            render_gait(ch, fs, duration, g, subj, sensor, rnd, t_end);
            break;
        }
        case GaitClass::DiplegicGait: {
            GaitShape g{2.0, 2.0, {0.6, 0.6, 0.5, 0.5}, false};
            render_gait(ch, fs, duration, g, subj, sensor, rnd, t_end);
            break;
        }
        case GaitClass::Jumping: render_jumps(ch, fs, duration, subj, sensor, rnd); break;
        case GaitClass::FallingDown: render_fall(ch, fs, duration, subj, sensor, rnd); break;
        case GaitClass::TaiChi: render_taichi(ch, fs, subj, sensor, rnd); break;
    }
    render_tremor(ch, fs, subj, rnd);
    return ch;
}

void validate_options(const SynthOptions& opt) {
    if (!(opt.sample_rate_hz > 0.0) || !(opt.duration_s > 0.0)) {
        throw Error(ErrorKind::InvalidSpec, "duration and sample rate must be positive");
    }
    if (opt.duration_s * opt.sample_rate_hz < 256.0 - 1e-9) {
        throw Error(ErrorKind::InvalidSpec, "records need at least 256 samples");
    }
    if (opt.drift_rms_v < 0.0) throw Error(ErrorKind::InvalidSpec, "drift must be non-negative");
}

}  // namespace

SynthComponents synth_components(GaitClass c, const SubjectProfile& subject, const SynthOptions& opt) {
    validate_options(opt);
    subject.validate();
    const auto n = static_cast<std::size_t>(std::llround(opt.duration_s * opt.sample_rate_hz));
    const double fs = opt.sample_rate_hz;

    // Independent streams for shape, noise and drift.
    Randomness shape_rnd{opt.canonical, Rng(derive_seed(opt.seed, 1))};
    Rng noise_rng(derive_seed(opt.seed, 2));
    Rng drift_rng(derive_seed(opt.seed, 3));

    auto motion = render_motion(c, subject, fs, opt.duration_s, n, opt.sensor, shape_rnd);

    SynthComponents out;
    out.record.label = c;
    out.record.subject = subject.id;
    for (std::size_t ch = 0; ch < kChannelCount; ++ch) {
        std::vector<double> noise(n, 0.0);
        if (opt.snr_db) {
            const double ps = mean_power(motion[ch]);
            const double sigma = std::sqrt(ps / std::pow(10.0, *opt.snr_db / 10.0));
            for (double& v : noise) v = sigma * noise_rng.normal();
        }
        std::vector<double> drift = make_drift(n, fs, opt.drift_rms_v, drift_rng);
        std::vector<double> total(n);
        for (std::size_t i = 0; i < n; ++i) total[i] = motion[ch][i] + noise[i] + drift[i];
        out.record.channels[ch] = Signal(std::move(total), fs);
        out.motion[ch] = Signal(std::move(motion[ch]), fs);
        out.noise[ch] = Signal(std::move(noise), fs);
        out.drift[ch] = Signal(std::move(drift), fs);
    }
    return out;
}

MultiChannelRecord synth_record(GaitClass c, const SubjectProfile& subject, const SynthOptions& opt) {
    return synth_components(c, subject, opt).record;
}

Signal subject_template(const SubjectProfile& subject, std::size_t points_per_channel) {
    const double period = 1.0 * subject.stride_scale;
    SynthOptions opt;
    opt.sample_rate_hz = static_cast<double>(points_per_channel) / period;
    opt.duration_s = 3.0 * period;
    if (opt.duration_s * opt.sample_rate_hz < 256.0) opt.duration_s = 256.0 / opt.sample_rate_hz;
    opt.snr_db.reset();
    opt.canonical = true;
    // Template shape only: no tremor.
    SubjectProfile quiet = subject;
    quiet.tremor_depth = 0.0;
    const auto comp = synth_components(GaitClass::NormalWalking, quiet, opt);
    std::vector<double> out;
    out.reserve(points_per_channel * kChannelCount);
    for (const Signal& ch : comp.motion) {
        out.insert(out.end(), ch.samples.begin() + static_cast<std::ptrdiff_t>(points_per_channel),
                   ch.samples.begin() + static_cast<std::ptrdiff_t>(2 * points_per_channel));
    }
    return Signal(std::move(out), opt.sample_rate_hz);
}

void DatasetSpec::validate() const {
    if (classes.empty()) throw Error(ErrorKind::InvalidSpec, "no classes");
    if (subjects.empty()) throw Error(ErrorKind::InvalidSpec, "no subjects");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error(ErrorKind::InvalidSpec, "train fraction must be in (0, 1)");
    if (samples_per_class < 5) throw Error(ErrorKind::TooFew, "need at least 5 samples per class");
    for (const auto& s : subjects) s.validate();
}

LabeledSet synth_dataset(const DatasetSpec& spec) {
    spec.validate();
    LabeledSet set;
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(spec.samples_per_class) * spec.train_fraction));
    for (GaitClass c : spec.classes) {
        for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
            const SubjectProfile& subj = spec.subjects[i % spec.subjects.size()];
            SynthOptions opt;
            opt.duration_s = spec.duration_s;
            opt.sample_rate_hz = spec.sample_rate_hz;
            opt.snr_db = spec.snr_db;
            opt.drift_rms_v = spec.drift_rms_v;
            opt.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(index_of(c)) * 1'000'003ull + i);
            LabeledRecord r;
            r.id = fmt::format("{}_{:04}", to_string(c), i);
            r.record = synth_record(c, subj, opt);
            r.gait = c;
            r.subject = subj.id;
            r.seed = opt.seed;
            (i < n_train ? set.train : set.test).push_back(std::move(r));
        }
    }
    return set;
}

LabeledSet synth_identity_set(const IdentitySpec& spec) {
    if (spec.subjects.size() < 2) throw Error(ErrorKind::InvalidSpec, "need at least 2 subjects");
    for (std::size_t i = 0; i < spec.subjects.size(); ++i) {
        spec.subjects[i].validate();
        for (std::size_t j = 0; j < i; ++j) {
            if (spec.subjects[i] == spec.subjects[j] || spec.subjects[i].id == spec.subjects[j].id) {
                throw Error(ErrorKind::InvalidSpec, "duplicate subject profiles");
            }
        }
    }
    if (spec.train_sets == 0 || spec.train_sets >= spec.sets) throw Error(ErrorKind::InvalidSpec, "train_sets must be in [1, sets)");
    LabeledSet set;
    for (const SubjectProfile& subj : spec.subjects) {
        for (std::size_t i = 0; i < spec.sets; ++i) {
            SynthOptions opt;
            opt.sample_rate_hz = spec.sample_rate_hz;
            opt.duration_s = static_cast<double>(spec.samples) / spec.sample_rate_hz;
            opt.snr_db = spec.snr_db;
            opt.drift_rms_v = spec.drift_rms_v;
            opt.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(subj.id) * 1'000'003ull + i);
            LabeledRecord r;
            r.id = fmt::format("subject{}_{:03}", subj.id, i);
            r.record = synth_record(GaitClass::NormalWalking, subj, opt);
            r.gait = GaitClass::NormalWalking;
            r.subject = subj.id;
            r.seed = opt.seed;
            (i < spec.train_sets ? set.train : set.test).push_back(std::move(r));
        }
    }
    return set;
}

Signal synth_ecg(const EcgOptions& opt) {
    if (!(opt.bpm > 0.0 && opt.duration_s > 0.0 && opt.sample_rate_hz > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "bpm, duration and sample rate must be positive");
    }
    struct Wave {
        double offset_s, amp, sigma_s;
    };
    static constexpr Wave kWaves[] = {
        {-0.20, 0.15, 0.025}, {-0.03, -0.12, 0.010}, {0.0, 1.0, 0.020}, {0.03, -0.12, 0.010}, {0.30, 0.25, 0.040},
    };
    const auto n = static_cast<std::size_t>(std::llround(opt.duration_s * opt.sample_rate_hz));
    std::vector<double> x(n, 0.0);
    const double period = 60.0 / opt.bpm;
    for (double beat = opt.phase_s - period; beat < opt.duration_s + period; beat += period) {
        for (const Wave& w : kWaves) {
            const double center = beat + w.offset_s;
            const double reach = 5.0 * w.sigma_s;
            const auto lo = static_cast<long>(std::ceil((center - reach) * opt.sample_rate_hz));
            const auto hi = static_cast<long>(std::floor((center + reach) * opt.sample_rate_hz));
            for (long i = std::max(0L, lo); i <= hi && i < static_cast<long>(n); ++i) {
                const double d = (static_cast<double>(i) / opt.sample_rate_hz - center) / w.sigma_s;
                x[static_cast<std::size_t>(i)] += w.amp * std::exp(-0.5 * d * d);
            }
        }
    }
    if (opt.snr_db) {
        double ps = 0.0;
        for (double v : x) ps += v * v;
        ps /= static_cast<double>(n);
        const double sd = std::sqrt(ps / std::pow(10.0, *opt.snr_db / 10.0));
        Rng rng(derive_seed(opt.seed, 4));
        for (double& v : x) v += sd * rng.normal();
    }
    return Signal(std::move(x), opt.sample_rate_hz);
}

}  // namespace tribo
