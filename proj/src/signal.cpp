#include "tribo/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tribo/error.hpp"

namespace tribo {

std::string_view to_string(GaitClass c) {
    switch (c) {
        case GaitClass::NormalWalking: return "NormalWalking";
        case GaitClass::Jumping: return "Jumping";
        case GaitClass::FallingDown: return "FallingDown";
        case GaitClass::HemiplegicGait: return "HemiplegicGait";
        case GaitClass::DiplegicGait: return "DiplegicGait";
        case GaitClass::Running: return "Running";
        case GaitClass::FastWalking: return "FastWalking";
        case GaitClass::TaiChi: return "TaiChi";
    }
    return "Unknown";
}

std::optional<GaitClass> parse_gait_class(std::string_view name) {
    for (GaitClass c : kAllGaitClasses) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

void Signal::validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
        throw Error(ErrorKind::InvalidSignal, "sample rate must be positive");
    }
    if (samples.empty()) throw Error(ErrorKind::InvalidSignal, "signal is empty");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) {
            throw Error(ErrorKind::InvalidSignal, "non-finite sample at index " + std::to_string(i));
        }
    }
}

void MultiChannelRecord::validate() const {
    for (const Signal& ch : channels) {
        ch.validate();
        if (ch.size() != channels[0].size() || ch.sample_rate_hz != channels[0].sample_rate_hz) {
            throw Error(ErrorKind::InvalidSignal, "channels differ in length or sample rate");
        }
    }
}

Signal normalize(const Signal& s) {
    s.validate();
    double peak = 0.0;
    for (double v : s.samples) peak = std::max(peak, std::abs(v));
    Signal out = s;
    if (peak == 0.0) return out;
    for (double& v : out.samples) v /= peak;
    return out;
}

double mean_power(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc / static_cast<double>(x.size());
}

SnrReport snr_db(const Signal& signal, const Signal& noise) {
    signal.validate();
    noise.validate();
    SnrReport r;
    r.ps = mean_power(signal.samples);
    r.pn = mean_power(noise.samples);
    if (r.pn == 0.0) throw Error(ErrorKind::DivisionByZero, "noise has zero power");
    r.snr_db = 10.0 * std::log10(r.ps / r.pn);
    return r;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::ShapeError, "pearson: length mismatch");
    if (a.size() < 2) throw Error(ErrorKind::ShapeError, "pearson: need at least 2 samples");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw Error(ErrorKind::DegenerateInput, "pearson: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(std::span<const Signal> signals) {
    if (signals.size() < 2) throw Error(ErrorKind::ShapeError, "correlation_matrix: need at least 2 signals");
    CorrelationMatrix m;
    m.n = signals.size();
    m.values.assign(m.n * m.n, 0.0);
    for (std::size_t i = 0; i < m.n; ++i) {
        m.values[i * m.n + i] = 1.0;
        for (std::size_t j = i + 1; j < m.n; ++j) {
            const double r = pearson(signals[i], signals[j]);
            m.values[i * m.n + j] = r;
            m.values[j * m.n + i] = r;
        }
    }
    return m;
}

}  // namespace tribo
