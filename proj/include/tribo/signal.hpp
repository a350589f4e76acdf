#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tribo/gait.hpp"

namespace tribo {

/// A uniformly sampled voltage trace.
struct Signal {
    std::vector<double> samples;
    double sample_rate_hz = 1.0;

    Signal() = default;
    Signal(std::vector<double> s, double fs) : samples(std::move(s)), sample_rate_hz(fs) {}

    std::size_t size() const noexcept { return samples.size(); }
    double duration_s() const noexcept { return static_cast<double>(samples.size()) / sample_rate_hz; }

    /// Throws InvalidSignal unless fs > 0, length >= 1 and every sample is finite.
    void validate() const;

    bool operator==(const Signal&) const = default;
};

inline constexpr std::size_t kChannelCount = 4;

/// Four synchronous sensor channels, ordered [L-elbow, R-elbow, L-knee, R-knee].
struct MultiChannelRecord {
    std::array<Signal, kChannelCount> channels;
    std::optional<GaitClass> label;
    std::optional<int> subject;

    std::size_t length() const noexcept { return channels[0].size(); }
    double sample_rate_hz() const noexcept { return channels[0].sample_rate_hz; }

    /// Validates every channel and checks that they share rate and length.
    void validate() const;

    bool operator==(const MultiChannelRecord&) const = default;
};

struct SnrReport {
    double ps = 0.0;
    double pn = 1.0;
    double snr_db = 0.0;
};

/// Max-absolute scaling into [-1, 1]. The zero signal maps to itself.
Signal normalize(const Signal& s);

/// Mean-square power.
double mean_power(std::span<const double> x);

SnrReport snr_db(const Signal& signal, const Signal& noise);

double pearson(std::span<const double> a, std::span<const double> b);
inline double pearson(const Signal& a, const Signal& b) { return pearson(a.samples, b.samples); }

/// Row-major square matrix of pairwise Pearson coefficients.
struct CorrelationMatrix {
    std::size_t n = 0;
    std::vector<double> values;

    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

CorrelationMatrix correlation_matrix(std::span<const Signal> signals);

}  // namespace tribo
