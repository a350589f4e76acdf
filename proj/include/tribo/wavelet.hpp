#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tribo/signal.hpp"

namespace tribo {

/// Daubechies-4 (8-tap, four vanishing moments), periodic extension,
/// soft universal threshold.
struct WaveletConfig {
    std::size_t levels = 4;
    /// Replaces the universal threshold when set (0 disables shrinkage).
    std::optional<double> threshold;
};

struct WaveletPyramid {
    std::vector<double> approx;               // coarsest approximation
    std::vector<std::vector<double>> details;  // details[0] is the finest level
    double sample_rate_hz = 1.0;
};

/// Low-pass synthesis taps h_0..h_7.
std::span<const double> db4_scaling_filter();

WaveletPyramid dwt(const Signal& s, const WaveletConfig& cfg = {});
Signal idwt(const WaveletPyramid& p);

double soft_threshold(double x, double lambda) noexcept;

/// sigma * sqrt(2 ln N) with sigma = median(|finest details|) / 0.6745.
double universal_threshold(const WaveletPyramid& p, std::size_t n);

Signal wavelet_denoise(const Signal& s, const WaveletConfig& cfg = {});

}  // namespace tribo
