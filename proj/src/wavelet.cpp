#include "tribo/wavelet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "tribo/error.hpp"

namespace tribo {

namespace {

constexpr std::array<double, 8> kScaling = {
    0.23037781330885523,  0.7148465705525415,  0.6308807679295904,   -0.02798376941698385,
    -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278,
};

// g_k = (-1)^k h_{7-k}
constexpr std::array<double, 8> make_wavelet() {
    std::array<double, 8> g{};
    for (std::size_t k = 0; k < 8; ++k) g[k] = (k % 2 == 0 ? 1.0 : -1.0) * kScaling[7 - k];
    return g;
}

constexpr std::array<double, 8> kWavelet = make_wavelet();

void analysis_step(std::span<const double> x, std::vector<double>& approx, std::vector<double>& detail) {
    const std::size_t n = x.size();
    const std::size_t half = n / 2;
    approx.assign(half, 0.0);
    detail.assign(half, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (std::size_t k = 0; k < 8; ++k) {
            const double v = x[(2 * i + k) % n];
            a += kScaling[k] * v;
            d += kWavelet[k] * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

std::vector<double> synthesis_step(std::span<const double> approx, std::span<const double> detail) {
    const std::size_t half = approx.size();
    const std::size_t n = 2 * half;
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        for (std::size_t k = 0; k < 8; ++k) {
            x[(2 * i + k) % n] += kScaling[k] * approx[i] + kWavelet[k] * detail[i];
        }
    }
    return x;
}

void check_length(std::size_t n, std::size_t levels) {
    if (levels < 1) throw Error(ErrorKind::LengthError, "wavelet levels must be >= 1");
    if (levels >= 63 || (std::size_t{1} << levels) > n || n % (std::size_t{1} << levels) != 0) {
        throw Error(ErrorKind::LengthError, fmt::format("length {} is not a multiple of 2^{}", n, levels));
    }
}

}  // namespace

std::span<const double> db4_scaling_filter() { return kScaling; }

WaveletPyramid dwt(const Signal& s, const WaveletConfig& cfg) {
    s.validate();
    check_length(s.size(), cfg.levels);
    WaveletPyramid p;
    p.sample_rate_hz = s.sample_rate_hz;
    std::vector<double> current = s.samples;
    for (std::size_t level = 0; level < cfg.levels; ++level) {
        std::vector<double> approx, detail;
        analysis_step(current, approx, detail);
        p.details.push_back(std::move(detail));
        current = std::move(approx);
    }
    p.approx = std::move(current);
    return p;
}

Signal idwt(const WaveletPyramid& p) {
    std::vector<double> current = p.approx;
    for (std::size_t level = p.details.size(); level-- > 0;) {
        if (p.details[level].size() != current.size()) throw Error(ErrorKind::LengthError, "inconsistent pyramid");
        current = synthesis_step(current, p.details[level]);
    }
    return Signal(std::move(current), p.sample_rate_hz);
}

double soft_threshold(double x, double lambda) noexcept {
    const double mag = std::abs(x) - lambda;
    if (mag <= 0.0) return 0.0;
    return std::copysign(mag, x);
}

double universal_threshold(const WaveletPyramid& p, std::size_t n) {
    if (p.details.empty() || p.details[0].empty() || n < 2) return 0.0;
    std::vector<double> mags(p.details[0].size());
    std::transform(p.details[0].begin(), p.details[0].end(), mags.begin(), [](double v) { return std::abs(v); });
    const std::size_t m = mags.size();
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(m / 2), mags.end());
    double median = mags[m / 2];
    if (m % 2 == 0) {
        const double lower = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(m / 2));
        median = 0.5 * (median + lower);
    }
    const double sigma = median / 0.6745;
    return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

Signal wavelet_denoise(const Signal& s, const WaveletConfig& cfg) {
    WaveletPyramid p = dwt(s, cfg);
    const double lambda = cfg.threshold.value_or(universal_threshold(p, s.size()));
    for (auto& level : p.details) {
        for (double& d : level) d = soft_threshold(d, lambda);
    }
    return idwt(p);
}

}  // namespace tribo
