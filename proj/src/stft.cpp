#include "tribo/stft.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <ostream>

#include "tribo/error.hpp"
#include "tribo/fft.hpp"

namespace tribo {

std::string_view to_string(WindowKind w) {
    switch (w) {
        case WindowKind::Hann: return "hann";
        case WindowKind::Rectangular: return "rect";
    }
    return "unknown";
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (kind == WindowKind::Hann) {
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        }
    }
    return w;
}

std::size_t Spectrogram::argmax_bin(std::size_t frame) const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < bins; ++k) {
        if (at(frame, k) > at(frame, best)) best = k;
    }
    return best;
}

std::size_t stft_frame_count(std::size_t n, std::size_t window_len, std::size_t hop) {
    if (n < window_len) return 0;
    return 1 + (n - window_len) / hop;
}

namespace {

void check_params(const Signal& s, const StftParams& p) {
    s.validate();
    if (!is_power_of_two(p.window_len)) throw Error(ErrorKind::LengthError, "STFT window length must be a power of two");
    if (p.hop < 1) throw Error(ErrorKind::InvalidInput, "STFT hop must be >= 1");
    if (s.size() < p.window_len) {
        throw Error(ErrorKind::TooShort, fmt::format("signal has {} samples, window needs {}", s.size(), p.window_len));
    }
}

}  // namespace

std::vector<double> windowed_frame(const Signal& s, std::size_t index, const StftParams& p) {
    check_params(s, p);
    if (index >= stft_frame_count(s.size(), p.window_len, p.hop)) throw Error(ErrorKind::IndexError, "frame out of range");
    const auto w = make_window(p.window, p.window_len);
    std::vector<double> frame(p.window_len);
    const std::size_t start = index * p.hop;
    for (std::size_t i = 0; i < p.window_len; ++i) frame[i] = s.samples[start + i] * w[i];
    return frame;
}

Spectrogram stft(const Signal& s, const StftParams& p) {
    check_params(s, p);
    Spectrogram g;
    g.window_len = p.window_len;
    g.hop = p.hop;
    g.window = p.window;
    g.sample_rate_hz = s.sample_rate_hz;
    g.frames = stft_frame_count(s.size(), p.window_len, p.hop);
    g.bins = p.window_len / 2 + 1;
    g.magnitudes.assign(g.frames * g.bins, 0.0);
    const auto w = make_window(p.window, p.window_len);
    std::vector<Complex> buf(p.window_len);
    for (std::size_t f = 0; f < g.frames; ++f) {
        const std::size_t start = f * p.hop;
        for (std::size_t i = 0; i < p.window_len; ++i) buf[i] = s.samples[start + i] * w[i];
        const auto spec = fft(buf);
        for (std::size_t k = 0; k < g.bins; ++k) g.magnitudes[f * g.bins + k] = std::abs(spec[k]);
    }
    return g;
}

void write_spectrogram_csv(std::ostream& os, const Spectrogram& g) {
    os << fmt::format("# W={},H={},fs={},window={}\n", g.window_len, g.hop, g.sample_rate_hz, to_string(g.window));
    fmt::memory_buffer buf;
    for (std::size_t f = 0; f < g.frames; ++f) {
        buf.clear();
        for (std::size_t k = 0; k < g.bins; ++k) {
            if (k) buf.push_back(',');
            fmt::format_to(std::back_inserter(buf), "{}", g.at(f, k));
        }
        buf.push_back('\n');
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

}  // namespace tribo
