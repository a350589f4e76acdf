#pragma once

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "tribo/signal.hpp"

namespace tribo {

enum class WindowKind { Hann, Rectangular };

std::string_view to_string(WindowKind w);

/// Periodic window of length n.
std::vector<double> make_window(WindowKind kind, std::size_t n);

struct StftParams {
    std::size_t window_len = 256;
    std::size_t hop = 128;
    WindowKind window = WindowKind::Hann;
};

/// Time-frequency magnitude grid, frames x bins, row-major.
struct Spectrogram {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::size_t window_len = 0;
    std::size_t hop = 0;
    double sample_rate_hz = 0.0;
    WindowKind window = WindowKind::Hann;
    std::vector<double> magnitudes;

    double at(std::size_t frame, std::size_t bin) const { return magnitudes[frame * bins + bin]; }
    double bin_frequency(std::size_t bin) const {
        return static_cast<double>(bin) * sample_rate_hz / static_cast<double>(window_len);
    }
    std::size_t argmax_bin(std::size_t frame) const;
};

std::size_t stft_frame_count(std::size_t n, std::size_t window_len, std::size_t hop);

/// Frame `index` multiplied by the window (length window_len).
std::vector<double> windowed_frame(const Signal& s, std::size_t index, const StftParams& p);

Spectrogram stft(const Signal& s, const StftParams& p = {});

/// First line `# W=..,H=..,fs=..,window=..`, then one row per frame.
void write_spectrogram_csv(std::ostream& os, const Spectrogram& g);

}  // namespace tribo
