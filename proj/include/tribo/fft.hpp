#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "tribo/signal.hpp"

namespace tribo {

using Complex = std::complex<double>;

/// Direct O(N^2) transform, X_k = sum_n x_n exp(-2 pi i k n / N).
std::vector<Complex> dft(std::span<const Complex> x);

/// Iterative radix-2 transform. Length must be a power of two (LengthError otherwise).
std::vector<Complex> fft(std::span<const Complex> x);

/// Inverse of fft including the 1/N factor.
std::vector<Complex> ifft(std::span<const Complex> x);

bool is_power_of_two(std::size_t n) noexcept;
std::size_t next_power_of_two(std::size_t n) noexcept;

/// Magnitude spectrum of a real signal zero-padded to the next power of two,
/// bins 0..Npad/2.
std::vector<double> magnitude_spectrum(std::span<const double> x, std::size_t* padded_len = nullptr);

/// Frequency (Hz) of the largest bin of the zero-padded magnitude spectrum.
double dominant_frequency(const Signal& s);

}  // namespace tribo
