#include "tribo/fft.hpp"

#include <cmath>
#include <numbers>

#include "tribo/error.hpp"

namespace tribo {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) noexcept {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<Complex> dft(std::span<const Complex> x) {
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            // Reduce k*j mod n first so the angle stays accurate for large n.
            const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
            acc += x[j] * Complex(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

namespace {

void fft_in_place(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t k = 0; k < half; ++k) {
            // Twiddles computed directly rather than by recurrence to keep the
            // error at the level of a single cos/sin evaluation.
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            const Complex w(std::cos(angle), std::sin(angle));
            for (std::size_t i = 0; i < n; i += len) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

}  // namespace

std::vector<Complex> fft(std::span<const Complex> x) {
    if (!is_power_of_two(x.size())) throw Error(ErrorKind::LengthError, "fft length must be a power of two");
    std::vector<Complex> a(x.begin(), x.end());
    fft_in_place(a, false);
    return a;
}

std::vector<Complex> ifft(std::span<const Complex> x) {
    if (!is_power_of_two(x.size())) throw Error(ErrorKind::LengthError, "ifft length must be a power of two");
    std::vector<Complex> a(x.begin(), x.end());
    fft_in_place(a, true);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (Complex& v : a) v *= scale;
    return a;
}

std::vector<double> magnitude_spectrum(std::span<const double> x, std::size_t* padded_len) {
    const std::size_t n = next_power_of_two(std::max<std::size_t>(x.size(), 1));
    std::vector<Complex> buf(n, Complex{0.0, 0.0});
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
    const auto spec = fft(buf);
    std::vector<double> mag(n / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(spec[k]);
    if (padded_len) *padded_len = n;
    return mag;
}

double dominant_frequency(const Signal& s) {
    std::size_t n = 0;
    const auto mag = magnitude_spectrum(s.samples, &n);
    std::size_t best = 0;
    for (std::size_t k = 1; k < mag.size(); ++k) {
        if (mag[k] > mag[best]) best = k;
    }
    return static_cast<double>(best) * s.sample_rate_hz / static_cast<double>(n);
}

}  // namespace tribo
