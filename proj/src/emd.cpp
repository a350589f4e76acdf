#include "tribo/emd.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "tribo/error.hpp"
#include "tribo/fft.hpp"

namespace tribo {

void SiftConfig::validate() const {
    if (!(sd_threshold > 0.0 && sd_threshold <= 1.0)) throw Error(ErrorKind::InvalidInput, "sd_threshold must be in (0, 1]");
    if (max_sift_iters < 1) throw Error(ErrorKind::InvalidInput, "max_sift_iters must be >= 1");
    if (max_imfs < 1) throw Error(ErrorKind::InvalidInput, "max_imfs must be >= 1");
}

Extrema find_extrema(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 3) throw Error(ErrorKind::TooShort, "extrema search needs at least 3 samples");
    Extrema e;
    std::size_t i = 1;
    while (i + 1 < n) {
        const double prev = x[i - 1];
        const double v = x[i];
        if (v == prev) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && x[j + 1] == v) ++j;
        if (j + 1 >= n) break;  // flat run reaches the edge
        const double next = x[j + 1];
        const std::size_t mid = (i + j) / 2;
        if (v > prev && v > next) e.maxima.push_back(mid);
        else if (v < prev && v < next) e.minima.push_back(mid);
        i = j + 1;
    }
    return e;
}

namespace {

std::vector<std::size_t> zero_crossing_positions(std::span<const double> x) {
    std::vector<std::size_t> out;
    int last_sign = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int sign = (x[i] > 0.0) - (x[i] < 0.0);
        if (sign == 0) continue;
        if (last_sign != 0 && sign != last_sign) out.push_back(i);
        last_sign = sign;
    }
    return out;
}

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

// Natural cubic spline through (xs, ys), evaluated at 0..n-1; linear outside
// the knot range.
std::vector<double> natural_spline(std::span<const double> xs, std::span<const double> ys, std::size_t n) {
    const std::size_t m = xs.size();
    std::vector<double> second(m, 0.0);
    if (m > 2) {
        // Thomas algorithm on the interior second-derivative system.
        const std::size_t k = m - 2;
        std::vector<double> diag(k), upper(k), rhs(k);
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double h0 = xs[i] - xs[i - 1];
            const double h1 = xs[i + 1] - xs[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        for (std::size_t i = 1; i < k; ++i) {
            const double lower = xs[i + 1] - xs[i];  // h_{i} for row i (sub-diagonal)
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        second[k] = rhs[k - 1] / diag[k - 1];
        for (std::size_t i = k - 1; i-- > 0;) second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
    }

    std::vector<double> out(n);
    const double h_first = xs[1] - xs[0];
    const double slope_first = (ys[1] - ys[0]) / h_first - h_first * second[1] / 6.0;
    const double h_last = xs[m - 1] - xs[m - 2];
    const double slope_last = (ys[m - 1] - ys[m - 2]) / h_last + h_last * second[m - 2] / 6.0;
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i);
        if (x <= xs[0]) {
            out[i] = ys[0] + slope_first * (x - xs[0]);
            continue;
        }
        if (x >= xs[m - 1]) {
            out[i] = ys[m - 1] + slope_last * (x - xs[m - 1]);
            continue;
        }
        while (seg + 1 < m - 1 && x > xs[seg + 1]) ++seg;
        const double h = xs[seg + 1] - xs[seg];
        const double a = (xs[seg + 1] - x) / h;
        const double b = (x - xs[seg]) / h;
        out[i] = a * ys[seg] + b * ys[seg + 1] +
                 ((a * a * a - a) * second[seg] + (b * b * b - b) * second[seg + 1]) * h * h / 6.0;
    }
    return out;
}

}  // namespace

std::size_t count_zero_crossings(std::span<const double> x) { return zero_crossing_positions(x).size(); }

Signal spline_envelope(const Signal& s, std::span<const std::size_t> knots, EnvelopeBoundary boundary) {
    if (knots.size() < 2) throw Error(ErrorKind::InsufficientKnots, "envelope needs at least 2 knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (knots[i] >= s.size() || (i > 0 && knots[i] <= knots[i - 1])) {
            throw Error(ErrorKind::IndexError, "knots must be strictly increasing sample indices");
        }
    }
    std::vector<double> xs, ys;
    xs.reserve(knots.size() + 4);
    ys.reserve(knots.size() + 4);
    const auto push = [&](double x, std::size_t idx) {
        xs.push_back(x);
        ys.push_back(s.samples[idx]);
    };
    const bool mirror = boundary == EnvelopeBoundary::Mirror && knots.front() > 0 && knots.back() + 1 < s.size();
    const double edge = static_cast<double>(s.size() - 1);
    if (mirror) {
        push(-static_cast<double>(knots[1]), knots[1]);
        push(-static_cast<double>(knots[0]), knots[0]);
    }
    for (std::size_t k : knots) push(static_cast<double>(k), k);
    if (mirror) {
        const std::size_t last = knots.size() - 1;
        push(2.0 * edge - static_cast<double>(knots[last]), knots[last]);
        push(2.0 * edge - static_cast<double>(knots[last - 1]), knots[last - 1]);
    }
    return Signal(natural_spline(xs, ys, s.size()), s.sample_rate_hz);
}

bool satisfies_imf_property(std::span<const double> imf, std::size_t edge_slack) {
    if (imf.size() < 3) return true;
    const Extrema e = find_extrema(imf);
    const auto zc = zero_crossing_positions(imf);
    const long extrema = static_cast<long>(e.maxima.size() + e.minima.size());
    const long crossings = static_cast<long>(zc.size());
    const std::size_t n = imf.size();
    const auto near_left = [&](std::size_t i) { return i < edge_slack; };
    const auto near_right = [&](std::size_t i) { return i + edge_slack >= n; };
    bool left = false, right = false;
    for (const auto* list : {&e.maxima, &e.minima, &zc}) {
        for (std::size_t i : *list) {
            left = left || near_left(i);
            right = right || near_right(i);
        }
    }
    const long allowed = 1 + (left ? 1 : 0) + (right ? 1 : 0);
    return std::abs(extrema - crossings) <= allowed;
}

Signal sift(const Signal& s, const SiftConfig& cfg) {
    s.validate();
    cfg.validate();
    if (s.size() < 3) throw Error(ErrorKind::NotOscillatory, "signal too short to sift");
    std::vector<double> h = s.samples;
    std::vector<double> prev;
    for (std::size_t iter = 0; iter < cfg.max_sift_iters; ++iter) {
        const Signal cur(h, s.sample_rate_hz);
        const Extrema e = find_extrema(h);
        if (e.maxima.size() < 2 || e.minima.size() < 2) {
            if (iter == 0) throw Error(ErrorKind::NotOscillatory, "sifting needs at least 2 maxima and 2 minima");
            break;
        }
        const Signal upper = spline_envelope(cur, e.maxima);
        const Signal lower = spline_envelope(cur, e.minima);
        std::vector<double> mean(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) mean[i] = 0.5 * (upper.samples[i] + lower.samples[i]);

        if (iter > 0) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                const double d = prev[i] - h[i];
                num += d * d;
                den += prev[i] * prev[i];
            }
            const double sd = den > 0.0 ? num / den : 0.0;
            // Stop once the Cauchy ratio is small and h is an IMF: extrema and
            // zero crossings agree and the envelope mean is near zero.
            if (sd < cfg.sd_threshold && satisfies_imf_property(h) &&
                max_abs(mean) < cfg.sd_threshold * max_abs(h)) {
                break;
            }
        }
        prev = h;
        for (std::size_t i = 0; i < h.size(); ++i) h[i] -= mean[i];
    }
    return Signal(std::move(h), s.sample_rate_hz);
}

EmdDecomposition emd(const Signal& s, const SiftConfig& cfg) {
    s.validate();
    cfg.validate();
    EmdDecomposition d;
    d.residual = s;
    if (s.size() < 3) return d;
    const double scale = max_abs(s.samples);
    while (d.imfs.size() < cfg.max_imfs) {
        const Extrema e = find_extrema(d.residual.samples);
        if (e.maxima.size() < 2 || e.minima.size() < 2) break;
        if (max_abs(d.residual.samples) <= 1e-12 * scale) break;
        Signal imf = sift(d.residual, cfg);
        for (std::size_t i = 0; i < imf.size(); ++i) d.residual.samples[i] -= imf.samples[i];
        d.imfs.push_back(std::move(imf));
    }
    return d;
}

Signal reconstruct(const EmdDecomposition& d, std::span<const std::size_t> keep, bool keep_residual) {
    for (std::size_t k : keep) {
        if (k >= d.imfs.size()) throw Error(ErrorKind::IndexError, fmt::format("IMF index {} out of range", k));
    }
    Signal out(std::vector<double>(d.residual.size(), 0.0), d.residual.sample_rate_hz);
    // Sum in index order regardless of how `keep` is ordered.
    std::vector<bool> selected(d.imfs.size(), false);
    for (std::size_t k : keep) selected[k] = true;
    for (std::size_t k = 0; k < d.imfs.size(); ++k) {
        if (!selected[k]) continue;
        for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += d.imfs[k].samples[i];
    }
    if (keep_residual) {
        for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += d.residual.samples[i];
    }
    return out;
}

std::vector<ComponentSummary> summarize(const EmdDecomposition& d) {
    std::vector<ComponentSummary> out;
    std::vector<double> energies;
    double total = 0.0;
    const auto add = [&](const Signal& c) {
        ComponentSummary cs;
        cs.dominant_hz = dominant_frequency(c);
        out.push_back(cs);
        const double e = mean_power(c.samples);
        energies.push_back(e);
        total += e;
    };
    for (const Signal& imf : d.imfs) add(imf);
    add(d.residual);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].energy_fraction = total > 0.0 ? energies[i] / total : 0.0;
    return out;
}

Signal denoise_baseline(const Signal& s, const SiftConfig& cfg, const DenoiseConfig& dn) {
    s.validate();
    if (max_abs(s.samples) == 0.0) return s;
    const EmdDecomposition d = emd(s, cfg);
    const std::size_t n = d.imfs.size();
    std::vector<double> energy(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        energy[k] = mean_power(d.imfs[k].samples);
        total += energy[k];
    }
    std::size_t end = n;
    while (end > 0 && dominant_frequency(d.imfs[end - 1]) < dn.drift_cutoff_hz) --end;
    std::size_t begin = 0;
    while (begin < end && total > 0.0 && energy[begin] / total < dn.energy_floor) ++begin;
    std::vector<std::size_t> keep;
    for (std::size_t k = begin; k < end; ++k) keep.push_back(k);
    return reconstruct(d, keep, false);
}

}  // namespace tribo
