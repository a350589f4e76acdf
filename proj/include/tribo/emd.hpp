#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tribo/signal.hpp"

namespace tribo {

struct SiftConfig {
    /// Cauchy-type stopping ratio sum((h_prev - h)^2) / sum(h_prev^2).
    double sd_threshold = 0.2;
    std::size_t max_sift_iters = 50;
    std::size_t max_imfs = 10;

    void validate() const;
};

struct Extrema {
    std::vector<std::size_t> maxima;
    std::vector<std::size_t> minima;
};

/// Strict local extrema; a flat run bounded on both sides by lower (higher)
/// samples reports its midpoint once. Endpoints are never extrema.
Extrema find_extrema(std::span<const double> x);
inline Extrema find_extrema(const Signal& s) { return find_extrema(s.samples); }

std::size_t count_zero_crossings(std::span<const double> x);

enum class EnvelopeBoundary {
    /// Reflect the two extrema nearest each edge across that edge before fitting.
    Mirror,
    /// Plain natural spline through the knots, extrapolated linearly.
    Natural,
};

/// Natural cubic spline through (knot, s[knot]) evaluated at every sample index.
Signal spline_envelope(const Signal& s, std::span<const std::size_t> knots,
                       EnvelopeBoundary boundary = EnvelopeBoundary::Mirror);

/// Extracts one IMF candidate from s.
Signal sift(const Signal& s, const SiftConfig& cfg = {});

struct EmdDecomposition {
    std::vector<Signal> imfs;  // highest frequency first
    Signal residual;

    std::size_t size() const noexcept { return imfs.size(); }
};

EmdDecomposition emd(const Signal& s, const SiftConfig& cfg = {});

/// Pointwise sum of the selected IMFs (and the residual when requested).
Signal reconstruct(const EmdDecomposition& d, std::span<const std::size_t> keep, bool keep_residual);

struct DenoiseConfig {
    /// Trailing IMFs whose dominant frequency is below this are treated as drift.
    double drift_cutoff_hz = 0.3;
    /// Leading IMFs holding less than this fraction of the IMF energy are dropped.
    double energy_floor = 0.01;
};

struct ComponentSummary {
    double dominant_hz = 0.0;
    double energy_fraction = 0.0;
};

/// Dominant frequency and energy share of every IMF and of the residual (last entry).
/// Energy fractions are relative to the total energy of all components.
std::vector<ComponentSummary> summarize(const EmdDecomposition& d);

Signal denoise_baseline(const Signal& s, const SiftConfig& cfg = {}, const DenoiseConfig& dn = {});

/// |extrema - zero crossings| <= 1, with one extra count of slack for each
/// edge that has an extremum or zero crossing within `edge_slack` samples.
bool satisfies_imf_property(std::span<const double> imf, std::size_t edge_slack = 5);

}  // namespace tribo
