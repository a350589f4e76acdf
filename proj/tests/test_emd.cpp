#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "tribo/emd.hpp"
#include "tribo/error.hpp"
#include "tribo/fft.hpp"
#include "tribo/rng.hpp"
#include "tribo/synth.hpp"

using namespace tribo;

namespace {

constexpr double kPi = std::numbers::pi;

Signal tone(double freq, double fs, double dur, double amp = 1.0, double offset = 0.0) {
    const auto n = static_cast<std::size_t>(std::llround(fs * dur));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = offset + amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / fs);
    return Signal(std::move(x), fs);
}

Signal walking_channel(std::uint64_t seed, bool noisy = false) {
    SynthOptions opt;
    opt.duration_s = 10.0;
    opt.seed = seed;
    if (!noisy) opt.snr_db.reset();
    return synth_components(GaitClass::NormalWalking, default_subjects()[2], opt).record.channels[2];
}

double max_abs(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST_CASE("find_extrema") {
    const auto flat = find_extrema(Signal(std::vector<double>(10, 2.0), 1.0));
    CHECK(flat.maxima.empty());
    CHECK(flat.minima.empty());

    std::vector<double> ramp(10);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    const auto r = find_extrema(Signal(ramp, 1.0));
    CHECK(r.maxima.empty());
    CHECK(r.minima.empty());

    // 2 Hz over 2 s at 100 Hz: four full periods.
    const auto s = find_extrema(tone(2.0, 100.0, 2.0));
    CHECK(s.maxima.size() == 4);
    CHECK(s.minima.size() == 4);

    const auto plateau = find_extrema(Signal({0, 1, 3, 3, 3, 1, 0, -2, -2, 0}, 1.0));
    REQUIRE(plateau.maxima.size() == 1);
    CHECK(plateau.maxima[0] == 3);
    REQUIRE(plateau.minima.size() == 1);
    CHECK(plateau.minima[0] == 7);

    CHECK_THROWS_AS(find_extrema(Signal({1, 2}, 1.0)), Error);
}

TEST_CASE("spline_envelope") {
    const Signal s({0, 5, 1, 2, 3, 4, 2, 9, 0, 0}, 1.0);
    const std::vector<std::size_t> two{1, 7};
    const auto line = spline_envelope(s, two, EnvelopeBoundary::Natural);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(line.samples[i] == doctest::Approx(5.0 + (9.0 - 5.0) * (static_cast<double>(i) - 1.0) / 6.0));
    }

    const Signal c(std::vector<double>(20, 1.5), 1.0);
    const std::vector<std::size_t> knots{2, 6, 11, 17};
    for (auto b : {EnvelopeBoundary::Mirror, EnvelopeBoundary::Natural}) {
        for (double v : spline_envelope(c, knots, b).samples) CHECK(v == doctest::Approx(1.5));
    }

    const std::vector<std::size_t> one{3};
    CHECK_THROWS_AS(spline_envelope(s, one), Error);

    // Upper envelope of a unit sine is ~1 away from the edges.
    const Signal sn = tone(1.0, 100.0, 6.0);
    const auto ext = find_extrema(sn);
    const auto up = spline_envelope(sn, ext.maxima);
    for (std::size_t i = 100; i + 100 < sn.size(); ++i) CHECK(std::abs(up.samples[i] - 1.0) < 0.05);
}

TEST_CASE("sift") {
    const Signal sn = tone(2.0, 100.0, 5.0);
    const Signal h = sift(sn);
    CHECK(pearson(h, sn) > 0.99);

    const Signal off = tone(2.0, 100.0, 5.0, 1.0, 0.7);
    const Signal h2 = sift(off);
    double mean = 0.0;
    for (double v : h2.samples) mean += v;
    mean /= static_cast<double>(h2.size());
    CHECK(std::abs(mean) < 1e-3);

    const Signal slow = tone(1.0, 200.0, 5.0);
    const Signal fast = tone(12.0, 200.0, 5.0, 0.5);
    Signal mix = slow;
    for (std::size_t i = 0; i < mix.size(); ++i) mix.samples[i] += fast.samples[i];
    CHECK(pearson(sift(mix), fast) > 0.95);

    std::vector<double> ramp(50);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    try {
        sift(Signal(ramp, 1.0));
        FAIL("expected NotOscillatory");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotOscillatory);
    }
}

TEST_CASE("emd of a monotone ramp has no IMFs") {
    std::vector<double> ramp(100);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    const auto d = emd(Signal(ramp, 1.0));
    CHECK(d.imfs.empty());
    CHECK(d.residual.samples == ramp);
}

TEST_CASE("emd is complete and deterministic on random signals") {
    Rng rng(1234);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(300);
        for (auto& v : x) v = rng.normal();
        const Signal s(x, 100.0);
        const auto d = emd(s);
        std::vector<std::size_t> all(d.imfs.size());
        std::iota(all.begin(), all.end(), 0);
        const auto back = reconstruct(d, all, true);
        double err = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(back.samples[i] - x[i]));
        CHECK(err < 1e-8 * max_abs(x));
        const auto again = emd(s);
        REQUIRE(again.imfs.size() == d.imfs.size());
        for (std::size_t k = 0; k < d.imfs.size(); ++k) CHECK(again.imfs[k] == d.imfs[k]);
        CHECK(again.residual == d.residual);
    }
}

TEST_CASE("emd of a walking template orders IMFs by frequency") {
    const Signal s = walking_channel(5, true);
    const auto d = emd(s);
    MESSAGE("walking template IMFs: " << d.imfs.size());
    CHECK(d.imfs.size() >= 3);
    CHECK(d.imfs.size() <= 8);
    for (std::size_t k = 1; k < d.imfs.size(); ++k) {
        CHECK(dominant_frequency(d.imfs[k]) <= dominant_frequency(d.imfs[k - 1]));
    }
    for (const auto& imf : d.imfs) {
        CHECK(satisfies_imf_property(imf.samples));
        const auto e = find_extrema(imf);
        if (e.maxima.size() >= 2 && e.minima.size() >= 2) {
            const auto up = spline_envelope(imf, e.maxima);
            const auto lo = spline_envelope(imf, e.minima);
            double m = 0.0;
            for (std::size_t i = 0; i < imf.size(); ++i) m = std::max(m, std::abs(0.5 * (up.samples[i] + lo.samples[i])));
            CHECK(m < SiftConfig{}.sd_threshold * max_abs(imf.samples));
        }
    }
}

TEST_CASE("reconstruct") {
    const Signal s = walking_channel(8);
    const auto d = emd(s);
    std::vector<std::size_t> all(d.imfs.size());
    std::iota(all.begin(), all.end(), 0);
    const auto full = reconstruct(d, all, true);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(full.samples[i] - s.samples[i]) < 1e-8);
    const std::vector<std::size_t> none;
    for (double v : reconstruct(d, none, false).samples) CHECK(v == 0.0);
    const std::vector<std::size_t> bad{d.imfs.size()};
    CHECK_THROWS_AS(reconstruct(d, bad, false), Error);

    // Dropping the residual removes an injected linear drift.
    Signal drifted = s;
    for (std::size_t i = 0; i < s.size(); ++i) drifted.samples[i] += 0.5 * static_cast<double>(i) / s.sample_rate_hz;
    const auto dd = emd(drifted);
    std::vector<std::size_t> imfs(dd.imfs.size());
    std::iota(imfs.begin(), imfs.end(), 0);
    CHECK(pearson(reconstruct(dd, imfs, false), s) >= 0.99);
}

TEST_CASE("denoise_baseline") {
    const Signal clean = walking_channel(21);
    CHECK(pearson(denoise_baseline(clean), clean) >= 0.98);

    Signal drifted = clean;
    for (std::size_t i = 0; i < clean.size(); ++i) drifted.samples[i] += 0.5 * static_cast<double>(i) / clean.sample_rate_hz;
    CHECK(pearson(denoise_baseline(drifted), clean) >= 0.99);

    const Signal zero(std::vector<double>(300, 0.0), 100.0);
    CHECK(denoise_baseline(zero) == zero);
}

TEST_CASE("imf property helper") {
    CHECK(satisfies_imf_property(tone(3.0, 100.0, 4.0).samples));
    // A sine riding on a large offset never crosses zero.
    CHECK_FALSE(satisfies_imf_property(tone(3.0, 100.0, 4.0, 1.0, 5.0).samples));
}
