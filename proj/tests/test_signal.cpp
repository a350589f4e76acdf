#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

#include "tribo/csv.hpp"
#include "tribo/error.hpp"
#include "tribo/rng.hpp"
#include "tribo/signal.hpp"

using namespace tribo;

namespace {

Signal random_signal(Rng& rng, std::size_t n, double fs = 100.0) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    return Signal(std::move(x), fs);
}

}  // namespace

TEST_CASE("normalize scales by max magnitude") {
    CHECK(normalize(Signal({-2, 0, 2}, 1.0)).samples == std::vector<double>{-1, 0, 1});
    CHECK(normalize(Signal({0, 0, 0}, 1.0)).samples == std::vector<double>{0, 0, 0});
    const auto peaks = normalize(Signal({0.9, 3.5}, 1.0)).samples;
    CHECK(peaks[0] == doctest::Approx(0.9 / 3.5));
    CHECK(peaks[0] == doctest::Approx(0.2571).epsilon(1e-4));
    CHECK(peaks[1] == 1.0);
}

TEST_CASE("normalize rejects non-finite samples") {
    Signal s({1.0, std::numeric_limits<double>::quiet_NaN()}, 1.0);
    CHECK_THROWS_AS(normalize(s), Error);
    try {
        normalize(s);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidSignal);
    }
}

TEST_CASE("normalize is idempotent") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Signal once = normalize(random_signal(rng, 64));
        CHECK(normalize(once) == once);
    }
}

TEST_CASE("snr_db") {
    const Signal s({1, -1, 1, -1}, 1.0);
    CHECK(snr_db(s, s).snr_db == doctest::Approx(0.0));
    const Signal n({0.1, -0.1, 0.1, -0.1}, 1.0);
    const auto r = snr_db(s, n);
    CHECK(r.ps == doctest::Approx(1.0));
    CHECK(r.pn == doctest::Approx(0.01));
    CHECK(r.snr_db == doctest::Approx(20.0));
    try {
        snr_db(s, Signal({0, 0, 0}, 1.0));
        FAIL("expected DivisionByZero");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DivisionByZero);
    }
}

TEST_CASE("snr_db is scale invariant") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const Signal s = random_signal(rng, 100);
        const Signal n = random_signal(rng, 100);
        const double k = rng.uniform(-10.0, 10.0) + 0.05;
        Signal ks = s, kn = n;
        for (double& v : ks.samples) v *= k;
        for (double& v : kn.samples) v *= k;
        CHECK(snr_db(ks, kn).snr_db == doctest::Approx(snr_db(s, n).snr_db).epsilon(1e-12));
    }
}

TEST_CASE("pearson") {
    const Signal x({0.3, 1.2, -0.7, 2.0, 0.1}, 1.0);
    Signal neg = x;
    for (double& v : neg.samples) v = -v;
    CHECK(pearson(x, x) == doctest::Approx(1.0));
    CHECK(pearson(x, neg) == doctest::Approx(-1.0));
    // Hand evaluation: sab = 3, saa = 2, sbb = 42/9.
    CHECK(pearson(Signal({1, 2, 3}, 1.0), Signal({1, 2, 4}, 1.0)) == doctest::Approx(3.0 / std::sqrt(2.0 * 42.0 / 9.0)));
    CHECK(pearson(Signal({1, 2, 3}, 1.0), Signal({1, 2, 4}, 1.0)) == doctest::Approx(0.9820).epsilon(1e-4));

    try {
        pearson(Signal({1, 1, 1}, 1.0), Signal({1, 2, 3}, 1.0));
        FAIL("expected DegenerateInput");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateInput);
    }
    try {
        pearson(Signal({1, 2, 3}, 1.0), Signal({1, 2}, 1.0));
        FAIL("expected ShapeError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ShapeError);
    }
}

TEST_CASE("pearson symmetry and positive affine invariance") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const Signal a = random_signal(rng, 40);
        const Signal b = random_signal(rng, 40);
        Signal t = a;
        const double scale = rng.uniform(0.1, 20.0);
        const double shift = rng.uniform(-5.0, 5.0);
        for (double& v : t.samples) v = scale * v + shift;
        CHECK(pearson(a, b) == doctest::Approx(pearson(b, a)).epsilon(1e-12));
        CHECK(pearson(t, b) == doctest::Approx(pearson(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("correlation_matrix") {
    const Signal x({0.3, 1.2, -0.7, 2.0}, 1.0);
    Signal neg = x;
    for (double& v : neg.samples) v = -v;
    std::vector<Signal> same{x, x};
    const auto m1 = correlation_matrix(same);
    CHECK(m1(0, 1) == doctest::Approx(1.0));
    std::vector<Signal> flip{x, neg};
    const auto m2 = correlation_matrix(flip);
    CHECK(m2(0, 0) == 1.0);
    CHECK(m2(0, 1) == doctest::Approx(-1.0));
    CHECK(m2(1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("correlation_matrix is symmetric PSD on random inputs") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + rng.below(7);
        std::vector<Signal> sigs;
        for (std::size_t i = 0; i < k; ++i) sigs.push_back(random_signal(rng, 3 + rng.below(30)));
        for (auto& s : sigs) s.samples.resize(sigs[0].size(), 0.5);
        const auto m = correlation_matrix(sigs);
        Eigen::MatrixXd e(k, k);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                CHECK(m(i, j) == m(j, i));
                e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
    }
}

TEST_CASE("record validation requires homogeneous channels") {
    MultiChannelRecord r;
    for (auto& ch : r.channels) ch = Signal({1, 2, 3}, 100.0);
    CHECK_NOTHROW(r.validate());
    r.channels[2].sample_rate_hz = 50.0;
    CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("signal csv round trip") {
    Rng rng(3);
    std::vector<Signal> chans;
    for (int c = 0; c < 4; ++c) chans.push_back(random_signal(rng, 25, 100.0));
    std::stringstream ss;
    csv::write_signals(ss, chans);
    const std::string text = ss.str();
    CHECK(text.rfind("t,ch1,ch2,ch3,ch4\n0.000000,", 0) == 0);
    const auto back = csv::read_signals(ss);
    REQUIRE(back.size() == 4);
    for (int c = 0; c < 4; ++c) CHECK(back[c] == chans[c]);

    std::stringstream bad("t,ch1\n0.0,abc\n");
    CHECK_THROWS_AS(csv::read_signals(bad), Error);
}
