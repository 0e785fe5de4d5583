// DSP primitive checks against brute-force oracles.
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "fmscatter/dsp.hpp"

using namespace fmscatter;

namespace {
constexpr double kTwoPi = 6.283185307179586;

// O(N^2) reference DFT, independent of the radix-2 implementation.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0, 0);
        for (std::size_t t = 0; t < n; ++t)
            acc += x[t] * std::polar(1.0, -kTwoPi * double(k * t) / double(n));
        out[k] = acc;
    }
    return out;
}

std::vector<float> tone(double freq, double fs, std::size_t n, double amp = 1.0,
                        double phase = 0.0) {
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = float(amp * std::cos(kTwoPi * freq * double(i) / fs + phase));
    return out;
}

} // namespace

TEST_CASE("fft matches a naive DFT") {
    dsp::SplitMix64 rng(7);
    std::vector<std::complex<double>> x(256);
    for (auto& v : x) v = {rng.gaussian(), rng.gaussian()};
    auto want = naive_dft(x);
    auto got = x;
    dsp::fft_inplace(got, false);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(got[i] - want[i]) < 1e-9);

    dsp::fft_inplace(got, true); // round trip
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(got[i] - x[i]) < 1e-12);
}

TEST_CASE("fft rejects non-power-of-two sizes") {
    std::vector<std::complex<double>> x(100);
    CHECK_THROWS_AS(dsp::fft_inplace(x, false), InvalidInput);
}

TEST_CASE("lowpass design: DC gain, passband, stopband") {
    const auto taps = dsp::design_lowpass(10000.0, 4000.0, 48000.0, 60.0);
    CHECK(taps.size() % 2 == 1);

    double dc = 0.0;
    for (double t : taps) dc += t;
    CHECK(dc == doctest::Approx(1.0).epsilon(1e-12));

    // frequency response probes
    auto resp_at = [&](double f) {
        std::complex<double> acc(0, 0);
        for (std::size_t i = 0; i < taps.size(); ++i)
            acc += taps[i] * std::polar(1.0, -kTwoPi * f * double(i) / 48000.0);
        return std::abs(acc);
    };
    CHECK(resp_at(4000.0) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(resp_at(7000.0) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(resp_at(13000.0) < 0.0012); // -58 dB or better past the stop edge
    CHECK(resp_at(16000.0) < 0.0012);
}

TEST_CASE("fir_apply is group-delay aligned and the FFT path agrees with direct") {
    const auto taps = dsp::design_lowpass(6000.0, 2000.0, 48000.0, 60.0);
    auto x = tone(1000.0, 48000.0, 20000, 0.5);
    auto y = dsp::fir_apply(x, taps);
    REQUIRE(y.size() == x.size());
    // interior: a passband tone passes with unit gain and zero delay
    for (std::size_t i = 2000; i < 18000; ++i)
        CHECK(std::fabs(y[i] - x[i]) < 2e-3);

    // force the overlap-save path with a long random buffer and compare
    dsp::SplitMix64 rng(3);
    std::vector<float> big(1 << 17);
    for (auto& v : big) v = float(rng.gaussian());
    auto direct = dsp::fir_decimate(big, taps, 1); // direct form
    auto fast = dsp::fir_apply(big, taps);         // size pushes it to FFT
    REQUIRE(direct.size() == fast.size());
    for (std::size_t i = 0; i < big.size(); i += 97)
        CHECK(std::fabs(direct[i] - fast[i]) < 1e-4);
}

TEST_CASE("fir_decimate equals filter-then-keep-every-kth") {
    const auto taps = dsp::design_lowpass(3000.0, 1500.0, 48000.0, 60.0);
    dsp::SplitMix64 rng(11);
    std::vector<float> x(9000);
    for (auto& v : x) v = float(rng.gaussian());
    auto full = dsp::fir_apply(x, taps);
    auto dec = dsp::fir_decimate(x, taps, 4);
    REQUIRE(dec.size() == (x.size() + 3) / 4);
    for (std::size_t i = 0; i < dec.size(); ++i)
        CHECK(dec[i] == doctest::Approx(full[i * 4]).epsilon(1e-6));
}

TEST_CASE("resample preserves a tone across rate changes") {
    // up 48k -> 192k and back down: amplitude, frequency and timing hold
    auto x = tone(1000.0, 48000.0, 48000, 0.5);
    auto up = dsp::resample(x, 48000, 192000);
    CHECK(up.size() == x.size() * 4);
    auto est = dsp::measure_tone(up, 192000.0, 1000.0);
    CHECK(est.amplitude == doctest::Approx(0.5).epsilon(0.01));

    auto down = dsp::resample(up, 192000, 48000);
    REQUIRE(down.size() == x.size());
    for (std::size_t i = 500; i + 500 < down.size(); ++i)
        CHECK(std::fabs(down[i] - x[i]) < 5e-3);
}

TEST_CASE("resample handles awkward rational ratios") {
    // 250k -> 48k is 24/125: exercises the wide downsampling kernel
    auto x = tone(3000.0, 250000.0, 125000, 0.7);
    auto y = dsp::resample(x, 250000, 48000);
    CHECK(y.size() == 24000);
    auto est = dsp::measure_tone(y, 48000.0, 3000.0);
    CHECK(est.amplitude == doctest::Approx(0.7).epsilon(0.01));
    // content above the output Nyquist must not alias through
    auto hi = tone(30000.0, 250000.0, 125000, 0.7);
    auto z = dsp::resample(hi, 250000, 48000);
    double p = 0.0;
    for (float v : z) p += double(v) * v;
    p /= double(z.size());
    CHECK(p < 1e-5);
}

TEST_CASE("fractional delay hits sub-sample offsets") {
    auto x = tone(2000.0, 48000.0, 9600, 0.8);
    auto y = dsp::fractional_delay(x, 37.3);
    // compare against an analytically delayed tone in the interior
    for (std::size_t i = 300; i + 300 < y.size(); ++i) {
        const double want = 0.8 * std::cos(kTwoPi * 2000.0 * (double(i) - 37.3) / 48000.0);
        CHECK(std::fabs(y[i] - want) < 2e-3);
    }
}

TEST_CASE("band_power is additive and matches tone power") {
    auto x = tone(1000.0, 48000.0, 48000, 0.5);
    const auto y = tone(9000.0, 48000.0, 48000, 0.2);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];

    const double p1 = dsp::band_power(x, 48000.0, 800.0, 1200.0);
    const double p2 = dsp::band_power(x, 48000.0, 8800.0, 9200.0);
    CHECK(p1 == doctest::Approx(0.125).epsilon(0.02));  // a^2/2 = 0.125
    CHECK(p2 == doctest::Approx(0.02).epsilon(0.02));

    // Parseval: band partition sums to the total mean square
    double total = 0.0;
    for (float v : x) total += double(v) * v;
    total /= double(x.size());
    const double sum = dsp::band_power(x, 48000.0, 0.0, 6000.0) +
                       dsp::band_power(x, 48000.0, 6000.0 + 1e-9, 24000.0);
    CHECK(sum == doctest::Approx(total).epsilon(0.01));
}

TEST_CASE("measure_tone reports amplitude and phase") {
    auto x = tone(19000.0, 192000.0, 19200, 0.1, 0.6);
    const auto est = dsp::measure_tone(x, 192000.0, 19000.0);
    CHECK(est.amplitude == doctest::Approx(0.1).epsilon(0.01));
    CHECK(est.phase == doctest::Approx(0.6).epsilon(0.01));
}

TEST_CASE("cross_correlate finds a known lag") {
    dsp::SplitMix64 rng(5);
    std::vector<float> a(4000);
    for (auto& v : a) v = float(rng.gaussian());
    // b = a delayed by 137 samples
    std::vector<float> b(a.size() + 137, 0.0f);
    for (std::size_t i = 0; i < a.size(); ++i) b[i + 137] = a[i];

    const auto cc = dsp::cross_correlate(a, b);
    std::int64_t best_lag = 0;
    double best = -1e18;
    for (std::size_t i = 0; i < cc.values.size(); ++i)
        if (cc.values[i] > best) {
            best = cc.values[i];
            best_lag = cc.lag_of(i);
        }
    CHECK(best_lag == 137);
}

TEST_CASE("match_template locates an embedded chirp") {
    std::vector<float> tmpl(1200);
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        const double t = double(i) / 48000.0;
        tmpl[i] = float(std::sin(kTwoPi * (500.0 + 4000.0 * t) * t));
    }
    dsp::SplitMix64 rng(9);
    std::vector<float> x(20000);
    for (auto& v : x) v = float(0.2 * rng.gaussian());
    for (std::size_t i = 0; i < tmpl.size(); ++i) x[7000 + i] += tmpl[i];

    const auto m = dsp::match_template(x, tmpl);
    CHECK(m.offset == 7000);
    CHECK(m.score > 0.7);
}

TEST_CASE("fit_linear recovers scale and offset") {
    dsp::SplitMix64 rng(13);
    std::vector<float> x(5000), y(5000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = float(rng.gaussian());
        y[i] = float(2.5 * x[i] + 0.3 + 0.01 * rng.gaussian());
    }
    const auto fit = dsp::fit_linear(x, y);
    CHECK(fit.scale == doctest::Approx(2.5).epsilon(0.01));
    CHECK(fit.offset == doctest::Approx(0.3).epsilon(0.05));
    CHECK(fit.residual_db < -40.0);
    CHECK(fit.correlation > 0.999);
}

TEST_CASE("SplitMix64 gaussian moments and reproducibility") {
    dsp::SplitMix64 a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    dsp::SplitMix64 rng(1);
    double mean = 0.0, var = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.gaussian();
        mean += v;
        var += v * v;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));

    CHECK(dsp::derive_seed(1, 0) != dsp::derive_seed(1, 1));
    CHECK(dsp::derive_seed(1, 0) == dsp::derive_seed(1, 0));
}
