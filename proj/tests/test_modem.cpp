// FSK modem: tone plans, coding, detection, combining, framing.
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fmscatter/dsp.hpp"
#include "fmscatter/modem.hpp"

using namespace fmscatter;
using namespace fmscatter::modem;

namespace {
constexpr double kTwoPi = 6.283185307179586;

AudioBuffer speech_like(double sec, std::uint64_t seed, double peak = 0.8) {
    AudioBuffer a;
    a.sample_rate = 48000;
    a.samples.resize(std::size_t(sec * 48000));
    dsp::SplitMix64 rng(seed);
    for (auto& v : a.samples) v = float(rng.gaussian());
    // cascade twice: filter skirts near 8/12 kHz land far below any
    // realistic capture noise floor
    const auto bp = dsp::design_bandpass(100.0, 4000.0, 200.0, 48000, 60.0);
    a.samples = dsp::fir_apply(dsp::fir_apply(a.samples, bp), bp);
    a.normalize(peak);
    return a;
}

void add_noise(AudioBuffer& a, double snr_db, std::uint64_t seed) {
    const double sigma = std::sqrt(a.mean_power() / power_from_db(snr_db));
    dsp::SplitMix64 rng(seed);
    for (auto& v : a.samples) v += float(sigma * rng.gaussian());
}

double ber_of(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    return double(count_bit_errors(a, b)) / double(std::max(a.size(), b.size()));
}

} // namespace

TEST_CASE("tone plans match the three rate modes") {
    const auto r100 = ModemConfig::make(RateMode::R100);
    CHECK(r100.symbol_rate == 100);
    CHECK(r100.bits_per_symbol == 1);
    CHECK(r100.tones == std::vector<double>{8000.0, 12000.0});
    CHECK(r100.bit_rate() == 100.0);

    const auto r1600 = ModemConfig::make(RateMode::R1600);
    CHECK(r1600.symbol_rate == 200);
    CHECK(r1600.bits_per_symbol == 8);
    CHECK(r1600.bit_rate() == 1600.0);

    const auto r3200 = ModemConfig::make(RateMode::R3200);
    CHECK(r3200.symbol_rate == 400);
    CHECK(r3200.bit_rate() == 3200.0);
    REQUIRE(r3200.tones.size() == 16);
    CHECK(r3200.tones.front() == 800.0);
    CHECK(r3200.tones.back() == 12800.0);
    for (std::size_t k = 0; k < 16; ++k)
        CHECK(r3200.tones[k] == 800.0 * double(k + 1));
    for (double t : r3200.tones) CHECK(t <= 13000.0);

    CHECK_THROWS_AS(ModemConfig::make(RateMode::R3200, 44100), InvalidInput);
}

TEST_CASE("all-zero bits at R100 is a pure 8 kHz tone") {
    const auto cfg = ModemConfig::make(RateMode::R100);
    const auto audio = encode(std::vector<std::uint8_t>(50, 0), cfg);
    const auto t8 = dsp::measure_tone(audio.samples, 48000.0, 8000.0);
    const auto t12 = dsp::measure_tone(audio.samples, 48000.0, 12000.0);
    CHECK(t8.amplitude == doctest::Approx(1.0).epsilon(0.01));
    CHECK(t12.amplitude < 0.001);
}

TEST_CASE("one R3200 symbol keys exactly one tone per set") {
    const auto cfg = ModemConfig::make(RateMode::R3200);
    // 0b00011011 -> sets select indices 0,1,2,3 -> 800, 4800, 8800, 12800 Hz
    const std::vector<std::uint8_t> bits = {0, 0, 0, 1, 1, 0, 1, 1};
    const auto audio = encode(bits, cfg);
    REQUIRE(audio.samples.size() == std::size_t(cfg.samples_per_symbol));

    // exact-bin DFT over the rectangular symbol window: tones are multiples
    // of the symbol rate, so inactive ones are orthogonal and vanish
    int lines = 0;
    for (std::size_t k = 0; k < 16; ++k) {
        double re = 0, im = 0;
        for (std::size_t n = 0; n < audio.samples.size(); ++n) {
            const double w = kTwoPi * cfg.tones[k] * double(n) / 48000.0;
            re += audio.samples[n] * std::cos(w);
            im += audio.samples[n] * std::sin(w);
        }
        const double amp = 2.0 * std::hypot(re, im) / double(audio.samples.size());
        if (amp > 0.05) ++lines;
        const bool expected = k == 0 || k == 5 || k == 10 || k == 15;
        CHECK((amp > 0.05) == expected);
    }
    CHECK(lines == 4);
    CHECK(audio.peak() <= 1.0 + 1e-6);
}

TEST_CASE("noiseless round trip is exact at every rate") {
    for (auto mode : {RateMode::R100, RateMode::R1600, RateMode::R3200}) {
        const auto cfg = ModemConfig::make(mode);
        const auto bits = random_bits(4096, 11 + std::uint64_t(mode));
        const auto audio = encode(bits, cfg);
        const auto dec = decode(audio, cfg, {0});
        CHECK(dec.bits == bits);
        for (float c : dec.confidence) CHECK(c > 10.0f);
    }
}

TEST_CASE("R100 at 20 dB audio SNR is error-free over 1e4 bits") {
    const auto cfg = ModemConfig::make(RateMode::R100);
    const auto bits = random_bits(10000, 77);
    auto audio = encode(bits, cfg);
    add_noise(audio, 20.0, 78);
    const auto dec = decode(audio, cfg, {0});
    CHECK(count_bit_errors(bits, dec.bits) == 0);
}

TEST_CASE("BER falls as the data-to-speech ratio rises") {
    const auto cfg = ModemConfig::make(RateMode::R1600);
    const auto bits = random_bits(2000, 5);
    const auto clean = encode(bits, cfg);
    double prev = 1.1;
    for (double ratio_db : {-24.0, -16.0, -8.0, 0.0, 8.0}) {
        AudioBuffer mixed = clean;
        const auto speech = speech_like(clean.duration_sec() + 0.1, 91);
        const double g = amp_from_db(ratio_db / 2.0);
        for (std::size_t i = 0; i < mixed.samples.size(); ++i)
            mixed.samples[i] = float(mixed.samples[i] * g + speech.samples[i]);
        const auto dec = decode(mixed, cfg, {0});
        const double ber = ber_of(bits, dec.bits);
        CHECK(ber <= prev + 0.02);
        prev = ber;
    }
    CHECK(prev == 0.0); // clean by +8 dB
}

TEST_CASE("decode is scale-invariant") {
    const auto cfg = ModemConfig::make(RateMode::R3200);
    const auto bits = random_bits(512, 6);
    auto audio = encode(bits, cfg);
    add_noise(audio, 12.0, 7);
    const auto base = decode(audio, cfg, {0});
    for (float k : {1e-3f, 3.7f, 1e3f}) {
        AudioBuffer scaled = audio;
        for (auto& v : scaled.samples) v *= k;
        const auto dec = decode(scaled, cfg, {0});
        CHECK(dec.bits == base.bits);
        for (std::size_t i = 0; i < dec.confidence.size(); ++i)
            CHECK(dec.confidence[i] == doctest::Approx(base.confidence[i]).epsilon(1e-3));
    }
}

TEST_CASE("BER is monotone non-increasing in audio SNR") {
    const auto cfg = ModemConfig::make(RateMode::R1600);
    const auto bits = random_bits(4000, 13);
    const auto clean = encode(bits, cfg);
    double prev = 1.1;
    for (double snr : {-6.0, 0.0, 6.0, 12.0, 18.0, 24.0}) {
        AudioBuffer noisy = clean;
        add_noise(noisy, snr, 100 + std::uint64_t(snr * 10));
        const double ber = ber_of(bits, decode(noisy, cfg, {0}).bits);
        CHECK(ber <= prev + 0.03); // 2-sigma Monte-Carlo slack
        prev = ber;
    }
}

TEST_CASE("speech alone gives no symbol preference at R100") {
    const auto cfg = ModemConfig::make(RateMode::R100);
    // voiced band below 4 kHz plus the flat unvoiced/fricative floor real
    // speech carries above it (about -28 dB of peak). The tone bins at 8 and
    // 12 kHz see only that flat floor, so symbol decisions are coin flips.
    AudioBuffer speech = speech_like(12.0, 55); // 1200 symbols
    dsp::SplitMix64 rng(56);
    for (auto& v : speech.samples) v += float(0.03 * rng.gaussian());
    const auto dec = decode(speech, cfg, {0});
    REQUIRE(dec.bits.size() >= 1000);
    double ones = 0;
    for (auto b : dec.bits) ones += b;
    const double frac = ones / double(dec.bits.size());
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);

    // decisions are no more confident than chance: for iid exponential bin
    // powers the median max/min margin is 10*log10(3) = 4.77 dB
    double med_margin;
    {
        std::vector<float> m = dec.confidence;
        std::nth_element(m.begin(), m.begin() + m.size() / 2, m.end());
        med_margin = m[m.size() / 2];
    }
    CHECK(med_margin < 4.77 + 1.5);
}

TEST_CASE("encoded spectrum stays essentially below 13 kHz") {
    const auto cfg = ModemConfig::make(RateMode::R3200);
    const auto bits = random_bits(8 * 2000, 17);
    const auto audio = encode(bits, cfg);
    double total = audio.mean_power();
    const double oob = dsp::band_power(audio.samples, 48000.0, 13000.0, 24000.0);
    // rectangular keying splatters a little; tone centers stay at 12.8 kHz max
    CHECK(oob / total < 0.03);
}

TEST_CASE("combining identical copies leaves the decode unchanged") {
    const auto cfg = ModemConfig::make(RateMode::R1600);
    const auto bits = random_bits(1024, 19);
    auto audio = encode(bits, cfg);
    add_noise(audio, 8.0, 20);
    const auto base = decode(audio, cfg, {0});
    const auto combined = mrc_combine({audio, audio, audio}, {{0}, {0}, {0}});
    const auto dec = decode(combined, cfg, {0});
    CHECK(dec.bits == base.bits);
}

TEST_CASE("two-copy combining beats either single copy under speech interference") {
    const auto cfg = ModemConfig::make(RateMode::R1600);
    const auto bits = random_bits(10000, 23);
    const auto clean = encode(bits, cfg);
    const double g = amp_from_db(-13.0 / 2.0); // data 13 dB under the speech

    std::vector<AudioBuffer> copies;
    for (std::uint64_t i = 0; i < 2; ++i) {
        AudioBuffer c;
        c.sample_rate = 48000;
        c.samples.resize(clean.samples.size());
        const auto speech = speech_like(clean.duration_sec() + 0.1, 300 + i);
        for (std::size_t n = 0; n < c.samples.size(); ++n)
            c.samples[n] = float(clean.samples[n] * g + speech.samples[n]);
        copies.push_back(std::move(c));
    }
    const double ber1 = ber_of(bits, decode(copies[0], cfg, {0}).bits);
    const double ber2 = ber_of(bits, decode(copies[1], cfg, {0}).bits);
    const auto combined = mrc_combine(copies, {{0}, {0}});
    const double berc = ber_of(bits, decode(combined, cfg, {0}).bits);
    REQUIRE(std::min(ber1, ber2) > 0.0); // fixture is interference-limited
    CHECK(berc <= std::min(ber1, ber2));
}

TEST_CASE("N-fold combining raises SNR by about N") {
    const auto cfg = ModemConfig::make(RateMode::R1600);
    const auto bits = random_bits(2048, 29);
    const auto clean = encode(bits, cfg);

    auto snr_of = [&](const AudioBuffer& x) {
        return -dsp::fit_linear(clean.samples, x.samples).residual_db;
    };
    std::vector<AudioBuffer> noisy;
    for (std::uint64_t i = 0; i < 4; ++i) {
        AudioBuffer c = clean;
        add_noise(c, 10.0, 400 + i);
        noisy.push_back(std::move(c));
    }
    const double snr1 = snr_of(noisy[0]);
    for (int n : {2, 4}) {
        const auto comb = mrc_combine(
            std::vector<AudioBuffer>(noisy.begin(), noisy.begin() + n),
            std::vector<SymbolSync>(std::size_t(n), SymbolSync{0}));
        const double gain = snr_of(comb) - snr1;
        CHECK(gain == doctest::Approx(db_from_power(n)).epsilon(0.34)); // +/- 1 dB
    }
}

TEST_CASE("frame round trip carries a 100-byte payload exactly") {
    for (auto mode : {RateMode::R100, RateMode::R1600, RateMode::R3200}) {
        const auto cfg = ModemConfig::make(mode);
        std::vector<std::uint8_t> payload(100);
        dsp::SplitMix64 rng(31 + std::uint64_t(mode));
        for (auto& b : payload) b = std::uint8_t(rng.next() & 0xFF);

        const auto audio = frame_encode(payload, cfg);
        const auto dec = frame_decode(audio, cfg);
        CHECK(dec.payload == payload);
        CHECK(dec.length_field == 100);
        CHECK_FALSE(dec.truncated);
        CHECK(dec.frame_start == 0);
    }
}

TEST_CASE("preamble timing stays within a quarter symbol at 10 dB SNR") {
    const auto cfg = ModemConfig::make(RateMode::R100);
    const std::vector<std::uint8_t> payload = {0xA5, 0x5A, 0xF0, 0x0F};
    const auto frame = frame_encode(payload, cfg);
    const std::size_t lead = 9600;

    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        AudioBuffer rx;
        rx.sample_rate = 48000;
        rx.samples.assign(lead, 0.0f);
        rx.samples.insert(rx.samples.end(), frame.samples.begin(), frame.samples.end());
        rx.samples.insert(rx.samples.end(), 4800, 0.0f);
        add_noise(rx, 10.0, 900 + trial);

        const auto dec = frame_decode(rx, cfg);
        const auto err = std::llabs(dec.frame_start - std::int64_t(lead));
        CHECK(err <= cfg.samples_per_symbol / 4);
    }
}

TEST_CASE("frame embedded mid-buffer behind speech is located and decoded") {
    const auto cfg = ModemConfig::make(RateMode::R1600);
    std::vector<std::uint8_t> payload(40, 0x3C);
    const auto frame = frame_encode(payload, cfg);

    AudioBuffer rx = speech_like(1.0, 41, 0.25);
    const std::size_t at = rx.samples.size();
    rx.samples.insert(rx.samples.end(), frame.samples.begin(), frame.samples.end());
    rx.samples.insert(rx.samples.end(), 2400, 0.0f);

    const auto dec = frame_decode(rx, cfg);
    CHECK(dec.payload == payload);
    CHECK(std::llabs(dec.frame_start - std::int64_t(at)) <= cfg.samples_per_symbol / 4);
}

TEST_CASE("coop pilot option embeds a 13 kHz calibration tone") {
    const auto cfg = ModemConfig::make(RateMode::R1600);
    FrameOptions opt;
    opt.coop_pilot = true;
    const auto audio = frame_encode({0x42, 0x43}, cfg, opt);

    // pilot-only lead-in
    std::vector<float> lead(audio.samples.begin(), audio.samples.begin() + 12000);
    const auto est = dsp::measure_tone(lead, 48000.0, 13000.0);
    CHECK(est.amplitude == doctest::Approx(0.1).epsilon(0.03));
    // pilot still present later, under the frame
    std::vector<float> mid(audio.samples.begin() + 30000, audio.samples.begin() + 42000);
    const auto est2 = dsp::measure_tone(mid, 48000.0, 13000.0);
    CHECK(est2.amplitude == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("error paths") {
    const auto cfg = ModemConfig::make(RateMode::R3200);
    CHECK_THROWS_AS(encode({1, 0, 1}, cfg), InvalidInput); // not a symbol multiple

    const auto bits = random_bits(64, 3);
    const auto audio = encode(bits, cfg);
    CHECK_THROWS_AS(decode(audio, cfg, {std::int64_t(audio.samples.size())}), InvalidInput);

    AudioBuffer silence;
    silence.sample_rate = 48000;
    silence.samples.assign(48000, 0.0f);
    CHECK_THROWS_AS(frame_decode(silence, cfg), SyncError);

    AudioBuffer noise = silence;
    dsp::SplitMix64 rng(1);
    for (auto& v : noise.samples) v = float(rng.gaussian());
    CHECK_THROWS_AS(frame_decode(noise, cfg), SyncError);

    CHECK_THROWS_AS(mrc_combine({audio}, {{0}}), InvalidInput);
    AudioBuffer other = audio;
    other.samples.resize(other.samples.size() - 100);
    CHECK_THROWS_AS(mrc_combine({audio, other}, {{0}, {0}}), InvalidInput);
}

TEST_CASE("bit/byte helpers round trip") {
    std::vector<std::uint8_t> bytes = {0x00, 0xFF, 0xA5, 0x17};
    CHECK(bits_to_bytes(bytes_to_bits(bytes)) == bytes);
    const auto bits = random_bits(100, 1);
    CHECK(bits.size() == 100);
    CHECK(count_bit_errors(bits, bits) == 0);
}
