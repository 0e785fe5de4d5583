#include "fmscatter/fmcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fmscatter/dsp.hpp"

namespace fmscatter::fmcore {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
} // namespace

IqBuffer fm_modulate(const std::vector<float>& baseband, int baseband_rate,
                     const FmParams& params, int rf_rate, double max_content_hz) {
    if (params.delta_f <= 0 || params.delta_f > kMaxDeviationHz)
        throw InvalidInput("fm_modulate: delta_f must be in (0, 75 kHz]");
    if (rf_rate < 4.0 * (params.delta_f + max_content_hz)) {
        std::ostringstream os;
        os << "fm_modulate: rf_rate " << rf_rate
           << " below 4x Carson terms (delta_f " << params.delta_f
           << " + content " << max_content_hz << ")";
        throw BandwidthError(os.str());
    }

    std::vector<float> bb = (baseband_rate == rf_rate)
        ? baseband
        : dsp::resample(baseband, baseband_rate, rf_rate);

    IqBuffer out;
    out.sample_rate = rf_rate;
    out.center_freq = params.carrier;
    out.samples.resize(bb.size());

    const double k = kTwoPi * params.delta_f / double(rf_rate);
    double phase = 0.0;
    for (std::size_t i = 0; i < bb.size(); ++i) {
        phase += k * double(bb[i]);
        if (phase > kTwoPi) phase -= kTwoPi;
        else if (phase < -kTwoPi) phase += kTwoPi;
        out.samples[i] = std::complex<float>(float(std::cos(phase)), float(std::sin(phase)));
    }
    return out;
}

IqBuffer fm_modulate(const MultiplexBaseband& mpx, const FmParams& params, int rf_rate) {
    return fm_modulate(mpx.samples, mpx.sample_rate, params, rf_rate, kMpxBandHz);
}

IqBuffer fm_modulate(const AudioBuffer& audio, const FmParams& params, int rf_rate) {
    const double content = std::min(kMonoBandHz, audio.sample_rate / 2.0);
    return fm_modulate(audio.samples, audio.sample_rate, params, rf_rate, content);
}

AudioBuffer fm_demodulate(const IqBuffer& iq) {
    if (iq.samples.empty())
        throw InvalidInput("fm_demodulate: empty buffer");

    AudioBuffer out;
    out.sample_rate = iq.sample_rate;
    out.samples.resize(iq.samples.size());
    out.samples[0] = 0.0f;

    const double scale = double(iq.sample_rate) / (kTwoPi * kMaxDeviationHz);
    std::complex<double> prev(iq.samples[0].real(), iq.samples[0].imag());
    {
        const double m = std::abs(prev);
        if (m < 1e-12) throw SignalLost("fm_demodulate: zero-magnitude sample");
        prev /= m;
    }
    for (std::size_t i = 1; i < iq.samples.size(); ++i) {
        std::complex<double> z(iq.samples[i].real(), iq.samples[i].imag());
        const double m = std::abs(z);
        if (m < 1e-12) throw SignalLost("fm_demodulate: zero-magnitude sample");
        // hard limiter: the envelope is forced constant, only phase survives
        z /= m;
        const std::complex<double> d = z * std::conj(prev);
        out.samples[i] = float(std::arg(d) * scale);
        prev = z;
    }
    return out;
}

int divisor_rate_at_least(int rate, int min_rate) {
    if (min_rate >= rate) return rate;
    int best = rate;
    for (int f = 1; f <= rate / std::max(min_rate, 1); ++f) {
        if (rate % f == 0 && rate / f >= min_rate) best = rate / f;
    }
    return best;
}

IqBuffer tune(const IqBuffer& iq, std::int64_t target_rf, double channel_bw,
              int out_rate) {
    if (iq.sample_rate <= 0)
        throw InvalidInput("tune: missing sample rate");
    const double shift = double(target_rf - iq.center_freq);
    if (std::fabs(shift) + channel_bw / 2.0 >= iq.sample_rate / 2.0)
        throw BandwidthError("tune: requested shift aliases outside the sampled band");

    int factor = 1;
    if (out_rate > 0) {
        if (iq.sample_rate % out_rate != 0)
            throw InvalidInput("tune: out_rate must divide the input rate");
        factor = iq.sample_rate / out_rate;
    }

    // shift to baseband
    std::vector<std::complex<float>> shifted(iq.samples.size());
    if (shift == 0.0) {
        shifted = iq.samples;
    } else {
        const double dphi = -kTwoPi * shift / double(iq.sample_rate);
        std::complex<double> rot(1.0, 0.0);
        const std::complex<double> step(std::cos(dphi), std::sin(dphi));
        for (std::size_t i = 0; i < iq.samples.size(); ++i) {
            std::complex<double> z(iq.samples[i].real(), iq.samples[i].imag());
            z *= rot;
            shifted[i] = std::complex<float>(float(z.real()), float(z.imag()));
            rot *= step;
            if ((i & 0xFFFF) == 0xFFFF) rot /= std::abs(rot);
        }
    }

    // passband to channel_bw/2, -60 dB from channel_bw/2 + 50 kHz on;
    // adjacent-channel leakage dominates the floor
    const auto taps = dsp::design_lowpass(channel_bw / 2.0 + 25000.0, 50000.0,
                                          iq.sample_rate, 60.0);
    IqBuffer out;
    out.center_freq = target_rf;
    out.sample_rate = factor > 1 ? iq.sample_rate / factor : iq.sample_rate;
    out.samples = (factor > 1) ? dsp::fir_decimate(shifted, taps, factor)
                               : dsp::fir_apply(shifted, taps);
    return out;
}

IqBuffer apply_link_budget(const IqBuffer& iq, const LinkBudget& budget,
                           std::uint64_t seed) {
    IqBuffer out;
    out.sample_rate = iq.sample_rate;
    out.center_freq = iq.center_freq;
    out.samples.resize(iq.samples.size());

    const double current = iq.mean_power();
    const double target = power_from_db(budget.rx_power_dbm) * budget.ref_scale * budget.ref_scale;
    const float gain = current > 0.0 ? float(std::sqrt(target / current)) : 0.0f;

    if (std::isinf(budget.noise_floor_dbm) && budget.noise_floor_dbm < 0) {
        for (std::size_t i = 0; i < iq.samples.size(); ++i)
            out.samples[i] = iq.samples[i] * gain;
        return out;
    }

    // Noise floor is referenced to a 200 kHz channel: per-sample variance
    // scales with the simulated bandwidth so in-channel SNR is rate-invariant.
    const double floor_p = power_from_db(budget.noise_floor_dbm) *
                           budget.ref_scale * budget.ref_scale;
    const double total_noise = floor_p * double(iq.sample_rate) / kChannelBwHz;
    const double sigma = std::sqrt(total_noise / 2.0);

    dsp::SplitMix64 rng(seed);
    for (std::size_t i = 0; i < iq.samples.size(); ++i) {
        const double nr = sigma * rng.gaussian();
        const double ni = sigma * rng.gaussian();
        out.samples[i] = std::complex<float>(iq.samples[i].real() * gain + float(nr),
                                             iq.samples[i].imag() * gain + float(ni));
    }
    return out;
}

double measure_power_dbm(const IqBuffer& iq, double ref_scale) {
    const double p = iq.mean_power() / (ref_scale * ref_scale);
    return p > 0 ? db_from_power(p) : -std::numeric_limits<double>::infinity();
}

} // namespace fmscatter::fmcore
