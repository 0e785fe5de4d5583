#include "fmscatter/multiplex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fmscatter/dsp.hpp"

namespace fmscatter::multiplex {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Shared audio-band low-pass: passband to 15 kHz, -60 dB by 16.5 kHz, which
// keeps the pilot out of the mono path.
std::vector<double> audio_lowpass_taps(double sample_rate) {
    return dsp::design_lowpass(kMonoBandHz, 3000.0, sample_rate, 60.0);
}

} // namespace

double out_of_band_fraction(const AudioBuffer& audio, double band_hz) {
    const double total = audio.mean_power();
    if (total <= 0.0) return 0.0;
    const double nyq = audio.sample_rate / 2.0;
    if (band_hz >= nyq) return 0.0;
    const double oob = dsp::band_power(audio.samples, audio.sample_rate,
                                       band_hz * 1.05, nyq);
    return oob / total;
}

MultiplexBaseband compose_multiplex(const StereoAudio& stereo,
                                    const MultiplexWeights& weights,
                                    bool stereo_mode, int out_rate,
                                    double oob_limit) {
    stereo.validate();
    if (out_rate < kMinMpxRateHz)
        throw InvalidInput("compose_multiplex: output rate below 116 kHz");
    if (weights.mono < 0 || weights.pilot < 0 || weights.stereo < 0)
        throw InvalidInput("compose_multiplex: negative weight");
    if (std::max(weights.mono, weights.stereo) + weights.pilot > 1.0 + 1e-9)
        throw InvalidInput("compose_multiplex: weights exceed the unit amplitude budget");
    if (out_of_band_fraction(stereo.left) > oob_limit ||
        out_of_band_fraction(stereo.right) > oob_limit)
        throw InvalidInput("compose_multiplex: input has content above 15 kHz");

    const std::size_t n_in = stereo.left.samples.size();
    std::vector<float> mono(n_in), diff(n_in);
    for (std::size_t i = 0; i < n_in; ++i) {
        mono[i] = 0.5f * (stereo.left.samples[i] + stereo.right.samples[i]);
        diff[i] = 0.5f * (stereo.left.samples[i] - stereo.right.samples[i]);
    }
    std::vector<float> mono_up = dsp::resample(mono, stereo.left.sample_rate, out_rate);
    std::vector<float> diff_up;
    if (stereo_mode)
        diff_up = dsp::resample(diff, stereo.left.sample_rate, out_rate);

    MultiplexBaseband mpx;
    mpx.sample_rate = out_rate;
    mpx.pilot_present = stereo_mode;
    mpx.stereo_present = stereo_mode;
    mpx.samples.resize(mono_up.size());

    const double dphi = kTwoPi * kPilotHz / out_rate;
    double phase = 0.0;
    for (std::size_t i = 0; i < mono_up.size(); ++i) {
        double v = weights.mono * mono_up[i];
        if (stereo_mode) {
            // 38 kHz subcarrier phase-locked to the doubled pilot
            v += weights.pilot * std::cos(phase);
            v += weights.stereo * double(diff_up[i]) * std::cos(2.0 * phase);
            phase += dphi;
            if (phase > kTwoPi) phase -= kTwoPi;
        }
        mpx.samples[i] = float(v);
    }

    // The weight budget bounds the peak at 1; resampler overshoot can
    // nudge it past that, so renormalize if it happens.
    double peak = 0.0;
    for (float s : mpx.samples) peak = std::max(peak, double(std::fabs(s)));
    if (peak > 1.0) {
        const float g = float(1.0 / peak);
        for (float& s : mpx.samples) s *= g;
    }
    return mpx;
}

PilotReport detect_pilot(const MultiplexBaseband& mpx, double threshold_db) {
    if (mpx.sample_rate <= 0)
        throw InvalidInput("detect_pilot: invalid sample rate");
    if (mpx.duration_sec() < 0.050)
        throw InvalidInput("detect_pilot: need at least 50 ms of signal");

    PilotReport rep;
    const double p_pilot = dsp::band_power(mpx.samples, mpx.sample_rate,
                                           kPilotHz - 100.0, kPilotHz + 100.0);
    const double p_guard = dsp::band_power(mpx.samples, mpx.sample_rate,
                                           16000.0, 18000.0);
    rep.ratio_db = db_from_power((p_pilot + 1e-30) / (p_guard + 1e-30));
    rep.present = p_pilot > 1e-12 && rep.ratio_db >= threshold_db;

    const auto tone = dsp::measure_tone(mpx.samples, mpx.sample_rate, kPilotHz);
    rep.amplitude = tone.amplitude;
    rep.phase = tone.phase;
    return rep;
}

DecomposeResult decompose_multiplex(const MultiplexBaseband& mpx,
                                    double pilot_threshold_db) {
    if (mpx.sample_rate < kMinMpxRateHz)
        throw InvalidInput("decompose_multiplex: sample rate below 116 kHz");

    DecomposeResult out;
    out.pilot = detect_pilot(mpx, pilot_threshold_db);

    const auto lp = audio_lowpass_taps(mpx.sample_rate);
    std::vector<float> mono = dsp::fir_apply(mpx.samples, lp);

    out.left.sample_rate = mpx.sample_rate;
    out.right.sample_rate = mpx.sample_rate;

    if (!out.pilot.present) {
        // mono fallback: no pilot means the receiver never enters stereo mode
        out.left.samples = mono;
        out.right.samples = std::move(mono);
        out.stereo = false;
        return out;
    }

    // Regenerate the 38 kHz subcarrier: band-pass the pilot, square it,
    // band-pass at 38 kHz, normalize to unit amplitude.
    const auto pilot_bp = dsp::design_bandpass(kPilotHz - 400.0, kPilotHz + 400.0,
                                               800.0, mpx.sample_rate, 60.0);
    std::vector<float> pilot = dsp::fir_apply(mpx.samples, pilot_bp);
    std::vector<float> squared(pilot.size());
    for (std::size_t i = 0; i < pilot.size(); ++i)
        squared[i] = pilot[i] * pilot[i];
    const auto sub_bp = dsp::design_bandpass(kStereoSubHz - 800.0, kStereoSubHz + 800.0,
                                             1600.0, mpx.sample_rate, 60.0);
    std::vector<float> subcarrier = dsp::fir_apply(squared, sub_bp);

    double sub_ms = 0.0;
    for (float v : subcarrier) sub_ms += double(v) * v;
    sub_ms /= double(std::max<std::size_t>(subcarrier.size(), 1));
    const double sub_amp = std::sqrt(2.0 * sub_ms);
    if (sub_amp < 1e-9) {
        out.left.samples = mono;
        out.right.samples = std::move(mono);
        out.stereo = false;
        return out;
    }

    // Coherent DSB-SC product detector: mpx * subcarrier * 2 -> L-R + HF terms
    std::vector<float> prod(mpx.samples.size());
    const float k = float(2.0 / sub_amp);
    for (std::size_t i = 0; i < prod.size(); ++i)
        prod[i] = mpx.samples[i] * subcarrier[i] * k;
    std::vector<float> diff = dsp::fir_apply(prod, lp);

    out.stereo = true;
    out.left.samples.resize(mono.size());
    out.right.samples.resize(mono.size());
    for (std::size_t i = 0; i < mono.size(); ++i) {
        out.left.samples[i] = mono[i] + diff[i];
        out.right.samples[i] = mono[i] - diff[i];
    }
    return out;
}

BandPowerReport band_power_report(const MultiplexBaseband& mpx) {
    BandPowerReport rep;
    const auto& x = mpx.samples;
    const double fs = mpx.sample_rate;
    rep.mono = dsp::band_power(x, fs, 0.0, kMonoBandHz);
    rep.guard = dsp::band_power(x, fs, 16000.0, 18000.0);
    rep.pilot = dsp::band_power(x, fs, kPilotHz - 100.0, kPilotHz + 100.0);
    rep.stereo = dsp::band_power(x, fs, kStereoLoHz, kStereoHiHz);
    rep.rds = dsp::band_power(x, fs, kRdsLoHz, kRdsHiHz);
    rep.total = 0.0;
    for (float v : x) rep.total += double(v) * v;
    rep.total /= double(std::max<std::size_t>(x.size(), 1));
    return rep;
}

std::string band_power_report_json(const MultiplexBaseband& mpx) {
    const BandPowerReport r = band_power_report(mpx);
    std::ostringstream os;
    os.precision(9);
    os << "{\"sample_rate\":" << mpx.sample_rate
       << ",\"pilot_present\":" << (mpx.pilot_present ? "true" : "false")
       << ",\"stereo_present\":" << (mpx.stereo_present ? "true" : "false")
       << ",\"band_power\":{"
       << "\"mono_0_15k\":" << r.mono
       << ",\"guard_16_18k\":" << r.guard
       << ",\"pilot_19k\":" << r.pilot
       << ",\"stereo_23_53k\":" << r.stereo
       << ",\"rds_56_58k\":" << r.rds
       << ",\"total\":" << r.total
       << "}}";
    return os.str();
}

} // namespace fmscatter::multiplex
