#include "fmscatter/rxmodes.hpp"

#include <algorithm>
#include <cmath>

#include "fmscatter/dsp.hpp"
#include "fmscatter/fmcore.hpp"

namespace fmscatter::rxmodes {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
} // namespace

ReceiverOutput overlay_receive(const IqBuffer& rx, std::int64_t f_target,
                               const ReceiveOptions& opt) {
    int mpx_rate = opt.mpx_rate;
    if (mpx_rate == 0)
        mpx_rate = fmcore::divisor_rate_at_least(rx.sample_rate,
                                                 std::max(480000, 2 * kMinMpxRateHz));
    const IqBuffer channel = fmcore::tune(rx, f_target, opt.channel_bw, mpx_rate);
    const AudioBuffer demod = fmcore::fm_demodulate(channel);

    MultiplexBaseband mpx;
    mpx.samples = demod.samples;
    mpx.sample_rate = demod.sample_rate;

    const auto split = multiplex::decompose_multiplex(mpx, opt.pilot_threshold_db);

    ReceiverOutput out;
    out.stereo = split.stereo;
    out.pilot = split.pilot;
    if (split.stereo) {
        out.left = dsp::resample(split.left, opt.audio_rate);
        out.right = dsp::resample(split.right, opt.audio_rate);
        out.audio.sample_rate = opt.audio_rate;
        out.audio.samples.resize(out.left.samples.size());
        for (std::size_t i = 0; i < out.audio.samples.size(); ++i)
            out.audio.samples[i] = 0.5f * (out.left.samples[i] + out.right.samples[i]);
    } else {
        out.audio = dsp::resample(split.left, opt.audio_rate);
    }
    return out;
}

MultiplexBaseband stereo_backscatter_compose(const AudioBuffer& content,
                                             bool insert_pilot, int out_rate,
                                             double content_weight,
                                             double pilot_amplitude) {
    if (out_rate < kMinMpxRateHz)
        throw InvalidInput("stereo_backscatter_compose: output rate below 116 kHz");
    if (multiplex::out_of_band_fraction(content) > 0.01)
        throw InvalidInput("stereo_backscatter_compose: content has energy above 15 kHz");

    const std::vector<float> up = dsp::resample(content.samples, content.sample_rate, out_rate);

    MultiplexBaseband mpx;
    mpx.sample_rate = out_rate;
    mpx.pilot_present = insert_pilot;
    mpx.stereo_present = true;
    mpx.samples.resize(up.size());

    const double dphi = kTwoPi * kPilotHz / out_rate;
    double phase = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) {
        // DSB-SC about 38 kHz = doubled pilot phase, as a broadcast encoder does
        double v = content_weight * double(up[i]) * std::cos(2.0 * phase);
        if (insert_pilot) v += pilot_amplitude * std::cos(phase);
        mpx.samples[i] = float(v);
        phase += dphi;
        if (phase > kTwoPi) phase -= kTwoPi;
    }
    return mpx;
}

AudioBuffer stereo_backscatter_receive(const ReceiverOutput& out) {
    if (!out.stereo)
        throw PilotAbsentError(
            "stereo_backscatter_receive: receiver stayed in mono mode (pilot not detected)");
    if (out.left.samples.size() != out.right.samples.size() ||
        out.left.sample_rate != out.right.sample_rate)
        throw InvalidInput("stereo_backscatter_receive: inconsistent left/right buffers");

    AudioBuffer diff;
    diff.sample_rate = out.left.sample_rate;
    diff.samples.resize(out.left.samples.size());
    for (std::size_t i = 0; i < diff.samples.size(); ++i)
        diff.samples[i] = 0.5f * (out.left.samples[i] - out.right.samples[i]);
    return diff;
}

// ---------------------------------------------------------------------------
// Cooperative cancellation
// ---------------------------------------------------------------------------

namespace {

// Mean 13 kHz amplitude over [start, start+len) via short hops.
double pilot_amplitude_over(const std::vector<float>& x, int rate, double pilot_hz,
                            std::size_t start, std::size_t len) {
    if (len == 0 || start + len > x.size()) return 0.0;
    const std::size_t hop = std::size_t(rate) / 50; // 20 ms windows
    if (len < hop) return 0.0;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t s = start; s + hop <= start + len; s += hop) {
        std::vector<float> win(x.begin() + std::ptrdiff_t(s),
                               x.begin() + std::ptrdiff_t(s + hop));
        acc += dsp::measure_tone(win, rate, pilot_hz).amplitude;
        ++count;
    }
    return count ? acc / double(count) : 0.0;
}

} // namespace

CoopResult coop_cancel(const CoopPair& pair, const CoopConfig& cfg) {
    if (pair.s1.sample_rate != pair.s2.sample_rate)
        throw InvalidInput("coop_cancel: sample rates differ");
    if (pair.s1.samples.empty() || pair.s2.samples.empty())
        throw InvalidInput("coop_cancel: empty input");
    const int rate = pair.s1.sample_rate;
    const int up_rate = rate * cfg.upsample;

    // (1) software resampling for sub-sample alignment
    std::vector<float> a = cfg.upsample > 1
        ? dsp::resample(pair.s1.samples, rate, up_rate) : pair.s1.samples;
    std::vector<float> b = cfg.upsample > 1
        ? dsp::resample(pair.s2.samples, rate, up_rate) : pair.s2.samples;

    // (2) delay from the cross-correlation peak within the search window
    const auto cc = dsp::cross_correlate(a, b);
    const std::int64_t max_lag = std::int64_t(cfg.max_delay_sec * up_rate);
    double best = -1.0;
    std::int64_t best_lag = 0;
    for (std::size_t i = 0; i < cc.values.size(); ++i) {
        const std::int64_t lag = cc.lag_of(i);
        if (lag < -max_lag || lag > max_lag) continue;
        if (cc.values[i] > best) {
            best = cc.values[i];
            best_lag = lag;
        }
    }
    double ea = 0.0, eb = 0.0;
    for (float v : a) ea += double(v) * v;
    for (float v : b) eb += double(v) * v;
    const double score = (ea > 0 && eb > 0) ? best / std::sqrt(ea * eb) : 0.0;
    if (score < cfg.corr_threshold)
        throw SyncError("coop_cancel: correlation peak below threshold");

    CoopResult res;
    res.sync_score = score;
    res.delay_samples = double(best_lag) / double(cfg.upsample);

    // align: b[n] = a[n - lag] -> drop `lag` samples from b's start (or a's);
    // then snap the start onto s1's original sample grid so the decimated
    // output lands on integer sample times
    std::size_t a0 = 0, b0 = 0;
    if (best_lag >= 0) b0 = std::size_t(best_lag);
    else a0 = std::size_t(-best_lag);
    const std::size_t up = std::size_t(std::max(cfg.upsample, 1));
    const std::size_t snap = (up - a0 % up) % up;
    a0 += snap;
    b0 += snap;
    if (a0 >= a.size() || b0 >= b.size())
        throw SyncError("coop_cancel: no overlap after alignment");
    const std::size_t len = std::min(a.size() - a0, b.size() - b0);

    // (3) amplitude calibration from the 13 kHz pilot: onset, preamble
    //     amplitude against the known transmitted amplitude, and the
    //     transmission-time ratio
    const std::size_t hop = std::size_t(up_rate) / 50;
    double amp_max = 0.0;
    std::size_t onset = len;
    std::vector<float> bwin(hop);
    for (std::size_t s = 0; s + hop <= len; s += hop) {
        std::copy(b.begin() + std::ptrdiff_t(b0 + s), b.begin() + std::ptrdiff_t(b0 + s + hop),
                  bwin.begin());
        const double amp = dsp::measure_tone(bwin, up_rate, cfg.pilot_hz).amplitude;
        amp_max = std::max(amp_max, amp);
        if (onset == len && amp > 0.25 * cfg.pilot_ref_amplitude) onset = s;
    }
    if (onset == len || amp_max < 0.05 * cfg.pilot_ref_amplitude)
        throw CalibrationError("coop_cancel: 13 kHz calibration pilot not found");

    const std::size_t pre_len = std::size_t(cfg.preamble_sec * up_rate);
    const std::size_t guard = hop;
    const std::size_t pre_start = std::min(onset + guard, len);
    const std::size_t pre_end = std::min(onset + pre_len > guard ? onset + pre_len - guard : 0, len);
    res.pilot_preamble_amp = pilot_amplitude_over(
        b, up_rate, cfg.pilot_hz, b0 + pre_start,
        pre_end > pre_start ? pre_end - pre_start : 0);
    const std::size_t tx_start = std::min(onset + pre_len + guard, len);
    res.pilot_tx_amp = pilot_amplitude_over(
        b, up_rate, cfg.pilot_hz, b0 + tx_start,
        len > tx_start + guard ? len - tx_start - guard : 0);
    if (res.pilot_preamble_amp < 0.05 * cfg.pilot_ref_amplitude)
        throw CalibrationError("coop_cancel: preamble pilot too weak to calibrate");

    // Observed preamble amplitude over the known transmitted amplitude gives
    // the receiver gain; the transmission/preamble ratio corrects any AGC
    // shift between the two segments (unity for a constant-gain channel).
    res.gain = res.pilot_preamble_amp / cfg.pilot_ref_amplitude;
    double agc_ratio = 1.0;
    if (res.pilot_tx_amp > 0.05 * cfg.pilot_ref_amplitude * res.gain)
        agc_ratio = res.pilot_tx_amp / res.pilot_preamble_amp;

    // (4) subtract and return to the input rate
    std::vector<float> diff(len);
    const float inv_gain = float(1.0 / (res.gain * agc_ratio));
    for (std::size_t i = 0; i < len; ++i)
        diff[i] = b[b0 + i] * inv_gain - a[a0 + i];

    if (cfg.refine_gain_lsq) {
        // optional residual ambient projection (beyond the pilot method)
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            num += double(diff[i]) * a[a0 + i];
            den += double(a[a0 + i]) * a[a0 + i];
        }
        if (den > 0) {
            const float alpha = float(num / den);
            for (std::size_t i = 0; i < len; ++i) diff[i] -= alpha * a[a0 + i];
        }
    }

    CoopResult out = res;
    out.audio.sample_rate = rate;
    out.audio.samples = cfg.upsample > 1 ? dsp::resample(diff, up_rate, rate)
                                         : std::move(diff);
    return out;
}

} // namespace fmscatter::rxmodes
