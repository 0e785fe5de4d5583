// FM modulation/demodulation, channel tuning, and the link-budget noise model.
#pragma once

#include <cstdint>

#include "fmscatter/types.hpp"

namespace fmscatter::fmcore {

struct FmParams {
    double delta_f = kMaxDeviationHz; // peak deviation, Hz
    std::int64_t carrier = 0;         // RF carrier annotation, Hz
};

/// Receiver power model. The dBm convention is 0 dBm <-> unit mean-square
/// sample amplitude (times ref_scale). noise_floor_dbm is referenced to one
/// 200 kHz FM channel, so rx_power - noise_floor equals the in-channel SNR
/// regardless of the simulation rate. -inf disables noise.
struct LinkBudget {
    double rx_power_dbm = 0.0;
    double noise_floor_dbm = -std::numeric_limits<double>::infinity();
    double ref_scale = 1.0;
};

/// Constant-envelope FM: out[n] = exp(j*2*pi*delta_f*sum(baseband)/rf_rate).
/// The baseband is resampled to rf_rate internally. `max_content_hz` is the
/// declared band edge used for the Carson-style rate check
/// (rf_rate >= 4*(delta_f + max_content_hz)).
IqBuffer fm_modulate(const std::vector<float>& baseband, int baseband_rate,
                     const FmParams& params, int rf_rate, double max_content_hz);
IqBuffer fm_modulate(const MultiplexBaseband& mpx, const FmParams& params, int rf_rate);
IqBuffer fm_modulate(const AudioBuffer& audio, const FmParams& params, int rf_rate);

/// Phase-difference discriminator with a hard limiter in front (envelope
/// clamped to its median). Output is instantaneous frequency normalized by
/// the 75 kHz deviation cap, so a full-deviation modulator round-trips to
/// the original baseband at unit gain. Output rate = input rate.
AudioBuffer fm_demodulate(const IqBuffer& iq);

/// Frequency-shift to target_rf, low-pass to channel_bw, optionally decimate
/// to out_rate (0 keeps the input rate; otherwise it must divide the input
/// rate). Filter: linear phase, -60 dB at +/-(channel_bw/2 + 50 kHz), group
/// delay compensated so output stays time-aligned with input.
IqBuffer tune(const IqBuffer& iq, std::int64_t target_rf,
              double channel_bw = kChannelBwHz, int out_rate = 0);

/// Largest divisor rate of `rate` that is >= min_rate (for tune decimation).
int divisor_rate_at_least(int rate, int min_rate);

/// Scale to rx_power_dbm and add circular complex AWGN per the LinkBudget
/// convention. Bit-reproducible for a given seed.
IqBuffer apply_link_budget(const IqBuffer& iq, const LinkBudget& budget,
                           std::uint64_t seed);

/// Mean power of `iq` in dBm under the LinkBudget convention.
double measure_power_dbm(const IqBuffer& iq, double ref_scale = 1.0);

} // namespace fmscatter::fmcore
