// Receive strategies: overlay (composite audio), stereo-band backscatter
// (mono-station and news-station variants), and cooperative two-receiver
// cancellation.
#pragma once

#include <cstdint>

#include "fmscatter/multiplex.hpp"
#include "fmscatter/types.hpp"

namespace fmscatter::rxmodes {

/// What an FM set emits: mono program audio, plus left/right when the pilot
/// switched the receiver into stereo mode.
struct ReceiverOutput {
    AudioBuffer audio;           // mono stream, band-limited to 15 kHz
    bool stereo = false;
    AudioBuffer left;            // valid when stereo
    AudioBuffer right;
    multiplex::PilotReport pilot;
};

struct ReceiveOptions {
    double channel_bw = kChannelBwHz;
    int audio_rate = 48000;
    double pilot_threshold_db = 10.0;
    int mpx_rate = 0;            // 0: auto (divisor rate of the input >= 480k)
};

/// Full receiver: tune + FM demodulate + multiplex decompose. The demodulated
/// audio of the target channel carries ambient and backscattered content
/// added together (overlay).
ReceiverOutput overlay_receive(const IqBuffer& rx, std::int64_t f_target,
                               const ReceiveOptions& opt = {});

/// Baseband a backscatter device drives into the stereo stream: content
/// DSB-SC about 38 kHz at weight 0.9, plus a 0.1 pilot iff insert_pilot
/// (true converts a mono station to stereo; false rides an existing stereo
/// broadcast without doubling its pilot). Output flags describe contents:
/// the news-station variant legitimately carries stereo content and no pilot.
MultiplexBaseband stereo_backscatter_compose(const AudioBuffer& content,
                                             bool insert_pilot,
                                             int out_rate = 192000,
                                             double content_weight = 0.9,
                                             double pilot_amplitude = 0.1);

/// Recover stereo-band backscatter content as (L - R) / 2. Throws
/// PilotAbsentError when the receiver stayed in mono mode (the low-power
/// failure case).
AudioBuffer stereo_backscatter_receive(const ReceiverOutput& out);

/// Two receivers, one tuned to the ambient station (s1) and one to the
/// backscatter channel (s2), with unknown relative delay and gain.
struct CoopPair {
    AudioBuffer s1;
    AudioBuffer s2;
};

struct CoopConfig {
    double pilot_hz = 13000.0;
    double pilot_ref_amplitude = 0.1; // transmitted calibration amplitude
    double preamble_sec = 0.5;        // pilot-only lead-in duration
    double max_delay_sec = 0.2;       // correlation search window
    int upsample = 10;                // software resampling factor
    double corr_threshold = 0.3;      // normalized sync peak floor
    bool refine_gain_lsq = false;     // optional post-subtraction refinement
};

struct CoopResult {
    AudioBuffer audio;         // recovered backscatter baseband
    double delay_samples = 0;  // s2 relative to s1, input-rate units
    double gain = 1.0;         // estimated s2 amplitude scale
    double pilot_preamble_amp = 0.0;
    double pilot_tx_amp = 0.0;
    double sync_score = 0.0;
};

/// Align (x10 resampled cross-correlation), calibrate amplitude from the
/// 13 kHz pilot, subtract, and return the backscatter audio.
CoopResult coop_cancel(const CoopPair& pair, const CoopConfig& cfg = {});

} // namespace fmscatter::rxmodes
