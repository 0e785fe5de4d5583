// FM stereo multiplex: compose and decompose the composite baseband
// (mono L+R, 19 kHz pilot, 23-53 kHz L-R stereo, 56-58 kHz reserved).
#pragma once

#include <string>

#include "fmscatter/types.hpp"

namespace fmscatter::multiplex {

/// Amplitude budget for the composite. The mono and stereo components are
/// amplitude-complementary (|w_m*(L+R)/2| + |w_s*(L-R)/2| <= max(w_m, w_s)
/// for |L|,|R| <= 1), so the peak constraint is max(mono, stereo) + pilot <= 1.
struct MultiplexWeights {
    double mono = 0.9;
    double pilot = 0.1;
    double stereo = 0.9;
};

/// Build the composite baseband of a broadcast station. With stereo_mode the
/// pilot and the DSB-SC stereo difference stream are added; the 38 kHz
/// subcarrier is phase-locked to the doubled pilot.
/// Rejects inputs with more than `oob_limit` of their energy above 15 kHz,
/// and output rates below 116 kHz.
MultiplexBaseband compose_multiplex(const StereoAudio& stereo,
                                    const MultiplexWeights& weights = {},
                                    bool stereo_mode = true,
                                    int out_rate = 192000,
                                    double oob_limit = 0.01);

struct PilotReport {
    bool present = false;
    double amplitude = 0.0;
    double phase = 0.0;      // radians at buffer start
    double ratio_db = 0.0;   // pilot band power over 16-18 kHz guard band
};

/// Pilot detection: power in 19 kHz +/- 100 Hz against the empty 16-18 kHz
/// band, compared to threshold_db. Needs at least 50 ms of signal.
PilotReport detect_pilot(const MultiplexBaseband& mpx, double threshold_db = 10.0);

struct DecomposeResult {
    AudioBuffer left;       // at the multiplex rate, band-limited to 15 kHz
    AudioBuffer right;
    bool stereo = false;    // false -> mono fallback, left == right
    PilotReport pilot;
};

/// Receiver-side split into left/right. With a detected pilot the stereo
/// difference is demodulated coherently (squared band-passed pilot regenerates
/// the 38 kHz subcarrier); otherwise both channels carry the mono stream.
DecomposeResult decompose_multiplex(const MultiplexBaseband& mpx,
                                    double pilot_threshold_db = 10.0);

/// Per-band mean-square powers, serialized by the CLI as JSON.
struct BandPowerReport {
    double mono = 0.0;      // 0 - 15 kHz
    double guard = 0.0;     // 16 - 18 kHz
    double pilot = 0.0;     // 19 kHz +/- 100 Hz
    double stereo = 0.0;    // 23 - 53 kHz
    double rds = 0.0;       // 56 - 58 kHz
    double total = 0.0;
};
BandPowerReport band_power_report(const MultiplexBaseband& mpx);
std::string band_power_report_json(const MultiplexBaseband& mpx);

/// Fraction of energy above `band_hz`; the compose/insert precondition check.
double out_of_band_fraction(const AudioBuffer& audio, double band_hz = kMonoBandHz);

} // namespace fmscatter::multiplex
