// Experiment harness: simulated sweeps (frequency response, BER vs power,
// diversity combining, stereo vs overlay, cooperative cancellation) with
// CSV/JSON reporting and reproducible seeding.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fmscatter/modem.hpp"
#include "fmscatter/types.hpp"

namespace fmscatter::bench {

// ---------------------------------------------------------------------------
// Synthetic ambience
// ---------------------------------------------------------------------------

/// Speech-like fixture: seeded noise band-passed to 100 Hz - 4 kHz with a
/// slow syllabic envelope.
AudioBuffer make_speech(double seconds, std::uint64_t seed, int rate = 48000,
                        double peak = 0.9);

/// Music-like fixture: a handful of sustained tones below 10 kHz.
AudioBuffer make_music(double seconds, std::uint64_t seed, int rate = 48000,
                       double peak = 0.9);

AudioBuffer make_tone(double seconds, double freq_hz, double amplitude,
                      int rate = 48000);
AudioBuffer make_silence(double seconds, int rate = 48000);

/// Resolve "synthetic:speech", "synthetic:music", "synthetic:tone:<hz>",
/// "synthetic:silence", or a WAV path.
AudioBuffer load_ambient(const std::string& source, double seconds,
                         std::uint64_t seed, int rate = 48000);

// ---------------------------------------------------------------------------
// Quality metrics (PESQ stand-in)
// ---------------------------------------------------------------------------

/// Signal quality of `test` against `reference`: alignment by
/// cross-correlation, best-gain fit, then global SNR, mean 30 ms segmental
/// SNR (clamped to [-10, 35] dB per segment), and the normalized correlation.
struct QualityReport {
    double snr_db = 0.0;          // +inf sentinel when residual is zero
    double segmental_snr_db = 0.0;
    double correlation = 0.0;
    std::int64_t lag = 0;         // alignment applied to test, samples
};

QualityReport audio_quality(const AudioBuffer& reference, const AudioBuffer& test,
                            double max_lag_sec = 0.5);

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class Scenario { FreqResponse, BerSweep, Mrc, StereoCompare, Coop };

Scenario scenario_from_name(const std::string& name);
const char* scenario_name(Scenario s);

/// How modem bits reach the decoder in BER-style scenarios:
///   Rf    - multiplex -> fm_modulate -> backscatter_link -> tune -> demod
///           -> frame_decode, power controlled by rx_power_dbm
///   Audio - data + ambience mixed at an audio-domain SNR (fast Monte Carlo,
///           mirrors the modem-level sweeps)
enum class ChannelModel { Rf, Audio };

struct ExperimentConfig {
    Scenario scenario = Scenario::BerSweep;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string ambient = "synthetic:speech";

    // RF chain parameters
    int rf_rate = 10'000'000;
    std::int64_t carrier = 91'500'000;
    double f_back = 600'000.0;
    double delta_f = kMaxDeviationHz;
    double reflectivity = 0.5;
    double noise_floor_dbm = -60.0;
    std::vector<double> rx_power_dbm = {-20, -30, -40, -50, -60};

    // audio-domain sweep parameters
    ChannelModel channel = ChannelModel::Rf;
    std::vector<double> audio_snr_db = {0, 5, 10, 15, 20, 25};
    double data_to_ambient_db = 0.0; // data power over ambience in overlay mixes

    // modem / payload
    std::vector<modem::RateMode> rate_modes = {modem::RateMode::R100,
                                               modem::RateMode::R1600,
                                               modem::RateMode::R3200};
    std::size_t bits_per_point = 10'000;
    int audio_rate = 48000;

    // scenario extras
    std::vector<double> tone_hz;          // freq_response points (empty: default grid)
    double tone_amplitude = 1.0;          // freq_response backscatter tone level
    double audio_lowpass_hz = 13000.0;    // receiver chain low-pass, 0 disables
    int mrc_max_copies = 4;
    double coop_max_delay_sec = 0.2;
    std::vector<double> coop_gains = {0.7};
    double pilot_amplitude = 0.1;         // 19 kHz insertion for stereo modes
    double duration_sec = 2.0;            // ambience length for audio scenarios

    bool emit_wav = false;
    int jobs = 1;
};

ExperimentConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);
/// FNV-1a over the canonical serialized config; embedded in every report.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct FreqResponsePoint {
    double tone_hz = 0.0;
    double snr_db = 0.0;
};

struct BerPoint {
    modem::RateMode rate_mode = modem::RateMode::R100;
    double control_value = 0.0;   // rx_power_dbm or audio_snr_db
    std::size_t n_bits = 0;
    std::size_t n_errors = 0;
    double ber = 0.0;
    int sync_failures = 0;        // frames lost to sync, reported separately
};

struct MrcPoint {
    int n_copies = 1;
    std::size_t n_bits = 0;
    std::size_t n_errors = 0;
    double ber = 0.0;
    double snr_gain_db = 0.0;     // measured combined-vs-single SNR gain
};

struct StereoComparePoint {
    std::string mode;             // overlay | stereo_mono | stereo_news
    std::string status;           // ok | pilot_not_detected
    std::size_t n_bits = 0;
    std::size_t n_errors = 0;
    double ber = 0.0;
    double interference_db = 0.0; // content-free path output power
};

struct CoopPointResult {
    double delay_injected = 0.0;
    double gain_injected = 1.0;
    double delay_estimated = 0.0;
    double gain_estimated = 1.0;
    QualityReport quality;
    std::string status;           // ok | sync_failed | calibration_failed
};

struct ExperimentResult {
    ExperimentConfig config;
    std::uint64_t hash = 0;
    std::vector<FreqResponsePoint> freq_response;
    std::vector<BerPoint> ber;
    std::vector<MrcPoint> mrc;
    std::vector<StereoComparePoint> stereo;
    std::vector<CoopPointResult> coop;

    std::string to_csv() const;   // stable documented schema per scenario
    std::string to_json() const;
};

// ---------------------------------------------------------------------------
// Scenario runners
// ---------------------------------------------------------------------------

ExperimentResult run_freq_response(const ExperimentConfig& cfg);
ExperimentResult run_ber_sweep(const ExperimentConfig& cfg);
ExperimentResult run_mrc(const ExperimentConfig& cfg);
ExperimentResult run_stereo_compare(const ExperimentConfig& cfg);
ExperimentResult run_coop(const ExperimentConfig& cfg);

/// Dispatch on cfg.scenario.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Run and write <out_dir>/<scenario>.csv and .json (plus WAV artifacts when
/// enabled). Returns the result.
ExperimentResult run_and_write(const ExperimentConfig& cfg);

} // namespace fmscatter::bench
