// Shared signal-carrier types and error hierarchy.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmscatter {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad argument or violated caller precondition.
struct InvalidInput : Error { using Error::Error; };

/// Sample-rate or bandwidth budget violation (Carson bound, aliasing).
struct BandwidthError : Error { using Error::Error; };

/// Synchronization failure: preamble / correlation peak not found.
/// Distinct from decoding with bit errors.
struct SyncError : Error { using Error::Error; };

/// Calibration reference (pilot tone) missing or too weak.
struct CalibrationError : Error { using Error::Error; };

/// Pilot not detected where a stereo decode was requested.
struct PilotAbsentError : Error { using Error::Error; };

/// Signal unusable, e.g. zero-magnitude IQ samples.
struct SignalLost : Error { using Error::Error; };

/// No free channel available for the requested plan.
struct NoChannelError : Error { using Error::Error; };

struct FileError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// FM baseband structure constants
// ---------------------------------------------------------------------------

inline constexpr double kMonoBandHz     = 15000.0;  // mono stream upper edge
inline constexpr double kPilotHz        = 19000.0;  // stereo pilot tone
inline constexpr double kStereoSubHz    = 38000.0;  // L-R DSB subcarrier
inline constexpr double kStereoLoHz     = 23000.0;
inline constexpr double kStereoHiHz     = 53000.0;
inline constexpr double kRdsLoHz        = 56000.0;  // reserved, never filled here
inline constexpr double kRdsHiHz        = 58000.0;
inline constexpr double kMpxBandHz      = 58000.0;  // composite upper edge
inline constexpr int    kMinMpxRateHz   = 116000;   // 2x composite edge
inline constexpr double kMaxDeviationHz = 75000.0;  // wideband FM deviation cap
inline constexpr double kChannelBwHz    = 200000.0; // broadcast channel grid step

// ---------------------------------------------------------------------------
// Buffers
// ---------------------------------------------------------------------------

/// Uniformly sampled mono audio; amplitudes nominally within [-1, 1].
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate = 48000;

    std::size_t size() const { return samples.size(); }
    double duration_sec() const {
        return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
    }
    double peak() const {
        double p = 0.0;
        for (float s : samples) p = std::max(p, double(std::fabs(s)));
        return p;
    }
    double mean_power() const {
        if (samples.empty()) return 0.0;
        double acc = 0.0;
        for (float s : samples) acc += double(s) * s;
        return acc / double(samples.size());
    }
    /// Scale so the peak magnitude equals `target` (no-op on silence).
    void normalize(double target = 1.0) {
        double p = peak();
        if (p <= 0.0) return;
        float g = float(target / p);
        for (float& s : samples) s *= g;
    }
};

/// Left/right channel pair with a common rate and length.
struct StereoAudio {
    AudioBuffer left;
    AudioBuffer right;

    void validate() const {
        if (left.sample_rate != right.sample_rate)
            throw InvalidInput("StereoAudio: channel sample rates differ");
        if (left.samples.size() != right.samples.size())
            throw InvalidInput("StereoAudio: channel lengths differ");
    }
};

/// Composite FM baseband: mono (L+R), 19 kHz pilot, 23-53 kHz stereo (L-R),
/// 56-58 kHz reserved. Peak magnitude <= 1 so it can drive the full
/// frequency deviation directly.
struct MultiplexBaseband {
    std::vector<float> samples;
    int sample_rate = 192000;
    bool pilot_present = false;
    bool stereo_present = false;

    std::size_t size() const { return samples.size(); }
    double duration_sec() const {
        return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
    }
};

/// Complex-baseband RF samples. center_freq annotates the RF frequency that
/// baseband 0 Hz represents.
struct IqBuffer {
    std::vector<std::complex<float>> samples;
    int sample_rate = 0;
    std::int64_t center_freq = 0;

    std::size_t size() const { return samples.size(); }
    double duration_sec() const {
        return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
    }
    double mean_power() const {
        if (samples.empty()) return 0.0;
        double acc = 0.0;
        for (const auto& z : samples) acc += double(z.real()) * z.real() + double(z.imag()) * z.imag();
        return acc / double(samples.size());
    }
};

// ---------------------------------------------------------------------------
// dB helpers
// ---------------------------------------------------------------------------

inline double db_from_power(double p) { return 10.0 * std::log10(p); }
inline double power_from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double db_from_amp(double a) { return 20.0 * std::log10(a); }
inline double amp_from_db(double db) { return std::pow(10.0, db / 20.0); }

} // namespace fmscatter
