// Audio-band FSK modem: 2-FSK at 100 bps, 4-FSK x 4-band FDM at 1.6 and
// 3.2 kbps, non-coherent detection, equal-gain diversity combining.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fmscatter/types.hpp"

namespace fmscatter::modem {

enum class RateMode { R100, R1600, R3200 };

const char* rate_mode_name(RateMode m);
RateMode rate_mode_from_name(const std::string& name);

/// Tone plan and symbol timing for one rate mode.
///   R100:        tones {8000, 12000} Hz, 100 sym/s, 1 bit/symbol
///   R1600/R3200: sixteen tones 800*k Hz (k = 1..16) in four consecutive
///                sets of four; 200 / 400 sym/s, 8 bits/symbol (2 bits per
///                set, one active tone per set).
/// All tones stay at or below 12.8 kHz, inside the receiver passband.
struct ModemConfig {
    RateMode rate_mode = RateMode::R100;
    int symbol_rate = 100;
    int sample_rate = 48000;
    int bits_per_symbol = 1;
    std::vector<double> tones;          // flat list; sets of 4 for 16-FSK
    int samples_per_symbol = 480;

    static ModemConfig make(RateMode mode, int sample_rate = 48000);
    double bit_rate() const { return double(symbol_rate) * bits_per_symbol; }
};

/// Symbol-timing reference: sample index of the first symbol boundary.
struct SymbolSync {
    std::int64_t offset = 0;
};

/// FSK synthesis. Bit count must be a multiple of bits_per_symbol. Tones are
/// phase-continuous across symbols; 16-FSK symbols (four summed tones) are
/// normalized to unit peak.
AudioBuffer encode(const std::vector<std::uint8_t>& bits, const ModemConfig& cfg);

struct DecodeResult {
    std::vector<std::uint8_t> bits;
    std::vector<float> confidence; // per symbol: dB margin best vs second tone
};

/// Non-coherent detection: per symbol window, rectangular DFT power at each
/// candidate tone, argmax per set. Scale-invariant.
DecodeResult decode(const AudioBuffer& audio, const ModemConfig& cfg,
                    const SymbolSync& sync);

/// Equal-gain combining of repeated transmissions: sample-wise sum of the
/// sync-aligned copies (then peak-normalized). Lengths after alignment must
/// match. The summed buffer decodes with an SNR gain of up to N when the
/// interference is uncorrelated across copies.
AudioBuffer mrc_combine(const std::vector<AudioBuffer>& copies,
                        const std::vector<SymbolSync>& syncs);

/// Frame layout options. The preamble is rate-mode independent: alternating
/// R100 symbols. The optional 13 kHz calibration pilot (cooperative receive)
/// occupies pilot_preamble_sec alone before the preamble and stays mixed in
/// during the rest of the frame.
struct FrameOptions {
    double preamble_sec = 0.5;
    bool coop_pilot = false;
    double pilot_amplitude = 0.1;
    double pilot_hz = 13000.0;
    double pilot_preamble_sec = 0.5;
};

/// preamble + 16-bit length (big-endian) + payload, all FSK-coded.
AudioBuffer frame_encode(const std::vector<std::uint8_t>& payload,
                         const ModemConfig& cfg, const FrameOptions& opt = {});

struct FrameDecodeResult {
    std::vector<std::uint8_t> payload;
    std::size_t length_field = 0;       // as decoded from the header
    bool truncated = false;             // buffer ended before the full payload
    std::int64_t frame_start = -1;      // preamble start in samples
    double preamble_score = 0.0;        // normalized correlation peak
    SymbolSync payload_sync;
    std::vector<float> confidence;      // payload symbol margins
};

/// Locate the preamble by normalized matched-filter correlation and decode
/// the frame. Throws SyncError when no correlation peak clears
/// `sync_threshold`; bit errors inside a located frame do NOT throw.
FrameDecodeResult frame_decode(const AudioBuffer& audio, const ModemConfig& cfg,
                               const FrameOptions& opt = {},
                               double sync_threshold = 0.5);

/// Helpers shared by tests and the experiment harness.
std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed);
std::vector<std::uint8_t> bytes_to_bits(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> bits_to_bytes(const std::vector<std::uint8_t>& bits);
std::size_t count_bit_errors(const std::vector<std::uint8_t>& a,
                             const std::vector<std::uint8_t>& b);

} // namespace fmscatter::modem
