// File formats: WAV (PCM16 / float32), raw float32 IQ with a JSON sidecar,
// and run-length-encoded switch waveform export.
#pragma once

#include <string>
#include <vector>

#include "fmscatter/types.hpp"

namespace fmscatter::scatter {
struct SwitchWaveform;
}

namespace fmscatter::io {

enum class WavFormat { Pcm16, Float32 };

/// Write mono audio. Float32 is the default: artifacts round-trip losslessly.
void write_wav(const std::string& path, const AudioBuffer& audio,
               WavFormat fmt = WavFormat::Float32);
void write_wav_stereo(const std::string& path, const StereoAudio& st,
                      WavFormat fmt = WavFormat::Float32);

/// Read a WAV file; multi-channel content is averaged down to mono.
AudioBuffer read_wav(const std::string& path);
StereoAudio read_wav_stereo(const std::string& path);

/// IQ: interleaved little-endian float32 pairs in `path`, with sample_rate
/// and center_freq in a `path + ".json"` sidecar.
void write_iq(const std::string& path, const IqBuffer& iq);
IqBuffer read_iq(const std::string& path);

/// Switch waveform: uint32 little-endian run lengths in `path`, first run
/// level plus rates in a `path + ".json"` sidecar.
void write_switch_rle(const std::string& path, const scatter::SwitchWaveform& w);
scatter::SwitchWaveform read_switch_rle(const std::string& path);

} // namespace fmscatter::io
