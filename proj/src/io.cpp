#include "fmscatter/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fmscatter/scatter.hpp"

namespace fmscatter::io {

namespace {

using json = nlohmann::json;

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ofstream& f, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF)};
    f.write(reinterpret_cast<const char*>(b), 2);
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
    return std::uint16_t(p[0] | (p[1] << 8));
}

struct WavData {
    int sample_rate = 0;
    int channels = 0;
    std::vector<std::vector<float>> chan; // per channel
};

WavData read_wav_impl(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FileError("cannot open WAV file: " + path);
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
        std::memcmp(data.data() + 8, "WAVE", 4) != 0)
        throw FileError("not a RIFF/WAVE file: " + path);

    WavData out;
    int fmt_code = 0, bits = 0;
    std::size_t pos = 12;
    const unsigned char* raw = nullptr;
    std::size_t raw_len = 0;
    while (pos + 8 <= data.size()) {
        const char* id = reinterpret_cast<const char*>(data.data() + pos);
        const std::uint32_t len = get_u32(data.data() + pos + 4);
        const unsigned char* body = data.data() + pos + 8;
        if (pos + 8 + len > data.size()) break;
        if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
            fmt_code = get_u16(body);
            out.channels = get_u16(body + 2);
            out.sample_rate = int(get_u32(body + 4));
            bits = get_u16(body + 14);
        } else if (std::memcmp(id, "data", 4) == 0) {
            raw = body;
            raw_len = len;
        }
        pos += 8 + len + (len & 1);
    }
    if (!raw || out.channels <= 0 || out.sample_rate <= 0)
        throw FileError("WAV missing fmt/data chunks: " + path);

    const bool is_float = fmt_code == 3 && bits == 32;
    const bool is_pcm16 = fmt_code == 1 && bits == 16;
    if (!is_float && !is_pcm16)
        throw FileError("unsupported WAV format (want PCM16 or float32): " + path);

    const std::size_t bytes_per = is_float ? 4 : 2;
    const std::size_t frames = raw_len / (bytes_per * std::size_t(out.channels));
    out.chan.assign(std::size_t(out.channels), std::vector<float>(frames));
    for (std::size_t i = 0; i < frames; ++i) {
        for (int c = 0; c < out.channels; ++c) {
            const unsigned char* p = raw + (i * out.channels + c) * bytes_per;
            if (is_float) {
                float v;
                std::uint32_t u = get_u32(p);
                std::memcpy(&v, &u, 4);
                out.chan[std::size_t(c)][i] = v;
            } else {
                const std::int16_t s = std::int16_t(get_u16(p));
                out.chan[std::size_t(c)][i] = float(s) / 32767.0f;
            }
        }
    }
    return out;
}

void write_wav_impl(const std::string& path, const std::vector<const std::vector<float>*>& chans,
                    int sample_rate, WavFormat fmt) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FileError("cannot create WAV file: " + path);

    const int nch = int(chans.size());
    const std::size_t frames = chans.empty() ? 0 : chans[0]->size();
    const int bytes_per = fmt == WavFormat::Float32 ? 4 : 2;
    const std::uint32_t data_len = std::uint32_t(frames * std::size_t(nch) * std::size_t(bytes_per));

    f.write("RIFF", 4);
    put_u32(f, 36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(f, 16);
    put_u16(f, fmt == WavFormat::Float32 ? 3 : 1);
    put_u16(f, std::uint16_t(nch));
    put_u32(f, std::uint32_t(sample_rate));
    put_u32(f, std::uint32_t(sample_rate * nch * bytes_per));
    put_u16(f, std::uint16_t(nch * bytes_per));
    put_u16(f, std::uint16_t(8 * bytes_per));
    f.write("data", 4);
    put_u32(f, data_len);

    for (std::size_t i = 0; i < frames; ++i) {
        for (int c = 0; c < nch; ++c) {
            const float v = (*chans[std::size_t(c)])[i];
            if (fmt == WavFormat::Float32) {
                std::uint32_t u;
                std::memcpy(&u, &v, 4);
                put_u32(f, u);
            } else {
                const float clipped = std::clamp(v, -1.0f, 1.0f);
                put_u16(f, std::uint16_t(std::int16_t(std::lrint(clipped * 32767.0f))));
            }
        }
    }
    if (!f) throw FileError("short write: " + path);
}

json read_sidecar(const std::string& path) {
    std::ifstream f(path + ".json");
    if (!f) throw FileError("missing sidecar: " + path + ".json");
    json j;
    f >> j;
    return j;
}

} // namespace

void write_wav(const std::string& path, const AudioBuffer& audio, WavFormat fmt) {
    write_wav_impl(path, {&audio.samples}, audio.sample_rate, fmt);
}

void write_wav_stereo(const std::string& path, const StereoAudio& st, WavFormat fmt) {
    st.validate();
    write_wav_impl(path, {&st.left.samples, &st.right.samples}, st.left.sample_rate, fmt);
}

AudioBuffer read_wav(const std::string& path) {
    WavData w = read_wav_impl(path);
    AudioBuffer out;
    out.sample_rate = w.sample_rate;
    if (w.channels == 1) {
        out.samples = std::move(w.chan[0]);
    } else {
        out.samples.resize(w.chan[0].size());
        for (std::size_t i = 0; i < out.samples.size(); ++i) {
            float acc = 0.0f;
            for (int c = 0; c < w.channels; ++c) acc += w.chan[std::size_t(c)][i];
            out.samples[i] = acc / float(w.channels);
        }
    }
    return out;
}

StereoAudio read_wav_stereo(const std::string& path) {
    WavData w = read_wav_impl(path);
    StereoAudio st;
    st.left.sample_rate = w.sample_rate;
    st.right.sample_rate = w.sample_rate;
    st.left.samples = w.chan[0];
    st.right.samples = w.channels > 1 ? w.chan[1] : w.chan[0];
    return st;
}

void write_iq(const std::string& path, const IqBuffer& iq) {
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw FileError("cannot create IQ file: " + path);
        for (const auto& z : iq.samples) {
            float re = z.real(), im = z.imag();
            std::uint32_t u;
            std::memcpy(&u, &re, 4); put_u32(f, u);
            std::memcpy(&u, &im, 4); put_u32(f, u);
        }
        if (!f) throw FileError("short write: " + path);
    }
    json j{{"sample_rate", iq.sample_rate}, {"center_freq", iq.center_freq},
           {"format", "float32_interleaved"}};
    std::ofstream side(path + ".json");
    if (!side) throw FileError("cannot create sidecar: " + path + ".json");
    side << j.dump(2) << "\n";
}

IqBuffer read_iq(const std::string& path) {
    const json j = read_sidecar(path);
    IqBuffer out;
    out.sample_rate = j.at("sample_rate").get<int>();
    out.center_freq = j.at("center_freq").get<std::int64_t>();

    std::ifstream f(path, std::ios::binary);
    if (!f) throw FileError("cannot open IQ file: " + path);
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    const std::size_t n = data.size() / 8;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        float re, im;
        std::uint32_t u = get_u32(data.data() + i * 8);
        std::memcpy(&re, &u, 4);
        u = get_u32(data.data() + i * 8 + 4);
        std::memcpy(&im, &u, 4);
        out.samples[i] = {re, im};
    }
    return out;
}

void write_switch_rle(const std::string& path, const scatter::SwitchWaveform& w) {
    if (w.levels.empty()) throw InvalidInput("write_switch_rle: empty waveform");

    std::vector<std::uint32_t> runs;
    std::int8_t level = w.levels[0];
    std::uint32_t len = 0;
    for (std::int8_t v : w.levels) {
        if (v == level && len < 0xFFFFFFFFu) {
            ++len;
        } else {
            runs.push_back(len);
            level = v;
            len = 1;
        }
    }
    runs.push_back(len);

    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw FileError("cannot create RLE file: " + path);
        for (std::uint32_t r : runs) put_u32(f, r);
        if (!f) throw FileError("short write: " + path);
    }
    json j{{"sample_rate", w.sample_rate},
           {"f_back_hz", w.f_back},
           {"delta_f_hz", w.delta_f},
           {"first_level", int(w.levels[0])},
           {"num_runs", runs.size()},
           {"total_samples", w.levels.size()},
           {"format", "uint32le_run_lengths"}};
    std::ofstream side(path + ".json");
    if (!side) throw FileError("cannot create sidecar: " + path + ".json");
    side << j.dump(2) << "\n";
}

scatter::SwitchWaveform read_switch_rle(const std::string& path) {
    const json j = read_sidecar(path);
    scatter::SwitchWaveform w;
    w.sample_rate = j.at("sample_rate").get<int>();
    w.f_back = j.at("f_back_hz").get<double>();
    w.delta_f = j.at("delta_f_hz").get<double>();
    std::int8_t level = std::int8_t(j.at("first_level").get<int>());

    std::ifstream f(path, std::ios::binary);
    if (!f) throw FileError("cannot open RLE file: " + path);
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    for (std::size_t i = 0; i + 4 <= data.size(); i += 4) {
        const std::uint32_t run = get_u32(data.data() + i);
        w.levels.insert(w.levels.end(), run, level);
        level = std::int8_t(-level);
    }
    return w;
}

} // namespace fmscatter::io
