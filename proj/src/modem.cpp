#include "fmscatter/modem.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "fmscatter/dsp.hpp"

namespace fmscatter::modem {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Rate-mode-independent preamble: alternating 2-FSK symbols at 100 sym/s.
constexpr double kPreambleTones[2] = {8000.0, 12000.0};
constexpr int kPreambleSymbolRate = 100;
} // namespace

const char* rate_mode_name(RateMode m) {
    switch (m) {
        case RateMode::R100: return "R100";
        case RateMode::R1600: return "R1600";
        case RateMode::R3200: return "R3200";
    }
    return "?";
}

RateMode rate_mode_from_name(const std::string& name) {
    if (name == "R100" || name == "r100" || name == "100") return RateMode::R100;
    if (name == "R1600" || name == "r1600" || name == "1600") return RateMode::R1600;
    if (name == "R3200" || name == "r3200" || name == "3200") return RateMode::R3200;
    throw InvalidInput("unknown rate mode: " + name);
}

ModemConfig ModemConfig::make(RateMode mode, int sample_rate) {
    ModemConfig cfg;
    cfg.rate_mode = mode;
    cfg.sample_rate = sample_rate;
    switch (mode) {
        case RateMode::R100:
            cfg.symbol_rate = 100;
            cfg.bits_per_symbol = 1;
            cfg.tones = {8000.0, 12000.0};
            break;
        case RateMode::R1600:
        case RateMode::R3200:
            cfg.symbol_rate = mode == RateMode::R1600 ? 200 : 400;
            cfg.bits_per_symbol = 8;
            // sixteen tones 800..12800 Hz in four consecutive sets of four
            cfg.tones.resize(16);
            for (int k = 0; k < 16; ++k) cfg.tones[std::size_t(k)] = 800.0 * (k + 1);
            break;
    }
    if (sample_rate % cfg.symbol_rate != 0)
        throw InvalidInput("ModemConfig: sample_rate must be a multiple of the symbol rate");
    cfg.samples_per_symbol = sample_rate / cfg.symbol_rate;
    for (double t : cfg.tones) {
        if (t > 13000.0)
            throw InvalidInput("ModemConfig: tone above the 13 kHz receiver passband");
        if (t >= sample_rate / 2.0)
            throw InvalidInput("ModemConfig: tone above Nyquist");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Encode
// ---------------------------------------------------------------------------

namespace {

// Tone bank with per-tone phase accumulators kept across symbols.
struct ToneBank {
    std::vector<double> phase;
    std::vector<double> dphi;
    explicit ToneBank(const std::vector<double>& tones, int sample_rate)
        : phase(tones.size(), 0.0), dphi(tones.size()) {
        for (std::size_t i = 0; i < tones.size(); ++i)
            dphi[i] = kTwoPi * tones[i] / sample_rate;
    }
    // Add tone `idx` over [out, out+len); phases of idle tones advance too so
    // every tone stays continuous no matter when it is keyed.
    void mix(std::vector<float>& buf, std::size_t out, std::size_t len,
             const std::vector<std::size_t>& active, double amp) {
        for (std::size_t n = 0; n < len; ++n) {
            double v = 0.0;
            for (std::size_t idx : active) v += std::cos(phase[idx] + dphi[idx] * double(n));
            buf[out + n] = float(amp * v);
        }
        for (std::size_t i = 0; i < phase.size(); ++i) {
            phase[i] = std::fmod(phase[i] + dphi[i] * double(len), kTwoPi);
        }
    }
};

void append_symbols(std::vector<float>& buf, ToneBank& bank, const ModemConfig& cfg,
                    const std::vector<std::uint8_t>& bits, std::size_t& out_pos) {
    const std::size_t spb = std::size_t(cfg.samples_per_symbol);
    const std::size_t n_sym = bits.size() / std::size_t(cfg.bits_per_symbol);
    for (std::size_t s = 0; s < n_sym; ++s) {
        std::vector<std::size_t> active;
        if (cfg.rate_mode == RateMode::R100) {
            active.push_back(bits[s] ? 1 : 0);
        } else {
            // 8 bits -> four 2-bit groups, MSB-first; group i keys set i
            for (int g = 0; g < 4; ++g) {
                const int b_hi = bits[s * 8 + std::size_t(2 * g)];
                const int b_lo = bits[s * 8 + std::size_t(2 * g) + 1];
                const int sel = (b_hi << 1) | b_lo;
                active.push_back(std::size_t(4 * g + sel));
            }
        }
        // normalize the summed tones to unit symbol peak
        if (active.size() == 1) {
            bank.mix(buf, out_pos, spb, active, 1.0);
        } else {
            bank.mix(buf, out_pos, spb, active, 1.0);
            float peak = 0.0f;
            for (std::size_t n = 0; n < spb; ++n)
                peak = std::max(peak, std::fabs(buf[out_pos + n]));
            if (peak > 1.0f) {
                const float g = 1.0f / peak;
                for (std::size_t n = 0; n < spb; ++n) buf[out_pos + n] *= g;
            }
        }
        out_pos += spb;
    }
}

} // namespace

AudioBuffer encode(const std::vector<std::uint8_t>& bits, const ModemConfig& cfg) {
    if (bits.size() % std::size_t(cfg.bits_per_symbol) != 0)
        throw InvalidInput("encode: bit count not a multiple of bits per symbol");

    AudioBuffer out;
    out.sample_rate = cfg.sample_rate;
    const std::size_t n_sym = bits.size() / std::size_t(cfg.bits_per_symbol);
    out.samples.assign(n_sym * std::size_t(cfg.samples_per_symbol), 0.0f);

    ToneBank bank(cfg.tones, cfg.sample_rate);
    std::size_t pos = 0;
    append_symbols(out.samples, bank, cfg, bits, pos);
    return out;
}

// ---------------------------------------------------------------------------
// Decode
// ---------------------------------------------------------------------------

namespace {

// Rectangular-window DFT power at one tone over [start, start+len).
double tone_power(const float* x, std::size_t len, double dphi) {
    double re = 0.0, im = 0.0;
    double c = 1.0, s = 0.0;
    const double cd = std::cos(dphi), sd = std::sin(dphi);
    for (std::size_t n = 0; n < len; ++n) {
        re += x[n] * c;
        im -= x[n] * s;
        const double c2 = c * cd - s * sd;
        s = c * sd + s * cd;
        c = c2;
    }
    return re * re + im * im;
}

} // namespace

DecodeResult decode(const AudioBuffer& audio, const ModemConfig& cfg,
                    const SymbolSync& sync) {
    if (audio.sample_rate != cfg.sample_rate)
        throw InvalidInput("decode: audio rate does not match the modem config");
    if (sync.offset < 0 || std::size_t(sync.offset) >= audio.samples.size())
        throw InvalidInput("decode: sync offset outside the buffer");
    const std::size_t spb = std::size_t(cfg.samples_per_symbol);
    const std::size_t avail = audio.samples.size() - std::size_t(sync.offset);
    const std::size_t n_sym = avail / spb;
    if (n_sym == 0)
        throw InvalidInput("decode: no complete symbol after the sync offset");

    std::vector<double> dphi(cfg.tones.size());
    for (std::size_t i = 0; i < cfg.tones.size(); ++i)
        dphi[i] = kTwoPi * cfg.tones[i] / cfg.sample_rate;

    DecodeResult out;
    out.bits.reserve(n_sym * std::size_t(cfg.bits_per_symbol));
    out.confidence.reserve(n_sym);

    const float* base = audio.samples.data() + sync.offset;
    for (std::size_t s = 0; s < n_sym; ++s) {
        const float* win = base + s * spb;
        double margin_db = 1e9;
        if (cfg.rate_mode == RateMode::R100) {
            const double p0 = tone_power(win, spb, dphi[0]);
            const double p1 = tone_power(win, spb, dphi[1]);
            out.bits.push_back(p1 > p0 ? 1 : 0);
            margin_db = db_from_power((std::max(p0, p1) + 1e-30) / (std::min(p0, p1) + 1e-30));
        } else {
            for (int g = 0; g < 4; ++g) {
                double p[4];
                for (int t = 0; t < 4; ++t)
                    p[t] = tone_power(win, spb, dphi[std::size_t(4 * g + t)]);
                int best = 0;
                for (int t = 1; t < 4; ++t)
                    if (p[t] > p[best]) best = t;
                double second = -1.0;
                for (int t = 0; t < 4; ++t)
                    if (t != best) second = std::max(second, p[t]);
                out.bits.push_back(std::uint8_t((best >> 1) & 1));
                out.bits.push_back(std::uint8_t(best & 1));
                margin_db = std::min(margin_db,
                                     db_from_power((p[best] + 1e-30) / (second + 1e-30)));
            }
        }
        out.confidence.push_back(float(margin_db));
    }
    return out;
}

AudioBuffer mrc_combine(const std::vector<AudioBuffer>& copies,
                        const std::vector<SymbolSync>& syncs) {
    if (copies.size() < 2)
        throw InvalidInput("mrc_combine: need at least two copies");
    if (syncs.size() != copies.size())
        throw InvalidInput("mrc_combine: one sync per copy required");

    const int rate = copies[0].sample_rate;
    std::size_t aligned_len = copies[0].samples.size() - std::size_t(syncs[0].offset);
    for (std::size_t i = 0; i < copies.size(); ++i) {
        if (copies[i].sample_rate != rate)
            throw InvalidInput("mrc_combine: sample rates differ");
        if (syncs[i].offset < 0 || std::size_t(syncs[i].offset) > copies[i].samples.size())
            throw InvalidInput("mrc_combine: sync offset outside the buffer");
        const std::size_t len = copies[i].samples.size() - std::size_t(syncs[i].offset);
        if (len != aligned_len)
            throw InvalidInput("mrc_combine: copies misaligned after sync (length mismatch)");
    }

    AudioBuffer out;
    out.sample_rate = rate;
    out.samples.assign(aligned_len, 0.0f);
    for (std::size_t i = 0; i < copies.size(); ++i) {
        const float* src = copies[i].samples.data() + syncs[i].offset;
        for (std::size_t n = 0; n < aligned_len; ++n) out.samples[n] += src[n];
    }
    // keep the nominal [-1, 1] range; decode is scale-invariant
    double peak = out.peak();
    if (peak > 1.0) {
        const float g = float(1.0 / peak);
        for (float& v : out.samples) v *= g;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Framing
// ---------------------------------------------------------------------------

namespace {

std::vector<float> make_preamble(int sample_rate, double seconds) {
    const int spb = sample_rate / kPreambleSymbolRate;
    const int n_sym = int(std::lround(seconds * kPreambleSymbolRate));
    std::vector<float> out(std::size_t(n_sym) * std::size_t(spb));
    double phase[2] = {0.0, 0.0};
    const double dphi[2] = {kTwoPi * kPreambleTones[0] / sample_rate,
                            kTwoPi * kPreambleTones[1] / sample_rate};
    std::size_t pos = 0;
    for (int s = 0; s < n_sym; ++s) {
        const int t = s & 1;
        for (int n = 0; n < spb; ++n)
            out[pos + std::size_t(n)] = float(std::cos(phase[t] + dphi[t] * n));
        phase[0] = std::fmod(phase[0] + dphi[0] * spb, kTwoPi);
        phase[1] = std::fmod(phase[1] + dphi[1] * spb, kTwoPi);
        pos += std::size_t(spb);
    }
    return out;
}

} // namespace

std::vector<std::uint8_t> bytes_to_bits(const std::vector<std::uint8_t>& bytes) {
    std::vector<std::uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (std::uint8_t b : bytes)
        for (int i = 7; i >= 0; --i) bits.push_back((b >> i) & 1);
    return bits;
}

std::vector<std::uint8_t> bits_to_bytes(const std::vector<std::uint8_t>& bits) {
    std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
    for (std::size_t i = 0; i < bytes.size() * 8; ++i)
        bytes[i / 8] = std::uint8_t((bytes[i / 8] << 1) | (bits[i] & 1));
    return bytes;
}

std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed) {
    dsp::SplitMix64 rng(seed);
    std::vector<std::uint8_t> bits(count);
    for (std::size_t i = 0; i < count; i += 64) {
        std::uint64_t w = rng.next();
        for (std::size_t j = 0; j < 64 && i + j < count; ++j)
            bits[i + j] = std::uint8_t((w >> j) & 1);
    }
    return bits;
}

std::size_t count_bit_errors(const std::vector<std::uint8_t>& a,
                             const std::vector<std::uint8_t>& b) {
    std::size_t errors = 0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) errors += (a[i] != b[i]) ? 1 : 0;
    errors += std::max(a.size(), b.size()) - n; // missing bits count as errors
    return errors;
}

AudioBuffer frame_encode(const std::vector<std::uint8_t>& payload,
                         const ModemConfig& cfg, const FrameOptions& opt) {
    if (payload.size() > 0xFFFF)
        throw InvalidInput("frame_encode: payload exceeds the 16-bit length field");

    std::vector<std::uint8_t> header = {std::uint8_t(payload.size() >> 8),
                                        std::uint8_t(payload.size() & 0xFF)};
    std::vector<std::uint8_t> body_bits = bytes_to_bits(header);
    const auto payload_bits = bytes_to_bits(payload);
    body_bits.insert(body_bits.end(), payload_bits.begin(), payload_bits.end());

    const std::vector<float> preamble = make_preamble(cfg.sample_rate, opt.preamble_sec);
    const AudioBuffer body = encode(body_bits, cfg);

    AudioBuffer out;
    out.sample_rate = cfg.sample_rate;
    const std::size_t pilot_lead = opt.coop_pilot
        ? std::size_t(std::lround(opt.pilot_preamble_sec * cfg.sample_rate)) : 0;
    out.samples.reserve(pilot_lead + preamble.size() + body.samples.size());
    out.samples.assign(pilot_lead, 0.0f);
    out.samples.insert(out.samples.end(), preamble.begin(), preamble.end());
    out.samples.insert(out.samples.end(), body.samples.begin(), body.samples.end());

    if (opt.coop_pilot) {
        // 13 kHz calibration tone: alone during the lead-in, then kept mixed
        // under the frame; content shrinks to leave pilot headroom.
        const double dphi = kTwoPi * opt.pilot_hz / cfg.sample_rate;
        const float content_gain = float(1.0 - opt.pilot_amplitude);
        double phase = 0.0;
        for (std::size_t i = 0; i < out.samples.size(); ++i) {
            if (i >= pilot_lead) out.samples[i] *= content_gain;
            out.samples[i] += float(opt.pilot_amplitude * std::cos(phase));
            phase += dphi;
            if (phase > kTwoPi) phase -= kTwoPi;
        }
    }
    return out;
}

FrameDecodeResult frame_decode(const AudioBuffer& audio, const ModemConfig& cfg,
                               const FrameOptions& opt, double sync_threshold) {
    if (audio.sample_rate != cfg.sample_rate)
        throw InvalidInput("frame_decode: audio rate does not match the modem config");

    const std::vector<float> preamble = make_preamble(cfg.sample_rate, opt.preamble_sec);
    const dsp::TemplateMatch match = dsp::match_template(audio.samples, preamble);
    if (match.offset < 0 || match.score < sync_threshold)
        throw SyncError("frame_decode: preamble not found above correlation threshold");

    FrameDecodeResult out;
    out.frame_start = match.offset;
    out.preamble_score = match.score;
    out.payload_sync.offset = match.offset + std::int64_t(preamble.size());

    const std::size_t spb = std::size_t(cfg.samples_per_symbol);
    const std::size_t avail = audio.samples.size() > std::size_t(out.payload_sync.offset)
        ? audio.samples.size() - std::size_t(out.payload_sync.offset) : 0;
    const std::size_t header_syms = std::size_t(16 / cfg.bits_per_symbol);
    if (avail / spb < header_syms)
        throw SyncError("frame_decode: buffer ends before the length field");

    DecodeResult all = decode(audio, cfg, out.payload_sync);
    out.length_field = (std::size_t(all.bits[0]) << 15);
    for (std::size_t i = 1; i < 16; ++i)
        out.length_field = out.length_field | (std::size_t(all.bits[i]) << (15 - i));

    const std::size_t want_bits = out.length_field * 8;
    const std::size_t have_bits = all.bits.size() - 16;
    const std::size_t take_bits = std::min(want_bits, have_bits);
    out.truncated = take_bits < want_bits;

    std::vector<std::uint8_t> payload_bits(all.bits.begin() + 16,
                                           all.bits.begin() + 16 + std::ptrdiff_t(take_bits - take_bits % 8));
    out.payload = bits_to_bytes(payload_bits);
    out.confidence = std::move(all.confidence);
    return out;
}

} // namespace fmscatter::modem
