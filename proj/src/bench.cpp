#include "fmscatter/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fmscatter/dsp.hpp"
#include "fmscatter/fmcore.hpp"
#include "fmscatter/io.hpp"
#include "fmscatter/multiplex.hpp"
#include "fmscatter/rxmodes.hpp"
#include "fmscatter/scatter.hpp"

namespace fmscatter::bench {

namespace {

using json = nlohmann::json;
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

AudioBuffer trim_edges(const AudioBuffer& a, double seconds) {
    const std::size_t cut = std::size_t(seconds * a.sample_rate);
    AudioBuffer out;
    out.sample_rate = a.sample_rate;
    if (a.samples.size() > 2 * cut)
        out.samples.assign(a.samples.begin() + std::ptrdiff_t(cut),
                           a.samples.end() - std::ptrdiff_t(cut));
    else
        out.samples = a.samples;
    return out;
}

void add_awgn(AudioBuffer& a, double noise_power, std::uint64_t seed) {
    if (noise_power <= 0) return;
    dsp::SplitMix64 rng(seed);
    const double sigma = std::sqrt(noise_power);
    for (float& v : a.samples) v += float(sigma * rng.gaussian());
}

// Run `fn(i)` for i in [0, n); results land by index so ordering never
// depends on scheduling.
template <typename Fn>
void parallel_points(std::size_t n, int jobs, Fn&& fn) {
    jobs = std::max(1, std::min<int>(jobs, int(n)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(jobs));
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace

// ---------------------------------------------------------------------------
// Synthetic ambience
// ---------------------------------------------------------------------------

AudioBuffer make_speech(double seconds, std::uint64_t seed, int rate, double peak) {
    const std::size_t n = std::size_t(seconds * rate);
    std::vector<float> noise(n);
    dsp::SplitMix64 rng(seed);
    for (float& v : noise) v = float(rng.gaussian());

    const auto bp = dsp::design_bandpass(100.0, 4000.0, 300.0, rate, 60.0);
    std::vector<float> shaped = dsp::fir_apply(noise, bp);

    // syllabic envelope so segments are non-stationary like talk radio
    AudioBuffer out;
    out.sample_rate = rate;
    out.samples.resize(n);
    const double f_syl = 2.6 + rng.uniform();
    const double phi = kTwoPi * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / rate;
        const double env = 0.35 + 0.65 * (0.5 + 0.5 * std::sin(kTwoPi * f_syl * t + phi));
        out.samples[i] = float(shaped[i] * env);
    }
    out.normalize(peak);
    return out;
}

AudioBuffer make_music(double seconds, std::uint64_t seed, int rate, double peak) {
    const std::size_t n = std::size_t(seconds * rate);
    AudioBuffer out;
    out.sample_rate = rate;
    out.samples.assign(n, 0.0f);

    dsp::SplitMix64 rng(seed);
    const int n_tones = 6;
    for (int t = 0; t < n_tones; ++t) {
        // stay below 10 kHz so the 13 kHz calibration region is clean
        const double f = 200.0 + rng.uniform() * 9000.0;
        const double amp = 0.3 + 0.7 * rng.uniform();
        const double phi = kTwoPi * rng.uniform();
        const double trem = 0.5 + 4.0 * rng.uniform();
        const double dphi = kTwoPi * f / rate;
        for (std::size_t i = 0; i < n; ++i) {
            const double tsec = double(i) / rate;
            const double env = 0.75 + 0.25 * std::sin(kTwoPi * trem * tsec);
            out.samples[i] += float(amp * env * std::cos(dphi * double(i) + phi));
        }
    }
    out.normalize(peak);
    return out;
}

AudioBuffer make_tone(double seconds, double freq_hz, double amplitude, int rate) {
    const std::size_t n = std::size_t(seconds * rate);
    AudioBuffer out;
    out.sample_rate = rate;
    out.samples.resize(n);
    const double dphi = kTwoPi * freq_hz / rate;
    for (std::size_t i = 0; i < n; ++i)
        out.samples[i] = float(amplitude * std::cos(dphi * double(i)));
    return out;
}

AudioBuffer make_silence(double seconds, int rate) {
    AudioBuffer out;
    out.sample_rate = rate;
    out.samples.assign(std::size_t(seconds * rate), 0.0f);
    return out;
}

AudioBuffer load_ambient(const std::string& source, double seconds,
                         std::uint64_t seed, int rate) {
    if (source == "synthetic:speech") return make_speech(seconds, seed, rate);
    if (source == "synthetic:music") return make_music(seconds, seed, rate);
    if (source == "synthetic:silence") return make_silence(seconds, rate);
    if (source.rfind("synthetic:tone:", 0) == 0) {
        const double f = std::stod(source.substr(15));
        return make_tone(seconds, f, 0.9, rate);
    }
    if (source.rfind("synthetic:", 0) == 0)
        throw InvalidInput("unknown synthetic ambience: " + source);
    AudioBuffer wav = io::read_wav(source);
    AudioBuffer out = dsp::resample(wav, rate);
    const std::size_t want = std::size_t(seconds * rate);
    if (out.samples.size() > want) out.samples.resize(want);
    while (out.samples.size() < want && !wav.samples.empty()) {
        // loop short clips, like a station replaying a captured segment
        const std::size_t take = std::min(want - out.samples.size(), out.samples.size());
        out.samples.insert(out.samples.end(), out.samples.begin(),
                           out.samples.begin() + std::ptrdiff_t(take));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quality metric
// ---------------------------------------------------------------------------

QualityReport audio_quality(const AudioBuffer& reference, const AudioBuffer& test,
                            double max_lag_sec) {
    if (reference.sample_rate != test.sample_rate)
        throw InvalidInput("audio_quality: sample rates differ");
    if (reference.samples.empty() || test.samples.empty())
        throw InvalidInput("audio_quality: empty buffer");

    const int rate = reference.sample_rate;
    const std::int64_t max_lag = std::int64_t(max_lag_sec * rate);
    if (std::llabs(std::int64_t(reference.samples.size()) -
                   std::int64_t(test.samples.size())) > max_lag)
        throw InvalidInput("audio_quality: length mismatch beyond the alignment window");

    const auto cc = dsp::cross_correlate(reference.samples, test.samples);
    double best = -std::numeric_limits<double>::infinity();
    std::int64_t lag = 0;
    for (std::size_t i = 0; i < cc.values.size(); ++i) {
        const std::int64_t l = cc.lag_of(i);
        if (l < -max_lag || l > max_lag) continue;
        if (cc.values[i] > best) {
            best = cc.values[i];
            lag = l;
        }
    }

    // overlap after shifting test back by `lag`
    std::size_t r0 = 0, t0 = 0;
    if (lag >= 0) t0 = std::size_t(lag);
    else r0 = std::size_t(-lag);
    const std::size_t len = std::min(reference.samples.size() - r0,
                                     test.samples.size() - t0);
    std::vector<float> ref(reference.samples.begin() + std::ptrdiff_t(r0),
                           reference.samples.begin() + std::ptrdiff_t(r0 + len));
    std::vector<float> tst(test.samples.begin() + std::ptrdiff_t(t0),
                           test.samples.begin() + std::ptrdiff_t(t0 + len));

    const auto fit = dsp::fit_linear(ref, tst);

    QualityReport q;
    q.lag = lag;
    q.correlation = fit.correlation;

    double fit_pow = 0.0, res_pow = 0.0;
    std::vector<double> seg_snrs;
    const std::size_t seg = std::size_t(0.030 * rate);
    double ref_total = 0.0;
    for (float v : ref) ref_total += double(v) * v;
    const double ref_mean = len ? ref_total / double(len) : 0.0;

    for (std::size_t s = 0; s + 1 <= len; s += seg) {
        const std::size_t e = std::min(s + seg, len);
        double fp = 0.0, rp = 0.0, re = 0.0;
        for (std::size_t i = s; i < e; ++i) {
            const double f = fit.scale * ref[i] + fit.offset;
            fp += f * f;
            const double r = tst[i] - f;
            rp += r * r;
            re += double(ref[i]) * ref[i];
        }
        fit_pow += fp;
        res_pow += rp;
        if (e - s == seg && re > 1e-6 * ref_mean * double(seg)) {
            const double snr = (rp > 0) ? db_from_power(fp / rp) : 35.0;
            seg_snrs.push_back(std::clamp(snr, -10.0, 35.0));
        }
    }

    q.snr_db = res_pow > 0 ? db_from_power(fit_pow / res_pow)
                           : std::numeric_limits<double>::infinity();
    if (!seg_snrs.empty()) {
        double acc = 0.0;
        for (double v : seg_snrs) acc += v;
        q.segmental_snr_db = acc / double(seg_snrs.size());
    }
    return q;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

Scenario scenario_from_name(const std::string& name) {
    if (name == "freq_response" || name == "freq-response") return Scenario::FreqResponse;
    if (name == "ber_sweep" || name == "ber") return Scenario::BerSweep;
    if (name == "mrc") return Scenario::Mrc;
    if (name == "stereo_compare" || name == "stereo") return Scenario::StereoCompare;
    if (name == "coop") return Scenario::Coop;
    throw InvalidInput("unknown scenario: " + name);
}

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::FreqResponse: return "freq_response";
        case Scenario::BerSweep: return "ber_sweep";
        case Scenario::Mrc: return "mrc";
        case Scenario::StereoCompare: return "stereo_compare";
        case Scenario::Coop: return "coop";
    }
    return "?";
}

ExperimentConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw InvalidInput(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    if (j.contains("scenario")) c.scenario = scenario_from_name(j["scenario"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("ambient")) c.ambient = j["ambient"].get<std::string>();
    if (j.contains("rf_rate")) c.rf_rate = j["rf_rate"].get<int>();
    if (j.contains("carrier")) c.carrier = j["carrier"].get<std::int64_t>();
    if (j.contains("f_back")) c.f_back = j["f_back"].get<double>();
    if (j.contains("delta_f")) c.delta_f = j["delta_f"].get<double>();
    if (j.contains("reflectivity")) c.reflectivity = j["reflectivity"].get<double>();
    if (j.contains("noise_floor_dbm")) c.noise_floor_dbm = j["noise_floor_dbm"].get<double>();
    if (j.contains("rx_power_dbm")) c.rx_power_dbm = j["rx_power_dbm"].get<std::vector<double>>();
    if (j.contains("channel")) {
        const std::string ch = j["channel"].get<std::string>();
        if (ch == "rf") c.channel = ChannelModel::Rf;
        else if (ch == "audio") c.channel = ChannelModel::Audio;
        else throw InvalidInput("config: channel must be rf or audio");
    }
    if (j.contains("audio_snr_db")) c.audio_snr_db = j["audio_snr_db"].get<std::vector<double>>();
    if (j.contains("data_to_ambient_db")) c.data_to_ambient_db = j["data_to_ambient_db"].get<double>();
    if (j.contains("rate_modes")) {
        c.rate_modes.clear();
        for (const auto& m : j["rate_modes"])
            c.rate_modes.push_back(modem::rate_mode_from_name(m.get<std::string>()));
    }
    if (j.contains("bits_per_point")) c.bits_per_point = j["bits_per_point"].get<std::size_t>();
    if (j.contains("audio_rate")) c.audio_rate = j["audio_rate"].get<int>();
    if (j.contains("tone_hz")) c.tone_hz = j["tone_hz"].get<std::vector<double>>();
    if (j.contains("tone_amplitude")) c.tone_amplitude = j["tone_amplitude"].get<double>();
    if (j.contains("audio_lowpass_hz")) c.audio_lowpass_hz = j["audio_lowpass_hz"].get<double>();
    if (j.contains("mrc_max_copies")) c.mrc_max_copies = j["mrc_max_copies"].get<int>();
    if (j.contains("coop_max_delay_sec")) c.coop_max_delay_sec = j["coop_max_delay_sec"].get<double>();
    if (j.contains("coop_gains")) c.coop_gains = j["coop_gains"].get<std::vector<double>>();
    if (j.contains("pilot_amplitude")) c.pilot_amplitude = j["pilot_amplitude"].get<double>();
    if (j.contains("duration_sec")) c.duration_sec = j["duration_sec"].get<double>();
    if (j.contains("emit_wav")) c.emit_wav = j["emit_wav"].get<bool>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
    if (c.rx_power_dbm.empty()) throw InvalidInput("config: rx_power_dbm must be non-empty");
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = scenario_name(c.scenario);
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["ambient"] = c.ambient;
    j["rf_rate"] = c.rf_rate;
    j["carrier"] = c.carrier;
    j["f_back"] = c.f_back;
    j["delta_f"] = c.delta_f;
    j["reflectivity"] = c.reflectivity;
    j["noise_floor_dbm"] = c.noise_floor_dbm;
    j["rx_power_dbm"] = c.rx_power_dbm;
    j["channel"] = c.channel == ChannelModel::Rf ? "rf" : "audio";
    j["audio_snr_db"] = c.audio_snr_db;
    j["data_to_ambient_db"] = c.data_to_ambient_db;
    std::vector<std::string> modes;
    for (auto m : c.rate_modes) modes.push_back(modem::rate_mode_name(m));
    j["rate_modes"] = modes;
    j["bits_per_point"] = c.bits_per_point;
    j["audio_rate"] = c.audio_rate;
    j["tone_hz"] = c.tone_hz;
    j["tone_amplitude"] = c.tone_amplitude;
    j["audio_lowpass_hz"] = c.audio_lowpass_hz;
    j["mrc_max_copies"] = c.mrc_max_copies;
    j["coop_max_delay_sec"] = c.coop_max_delay_sec;
    j["coop_gains"] = c.coop_gains;
    j["pilot_amplitude"] = c.pilot_amplitude;
    j["duration_sec"] = c.duration_sec;
    j["emit_wav"] = c.emit_wav;
    j["jobs"] = c.jobs;
    return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string s = config_to_json(cfg);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Shared chain pieces
// ---------------------------------------------------------------------------

namespace {

// Receiver audio path: overlay receive plus the configurable low-pass that
// stands in for the phone's audio chain.
AudioBuffer receiver_audio(const IqBuffer& scene, std::int64_t f_target,
                           int audio_rate, double audio_lowpass_hz) {
    rxmodes::ReceiveOptions opt;
    opt.audio_rate = audio_rate;
    AudioBuffer audio = rxmodes::overlay_receive(scene, f_target, opt).audio;
    if (audio_lowpass_hz > 0 && audio_lowpass_hz < audio_rate / 2.0 - 1000.0) {
        const auto lp = dsp::design_lowpass(audio_lowpass_hz, 1800.0, audio_rate, 60.0);
        audio.samples = dsp::fir_apply(audio.samples, lp);
    }
    return audio;
}

// Mono-station ambience as a deviation-budget share (peak <= share).
MultiplexBaseband ambient_mpx_mono(const ExperimentConfig& cfg, std::uint64_t seed,
                                   double share) {
    AudioBuffer speech = load_ambient(cfg.ambient, cfg.duration_sec, seed, cfg.audio_rate);
    speech.normalize(1.0);
    StereoAudio st{speech, speech};
    multiplex::MultiplexWeights w;
    w.mono = share;
    w.pilot = 0.0;
    w.stereo = 0.0;
    return multiplex::compose_multiplex(st, w, /*stereo_mode=*/false);
}

} // namespace

// ---------------------------------------------------------------------------
// Frequency response
// ---------------------------------------------------------------------------

ExperimentResult run_freq_response(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.config = cfg;
    res.hash = config_hash(cfg);

    std::vector<double> tones = cfg.tone_hz;
    if (tones.empty())
        tones = {500, 1000, 2000, 3000, 4000, 6000, 8000, 10000, 11000,
                 12000, 13000, 14000, 15000};
    res.freq_response.resize(tones.size());

    // ambient station transmitting silence: a bare carrier at f_c
    const double dur = cfg.duration_sec;
    const std::size_t n_rf = std::size_t(dur * cfg.rf_rate);
    IqBuffer carrier;
    carrier.sample_rate = cfg.rf_rate;
    carrier.center_freq = cfg.carrier;
    carrier.samples.assign(n_rf, std::complex<float>(1.0f, 0.0f));

    fmcore::LinkBudget budget;
    budget.rx_power_dbm = cfg.rx_power_dbm.front();
    budget.noise_floor_dbm = cfg.noise_floor_dbm;

    parallel_points(tones.size(), cfg.jobs, [&](std::size_t i) {
        FreqResponsePoint pt;
        pt.tone_hz = tones[i];
        const std::uint64_t seed_i = dsp::derive_seed(cfg.seed, i);

        AudioBuffer tone = make_tone(dur, tones[i], cfg.tone_amplitude, cfg.audio_rate);
        const IqBuffer scene = scatter::backscatter_link(
            carrier, tone.samples, cfg.audio_rate, cfg.f_back, cfg.delta_f,
            budget, seed_i, cfg.reflectivity);
        AudioBuffer audio = receiver_audio(scene, cfg.carrier + std::int64_t(cfg.f_back),
                                           cfg.audio_rate, cfg.audio_lowpass_hz);
        audio = trim_edges(audio, 0.1);

        // SNR as the ratio of tone power to everything else in the audio band
        const double p_tone = dsp::band_power(audio.samples, cfg.audio_rate,
                                              tones[i] - 50.0, tones[i] + 50.0);
        const double p_all = dsp::band_power(audio.samples, cfg.audio_rate,
                                             50.0, cfg.audio_rate / 2.0 * 0.999);
        const double p_rest = std::max(p_all - p_tone, 0.0);
        double snr = db_from_power((p_tone + 1e-30) / (p_rest + 1e-30));
        pt.snr_db = std::max(snr, -100.0); // floor sentinel for dead tones
        res.freq_response[i] = pt;
    });
    return res;
}

// ---------------------------------------------------------------------------
// BER sweep
// ---------------------------------------------------------------------------

namespace {

struct BerOutcome {
    std::size_t n_bits = 0;
    std::size_t n_errors = 0;
    int sync_failures = 0;
};

// Frame the payload, pass the audio through `channel`, decode, count.
template <typename ChannelFn>
BerOutcome run_frame_ber(const modem::ModemConfig& mc, std::size_t n_bits,
                         std::uint64_t seed, ChannelFn&& channel) {
    const std::size_t n_bytes = std::max<std::size_t>(1, n_bits / 8);
    const auto payload_bits = modem::random_bits(n_bytes * 8, seed);
    const auto payload = modem::bits_to_bytes(payload_bits);

    const AudioBuffer tx = modem::frame_encode(payload, mc);
    const AudioBuffer rx = channel(tx);

    BerOutcome out;
    out.n_bits = payload_bits.size();
    try {
        const auto dec = modem::frame_decode(rx, mc);
        const auto dec_bits = modem::bytes_to_bits(dec.payload);
        out.n_errors = modem::count_bit_errors(payload_bits, dec_bits);
    } catch (const SyncError&) {
        out.sync_failures = 1;
        out.n_errors = out.n_bits; // lost frame counts as all-bits errors
    }
    return out;
}

} // namespace

ExperimentResult run_ber_sweep(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.config = cfg;
    res.hash = config_hash(cfg);

    const std::vector<double>& controls =
        cfg.channel == ChannelModel::Rf ? cfg.rx_power_dbm : cfg.audio_snr_db;
    const std::size_t n_points = cfg.rate_modes.size() * controls.size();
    res.ber.resize(n_points);

    parallel_points(n_points, cfg.jobs, [&](std::size_t idx) {
        const std::size_t mi = idx / controls.size();
        const std::size_t ci = idx % controls.size();
        const modem::RateMode mode = cfg.rate_modes[mi];
        const double control = controls[ci];
        const std::uint64_t seed_i = dsp::derive_seed(cfg.seed, idx);
        const auto mc = modem::ModemConfig::make(mode, cfg.audio_rate);

        BerOutcome oc;
        if (cfg.channel == ChannelModel::Audio) {
            oc = run_frame_ber(mc, cfg.bits_per_point, seed_i, [&](const AudioBuffer& tx) {
                // pad with noise-only lead/tail so sync is searched, not given
                const std::size_t pad = std::size_t(0.25 * cfg.audio_rate);
                AudioBuffer rx;
                rx.sample_rate = cfg.audio_rate;
                rx.samples.assign(pad, 0.0f);
                rx.samples.insert(rx.samples.end(), tx.samples.begin(), tx.samples.end());
                rx.samples.insert(rx.samples.end(), pad, 0.0f);
                const double noise_p = tx.mean_power() / power_from_db(control);
                add_awgn(rx, noise_p, dsp::derive_seed(seed_i, 1));
                return rx;
            });
        } else {
            oc = run_frame_ber(mc, cfg.bits_per_point, seed_i, [&](const AudioBuffer& tx) {
                // overlay: data in the mono stream on top of station audio
                const double data_share = 0.40 * amp_from_db(cfg.data_to_ambient_db / 2.0);
                const double ambient_share = std::min(0.55, 0.95 - data_share);
                const double dur = tx.duration_sec() + 0.5;
                ExperimentConfig acfg = cfg;
                acfg.duration_sec = dur;
                const MultiplexBaseband mpx =
                    ambient_mpx_mono(acfg, dsp::derive_seed(seed_i, 2), ambient_share);
                const IqBuffer ambient = fmcore::fm_modulate(
                    mpx, {cfg.delta_f, cfg.carrier}, cfg.rf_rate);

                AudioBuffer fm_back;
                fm_back.sample_rate = cfg.audio_rate;
                const std::size_t lead = std::size_t(0.25 * cfg.audio_rate);
                fm_back.samples.assign(lead, 0.0f);
                for (float v : tx.samples)
                    fm_back.samples.push_back(float(v * data_share));
                fm_back.samples.resize(std::size_t(dur * cfg.audio_rate), 0.0f);

                fmcore::LinkBudget budget;
                budget.rx_power_dbm = control;
                budget.noise_floor_dbm = cfg.noise_floor_dbm;
                const IqBuffer scene = scatter::backscatter_link(
                    ambient, fm_back.samples, cfg.audio_rate, cfg.f_back,
                    cfg.delta_f, budget, dsp::derive_seed(seed_i, 3), cfg.reflectivity);
                return receiver_audio(scene, cfg.carrier + std::int64_t(cfg.f_back),
                                      cfg.audio_rate, cfg.audio_lowpass_hz);
            });
        }

        BerPoint pt;
        pt.rate_mode = mode;
        pt.control_value = control;
        pt.n_bits = oc.n_bits;
        pt.n_errors = oc.n_errors;
        pt.ber = oc.n_bits ? double(oc.n_errors) / double(oc.n_bits) : 0.0;
        pt.sync_failures = oc.sync_failures;
        res.ber[idx] = pt;
    });
    return res;
}

// ---------------------------------------------------------------------------
// Diversity combining
// ---------------------------------------------------------------------------

ExperimentResult run_mrc(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.config = cfg;
    res.hash = config_hash(cfg);

    const auto mc = modem::ModemConfig::make(cfg.rate_modes.front(), cfg.audio_rate);
    const std::size_t n_bytes = std::max<std::size_t>(1, cfg.bits_per_point / 8);
    const auto payload_bits = modem::random_bits(n_bytes * 8, dsp::derive_seed(cfg.seed, 0));
    const auto payload = modem::bits_to_bytes(payload_bits);
    const AudioBuffer tx = modem::frame_encode(payload, mc);

    // interference fixture: data over independent ambience segments
    const double data_amp = amp_from_db(cfg.data_to_ambient_db / 2.0);
    const int max_n = std::max(1, cfg.mrc_max_copies);
    std::vector<AudioBuffer> copies;
    std::vector<modem::SymbolSync> syncs;
    for (int i = 0; i < max_n; ++i) {
        AudioBuffer amb = load_ambient(cfg.ambient, tx.duration_sec(),
                                       dsp::derive_seed(cfg.seed, 100 + std::uint64_t(i)),
                                       cfg.audio_rate);
        AudioBuffer copy;
        copy.sample_rate = cfg.audio_rate;
        copy.samples.resize(tx.samples.size());
        for (std::size_t n = 0; n < tx.samples.size(); ++n) {
            const float a = n < amb.samples.size() ? amb.samples[n] : 0.0f;
            copy.samples[n] = float(tx.samples[n] * data_amp) + a;
        }
        copies.push_back(std::move(copy));
        syncs.push_back({0});
    }

    // white-noise fixture for the measured SNR gain
    const double wn_power = tx.mean_power() / power_from_db(10.0);
    std::vector<AudioBuffer> noisy;
    for (int i = 0; i < max_n; ++i) {
        AudioBuffer c = tx;
        add_awgn(c, wn_power, dsp::derive_seed(cfg.seed, 200 + std::uint64_t(i)));
        noisy.push_back(std::move(c));
    }
    const auto snr_of = [&](const AudioBuffer& sig) {
        const auto fit = dsp::fit_linear(tx.samples, sig.samples);
        return -fit.residual_db; // fit power over residual power
    };
    const double snr_single = snr_of(noisy.front());

    res.mrc.resize(std::size_t(max_n));
    for (int n = 1; n <= max_n; ++n) {
        MrcPoint pt;
        pt.n_copies = n;
        AudioBuffer combined;
        if (n == 1) {
            combined = copies.front();
        } else {
            combined = modem::mrc_combine(
                std::vector<AudioBuffer>(copies.begin(), copies.begin() + n),
                std::vector<modem::SymbolSync>(syncs.begin(), syncs.begin() + n));
        }
        try {
            const auto dec = modem::frame_decode(combined, mc);
            pt.n_errors = modem::count_bit_errors(payload_bits, modem::bytes_to_bits(dec.payload));
        } catch (const SyncError&) {
            pt.n_errors = payload_bits.size();
        }
        pt.n_bits = payload_bits.size();
        pt.ber = double(pt.n_errors) / double(pt.n_bits);

        if (n == 1) {
            pt.snr_gain_db = 0.0;
        } else {
            AudioBuffer comb_n = modem::mrc_combine(
                std::vector<AudioBuffer>(noisy.begin(), noisy.begin() + n),
                std::vector<modem::SymbolSync>(std::size_t(n), modem::SymbolSync{0}));
            pt.snr_gain_db = snr_of(comb_n) - snr_single;
        }
        res.mrc[std::size_t(n - 1)] = pt;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Stereo vs overlay comparison
// ---------------------------------------------------------------------------

namespace {

struct StereoPaths {
    IqBuffer scene;        // with data
    IqBuffer scene_idle;   // content-free, for the interference metric
};

} // namespace

ExperimentResult run_stereo_compare(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.config = cfg;
    res.hash = config_hash(cfg);

    const auto mc = modem::ModemConfig::make(cfg.rate_modes.front(), cfg.audio_rate);
    const std::size_t n_bytes = std::max<std::size_t>(1, cfg.bits_per_point / 8);
    const auto payload_bits = modem::random_bits(n_bytes * 8, dsp::derive_seed(cfg.seed, 0));
    const auto payload = modem::bits_to_bytes(payload_bits);
    const AudioBuffer frame = modem::frame_encode(payload, mc);
    const double dur = frame.duration_sec() + 0.6;

    fmcore::LinkBudget budget;
    budget.rx_power_dbm = cfg.rx_power_dbm.front();
    budget.noise_floor_dbm = cfg.noise_floor_dbm;

    const double back_share = 0.45;    // backscatter share of the deviation budget
    const double ambient_share = 0.5;

    // frame audio padded with a short lead
    AudioBuffer frame_padded;
    frame_padded.sample_rate = cfg.audio_rate;
    {
        const std::size_t lead = std::size_t(0.3 * cfg.audio_rate);
        frame_padded.samples.assign(lead, 0.0f);
        frame_padded.samples.insert(frame_padded.samples.end(), frame.samples.begin(),
                                    frame.samples.end());
        frame_padded.samples.resize(std::size_t(dur * cfg.audio_rate), 0.0f);
    }
    AudioBuffer zero_content = make_silence(dur, cfg.audio_rate);

    const std::vector<std::string> modes = {"overlay", "stereo_mono", "stereo_news"};
    res.stereo.resize(modes.size());

    parallel_points(modes.size(), cfg.jobs, [&](std::size_t mi) {
        const std::string& mode = modes[mi];
        const std::uint64_t seed_i = dsp::derive_seed(cfg.seed, 10 + mi);

        // ambience: mono station for overlay/stereo_mono, L=R news station
        // (pilot on, empty stereo band) for stereo_news
        ExperimentConfig acfg = cfg;
        acfg.duration_sec = dur;
        MultiplexBaseband amb_mpx;
        if (mode == "stereo_news") {
            AudioBuffer speech = load_ambient(cfg.ambient, dur, seed_i, cfg.audio_rate);
            speech.normalize(1.0);
            StereoAudio st{speech, speech};
            multiplex::MultiplexWeights w;
            w.mono = ambient_share * 0.9;
            w.pilot = ambient_share * 0.1;
            w.stereo = ambient_share * 0.9;
            amb_mpx = multiplex::compose_multiplex(st, w, true);
        } else {
            amb_mpx = ambient_mpx_mono(acfg, seed_i, ambient_share);
        }
        const IqBuffer ambient = fmcore::fm_modulate(amb_mpx, {cfg.delta_f, cfg.carrier},
                                                     cfg.rf_rate);

        // backscatter baseband for this mode
        const auto make_back = [&](const AudioBuffer& content) {
            std::vector<float> bb;
            int bb_rate = 0;
            if (mode == "overlay") {
                bb.resize(content.samples.size());
                for (std::size_t i = 0; i < bb.size(); ++i)
                    bb[i] = float(content.samples[i] * back_share);
                bb_rate = content.sample_rate;
            } else {
                const bool insert_pilot = mode == "stereo_mono";
                MultiplexBaseband m = rxmodes::stereo_backscatter_compose(
                    content, insert_pilot, 192000, 0.9, cfg.pilot_amplitude);
                bb.resize(m.samples.size());
                for (std::size_t i = 0; i < bb.size(); ++i)
                    bb[i] = float(m.samples[i] * back_share);
                bb_rate = m.sample_rate;
            }
            return std::pair<std::vector<float>, int>(std::move(bb), bb_rate);
        };

        StereoComparePoint pt;
        pt.mode = mode;
        pt.status = "ok";
        pt.n_bits = payload_bits.size();

        const std::int64_t f_target = cfg.carrier + std::int64_t(cfg.f_back);
        try {
            // interference: content-free run, power of the decoded path output
            {
                auto [bb, bb_rate] = make_back(zero_content);
                const IqBuffer scene = scatter::backscatter_link(
                    ambient, bb, bb_rate, cfg.f_back, cfg.delta_f, budget,
                    dsp::derive_seed(seed_i, 1), cfg.reflectivity);
                rxmodes::ReceiveOptions opt;
                opt.audio_rate = cfg.audio_rate;
                const auto out = rxmodes::overlay_receive(scene, f_target, opt);
                AudioBuffer path_audio;
                if (mode == "overlay") path_audio = out.audio;
                else path_audio = rxmodes::stereo_backscatter_receive(out);
                path_audio = trim_edges(path_audio, 0.15);
                pt.interference_db = db_from_power(
                    dsp::band_power(path_audio.samples, cfg.audio_rate, 50.0, 13000.0) + 1e-30);
            }
            // data run
            {
                auto [bb, bb_rate] = make_back(frame_padded);
                const IqBuffer scene = scatter::backscatter_link(
                    ambient, bb, bb_rate, cfg.f_back, cfg.delta_f, budget,
                    dsp::derive_seed(seed_i, 2), cfg.reflectivity);
                rxmodes::ReceiveOptions opt;
                opt.audio_rate = cfg.audio_rate;
                const auto out = rxmodes::overlay_receive(scene, f_target, opt);
                AudioBuffer path_audio;
                if (mode == "overlay") path_audio = out.audio;
                else path_audio = rxmodes::stereo_backscatter_receive(out);
                const auto dec = modem::frame_decode(path_audio, mc);
                pt.n_errors = modem::count_bit_errors(payload_bits,
                                                      modem::bytes_to_bits(dec.payload));
            }
        } catch (const PilotAbsentError&) {
            pt.status = "pilot_not_detected";
            pt.n_errors = pt.n_bits;
        } catch (const SyncError&) {
            pt.status = "sync_failed";
            pt.n_errors = pt.n_bits;
        }
        pt.ber = pt.n_bits ? double(pt.n_errors) / double(pt.n_bits) : 0.0;
        res.stereo[mi] = pt;
    });
    return res;
}

// ---------------------------------------------------------------------------
// Cooperative cancellation
// ---------------------------------------------------------------------------

ExperimentResult run_coop(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.config = cfg;
    res.hash = config_hash(cfg);

    const double back_share = 0.45;
    const double ambient_share = 0.5;
    const double pilot_amp = 0.1; // within the backscatter waveform

    const std::size_t n_points = std::max<std::size_t>(1, cfg.coop_gains.size());
    res.coop.resize(n_points);

    parallel_points(n_points, cfg.jobs, [&](std::size_t pi) {
        const std::uint64_t seed_i = dsp::derive_seed(cfg.seed, pi);
        dsp::SplitMix64 rng(dsp::derive_seed(seed_i, 9));

        CoopPointResult pt;
        pt.gain_injected = cfg.coop_gains[pi % cfg.coop_gains.size()];
        pt.delay_injected = (2.0 * rng.uniform() - 1.0) * cfg.coop_max_delay_sec *
                            cfg.audio_rate;

        // backscatter transmission: pilot-only lead, then music + pilot
        const double dur = cfg.duration_sec + 1.0;
        AudioBuffer content = make_music(cfg.duration_sec, dsp::derive_seed(seed_i, 1),
                                         cfg.audio_rate, 0.9);
        AudioBuffer fm_back;
        fm_back.sample_rate = cfg.audio_rate;
        const std::size_t lead = std::size_t(0.25 * cfg.audio_rate);
        const std::size_t pre = std::size_t(0.5 * cfg.audio_rate);
        const std::size_t total = std::size_t(dur * cfg.audio_rate);
        fm_back.samples.assign(total, 0.0f);
        for (std::size_t i = 0; i < content.samples.size() && lead + pre + i < total; ++i)
            fm_back.samples[lead + pre + i] = float(content.samples[i] * (1.0 - pilot_amp));
        {
            const double dphi = kTwoPi * 13000.0 / cfg.audio_rate;
            double phase = 0.0;
            for (std::size_t i = lead; i < total; ++i) {
                fm_back.samples[i] += float(pilot_amp * std::cos(phase));
                phase += dphi;
                if (phase > kTwoPi) phase -= kTwoPi;
            }
        }
        for (float& v : fm_back.samples) v *= float(back_share);

        ExperimentConfig acfg = cfg;
        acfg.duration_sec = dur;
        const MultiplexBaseband amb_mpx =
            ambient_mpx_mono(acfg, dsp::derive_seed(seed_i, 2), ambient_share);
        const IqBuffer ambient = fmcore::fm_modulate(amb_mpx, {cfg.delta_f, cfg.carrier},
                                                     cfg.rf_rate);
        fmcore::LinkBudget budget;
        budget.rx_power_dbm = cfg.rx_power_dbm.front();
        budget.noise_floor_dbm = cfg.noise_floor_dbm;
        const IqBuffer scene = scatter::backscatter_link(
            ambient, fm_back.samples, cfg.audio_rate, cfg.f_back, cfg.delta_f,
            budget, dsp::derive_seed(seed_i, 3), cfg.reflectivity);

        rxmodes::ReceiveOptions opt;
        opt.audio_rate = cfg.audio_rate;
        AudioBuffer s1 = rxmodes::overlay_receive(scene, cfg.carrier, opt).audio;
        AudioBuffer s2 = rxmodes::overlay_receive(
            scene, cfg.carrier + std::int64_t(cfg.f_back), opt).audio;

        // inject the unknown delay and gain on the second receiver
        s2.samples = dsp::fractional_delay(s2.samples, pt.delay_injected);
        for (float& v : s2.samples) v *= float(pt.gain_injected);

        rxmodes::CoopConfig cc;
        cc.pilot_ref_amplitude = pilot_amp * back_share;
        cc.max_delay_sec = cfg.coop_max_delay_sec * 1.5 + 0.05;
        pt.status = "ok";
        try {
            const auto got = rxmodes::coop_cancel({s1, s2}, cc);
            pt.delay_estimated = got.delay_samples;
            pt.gain_estimated = got.gain;

            // reference: the transmitted backscatter baseband
            AudioBuffer ref = fm_back;
            pt.quality = audio_quality(ref, got.audio, cfg.coop_max_delay_sec * 2 + 0.1);
        } catch (const SyncError&) {
            pt.status = "sync_failed";
        } catch (const CalibrationError&) {
            pt.status = "calibration_failed";
        }
        res.coop[pi] = pt;
    });
    return res;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

std::string ExperimentResult::to_csv() const {
    std::ostringstream os;
    os << "# config_hash=" << std::hex << hash << std::dec
       << " seed=" << config.seed << "\n";
    switch (config.scenario) {
        case Scenario::FreqResponse:
            os << "tone_hz,snr_db\n";
            for (const auto& p : freq_response)
                os << fmt(p.tone_hz) << "," << fmt(p.snr_db) << "\n";
            break;
        case Scenario::BerSweep: {
            os << "rate_mode,"
               << (config.channel == ChannelModel::Rf ? "rx_power_dbm" : "audio_snr_db")
               << ",n_bits,n_errors,ber,sync_failures\n";
            for (const auto& p : ber)
                os << modem::rate_mode_name(p.rate_mode) << "," << fmt(p.control_value)
                   << "," << p.n_bits << "," << p.n_errors << "," << fmt(p.ber) << ","
                   << p.sync_failures << "\n";
            break;
        }
        case Scenario::Mrc:
            os << "n_copies,n_bits,n_errors,ber,snr_gain_db\n";
            for (const auto& p : mrc)
                os << p.n_copies << "," << p.n_bits << "," << p.n_errors << ","
                   << fmt(p.ber) << "," << fmt(p.snr_gain_db) << "\n";
            break;
        case Scenario::StereoCompare:
            os << "mode,status,n_bits,n_errors,ber,interference_db\n";
            for (const auto& p : stereo)
                os << p.mode << "," << p.status << "," << p.n_bits << "," << p.n_errors
                   << "," << fmt(p.ber) << "," << fmt(p.interference_db) << "\n";
            break;
        case Scenario::Coop:
            os << "delay_injected,gain_injected,delay_estimated,gain_estimated,"
               << "snr_db,segmental_snr_db,correlation,status\n";
            for (const auto& p : coop)
                os << fmt(p.delay_injected) << "," << fmt(p.gain_injected) << ","
                   << fmt(p.delay_estimated) << "," << fmt(p.gain_estimated) << ","
                   << fmt(p.quality.snr_db) << "," << fmt(p.quality.segmental_snr_db)
                   << "," << fmt(p.quality.correlation) << "," << p.status << "\n";
            break;
    }
    return os.str();
}

std::string ExperimentResult::to_json() const {
    json j;
    j["config"] = json::parse(config_to_json(config));
    std::ostringstream hx;
    hx << std::hex << hash;
    j["config_hash"] = hx.str();
    json rows = json::array();
    switch (config.scenario) {
        case Scenario::FreqResponse:
            for (const auto& p : freq_response)
                rows.push_back({{"tone_hz", p.tone_hz}, {"snr_db", p.snr_db}});
            break;
        case Scenario::BerSweep:
            for (const auto& p : ber)
                rows.push_back({{"rate_mode", modem::rate_mode_name(p.rate_mode)},
                                {"control", p.control_value},
                                {"n_bits", p.n_bits},
                                {"n_errors", p.n_errors},
                                {"ber", p.ber},
                                {"sync_failures", p.sync_failures}});
            break;
        case Scenario::Mrc:
            for (const auto& p : mrc)
                rows.push_back({{"n_copies", p.n_copies},
                                {"n_bits", p.n_bits},
                                {"n_errors", p.n_errors},
                                {"ber", p.ber},
                                {"snr_gain_db", p.snr_gain_db}});
            break;
        case Scenario::StereoCompare:
            for (const auto& p : stereo)
                rows.push_back({{"mode", p.mode},
                                {"status", p.status},
                                {"n_bits", p.n_bits},
                                {"n_errors", p.n_errors},
                                {"ber", p.ber},
                                {"interference_db", p.interference_db}});
            break;
        case Scenario::Coop:
            for (const auto& p : coop)
                rows.push_back({{"delay_injected", p.delay_injected},
                                {"gain_injected", p.gain_injected},
                                {"delay_estimated", p.delay_estimated},
                                {"gain_estimated", p.gain_estimated},
                                {"snr_db", std::isinf(p.quality.snr_db) ? 1e9 : p.quality.snr_db},
                                {"segmental_snr_db", p.quality.segmental_snr_db},
                                {"correlation", p.quality.correlation},
                                {"status", p.status}});
            break;
    }
    j["rows"] = rows;
    return j.dump(2);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.scenario) {
        case Scenario::FreqResponse: return run_freq_response(cfg);
        case Scenario::BerSweep: return run_ber_sweep(cfg);
        case Scenario::Mrc: return run_mrc(cfg);
        case Scenario::StereoCompare: return run_stereo_compare(cfg);
        case Scenario::Coop: return run_coop(cfg);
    }
    throw InvalidInput("run_experiment: bad scenario");
}

ExperimentResult run_and_write(const ExperimentConfig& cfg) {
    ExperimentResult res = run_experiment(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string base = cfg.out_dir + "/" + scenario_name(cfg.scenario);
    {
        std::ofstream f(base + ".csv", std::ios::binary);
        if (!f) throw FileError("cannot write " + base + ".csv");
        f << res.to_csv();
    }
    {
        std::ofstream f(base + ".json", std::ios::binary);
        if (!f) throw FileError("cannot write " + base + ".json");
        f << res.to_json() << "\n";
    }
    return res;
}

} // namespace fmscatter::bench
