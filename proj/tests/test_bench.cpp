// Experiment harness: quality metric, config plumbing, reproducibility.
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "fmscatter/bench.hpp"
#include "fmscatter/dsp.hpp"

using namespace fmscatter;
using namespace fmscatter::bench;

namespace {

ExperimentConfig small_audio_ber() {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::BerSweep;
    cfg.channel = ChannelModel::Audio;
    cfg.rate_modes = {modem::RateMode::R1600};
    cfg.audio_snr_db = {0, 10, 20};
    cfg.bits_per_point = 2000;
    cfg.seed = 5;
    return cfg;
}

} // namespace

TEST_CASE("audio_quality: identity, noise floor, scale invariance") {
    const auto ref = make_speech(1.0, 3);

    const auto same = audio_quality(ref, ref);
    CHECK(same.correlation == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::isinf(same.snr_db));
    CHECK(same.lag == 0);

    AudioBuffer noisy = ref;
    dsp::SplitMix64 rng(4);
    const double sigma = std::sqrt(ref.mean_power());
    for (auto& v : noisy.samples) v += float(sigma * rng.gaussian());
    const auto q = audio_quality(ref, noisy);
    CHECK(q.snr_db == doctest::Approx(0.0).epsilon(0.2));

    AudioBuffer half = ref;
    for (auto& v : half.samples) v *= 0.5f;
    const auto qh = audio_quality(ref, half);
    CHECK(qh.correlation == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(qh.snr_db > 60.0); // best-gain fit absorbs the scale

    AudioBuffer shifted;
    shifted.sample_rate = ref.sample_rate;
    shifted.samples.assign(480, 0.0f);
    shifted.samples.insert(shifted.samples.end(), ref.samples.begin(), ref.samples.end());
    const auto qs = audio_quality(ref, shifted);
    CHECK(qs.lag == 480);
    CHECK(qs.correlation > 0.999);
}

TEST_CASE("audio_quality rejects rate mismatch and unreachable alignment") {
    AudioBuffer a = make_speech(0.5, 1);
    AudioBuffer b = a;
    b.sample_rate = 44100;
    CHECK_THROWS_AS(audio_quality(a, b), InvalidInput);

    AudioBuffer longer = make_speech(3.0, 2);
    CHECK_THROWS_AS(audio_quality(a, longer, 0.5), InvalidInput);
}

TEST_CASE("synthetic ambience generators are deterministic and band-limited") {
    const auto a = make_speech(0.5, 9);
    const auto b = make_speech(0.5, 9);
    CHECK(a.samples == b.samples);
    const double oob = dsp::band_power(a.samples, 48000.0, 6000.0, 24000.0);
    CHECK(oob < a.mean_power() * 0.01);

    const auto m = make_music(0.5, 9);
    const double above10k = dsp::band_power(m.samples, 48000.0, 10500.0, 24000.0);
    CHECK(above10k < m.mean_power() * 0.01);

    CHECK_THROWS_AS(load_ambient("synthetic:bogus", 1.0, 1), InvalidInput);
    const auto t = load_ambient("synthetic:tone:1500", 0.5, 1);
    CHECK(dsp::measure_tone(t.samples, 48000.0, 1500.0).amplitude ==
          doctest::Approx(0.9).epsilon(0.01));
}

TEST_CASE("config json round trip preserves the hash") {
    ExperimentConfig cfg = small_audio_ber();
    cfg.tone_hz = {500, 1000};
    cfg.coop_gains = {0.5, 2.0};
    const auto text = config_to_json(cfg);
    const auto back = config_from_json(text);
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(back.rate_modes == cfg.rate_modes);
    CHECK(back.audio_snr_db == cfg.audio_snr_db);

    CHECK_THROWS_AS(config_from_json("{nope"), InvalidInput);
    CHECK_THROWS_AS(config_from_json("{\"channel\":\"quantum\"}"), InvalidInput);
    CHECK_THROWS_AS(config_from_json("{\"rx_power_dbm\":[]}"), InvalidInput);
}

TEST_CASE("audio-domain BER sweep: deterministic, monotone, parallel-safe") {
    const auto cfg = small_audio_ber();
    const auto r1 = run_ber_sweep(cfg);
    const auto r2 = run_ber_sweep(cfg);
    CHECK(r1.to_csv() == r2.to_csv()); // byte-identical reruns

    REQUIRE(r1.ber.size() == 3);
    CHECK(r1.ber[0].ber >= r1.ber[1].ber);
    CHECK(r1.ber[1].ber >= r1.ber[2].ber);
    CHECK(r1.ber[2].ber == 0.0);
    CHECK(r1.ber[2].sync_failures == 0);

    if (std::thread::hardware_concurrency() > 1 || true) {
        ExperimentConfig par = cfg;
        par.jobs = 3;
        const auto rp = run_ber_sweep(par);
        // same rows regardless of scheduling (jobs is not part of the rows)
        CHECK(rp.ber.size() == r1.ber.size());
        for (std::size_t i = 0; i < rp.ber.size(); ++i) {
            CHECK(rp.ber[i].n_errors == r1.ber[i].n_errors);
            CHECK(rp.ber[i].control_value == r1.ber[i].control_value);
        }
    }
}

TEST_CASE("different seeds change the noise realization") {
    auto cfg = small_audio_ber();
    cfg.audio_snr_db = {6};
    cfg.rate_modes = {modem::RateMode::R3200};
    cfg.bits_per_point = 4000;
    const auto a = run_ber_sweep(cfg);
    cfg.seed = 6;
    const auto b = run_ber_sweep(cfg);
    CHECK(config_hash(a.config) != config_hash(b.config));
    // not asserting inequality of BER (could coincide); the csv differs via config
    CHECK(a.to_csv() != b.to_csv());
}

TEST_CASE("mrc scenario: combining helps on both fixtures") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::Mrc;
    cfg.rate_modes = {modem::RateMode::R1600};
    cfg.bits_per_point = 4000;
    cfg.mrc_max_copies = 4;
    cfg.data_to_ambient_db = -13.0;
    cfg.seed = 11;
    const auto res = run_mrc(cfg);
    REQUIRE(res.mrc.size() == 4);
    CHECK(res.mrc[0].n_copies == 1);
    CHECK(res.mrc[0].ber > 0.0); // interference-limited single copy
    CHECK(res.mrc[1].ber <= res.mrc[0].ber);
    // equal-gain combining of N noisy copies: ~10log10(N) dB
    CHECK(res.mrc[1].snr_gain_db == doctest::Approx(3.0).epsilon(0.34));
    CHECK(res.mrc[3].snr_gain_db == doctest::Approx(6.0).epsilon(0.17));
}

TEST_CASE("csv schemas carry the config hash header") {
    const auto cfg = small_audio_ber();
    const auto res = run_ber_sweep(cfg);
    const auto csv = res.to_csv();
    CHECK(csv.find("# config_hash=") == 0);
    CHECK(csv.find("rate_mode,audio_snr_db,n_bits,n_errors,ber,sync_failures") !=
          std::string::npos);
    const auto js = res.to_json();
    CHECK(js.find("\"config_hash\"") != std::string::npos);
    CHECK(js.find("\"rows\"") != std::string::npos);
}

TEST_CASE("run_and_write produces byte-identical files on rerun") {
    namespace fs = std::filesystem;
    auto cfg = small_audio_ber();
    cfg.audio_snr_db = {10};
    cfg.bits_per_point = 800;
    cfg.out_dir = (fs::temp_directory_path() / "fms_bench_a").string();
    const auto r1 = run_and_write(cfg);
    auto cfg2 = cfg;
    cfg2.out_dir = (fs::temp_directory_path() / "fms_bench_b").string();
    const auto r2 = run_and_write(cfg2);

    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
    };
    // out_dir differs (part of config) so compare the data rows only
    const auto a = slurp(cfg.out_dir + "/ber_sweep.csv");
    const auto b = slurp(cfg2.out_dir + "/ber_sweep.csv");
    CHECK(a.substr(a.find('\n')) == b.substr(b.find('\n')));
}

TEST_CASE("stereo-compare scenario: modes, gating, and interference ordering") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::StereoCompare;
    cfg.rf_rate = 10'000'000;
    cfg.rate_modes = {modem::RateMode::R1600};
    cfg.bits_per_point = 256;
    cfg.rx_power_dbm = {-30.0};
    cfg.noise_floor_dbm = -70.0;
    cfg.seed = 21;
    const auto res = run_stereo_compare(cfg);
    REQUIRE(res.stereo.size() == 3);

    const auto& overlay = res.stereo[0];
    const auto& st_mono = res.stereo[1];
    const auto& st_news = res.stereo[2];
    CHECK(overlay.mode == "overlay");
    CHECK(overlay.status == "ok");
    CHECK(overlay.ber == 0.0);
    CHECK(st_mono.status == "ok");
    CHECK(st_mono.ber == 0.0);
    CHECK(st_news.status == "ok");
    CHECK(st_news.ber == 0.0);
    // the stereo stream of a mono station is far quieter than its program
    CHECK(st_mono.interference_db < overlay.interference_db - 10.0);
    CHECK(st_news.interference_db < overlay.interference_db);

    // pilot pushed below the detection gate: the stereo path reports the
    // failure distinctly while overlay still decodes
    ExperimentConfig weak = cfg;
    weak.pilot_amplitude = 0.002;
    const auto res2 = run_stereo_compare(weak);
    CHECK(res2.stereo[0].status == "ok");
    CHECK(res2.stereo[0].ber == 0.0);
    CHECK(res2.stereo[1].status == "pilot_not_detected");
    CHECK(res2.stereo[1].n_errors == res2.stereo[1].n_bits);
}

TEST_CASE("coop scenario: recovered quality and estimates per point") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::Coop;
    cfg.rf_rate = 4'000'000;
    cfg.duration_sec = 1.2;
    cfg.coop_gains = {0.7, 1.6};
    cfg.coop_max_delay_sec = 0.05;
    cfg.rx_power_dbm = {-30.0};
    cfg.noise_floor_dbm = -150.0; // effectively noiseless
    cfg.seed = 31;
    const auto res = run_coop(cfg);
    REQUIRE(res.coop.size() == 2);
    for (const auto& pt : res.coop) {
        CHECK(pt.status == "ok");
        CHECK(pt.quality.correlation > 0.95);
        CHECK(std::fabs(pt.delay_estimated - pt.delay_injected) < 0.11);
        CHECK(pt.gain_estimated > 0.5 * pt.gain_injected);
        CHECK(pt.gain_estimated < 1.5 * pt.gain_injected);
    }
    // CSV schema for the scenario
    const auto csv = res.to_csv();
    CHECK(csv.find("delay_injected,gain_injected,delay_estimated,gain_estimated") !=
          std::string::npos);
}
