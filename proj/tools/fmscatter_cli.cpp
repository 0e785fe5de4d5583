// Command-line front end: experiment scenarios plus channel planning.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fmscatter/bench.hpp"
#include "fmscatter/planner.hpp"
#include "fmscatter/types.hpp"

using namespace fmscatter;
using json = nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> ambient;
    std::optional<std::string> points; // comma list overriding the sweep axis
    std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config JSON file");
    cmd->add_option("--seed", args.seed, "replace the config seed");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--ambient", args.ambient,
                    "WAV path or synthetic:{speech,music,silence,tone:<hz>}");
    cmd->add_option("--points", args.points,
                    "comma-separated sweep points (power dBm, SNR dB or tone Hz)");
    cmd->add_option("--jobs", args.jobs, "parallel sweep workers");
}

std::vector<double> parse_points(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    return out;
}

bench::ExperimentConfig load_config(const CommonArgs& args, bench::Scenario scenario) {
    bench::ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream f(args.config_path);
        if (!f) throw FileError("cannot open config: " + args.config_path);
        std::ostringstream os;
        os << f.rdbuf();
        cfg = bench::config_from_json(os.str());
    }
    cfg.scenario = scenario;
    if (args.seed) cfg.seed = *args.seed;
    if (args.out_dir) cfg.out_dir = *args.out_dir;
    if (args.ambient) cfg.ambient = *args.ambient;
    if (args.jobs) cfg.jobs = *args.jobs;
    if (args.points) {
        const auto pts = parse_points(*args.points);
        switch (scenario) {
            case bench::Scenario::FreqResponse: cfg.tone_hz = pts; break;
            case bench::Scenario::BerSweep:
                if (cfg.channel == bench::ChannelModel::Rf) cfg.rx_power_dbm = pts;
                else cfg.audio_snr_db = pts;
                break;
            default:
                cfg.rx_power_dbm = pts;
                break;
        }
    }
    return cfg;
}

int run_scenario(const CommonArgs& args, bench::Scenario scenario) {
    const auto cfg = load_config(args, scenario);
    const auto res = bench::run_and_write(cfg);
    std::cout << res.to_csv();
    return 0;
}

int fail_json(const std::string& kind, const std::string& what) {
    json j{{"error", kind}, {"detail", what}};
    std::cerr << j.dump() << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FM backscatter simulator and experiment harness"};
    app.require_subcommand(1);

    CommonArgs freq_args, ber_args, mrc_args, stereo_args, coop_args;
    auto* freq = app.add_subcommand("freq-response",
                                    "tone sweep SNR through the receive chain");
    add_common(freq, freq_args);
    auto* ber = app.add_subcommand("ber", "BER sweep per rate mode");
    add_common(ber, ber_args);
    auto* mrc = app.add_subcommand("mrc", "repeat-and-combine BER / SNR gain");
    add_common(mrc, mrc_args);
    auto* stereo = app.add_subcommand("stereo", "overlay vs stereo backscatter paths");
    add_common(stereo, stereo_args);
    auto* coop = app.add_subcommand("coop", "two-receiver cooperative cancellation");
    add_common(coop, coop_args);

    // plan: station table -> f_back choice
    std::string plan_stations, plan_station_str, plan_out;
    bool plan_detectable = false;
    std::int64_t plan_max_shift = 800'000;
    auto* plan = app.add_subcommand("plan", "pick a backscatter channel from a station table");
    plan->add_option("--stations", plan_stations, "CSV/TSV station table")->required();
    plan->add_option("--station", plan_station_str, "ambient station, MHz (e.g. 94.9)")
        ->required();
    plan->add_option("--max-shift", plan_max_shift, "shift cap in Hz");
    plan->add_flag("--include-detectable", plan_detectable,
                   "treat detectable-only entries as occupied too");
    plan->add_option("--out", plan_out, "write the plan JSON here as well");

    CLI11_PARSE(app, argc, argv);

    try {
        if (freq->parsed()) return run_scenario(freq_args, bench::Scenario::FreqResponse);
        if (ber->parsed()) return run_scenario(ber_args, bench::Scenario::BerSweep);
        if (mrc->parsed()) return run_scenario(mrc_args, bench::Scenario::Mrc);
        if (stereo->parsed()) return run_scenario(stereo_args, bench::Scenario::StereoCompare);
        if (coop->parsed()) return run_scenario(coop_args, bench::Scenario::Coop);
        if (plan->parsed()) {
            const auto loaded = planner::load_stations(plan_stations);
            for (const auto& d : loaded.diagnostics)
                std::cerr << "row " << d.row << ": " << d.message << "\n";
            const double mhz = std::stod(plan_station_str);
            const auto snapped = planner::snap_to_grid(std::int64_t(std::llround(mhz * 1e6)));
            if (!snapped) return fail_json("invalid_input", "station is not on the channel grid");
            std::vector<std::pair<std::int64_t, double>> powers;
            for (const auto& st : loaded.stations.entries)
                if (st.power_dbm) powers.emplace_back(st.frequency, *st.power_dbm);
            const auto plan_result = planner::choose_fback(
                *snapped, loaded.stations, powers, plan_max_shift,
                plan_detectable ? planner::Occupancy::LicensedOrDetectable
                                : planner::Occupancy::Licensed);
            const std::string out = planner::plan_to_json(plan_result);
            std::cout << out << "\n";
            if (!plan_out.empty()) {
                std::ofstream f(plan_out);
                f << out << "\n";
            }
            return 0;
        }
    } catch (const InvalidInput& e) {
        return fail_json("invalid_input", e.what());
    } catch (const BandwidthError& e) {
        return fail_json("bandwidth", e.what());
    } catch (const SyncError& e) {
        return fail_json("sync", e.what());
    } catch (const CalibrationError& e) {
        return fail_json("calibration", e.what());
    } catch (const NoChannelError& e) {
        return fail_json("no_channel", e.what());
    } catch (const FileError& e) {
        return fail_json("file", e.what());
    } catch (const Error& e) {
        return fail_json("error", e.what());
    } catch (const std::exception& e) {
        return fail_json("internal", e.what());
    }
    return 0;
}
