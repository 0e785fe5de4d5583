// FM band occupancy and backscatter shift planning on the 200 kHz grid.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fmscatter/types.hpp"

namespace fmscatter::planner {

// The 100-channel broadcast grid: 88.1 + 0.2k MHz, k = 0..99.
inline constexpr std::int64_t kGridBaseHz = 88'100'000;
inline constexpr std::int64_t kGridStepHz = 200'000;
inline constexpr int kGridChannels = 100;

bool on_grid(std::int64_t freq_hz);
/// Nearest grid channel if within +/- tol_hz, else nullopt.
std::optional<std::int64_t> snap_to_grid(std::int64_t freq_hz, std::int64_t tol_hz = 10'000);

struct Station {
    std::int64_t frequency = 0;          // Hz, on the grid
    bool licensed = true;
    bool detectable = false;
    std::optional<double> power_dbm;
};

struct StationList {
    std::vector<Station> entries;

    const Station* find(std::int64_t freq_hz) const;
};

/// Which entries block a channel.
enum class Occupancy {
    Licensed,            // licensed stations only (shift-analysis default)
    LicensedOrDetectable
};

struct RowDiagnostic {
    std::size_t row = 0; // 1-based line number in the source file
    std::string message;
};

struct LoadResult {
    StationList stations;
    std::vector<RowDiagnostic> diagnostics; // rejected rows, one entry each
};

/// Parse a CSV/TSV station table with header columns
/// frequency_mhz, licensed, detectable[, power_dbm]. Off-grid frequencies
/// (beyond +/-10 kHz of a channel) and duplicates are rejected per-row.
LoadResult load_stations(const std::string& path);
LoadResult parse_stations(const std::string& text);

/// Smallest |k|*200 kHz such that station +/- k*200 kHz is a free grid
/// channel; ties break toward the positive (upward) shift. Throws
/// NoChannelError when every channel is occupied.
std::int64_t min_shift(std::int64_t station_hz, const StationList& list,
                       Occupancy occ = Occupancy::Licensed);

struct ChannelPlan {
    std::int64_t station_hz = 0;
    std::int64_t target_hz = 0;
    std::int64_t f_back_hz = 0;     // signed shift, multiple of 200 kHz
    std::int64_t min_shift_hz = 0;
    std::optional<double> target_power_dbm;
};

/// Pick the backscatter channel among free channels within max_shift:
/// lowest ambient power when per-channel powers are supplied, else the
/// minimum shift. Ties break by smaller |shift|, then upward.
ChannelPlan choose_fback(std::int64_t station_hz, const StationList& list,
                         const std::vector<std::pair<std::int64_t, double>>& powers = {},
                         std::int64_t max_shift_hz = 800'000,
                         Occupancy occ = Occupancy::Licensed);

std::string plan_to_json(const ChannelPlan& plan);

/// Carson's rule: occupied bandwidth approximation 2*(delta_f + f_max).
double carson_bandwidth(double delta_f_hz, double f_max_hz);

} // namespace fmscatter::planner
