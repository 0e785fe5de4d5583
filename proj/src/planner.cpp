#include "fmscatter/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace fmscatter::planner {

bool on_grid(std::int64_t freq_hz) {
    if (freq_hz < kGridBaseHz) return false;
    const std::int64_t off = freq_hz - kGridBaseHz;
    if (off % kGridStepHz != 0) return false;
    return off / kGridStepHz < kGridChannels;
}

std::optional<std::int64_t> snap_to_grid(std::int64_t freq_hz, std::int64_t tol_hz) {
    const std::int64_t off = freq_hz - kGridBaseHz;
    const std::int64_t k = std::int64_t(std::llround(double(off) / double(kGridStepHz)));
    if (k < 0 || k >= kGridChannels) return std::nullopt;
    const std::int64_t snapped = kGridBaseHz + k * kGridStepHz;
    if (std::llabs(snapped - freq_hz) > tol_hz) return std::nullopt;
    return snapped;
}

const Station* StationList::find(std::int64_t freq_hz) const {
    for (const auto& s : entries)
        if (s.frequency == freq_hz) return &s;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Table ingest
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_row(const std::string& line, char sep) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    for (auto& s : cells) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }
    return cells;
}

bool parse_bool(const std::string& s, bool& out) {
    std::string t;
    for (char c : s) t += char(std::tolower(c));
    if (t == "1" || t == "true" || t == "yes" || t == "y") { out = true; return true; }
    if (t == "0" || t == "false" || t == "no" || t == "n" || t.empty()) { out = false; return true; }
    return false;
}

} // namespace

LoadResult parse_stations(const std::string& text) {
    LoadResult out;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;

    char sep = ',';
    int col_freq = -1, col_lic = -1, col_det = -1, col_pow = -1;
    std::set<std::int64_t> seen;

    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (col_freq < 0) {
            // header row decides the separator and the column layout
            sep = line.find('\t') != std::string::npos ? '\t' : ',';
            const auto cells = split_row(line, sep);
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (cells[i] == "frequency_mhz") col_freq = int(i);
                else if (cells[i] == "licensed") col_lic = int(i);
                else if (cells[i] == "detectable") col_det = int(i);
                else if (cells[i] == "power_dbm") col_pow = int(i);
            }
            if (col_freq < 0)
                throw InvalidInput("station table: missing frequency_mhz header column");
            continue;
        }

        const auto cells = split_row(line, sep);
        auto reject = [&](const std::string& why) {
            out.diagnostics.push_back({lineno, why});
        };
        if (int(cells.size()) <= col_freq || cells[std::size_t(col_freq)].empty()) {
            reject("missing frequency_mhz value");
            continue;
        }
        double mhz = 0.0;
        try {
            mhz = std::stod(cells[std::size_t(col_freq)]);
        } catch (...) {
            reject("unparseable frequency_mhz: " + cells[std::size_t(col_freq)]);
            continue;
        }
        const auto snapped = snap_to_grid(std::int64_t(std::llround(mhz * 1e6)));
        if (!snapped) {
            reject("off-grid frequency " + cells[std::size_t(col_freq)] +
                   " MHz (not within 10 kHz of an 88.1 + k*0.2 MHz channel)");
            continue;
        }
        if (!seen.insert(*snapped).second) {
            reject("duplicate row for " + cells[std::size_t(col_freq)] + " MHz");
            continue;
        }

        Station st;
        st.frequency = *snapped;
        if (col_lic >= 0 && int(cells.size()) > col_lic) {
            if (!parse_bool(cells[std::size_t(col_lic)], st.licensed)) {
                reject("bad licensed flag: " + cells[std::size_t(col_lic)]);
                continue;
            }
        }
        if (col_det >= 0 && int(cells.size()) > col_det) {
            if (!parse_bool(cells[std::size_t(col_det)], st.detectable)) {
                reject("bad detectable flag: " + cells[std::size_t(col_det)]);
                continue;
            }
        }
        if (col_pow >= 0 && int(cells.size()) > col_pow && !cells[std::size_t(col_pow)].empty()) {
            try {
                st.power_dbm = std::stod(cells[std::size_t(col_pow)]);
            } catch (...) {
                reject("unparseable power_dbm: " + cells[std::size_t(col_pow)]);
                continue;
            }
        }
        out.stations.entries.push_back(st);
    }
    if (col_freq < 0 && lineno > 0)
        throw InvalidInput("station table: no header row found");
    return out;
}

LoadResult load_stations(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FileError("cannot open station table: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_stations(os.str());
}

// ---------------------------------------------------------------------------
// Shift planning
// ---------------------------------------------------------------------------

namespace {

bool occupied(const StationList& list, std::int64_t freq, Occupancy occ) {
    const Station* s = list.find(freq);
    if (!s) return false;
    if (occ == Occupancy::Licensed) return s->licensed;
    return s->licensed || s->detectable;
}

} // namespace

std::int64_t min_shift(std::int64_t station_hz, const StationList& list, Occupancy occ) {
    if (!on_grid(station_hz))
        throw InvalidInput("min_shift: station frequency is not on the channel grid");
    for (std::int64_t k = 1; k < kGridChannels; ++k) {
        // ties break toward the upward shift
        const std::int64_t up = station_hz + k * kGridStepHz;
        if (on_grid(up) && !occupied(list, up, occ)) return k * kGridStepHz;
        const std::int64_t down = station_hz - k * kGridStepHz;
        if (on_grid(down) && !occupied(list, down, occ)) return k * kGridStepHz;
    }
    throw NoChannelError("min_shift: every channel on the grid is occupied");
}

ChannelPlan choose_fback(std::int64_t station_hz, const StationList& list,
                         const std::vector<std::pair<std::int64_t, double>>& powers,
                         std::int64_t max_shift_hz, Occupancy occ) {
    if (!on_grid(station_hz))
        throw InvalidInput("choose_fback: station frequency is not on the channel grid");

    std::map<std::int64_t, double> power_map(powers.begin(), powers.end());

    ChannelPlan plan;
    plan.station_hz = station_hz;
    plan.min_shift_hz = min_shift(station_hz, list, occ);

    bool found = false;
    double best_power = 0.0;
    std::int64_t best_abs = 0, best_shift = 0;
    for (std::int64_t k = 1; k * kGridStepHz <= max_shift_hz; ++k) {
        for (const std::int64_t shift : {k * kGridStepHz, -k * kGridStepHz}) {
            const std::int64_t target = station_hz + shift;
            if (!on_grid(target) || occupied(list, target, occ)) continue;
            // unmeasured channels rank below any measured one (unknown is
            // assumed loud); with no usable measurements this degenerates
            // to the min-shift rule via the tie-break
            double p = std::numeric_limits<double>::infinity();
            bool has_p = false;
            if (auto it = power_map.find(target); it != power_map.end()) {
                p = it->second;
                has_p = true;
            }
            // no powers given: minimum |shift|, tie toward upward;
            // with powers: lowest ambient power, same tie-break after
            bool better = false;
            if (!found) {
                better = true;
            } else if (!power_map.empty()) {
                if (p < best_power - 1e-12) better = true;
                else if (p <= best_power + 1e-12) {
                    if (std::llabs(shift) < best_abs) better = true;
                    else if (std::llabs(shift) == best_abs && shift > best_shift) better = true;
                }
            }
            if (better) {
                found = true;
                best_power = p;
                best_abs = std::llabs(shift);
                best_shift = shift;
                plan.target_hz = target;
                plan.f_back_hz = shift;
                plan.target_power_dbm = has_p ? std::optional<double>(p) : std::nullopt;
            }
        }
        if (found && power_map.empty()) break; // nearest free channel wins
    }
    if (!found)
        throw NoChannelError("choose_fback: no free channel within the shift cap");
    return plan;
}

std::string plan_to_json(const ChannelPlan& plan) {
    std::ostringstream os;
    os << "{\"station_hz\":" << plan.station_hz
       << ",\"target_hz\":" << plan.target_hz
       << ",\"f_back_hz\":" << plan.f_back_hz
       << ",\"min_shift_hz\":" << plan.min_shift_hz;
    if (plan.target_power_dbm)
        os << ",\"target_power_dbm\":" << *plan.target_power_dbm;
    os << "}";
    return os.str();
}

double carson_bandwidth(double delta_f_hz, double f_max_hz) {
    // zero deviation is the AM-like limit 2*f_max; negatives are nonsense
    if (delta_f_hz < 0 || f_max_hz < 0)
        throw InvalidInput("carson_bandwidth: arguments must be non-negative");
    return 2.0 * (delta_f_hz + f_max_hz);
}

} // namespace fmscatter::planner
