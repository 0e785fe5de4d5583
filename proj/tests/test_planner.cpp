// Channel grid, station ingest, and shift planning against brute force.
#include <doctest.h>

#include <algorithm>

#include "fmscatter/dsp.hpp"
#include "fmscatter/planner.hpp"

using namespace fmscatter;
using namespace fmscatter::planner;

namespace {

std::int64_t mhz(double m) { return std::int64_t(std::llround(m * 1e6)); }

StationList list_of(std::initializer_list<double> mhz_list) {
    StationList l;
    for (double m : mhz_list) l.entries.push_back({mhz(m), true, true, {}});
    return l;
}

// independent oracle: enumerate every grid channel, distance-sorted with the
// upward tie-break
std::int64_t oracle_min_shift(std::int64_t station, const StationList& l, Occupancy occ) {
    for (std::int64_t k = 1; k < kGridChannels; ++k) {
        for (std::int64_t s : {k, -k}) {
            const std::int64_t f = station + s * kGridStepHz;
            if (f < kGridBaseHz || f > kGridBaseHz + (kGridChannels - 1) * kGridStepHz)
                continue;
            const Station* st = l.find(f);
            const bool busy = st && (occ == Occupancy::Licensed
                                         ? st->licensed
                                         : st->licensed || st->detectable);
            if (!busy) return k * kGridStepHz;
        }
    }
    throw NoChannelError("oracle: full grid");
}

} // namespace

TEST_CASE("grid membership and snapping") {
    CHECK(on_grid(mhz(88.1)));
    CHECK(on_grid(mhz(107.9)));
    CHECK(on_grid(mhz(94.9)));
    CHECK_FALSE(on_grid(mhz(108.1))); // 100 channels end at 107.9
    CHECK_FALSE(on_grid(mhz(94.87)));
    CHECK_FALSE(on_grid(mhz(88.0)));

    CHECK(snap_to_grid(mhz(94.9)) == mhz(94.9));
    CHECK(snap_to_grid(mhz(94.901)) == mhz(94.9));    // within 10 kHz
    CHECK_FALSE(snap_to_grid(mhz(94.87)).has_value()); // 30 kHz off
}

TEST_CASE("station table ingest with per-row diagnostics") {
    const std::string csv =
        "frequency_mhz,licensed,detectable,power_dbm\n"
        "94.9,true,true,-40\n"
        "94.87,true,false,\n"
        "101.3,yes,no,\n"
        "94.9,true,true,-41\n"
        "oops,true,false,\n";
    const auto res = parse_stations(csv);
    REQUIRE(res.stations.entries.size() == 2);
    CHECK(res.stations.entries[0].frequency == mhz(94.9));
    CHECK(res.stations.entries[0].power_dbm == -40.0);
    CHECK(res.stations.entries[1].frequency == mhz(101.3));
    CHECK_FALSE(res.stations.entries[1].detectable);

    REQUIRE(res.diagnostics.size() == 3);
    CHECK(res.diagnostics[0].row == 3); // 94.87 off-grid
    CHECK(res.diagnostics[1].row == 5); // duplicate
    CHECK(res.diagnostics[2].row == 6); // unparseable

    CHECK(parse_stations("frequency_mhz,licensed,detectable\n").stations.entries.empty());
}

TEST_CASE("single occupied station shifts by one channel, tie upward") {
    const auto l = list_of({94.9});
    CHECK(min_shift(mhz(94.9), l) == 200000);
    const auto plan = choose_fback(mhz(94.9), l);
    CHECK(plan.target_hz == mhz(95.1)); // upward tie-break
    CHECK(plan.f_back_hz == 200000);
}

TEST_CASE("contiguous occupancy around the station needs 600 kHz") {
    const auto l = list_of({94.5, 94.7, 94.9, 95.1, 95.3});
    CHECK(min_shift(mhz(94.9), l) == 600000);
    CHECK(oracle_min_shift(mhz(94.9), l, Occupancy::Licensed) == 600000);
}

TEST_CASE("bundled city fixture reproduces the survey statistics") {
    const auto res = load_stations("fixtures/city_stations.csv");
    CHECK(res.diagnostics.empty());
    REQUIRE(res.stations.entries.size() == 49);

    std::vector<std::int64_t> shifts;
    for (const auto& st : res.stations.entries) {
        if (!st.licensed) continue;
        shifts.push_back(min_shift(st.frequency, res.stations, Occupancy::Licensed));
    }
    REQUIRE(shifts.size() == 46);
    std::sort(shifts.begin(), shifts.end());
    const std::int64_t median = (shifts[22] + shifts[23]) / 2;
    CHECK(median == 200000);
    CHECK(shifts.back() <= 800000);
}

TEST_CASE("planner agrees with the brute-force oracle on random lists") {
    dsp::SplitMix64 rng(2024);
    for (int trial = 0; trial < 250; ++trial) {
        StationList l;
        const int n = 1 + int(rng.next() % 60);
        for (int i = 0; i < n; ++i) {
            Station st;
            st.frequency = kGridBaseHz + std::int64_t(rng.next() % kGridChannels) * kGridStepHz;
            st.licensed = rng.uniform() < 0.8;
            st.detectable = rng.uniform() < 0.5;
            if (!l.find(st.frequency)) l.entries.push_back(st);
        }
        const Station& target = l.entries[rng.next() % l.entries.size()];
        for (auto occ : {Occupancy::Licensed, Occupancy::LicensedOrDetectable}) {
            std::int64_t want = 0, got = 0;
            bool want_throw = false, got_throw = false;
            try { want = oracle_min_shift(target.frequency, l, occ); }
            catch (const NoChannelError&) { want_throw = true; }
            try { got = min_shift(target.frequency, l, occ); }
            catch (const NoChannelError&) { got_throw = true; }
            REQUIRE(want_throw == got_throw);
            if (!want_throw) {
                CHECK(got == want);
                CHECK(got % kGridStepHz == 0);
                CHECK(got > 0);
            }
        }
    }
}

TEST_CASE("min_shift ignores stations beyond the current answer") {
    auto l = list_of({94.9});
    const auto base = min_shift(mhz(94.9), l);
    l.entries.push_back({mhz(98.5), true, true, {}});
    l.entries.push_back({mhz(90.1), true, true, {}});
    CHECK(min_shift(mhz(94.9), l) == base);
}

TEST_CASE("full grid raises NoChannelError") {
    StationList l;
    for (int k = 0; k < kGridChannels; ++k)
        l.entries.push_back({kGridBaseHz + std::int64_t(k) * kGridStepHz, true, true, {}});
    CHECK_THROWS_AS(min_shift(mhz(94.9), l), NoChannelError);
    CHECK_THROWS_AS(choose_fback(mhz(94.9), l), NoChannelError);
}

TEST_CASE("power-aware choice picks the quietest channel") {
    const auto l = list_of({94.9});
    // both neighbors free; ambient power says the lower one is quieter
    std::vector<std::pair<std::int64_t, double>> powers = {
        {mhz(95.1), -70.0},
        {mhz(94.7), -90.0},
    };
    const auto plan = choose_fback(mhz(94.9), l, powers);
    CHECK(plan.target_hz == mhz(94.7));
    CHECK(plan.f_back_hz == -200000);
    CHECK(plan.target_power_dbm == -90.0);

    // uniform powers collapse to the min-shift rule
    std::vector<std::pair<std::int64_t, double>> uniform = {
        {mhz(95.1), -80.0},
        {mhz(94.7), -80.0},
    };
    const auto plan2 = choose_fback(mhz(94.9), l, uniform);
    CHECK(plan2.target_hz == mhz(95.1));
    CHECK(plan2.f_back_hz == plan2.min_shift_hz);
}

TEST_CASE("detectable neighbor pushes the plan to 95.3") {
    StationList l;
    l.entries.push_back({mhz(94.9), true, true, {}});
    l.entries.push_back({mhz(95.1), false, true, {}}); // detectable only
    l.entries.push_back({mhz(94.7), false, true, {}});
    l.entries.push_back({mhz(94.5), false, true, {}});

    // licensed-only analysis would happily take 95.1
    CHECK(choose_fback(mhz(94.9), l).target_hz == mhz(95.1));
    // honoring detectable signals moves the plan out to 95.3
    const auto plan = choose_fback(mhz(94.9), l, {}, 800000,
                                   Occupancy::LicensedOrDetectable);
    CHECK(plan.target_hz == mhz(95.3));
    CHECK(plan.f_back_hz == 400000);

    const auto j = plan_to_json(plan);
    CHECK(j.find("\"target_hz\":95300000") != std::string::npos);
}

TEST_CASE("Carson rule numbers") {
    CHECK(carson_bandwidth(75000.0, 58000.0) == 266000.0);
    CHECK(carson_bandwidth(0.0, 7000.0) == 14000.0);
    CHECK(carson_bandwidth(75000.0, 15000.0) == 180000.0);
    CHECK_THROWS_AS(carson_bandwidth(-1.0, 100.0), InvalidInput);

    // linear and monotone in both arguments
    dsp::SplitMix64 rng(4);
    for (int i = 0; i < 50; ++i) {
        const double a = rng.uniform() * 75000.0;
        const double b = rng.uniform() * 58000.0;
        CHECK(carson_bandwidth(a + 1000.0, b) > carson_bandwidth(a, b));
        CHECK(carson_bandwidth(a, b + 1000.0) > carson_bandwidth(a, b));
        CHECK(carson_bandwidth(2 * a + 1.0, 2 * b + 1.0) ==
              doctest::Approx(2 * carson_bandwidth(a + 0.5, b + 0.5)));
    }
}
