#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chronostim/diary.hpp"
#include "chronostim/errors.hpp"
#include "chronostim/rng.hpp"
#include "chronostim/timeutil.hpp"

using namespace chronostim;
using diary::Alternative;
using diary::DiaryEvent;

namespace {

DiaryEvent at_hours(double h, bool attempted = false, bool success = false) {
    DiaryEvent e;
    e.timestamp = h * 3600.0;
    e.interruption_attempted = attempted;
    e.interruption_success = success;
    return e;
}

// Full enumeration over all C(n+m, n) x/y labelings of the pooled sample,
// via bitmask subsets. Independent of the library's counting recurrence.
double oracle_exact_p(std::vector<double> x, std::vector<double> y, Alternative alt) {
    std::vector<double> pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    const int total = static_cast<int>(pooled.size());
    const int n = static_cast<int>(x.size());

    const auto u_of = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
        double u = 0.0;
        for (double a : xs)
            for (double b : ys) u += a > b ? 1.0 : 0.0;
        return u;
    };
    const double u_obs = u_of(x, y);

    long long extreme = 0, count = 0;
    for (unsigned mask = 0; mask < (1u << total); ++mask) {
        if (__builtin_popcount(mask) != n) continue;
        std::vector<double> xs, ys;
        for (int i = 0; i < total; ++i)
            (mask >> i & 1u ? xs : ys).push_back(pooled[static_cast<std::size_t>(i)]);
        const double u = u_of(xs, ys);
        ++count;
        if (alt == Alternative::XLess ? u <= u_obs : u >= u_obs) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(count);
}

}  // namespace

TEST_SUITE("diary") {

TEST_CASE("parse_diary: well-formed rows sort ascending") {
    const std::string csv =
        "timestamp,se,interruption_attempted,interruption_success,note\n"
        "2021-01-02T08:00:00,0,1,1,boost worked\n"
        "2021-01-01T23:30:00,1,0,0,\n"
        "2021-01-02T02:10:00,0,1,0,noticed late, then tapped\n";
    const auto events = diary::parse_diary(csv);
    REQUIRE(events.size() == 3);
    CHECK(events[0].is_status_epilepticus);
    CHECK(events[1].note == "noticed late, then tapped");
    CHECK(events[2].interruption_success);

    std::vector<double> stamps;
    for (const auto& e : events) stamps.push_back(e.timestamp);
    auto sorted = stamps;
    std::sort(sorted.begin(), sorted.end());
    CHECK(stamps == sorted);
}

TEST_CASE("parse_diary error contracts") {
    CHECK_THROWS_AS(diary::parse_diary("wrong,header\n"), parse_error);

    const std::string bad_bool =
        "timestamp,se,interruption_attempted,interruption_success,note\n"
        "2021-01-01T00:00:00,yes,0,0,\n";
    CHECK_THROWS_AS(diary::parse_diary(bad_bool), parse_error);

    const std::string bad_row =
        "timestamp,se,interruption_attempted,interruption_success,note\n"
        "2021-01-01T00:00:00,0,0\n";
    try {
        diary::parse_diary(bad_row);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 2);
    }

    const std::string success_without_attempt =
        "timestamp,se,interruption_attempted,interruption_success,note\n"
        "2021-01-01T00:00:00,0,0,1,\n";
    CHECK_THROWS_AS(diary::parse_diary(success_without_attempt), input_error);
}

TEST_CASE("diary CSV round trip") {
    std::vector<DiaryEvent> events{at_hours(1.0, true, false), at_hours(5.0, true, true)};
    events[0].note = "first";
    const auto back = diary::parse_diary(diary::diary_to_csv(events));
    REQUIRE(back.size() == 2);
    CHECK(back[0].note == "first");
    CHECK(back[1].interruption_success);
}

TEST_CASE("group_periods: isolated vs cluster") {
    auto single = diary::group_periods({at_hours(10.0)}, 24.0);
    REQUIRE(single.size() == 1);
    CHECK(single[0].kind == diary::PeriodKind::Isolated);
    CHECK(single[0].duration_h == 0.0);

    auto cluster = diary::group_periods({at_hours(10.0), at_hours(13.0)}, 24.0);
    REQUIRE(cluster.size() == 1);
    CHECK(cluster[0].kind == diary::PeriodKind::Cluster);
    CHECK(cluster[0].duration_h == doctest::Approx(3.0));

    auto split = diary::group_periods({at_hours(10.0), at_hours(40.0)}, 24.0);
    REQUIRE(split.size() == 2);
    CHECK(split[0].kind == diary::PeriodKind::Isolated);
    CHECK(split[1].kind == diary::PeriodKind::Isolated);

    CHECK_THROWS_AS(diary::group_periods({at_hours(2.0), at_hours(1.0)}, 24.0), input_error);
    CHECK_THROWS_AS(diary::group_periods({at_hours(1.0)}, 0.0), config_error);
}

TEST_CASE("group_periods partitions the input and is monotone in the gap") {
    rng::Stream s(41);
    std::vector<DiaryEvent> events;
    double t = 0.0;
    for (int i = 0; i < 60; ++i) {
        t += s.next_exponential() * 12.0;
        events.push_back(at_hours(t));
    }

    std::size_t prev_count = events.size() + 1;
    for (double gap : {1.0, 6.0, 12.0, 24.0, 48.0}) {
        const auto periods = diary::group_periods(events, gap);
        std::vector<double> flattened;
        for (const auto& p : periods) {
            for (const auto& e : p.events) flattened.push_back(e.timestamp);
            CHECK((p.kind == diary::PeriodKind::Isolated) == (p.events.size() == 1));
            CHECK((p.kind == diary::PeriodKind::Cluster) == (p.duration_h > 0.0));
        }
        std::vector<double> original;
        for (const auto& e : events) original.push_back(e.timestamp);
        CHECK(flattened == original);
        CHECK(periods.size() <= prev_count);
        prev_count = periods.size();
    }
}

TEST_CASE("summarize_periods") {
    // Counts {2, 4}: mean 3, sample sd sqrt(2), range 2..4.
    const auto periods = diary::group_periods(
        {at_hours(0.0), at_hours(1.0), at_hours(100.0), at_hours(101.0), at_hours(102.0),
         at_hours(103.0)},
        24.0);
    REQUIRE(periods.size() == 2);
    const auto summary = diary::summarize_periods(periods);
    CHECK(summary.n_periods == 2);
    CHECK(summary.seizures_per_period.mean == doctest::Approx(3.0));
    CHECK(summary.seizures_per_period.sd == doctest::Approx(std::sqrt(2.0)));
    CHECK(summary.seizures_per_period.min == 2.0);
    CHECK(summary.seizures_per_period.max == 4.0);
    CHECK(summary.sd_well_defined);

    const auto one = diary::summarize_periods(diary::group_periods({at_hours(0.0)}, 24.0));
    CHECK(one.seizures_per_period.sd == 0.0);
    CHECK_FALSE(one.sd_well_defined);

    const auto degenerate = diary::summarize_periods(
        diary::group_periods({at_hours(0.0), at_hours(48.0), at_hours(96.0)}, 24.0));
    CHECK(degenerate.seizures_per_period.mean == 1.0);
    CHECK(degenerate.seizures_per_period.sd == 0.0);
    CHECK(degenerate.duration_h.mean == 0.0);

    CHECK_THROWS_AS(diary::summarize_periods({}), input_error);
}

TEST_CASE("mann-whitney documented examples") {
    auto r = diary::mann_whitney_one_tailed({1, 2, 3}, {4, 5, 6}, Alternative::XLess);
    CHECK(r.u_x == 0.0);
    CHECK(r.u_y == 9.0);
    CHECK(r.p_one_tailed == 0.05);
    CHECK(r.method == diary::MannWhitneyResult::Method::ExactEnumeration);

    r = diary::mann_whitney_one_tailed({1}, {2}, Alternative::XLess);
    CHECK(r.u_x == 0.0);
    CHECK(r.p_one_tailed == 0.5);

    r = diary::mann_whitney_one_tailed({1, 3}, {2, 4}, Alternative::XLess);
    CHECK(r.u_x == 1.0);
    CHECK(r.p_one_tailed == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    // Mirrored alternative.
    r = diary::mann_whitney_one_tailed({4, 5, 6}, {1, 2, 3}, Alternative::XGreater);
    CHECK(r.u_x == 9.0);
    CHECK(r.p_one_tailed == 0.05);

    CHECK_THROWS_AS(diary::mann_whitney_one_tailed({}, {1.0}, Alternative::XLess), input_error);
}

TEST_CASE("mann-whitney exact path matches full enumeration") {
    rng::Stream s(97);
    int exact_cases = 0;
    while (exact_cases < 150) {
        const int n = 1 + static_cast<int>(s.next_u64() % 5);
        const int m = 1 + static_cast<int>(s.next_u64() % 5);
        std::vector<double> x, y, pooled;
        for (int i = 0; i < n; ++i) x.push_back(static_cast<double>(s.next_u64() % 1000));
        for (int i = 0; i < m; ++i) y.push_back(static_cast<double>(s.next_u64() % 1000));
        pooled = x;
        pooled.insert(pooled.end(), y.begin(), y.end());
        std::sort(pooled.begin(), pooled.end());
        if (std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end()) continue;
        ++exact_cases;

        const auto alt = (s.next_u64() & 1) ? Alternative::XLess : Alternative::XGreater;
        const auto r = diary::mann_whitney_one_tailed(x, y, alt);
        CHECK(r.method == diary::MannWhitneyResult::Method::ExactEnumeration);
        CHECK(std::abs(r.p_one_tailed - oracle_exact_p(x, y, alt)) <= 1e-12);
    }
}

TEST_CASE("mann-whitney tie handling") {
    // Ties force the corrected normal approximation.
    const auto r = diary::mann_whitney_one_tailed({1, 2, 2, 3}, {2, 4, 5}, Alternative::XLess);
    CHECK(r.method == diary::MannWhitneyResult::Method::NormalApproxTieCorrected);
    CHECK(r.u_x + r.u_y == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(r.p_one_tailed > 0.0);
    CHECK(r.p_one_tailed < 1.0);

    // U identity under random tied samples.
    rng::Stream s(5);
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(s.next_u64() % 12);
        const int m = 2 + static_cast<int>(s.next_u64() % 12);
        std::vector<double> x, y;
        for (int i = 0; i < n; ++i) x.push_back(static_cast<double>(s.next_u64() % 6));
        for (int i = 0; i < m; ++i) y.push_back(static_cast<double>(s.next_u64() % 6));
        const auto t = diary::mann_whitney_one_tailed(x, y, Alternative::XGreater);
        CHECK(t.u_x + t.u_y == doctest::Approx(static_cast<double>(n) * m).epsilon(1e-12));
    }

    // Fully tied pooled sample degenerates to p = 0.5.
    const auto tied =
        diary::mann_whitney_one_tailed({2, 2, 2, 2, 2, 2, 2, 2}, {2, 2, 2, 2, 2, 2, 2},
                                       Alternative::XLess);
    CHECK(tied.p_one_tailed == 0.5);
}

TEST_CASE("interruption rate") {
    std::vector<DiaryEvent> events;
    for (int i = 0; i < 14; ++i) events.push_back(at_hours(i * 30.0, true, true));
    for (int i = 0; i < 8; ++i) events.push_back(at_hours(500.0 + i * 30.0, true, false));
    events.push_back(at_hours(900.0));  // not attempted
    const auto rate = diary::interruption_rate(events);
    CHECK(rate.attempts == 22);
    CHECK(rate.successes == 14);
    REQUIRE(rate.rate.has_value());
    CHECK(std::abs(*rate.rate - 0.636) <= 0.001);

    CHECK_FALSE(diary::interruption_rate({at_hours(1.0)}).rate.has_value());

    std::vector<DiaryEvent> all_success;
    for (int i = 0; i < 5; ++i) all_success.push_back(at_hours(i * 40.0, true, true));
    CHECK(*diary::interruption_rate(all_success).rate == 1.0);
}

}  // TEST_SUITE
