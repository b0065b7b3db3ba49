#include "chronostim/diary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "chronostim/errors.hpp"
#include "chronostim/timeutil.hpp"

namespace chronostim::diary {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

bool parse_bool01(const std::string& s, bool& out) {
    if (s == "0") { out = false; return true; }
    if (s == "1") { out = true; return true; }
    return false;
}

}  // namespace

std::vector<DiaryEvent> parse_diary(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<DiaryEvent> events;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "timestamp,se,interruption_attempted,interruption_success,note")
                throw parse_error("unexpected diary header", line_no);
            continue;
        }
        if (line.empty()) continue;

        // First four fields are comma-delimited; the note keeps any commas.
        std::array<std::string, 4> head;
        std::size_t pos = 0;
        for (int f = 0; f < 4; ++f) {
            const auto comma = line.find(',', pos);
            if (comma == std::string::npos) throw parse_error("expected 5 fields", line_no);
            head[static_cast<std::size_t>(f)] = line.substr(pos, comma - pos);
            pos = comma + 1;
        }

        DiaryEvent ev;
        try {
            ev.timestamp = timeutil::parse_iso8601(head[0]);
        } catch (const input_error& e) {
            throw parse_error(e.what(), line_no);
        }
        if (!parse_bool01(head[1], ev.is_status_epilepticus) ||
            !parse_bool01(head[2], ev.interruption_attempted) ||
            !parse_bool01(head[3], ev.interruption_success))
            throw parse_error("boolean fields must be 0 or 1", line_no);
        ev.note = line.substr(pos);
        if (ev.interruption_success && !ev.interruption_attempted)
            throw input_error("diary line " + std::to_string(line_no) +
                              ": interruption_success without interruption_attempted");
        events.push_back(std::move(ev));
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const DiaryEvent& a, const DiaryEvent& b) { return a.timestamp < b.timestamp; });
    return events;
}

std::string diary_to_csv(const std::vector<DiaryEvent>& events) {
    std::string out = "timestamp,se,interruption_attempted,interruption_success,note\n";
    for (const auto& e : events) {
        out += timeutil::format_iso8601(e.timestamp);
        out += e.is_status_epilepticus ? ",1" : ",0";
        out += e.interruption_attempted ? ",1" : ",0";
        out += e.interruption_success ? ",1" : ",0";
        out += "," + e.note + "\n";
    }
    return out;
}

std::vector<OccurrencePeriod> group_periods(std::vector<DiaryEvent> events,
                                            double gap_threshold_h) {
    if (!(gap_threshold_h > 0.0)) throw config_error("gap threshold must be > 0 h");
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].timestamp < events[i - 1].timestamp)
            throw input_error("diary events must be sorted ascending");

    std::vector<OccurrencePeriod> periods;
    const double gap_s = gap_threshold_h * 3600.0;
    for (auto& ev : events) {
        if (periods.empty() || ev.timestamp - periods.back().events.back().timestamp >= gap_s) {
            OccurrencePeriod p;
            p.start = p.end = ev.timestamp;
            p.events.push_back(std::move(ev));
            periods.push_back(std::move(p));
        } else {
            auto& p = periods.back();
            p.end = ev.timestamp;
            p.events.push_back(std::move(ev));
        }
    }
    for (auto& p : periods) {
        p.duration_h = (p.end - p.start) / 3600.0;
        p.kind = p.events.size() == 1 ? PeriodKind::Isolated : PeriodKind::Cluster;
    }
    return periods;
}

namespace {

MetricSummary summarize_metric(const std::vector<double>& v) {
    MetricSummary s;
    s.min = v.front();
    s.max = v.front();
    double sum = 0.0;
    for (double x : v) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double sq = 0.0;
        for (double x : v) sq += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(sq / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

PeriodSummary summarize_periods(const std::vector<OccurrencePeriod>& periods) {
    if (periods.empty()) throw input_error("no periods to summarize");
    std::vector<double> counts, durations;
    counts.reserve(periods.size());
    durations.reserve(periods.size());
    for (const auto& p : periods) {
        counts.push_back(static_cast<double>(p.events.size()));
        durations.push_back(p.duration_h);
    }
    PeriodSummary s;
    s.n_periods = periods.size();
    s.seizures_per_period = summarize_metric(counts);
    s.duration_h = summarize_metric(durations);
    s.sd_well_defined = periods.size() > 1;
    return s;
}

namespace {

// Number of x/y labelings of the pooled sample with U_x == u, via the
// standard recurrence on the largest pooled element.
std::vector<std::vector<std::vector<double>>> u_count_table(int n, int m) {
    const int u_max = n * m;
    std::vector table(static_cast<std::size_t>(n) + 1,
                      std::vector(static_cast<std::size_t>(m) + 1,
                                  std::vector<double>(static_cast<std::size_t>(u_max) + 1, 0.0)));
    for (int j = 0; j <= m; ++j) table[0][static_cast<std::size_t>(j)][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        table[static_cast<std::size_t>(i)][0][0] = 1.0;
        for (int j = 1; j <= m; ++j) {
            for (int u = 0; u <= i * j; ++u) {
                double c = table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) - 1]
                                [static_cast<std::size_t>(u)];
                if (u >= j)
                    c += table[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j)]
                              [static_cast<std::size_t>(u - j)];
                table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                     [static_cast<std::size_t>(u)] = c;
            }
        }
    }
    return table;
}

bool has_ties(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled;
    pooled.reserve(x.size() + y.size());
    pooled.insert(pooled.end(), x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::sort(pooled.begin(), pooled.end());
    return std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
}

}  // namespace

MannWhitneyResult mann_whitney_one_tailed(const std::vector<double>& x,
                                          const std::vector<double>& y,
                                          Alternative alternative) {
    if (x.empty() || y.empty()) throw input_error("Mann-Whitney requires non-empty samples");
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(y.size());

    // U_x: pairs with x > y, ties counted half.
    double u_x = 0.0;
    for (double xi : x)
        for (double yj : y) {
            if (xi > yj) u_x += 1.0;
            else if (xi == yj) u_x += 0.5;
        }

    MannWhitneyResult r;
    r.u_x = u_x;
    r.u_y = static_cast<double>(n) * m - u_x;

    const bool tie_free = !has_ties(x, y);
    if (n + m <= 14 && tie_free) {
        r.method = MannWhitneyResult::Method::ExactEnumeration;
        const auto table = u_count_table(n, m);
        const auto& dist = table[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
        double total = 0.0;
        for (double c : dist) total += c;
        const int u_obs = static_cast<int>(std::llround(u_x));
        double extreme = 0.0;
        if (alternative == Alternative::XLess) {
            for (int u = 0; u <= u_obs; ++u) extreme += dist[static_cast<std::size_t>(u)];
        } else {
            for (int u = u_obs; u <= n * m; ++u) extreme += dist[static_cast<std::size_t>(u)];
        }
        r.p_one_tailed = extreme / total;
        return r;
    }

    // Midranks + normal approximation with tie and continuity corrections.
    r.method = MannWhitneyResult::Method::NormalApproxTieCorrected;
    const double nd = n, md = m, big_n = nd + md;
    std::vector<double> pooled;
    pooled.reserve(x.size() + y.size());
    pooled.insert(pooled.end(), x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::sort(pooled.begin(), pooled.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double mean = nd * md / 2.0;
    const double variance =
        nd * md / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if (variance <= 0.0) {
        r.p_one_tailed = 0.5;  // fully tied pooled sample
        return r;
    }
    const double sd = std::sqrt(variance);
    if (alternative == Alternative::XLess)
        r.p_one_tailed = normal_cdf((u_x - mean + 0.5) / sd);
    else
        r.p_one_tailed = normal_cdf(-(u_x - mean - 0.5) / sd);
    return r;
}

InterruptionRate interruption_rate(const std::vector<DiaryEvent>& events) {
    InterruptionRate r;
    for (const auto& e : events) {
        if (e.interruption_attempted) {
            ++r.attempts;
            if (e.interruption_success) ++r.successes;
        }
    }
    if (r.attempts > 0)
        r.rate = static_cast<double>(r.successes) / static_cast<double>(r.attempts);
    return r;
}

}  // namespace chronostim::diary
