#pragma once

// Seizure-diary ingestion and statistics: grouping events into occurrence
// periods (isolated vs cluster), summary statistics, interruption rate, and
// a one-tailed Mann-Whitney U test (exact enumeration for small tie-free
// samples, tie-corrected normal approximation otherwise).

#include <optional>
#include <string>
#include <vector>

namespace chronostim::diary {

struct DiaryEvent {
    double timestamp = 0.0;  // epoch seconds
    bool is_status_epilepticus = false;
    bool interruption_attempted = false;
    bool interruption_success = false;
    std::string note;
};

enum class PeriodKind { Isolated, Cluster };

struct OccurrencePeriod {
    std::vector<DiaryEvent> events;
    double start = 0.0;
    double end = 0.0;
    double duration_h = 0.0;
    PeriodKind kind = PeriodKind::Isolated;
};

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;  // sample convention (n - 1); 0 when undefined
    double min = 0.0;
    double max = 0.0;
};

struct PeriodSummary {
    std::size_t n_periods = 0;
    MetricSummary seizures_per_period;
    MetricSummary duration_h;
    bool sd_well_defined = false;  // false for a single period
};

struct MannWhitneyResult {
    double u_x = 0.0;
    double u_y = 0.0;
    double p_one_tailed = 0.5;
    enum class Method { ExactEnumeration, NormalApproxTieCorrected } method =
        Method::ExactEnumeration;
};

enum class Alternative { XLess, XGreater };

struct InterruptionRate {
    std::size_t attempts = 0;
    std::size_t successes = 0;
    std::optional<double> rate;  // empty when no attempts were made
};

/// Parse diary CSV with header
/// "timestamp,se,interruption_attempted,interruption_success,note"
/// (booleans as 0/1, ISO 8601 timestamps). Returns events sorted ascending.
/// Throws parse_error with a line number on malformed rows and input_error
/// when a row claims success without an attempt.
std::vector<DiaryEvent> parse_diary(const std::string& csv_text);

std::string diary_to_csv(const std::vector<DiaryEvent>& events);

/// Consecutive events closer than gap_threshold_h share a period; the
/// partition preserves input order.
std::vector<OccurrencePeriod> group_periods(std::vector<DiaryEvent> events,
                                            double gap_threshold_h = 24.0);

PeriodSummary summarize_periods(const std::vector<OccurrencePeriod>& periods);

/// One-tailed Mann-Whitney U. U_x counts pairs with x > y (ties half).
/// Exact enumeration when n + m <= 14 and the pooled sample is tie-free.
MannWhitneyResult mann_whitney_one_tailed(const std::vector<double>& x,
                                          const std::vector<double>& y, Alternative alternative);

InterruptionRate interruption_rate(const std::vector<DiaryEvent>& events);

}  // namespace chronostim::diary
