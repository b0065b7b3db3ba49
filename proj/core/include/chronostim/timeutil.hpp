#pragma once

// Naive civil-time helpers. Timestamps are seconds since the Unix epoch with
// no zone handling; schedule boundaries are seconds-of-day. Fractional
// seconds are carried as doubles and rendered at millisecond precision.

#include <cstdint>
#include <string>

namespace chronostim::timeutil {

inline constexpr double kSecondsPerDay = 86400.0;

/// Parse "YYYY-MM-DDTHH:MM:SS[.fff][Z]" (a space separator is also accepted).
/// Throws input_error on malformed text.
double parse_iso8601(const std::string& text);

/// Render a timestamp as ISO 8601; milliseconds appended only when nonzero.
std::string format_iso8601(double epoch_seconds);

/// Parse "HH:MM" or "HH:MM:SS" into seconds-of-day. Throws input_error.
int parse_time_of_day(const std::string& text);

/// Render seconds-of-day as "HH:MM" (whole minutes) or "HH:MM:SS".
std::string format_time_of_day(int seconds_of_day);

/// Seconds-of-day component of a timestamp.
double seconds_of_day(double epoch_seconds);

/// Days from 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int year, int month, int day);

void civil_from_days(std::int64_t days, int& year, int& month, int& day);

}  // namespace chronostim::timeutil
