#include "chronostim/timeutil.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "chronostim/errors.hpp"

namespace chronostim::timeutil {

std::int64_t days_from_civil(int y, int m, int d) {
    // Howard Hinnant's algorithm.
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

double parse_iso8601(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double s = 0.0;
    char sep = 0;
    int consumed = 0;
    const int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%lf%n",
                              &y, &mo, &d, &sep, &h, &mi, &s, &consumed);
    if (n != 7 || (sep != 'T' && sep != ' '))
        throw input_error("invalid ISO 8601 timestamp: '" + text + "'");
    std::string rest = text.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty() && rest != "Z")
        throw input_error("invalid ISO 8601 timestamp: '" + text + "'");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s >= 61.0 ||
        h < 0 || mi < 0 || s < 0.0)
        throw input_error("out-of-range ISO 8601 timestamp: '" + text + "'");
    return static_cast<double>(days_from_civil(y, mo, d)) * kSecondsPerDay +
           h * 3600.0 + mi * 60.0 + s;
}

std::string format_iso8601(double t) {
    double day_floor = std::floor(t / kSecondsPerDay);
    double rem = t - day_floor * kSecondsPerDay;
    // Round to milliseconds first so 23:59:59.9999 does not print as :60.
    long long ms = std::llround(rem * 1000.0);
    if (ms >= 86400000LL) {
        ms -= 86400000LL;
        day_floor += 1.0;
    }
    int year, month, day;
    civil_from_days(static_cast<std::int64_t>(day_floor), year, month, day);
    const long long sod = ms / 1000;
    const int frac = static_cast<int>(ms % 1000);
    char buf[40];
    if (frac != 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02lld:%02lld:%02lld.%03d",
                      year, month, day, sod / 3600, (sod / 60) % 60, sod % 60, frac);
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02lld:%02lld:%02lld",
                      year, month, day, sod / 3600, (sod / 60) % 60, sod % 60);
    }
    return buf;
}

int parse_time_of_day(const std::string& text) {
    int h = 0, mi = 0, s = 0;
    const int n = std::sscanf(text.c_str(), "%d:%d:%d", &h, &mi, &s);
    if (n < 2 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59)
        throw input_error("invalid time of day: '" + text + "' (expected HH:MM)");
    return h * 3600 + mi * 60 + s;
}

std::string format_time_of_day(int sod) {
    char buf[16];
    if (sod % 60 == 0)
        std::snprintf(buf, sizeof buf, "%02d:%02d", sod / 3600, (sod / 60) % 60);
    else
        std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", sod / 3600, (sod / 60) % 60, sod % 60);
    return buf;
}

double seconds_of_day(double t) {
    double r = std::fmod(t, kSecondsPerDay);
    if (r < 0) r += kSecondsPerDay;
    return r;
}

}  // namespace chronostim::timeutil
