#pragma once

// Three-layer stimulation control: a circadian basal schedule, an
// inactivity-triggered sleep mode with elevated entrainment stimulation, and
// a tap-triggered high-frequency boost, plus an absorbing fallback program.
// Priority: Boost > SleepMode > Basal. The machine is evaluated at uniform
// decision instants (one activity window apart) and is strictly
// deterministic.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chronostim/telemetry.hpp"

namespace chronostim::scheduler {

enum class ElectrodeMode { Bipolar, Monopolar };

struct StimProgram {
    double frequency_hz = 13.0;
    double pulse_width_us = 350.0;
    double amplitude_ma = 1.3;
    ElectrodeMode electrode_mode = ElectrodeMode::Monopolar;
    std::string label;

    void validate() const;
    friend bool operator==(const StimProgram&, const StimProgram&) = default;
};

struct ScheduleSegment {
    int start_sod = 0;  // seconds of day
    bool night = false;
    StimProgram basal_program;
};

struct ClockSchedule {
    /// Ascending start times within a day; coverage wraps around midnight.
    std::vector<ScheduleSegment> segments;

    void validate() const;
    const ScheduleSegment& segment_at(double epoch_seconds) const;
};

/// Day 07:00-21:00 at 0.5 mA, night at 0.7 mA, both 13 Hz / 350 us.
ClockSchedule default_schedule();

enum class Axis { X, Y, Z };

struct AdaptiveConfig {
    double inactivity_minutes = 4.0;
    double activity_window_s = 10.0;          // also the decision period
    double activity_stddev_threshold_g = 0.05;
    Axis tap_axis = Axis::Z;
    double tap_threshold_g = 7.0;
    double tap_debounce_s = 2.0;
    StimProgram sleep_program;     // 13 Hz / 350 us / 1.3 mA
    StimProgram boost_program;     // 130 Hz / 90 us / 1.5 mA bipolar
    double boost_duration_s = 60.0;
    StimProgram fallback_program;  // open-loop entrainment setting
    bool suppress_sleep_at_night = false;

    AdaptiveConfig();
    void validate() const;
};

enum class DeviceMode { BasalDay, BasalNight, SleepMode, Boost, Fallback };

enum class Activity { Active, Inactive };

struct DeviceState {
    DeviceMode mode = DeviceMode::BasalDay;
    double mode_entered_at = 0.0;
    StimProgram active_program;
    std::optional<double> inactivity_since;
    std::optional<double> last_tap_at;
};

enum class TransitionCause {
    ScheduleBoundary,
    InactivityElapsed,
    ActivityResumed,
    Tap,
    BoostExpired,
    FallbackEngaged,
};

struct LogEntry {
    double timestamp = 0.0;
    DeviceMode from = DeviceMode::BasalDay;
    DeviceMode to = DeviceMode::BasalDay;
    TransitionCause cause = TransitionCause::ScheduleBoundary;
    StimProgram program;
};

struct EventLog {
    std::vector<LogEntry> entries;
};

struct StimTimeline {
    /// Piecewise-constant: program in force from each timestamp onward.
    std::vector<std::pair<double, StimProgram>> points;
};

std::string to_string(DeviceMode mode);
std::string to_string(TransitionCause cause);

/// Initial state at `start` under the schedule (basal mode of the current segment).
DeviceState initial_state(const ClockSchedule& schedule, double start);

/// Magnitude-stddev activity classifier over [first, first+count) samples.
/// Inactive iff stddev <= threshold. Throws input_error on short windows.
Activity classify_activity(const telemetry::AccelTrace& trace, std::size_t first,
                           std::size_t count, const AdaptiveConfig& config);

/// Threshold crossings on the configured axis, debounced.
std::vector<double> detect_taps(const telemetry::AccelTrace& trace, const AdaptiveConfig& config);

/// One decision step. Throws input_error when time moves backwards.
std::pair<DeviceState, std::optional<LogEntry>> step_state(const DeviceState& state, double now,
                                                           Activity activity, bool tap,
                                                           const ClockSchedule& schedule,
                                                           const AdaptiveConfig& config);

/// Enter the absorbing fallback program; idempotent.
DeviceState engage_fallback(const DeviceState& state, const AdaptiveConfig& config, double now);

struct ScheduleRun {
    EventLog log;
    StimTimeline timeline;
    DeviceState final_state;
};

/// Fold step_state over uniform decision instants. A null accel trace means
/// permanently Active with no taps. The trace, when present, must cover
/// [start, start + duration).
ScheduleRun run_schedule(const telemetry::AccelTrace* accel, const ClockSchedule& schedule,
                         const AdaptiveConfig& config, double start, double duration_s,
                         std::optional<DeviceState> initial = std::nullopt);

/// EventLog CSV: "timestamp,from,to,cause,program_label".
std::string event_log_to_csv(const EventLog& log);
std::string timeline_to_csv(const StimTimeline& timeline);

/// JSON config files with explicit units in field names.
std::string schedule_to_json(const ClockSchedule& schedule);
ClockSchedule schedule_from_json(const std::string& json_text);
std::string adaptive_to_json(const AdaptiveConfig& config);
AdaptiveConfig adaptive_from_json(const std::string& json_text);
std::string program_to_json(const StimProgram& program);
StimProgram program_from_json(const std::string& json_text);

}  // namespace chronostim::scheduler
