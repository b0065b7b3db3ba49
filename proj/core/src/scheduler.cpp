#include "chronostim/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "chronostim/errors.hpp"
#include "chronostim/timeutil.hpp"

namespace chronostim::scheduler {

void StimProgram::validate() const {
    if (!(frequency_hz > 0.0)) throw config_error("program frequency must be > 0 Hz");
    if (!(pulse_width_us > 0.0)) throw config_error("pulse width must be > 0 us");
    if (!(amplitude_ma >= 0.0)) throw config_error("amplitude must be >= 0 mA");
}

void ClockSchedule::validate() const {
    if (segments.empty()) throw config_error("schedule requires at least one segment");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (s.start_sod < 0 || s.start_sod >= 86400)
            throw config_error("segment start outside the day");
        if (i > 0 && segments[i - 1].start_sod >= s.start_sod)
            throw config_error("segment starts must be strictly ascending");
        s.basal_program.validate();
    }
}

const ScheduleSegment& ClockSchedule::segment_at(double t) const {
    const double sod = timeutil::seconds_of_day(t);
    // Last segment whose start <= sod; before the first start the previous
    // day's final segment is still in force (wrap).
    const ScheduleSegment* cur = &segments.back();
    for (const auto& s : segments) {
        if (static_cast<double>(s.start_sod) <= sod) cur = &s;
    }
    return *cur;
}

ClockSchedule default_schedule() {
    StimProgram day{13.0, 350.0, 0.5, ElectrodeMode::Monopolar, "day_basal"};
    StimProgram night{13.0, 350.0, 0.7, ElectrodeMode::Monopolar, "night_basal"};
    ClockSchedule s;
    s.segments = {
        {7 * 3600, false, day},
        {21 * 3600, true, night},
    };
    return s;
}

AdaptiveConfig::AdaptiveConfig() {
    sleep_program = {13.0, 350.0, 1.3, ElectrodeMode::Monopolar, "sleep"};
    boost_program = {130.0, 90.0, 1.5, ElectrodeMode::Bipolar, "boost"};
    fallback_program = {13.0, 350.0, 1.3, ElectrodeMode::Monopolar, "fallback"};
}

void AdaptiveConfig::validate() const {
    if (!(inactivity_minutes > 0.0)) throw config_error("inactivity_minutes must be > 0");
    if (!(activity_window_s > 0.0)) throw config_error("activity window must be > 0 s");
    if (!(activity_stddev_threshold_g > 0.0)) throw config_error("activity threshold must be > 0 g");
    if (!(tap_threshold_g > 0.0)) throw config_error("tap threshold must be > 0 g");
    if (!(tap_debounce_s >= 0.0)) throw config_error("tap debounce must be >= 0 s");
    if (!(boost_duration_s > 0.0)) throw config_error("boost duration must be > 0 s");
    sleep_program.validate();
    boost_program.validate();
    fallback_program.validate();
}

std::string to_string(DeviceMode mode) {
    switch (mode) {
        case DeviceMode::BasalDay: return "BasalDay";
        case DeviceMode::BasalNight: return "BasalNight";
        case DeviceMode::SleepMode: return "SleepMode";
        case DeviceMode::Boost: return "Boost";
        case DeviceMode::Fallback: return "Fallback";
    }
    return "?";
}

std::string to_string(TransitionCause cause) {
    switch (cause) {
        case TransitionCause::ScheduleBoundary: return "schedule_boundary";
        case TransitionCause::InactivityElapsed: return "inactivity_elapsed";
        case TransitionCause::ActivityResumed: return "activity_resumed";
        case TransitionCause::Tap: return "tap";
        case TransitionCause::BoostExpired: return "boost_expired";
        case TransitionCause::FallbackEngaged: return "fallback_engaged";
    }
    return "?";
}

namespace {

DeviceMode basal_mode(const ScheduleSegment& seg) {
    return seg.night ? DeviceMode::BasalNight : DeviceMode::BasalDay;
}

}  // namespace

DeviceState initial_state(const ClockSchedule& schedule, double start) {
    schedule.validate();
    const auto& seg = schedule.segment_at(start);
    DeviceState st;
    st.mode = basal_mode(seg);
    st.mode_entered_at = start;
    st.active_program = seg.basal_program;
    return st;
}

Activity classify_activity(const telemetry::AccelTrace& trace, std::size_t first,
                           std::size_t count, const AdaptiveConfig& config) {
    config.validate();
    if (first + count > trace.samples.size()) throw input_error("activity window out of range");
    const double span = static_cast<double>(count) / trace.sample_rate_hz;
    if (span + 1e-9 < config.activity_window_s)
        throw input_error("activity window shorter than the configured span");

    double sum = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        const auto& s = trace.samples[i];
        sum += std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        const auto& s = trace.samples[i];
        const double m = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
        sq += (m - mean) * (m - mean);
    }
    const double sd = std::sqrt(sq / static_cast<double>(count));
    return sd <= config.activity_stddev_threshold_g ? Activity::Inactive : Activity::Active;
}

std::vector<double> detect_taps(const telemetry::AccelTrace& trace, const AdaptiveConfig& config) {
    config.validate();
    const int axis = config.tap_axis == Axis::X ? 0 : config.tap_axis == Axis::Y ? 1 : 2;
    std::vector<double> taps;
    double last = -1e300;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        if (trace.samples[i][static_cast<std::size_t>(axis)] < config.tap_threshold_g) continue;
        const double t = trace.start_time + static_cast<double>(i) / trace.sample_rate_hz;
        if (t - last < config.tap_debounce_s) continue;
        taps.push_back(t);
        last = t;
    }
    return taps;
}

std::pair<DeviceState, std::optional<LogEntry>> step_state(const DeviceState& state, double now,
                                                           Activity activity, bool tap,
                                                           const ClockSchedule& schedule,
                                                           const AdaptiveConfig& config) {
    schedule.validate();
    config.validate();
    if (now < state.mode_entered_at) throw input_error("time moved backwards");

    DeviceState next = state;

    // Inactivity bookkeeping runs in every non-fallback mode.
    if (state.mode != DeviceMode::Fallback) {
        if (activity == Activity::Inactive) {
            if (!next.inactivity_since) next.inactivity_since = now;
        } else {
            next.inactivity_since.reset();
        }
    }

    auto transition = [&](DeviceMode to, const StimProgram& program, TransitionCause cause)
        -> std::pair<DeviceState, std::optional<LogEntry>> {
        LogEntry entry{now, state.mode, to, cause, program};
        next.mode = to;
        next.mode_entered_at = now;
        next.active_program = program;
        return {next, entry};
    };

    if (state.mode == DeviceMode::Fallback) return {next, std::nullopt};

    const auto& seg = schedule.segment_at(now);

    if (tap) {
        next.last_tap_at = now;
        if (state.mode == DeviceMode::Boost) {
            // Retrigger restarts the timer; mode and program are unchanged,
            // so no log entry is emitted.
            next.mode_entered_at = now;
            return {next, std::nullopt};
        }
        return transition(DeviceMode::Boost, config.boost_program, TransitionCause::Tap);
    }

    const bool inactivity_elapsed =
        next.inactivity_since &&
        now - *next.inactivity_since >= config.inactivity_minutes * 60.0;
    const bool sleep_allowed = !(config.suppress_sleep_at_night && seg.night);

    if (state.mode == DeviceMode::Boost) {
        if (now - state.mode_entered_at < config.boost_duration_s) return {next, std::nullopt};
        if (inactivity_elapsed && sleep_allowed)
            return transition(DeviceMode::SleepMode, config.sleep_program,
                              TransitionCause::BoostExpired);
        return transition(basal_mode(seg), seg.basal_program, TransitionCause::BoostExpired);
    }

    if (state.mode == DeviceMode::SleepMode) {
        if (activity == Activity::Active)
            return transition(basal_mode(seg), seg.basal_program, TransitionCause::ActivityResumed);
        return {next, std::nullopt};
    }

    // Basal modes.
    if (inactivity_elapsed && sleep_allowed)
        return transition(DeviceMode::SleepMode, config.sleep_program,
                          TransitionCause::InactivityElapsed);
    if (basal_mode(seg) != state.mode || !(seg.basal_program == state.active_program))
        return transition(basal_mode(seg), seg.basal_program, TransitionCause::ScheduleBoundary);
    return {next, std::nullopt};
}

DeviceState engage_fallback(const DeviceState& state, const AdaptiveConfig& config, double now) {
    config.validate();
    DeviceState next = state;
    if (state.mode == DeviceMode::Fallback) return next;
    next.mode = DeviceMode::Fallback;
    next.mode_entered_at = now;
    next.active_program = config.fallback_program;
    next.inactivity_since.reset();
    return next;
}

ScheduleRun run_schedule(const telemetry::AccelTrace* accel, const ClockSchedule& schedule,
                         const AdaptiveConfig& config, double start, double duration_s,
                         std::optional<DeviceState> initial) {
    schedule.validate();
    config.validate();
    if (duration_s < 0.0) throw input_error("duration must be >= 0");

    ScheduleRun run;
    DeviceState state = initial ? *initial : initial_state(schedule, start);
    run.final_state = state;
    if (duration_s == 0.0) return run;

    const double window = config.activity_window_s;
    std::vector<double> taps;
    if (accel) {
        const double covered =
            static_cast<double>(accel->samples.size()) / accel->sample_rate_hz;
        if (accel->start_time > start || accel->start_time + covered + 1e-9 < start + duration_s)
            throw input_error("accelerometer trace does not cover the simulated span");
        taps = detect_taps(*accel, config);
    }

    run.timeline.points.emplace_back(start, state.active_program);

    const auto n_steps = static_cast<std::int64_t>(std::floor(duration_s / window + 1e-9));
    std::size_t tap_cursor = 0;
    double prev_instant = start;
    for (std::int64_t k = 1; k <= n_steps; ++k) {
        const double now = start + static_cast<double>(k) * window;

        Activity activity = Activity::Active;
        if (accel) {
            const double w_begin = now - window;
            const auto first = static_cast<std::size_t>(
                std::llround((w_begin - accel->start_time) * accel->sample_rate_hz));
            auto count = static_cast<std::size_t>(std::llround(window * accel->sample_rate_hz));
            count = std::min(count, accel->samples.size() - first);
            activity = classify_activity(*accel, first, count, config);
        }

        bool tap = false;
        while (tap_cursor < taps.size() && taps[tap_cursor] <= now) {
            if (taps[tap_cursor] > prev_instant) tap = true;
            ++tap_cursor;
        }

        auto [next, entry] = step_state(state, now, activity, tap, schedule, config);
        state = next;
        if (entry) {
            run.log.entries.push_back(*entry);
            run.timeline.points.emplace_back(now, entry->program);
        }
        prev_instant = now;
    }
    run.final_state = state;
    return run;
}

std::string event_log_to_csv(const EventLog& log) {
    std::string out = "timestamp,from,to,cause,program_label\n";
    for (const auto& e : log.entries) {
        out += timeutil::format_iso8601(e.timestamp);
        out += "," + to_string(e.from) + "," + to_string(e.to) + "," + to_string(e.cause) + "," +
               e.program.label + "\n";
    }
    return out;
}

std::string timeline_to_csv(const StimTimeline& timeline) {
    std::string out = "timestamp,program_label,frequency_hz,pulse_width_us,amplitude_ma,electrode_mode\n";
    char buf[96];
    for (const auto& [t, p] : timeline.points) {
        out += timeutil::format_iso8601(t);
        std::snprintf(buf, sizeof buf, ",%s,%.9g,%.9g,%.9g,%s\n", p.label.c_str(), p.frequency_hz,
                      p.pulse_width_us, p.amplitude_ma,
                      p.electrode_mode == ElectrodeMode::Bipolar ? "bipolar" : "monopolar");
        out += buf;
    }
    return out;
}

namespace {

nlohmann::json program_json(const StimProgram& p) {
    return {
        {"frequency_hz", p.frequency_hz},
        {"pulse_width_us", p.pulse_width_us},
        {"amplitude_ma", p.amplitude_ma},
        {"electrode_mode", p.electrode_mode == ElectrodeMode::Bipolar ? "bipolar" : "monopolar"},
        {"label", p.label},
    };
}

StimProgram program_from(const nlohmann::json& j) {
    StimProgram p;
    p.frequency_hz = j.at("frequency_hz").get<double>();
    p.pulse_width_us = j.at("pulse_width_us").get<double>();
    p.amplitude_ma = j.at("amplitude_ma").get<double>();
    const std::string mode = j.value("electrode_mode", "monopolar");
    if (mode == "bipolar")
        p.electrode_mode = ElectrodeMode::Bipolar;
    else if (mode == "monopolar")
        p.electrode_mode = ElectrodeMode::Monopolar;
    else
        throw config_error("unknown electrode mode: " + mode);
    p.label = j.value("label", "");
    p.validate();
    return p;
}

nlohmann::json parse_json(const std::string& text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string(what) + ": " + e.what(), 1);
    }
}

}  // namespace

std::string schedule_to_json(const ClockSchedule& schedule) {
    nlohmann::json j;
    j["segments"] = nlohmann::json::array();
    for (const auto& s : schedule.segments) {
        j["segments"].push_back({
            {"start", timeutil::format_time_of_day(s.start_sod)},
            {"night", s.night},
            {"program", program_json(s.basal_program)},
        });
    }
    return j.dump(2) + "\n";
}

ClockSchedule schedule_from_json(const std::string& text) {
    const auto j = parse_json(text, "schedule JSON");
    ClockSchedule schedule;
    for (const auto& s : j.at("segments")) {
        ScheduleSegment seg;
        seg.start_sod = timeutil::parse_time_of_day(s.at("start").get<std::string>());
        seg.night = s.value("night", false);
        seg.basal_program = program_from(s.at("program"));
        schedule.segments.push_back(std::move(seg));
    }
    schedule.validate();
    return schedule;
}

std::string adaptive_to_json(const AdaptiveConfig& c) {
    nlohmann::json j;
    j["inactivity_minutes"] = c.inactivity_minutes;
    j["activity_window_s"] = c.activity_window_s;
    j["activity_stddev_threshold_g"] = c.activity_stddev_threshold_g;
    j["tap_axis"] = c.tap_axis == Axis::X ? "x" : c.tap_axis == Axis::Y ? "y" : "z";
    j["tap_threshold_g"] = c.tap_threshold_g;
    j["tap_debounce_s"] = c.tap_debounce_s;
    j["sleep_program"] = program_json(c.sleep_program);
    j["boost_program"] = program_json(c.boost_program);
    j["boost_duration_s"] = c.boost_duration_s;
    j["fallback_program"] = program_json(c.fallback_program);
    j["suppress_sleep_at_night"] = c.suppress_sleep_at_night;
    return j.dump(2) + "\n";
}

AdaptiveConfig adaptive_from_json(const std::string& text) {
    const auto j = parse_json(text, "adaptive config JSON");
    AdaptiveConfig c;
    c.inactivity_minutes = j.value("inactivity_minutes", c.inactivity_minutes);
    c.activity_window_s = j.value("activity_window_s", c.activity_window_s);
    c.activity_stddev_threshold_g =
        j.value("activity_stddev_threshold_g", c.activity_stddev_threshold_g);
    if (j.contains("tap_axis")) {
        const std::string a = j.at("tap_axis").get<std::string>();
        if (a == "x") c.tap_axis = Axis::X;
        else if (a == "y") c.tap_axis = Axis::Y;
        else if (a == "z") c.tap_axis = Axis::Z;
        else throw config_error("unknown tap axis: " + a);
    }
    c.tap_threshold_g = j.value("tap_threshold_g", c.tap_threshold_g);
    c.tap_debounce_s = j.value("tap_debounce_s", c.tap_debounce_s);
    if (j.contains("sleep_program")) c.sleep_program = program_from(j.at("sleep_program"));
    if (j.contains("boost_program")) c.boost_program = program_from(j.at("boost_program"));
    c.boost_duration_s = j.value("boost_duration_s", c.boost_duration_s);
    if (j.contains("fallback_program")) c.fallback_program = program_from(j.at("fallback_program"));
    c.suppress_sleep_at_night = j.value("suppress_sleep_at_night", c.suppress_sleep_at_night);
    c.validate();
    return c;
}

std::string program_to_json(const StimProgram& program) { return program_json(program).dump(2) + "\n"; }

StimProgram program_from_json(const std::string& text) {
    return program_from(parse_json(text, "program JSON"));
}

}  // namespace chronostim::scheduler
