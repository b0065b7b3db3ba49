#include "chronostim/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <json.hpp>

#include "chronostim/errors.hpp"
#include "chronostim/rng.hpp"
#include "chronostim/timeutil.hpp"

namespace chronostim::simharness {

namespace {

struct LockRun {
    tongues::RationalLock lock;
    double x_min_hz = 0.0;
    double x_max_hz = 0.0;
    double width_hz = 0.0;  // resolved flat width, as in tongues::TongueRegion
};

// Fixed-coupling scan of the natural-frequency axis under a program: label
// cells, then measure flat-run widths per lock (same rule as tongue_regions).
std::vector<LockRun> scan_lock_runs(double stim_hz, double coupling,
                                    const EntrainmentParams& params) {
    const auto& axis = params.f0_axis;
    const double tol = params.resolved_tol();
    const int n = axis.steps;
    std::vector<double> winding(static_cast<std::size_t>(n));
    std::vector<std::optional<tongues::RationalLock>> label(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        circlemap::CircleMapConfig cfg;
        cfg.natural_hz = axis.value(i);
        cfg.stim_hz = stim_hz;
        cfg.coupling = coupling;
        cfg.n_pulses = params.n_pulses;
        cfg.n_trials = params.n_trials;
        cfg.seed = params.seed;
        winding[static_cast<std::size_t>(i)] =
            circlemap::winding_number(cfg, static_cast<std::uint64_t>(i)).mean;
        label[static_cast<std::size_t>(i)] =
            tongues::classify_lock(winding[static_cast<std::size_t>(i)], params.max_q, tol);
    }

    const double dx = axis.spacing();
    std::vector<LockRun> runs;
    int i = 0;
    while (i < n) {
        if (!label[static_cast<std::size_t>(i)]) {
            ++i;
            continue;
        }
        const auto lock = *label[static_cast<std::size_t>(i)];
        int j = i;
        while (j + 1 < n && label[static_cast<std::size_t>(j) + 1] &&
               *label[static_cast<std::size_t>(j) + 1] == lock)
            ++j;
        LockRun run;
        run.lock = lock;
        run.x_min_hz = axis.value(i);
        run.x_max_hz = axis.value(j);
        int flat = 0, best = 0;
        for (int k = i; k < j; ++k) {
            const double dw = std::abs(winding[static_cast<std::size_t>(k) + 1] -
                                       winding[static_cast<std::size_t>(k)]);
            const double free_step = dx / stim_hz;
            if (dw <= 0.5 * free_step) {
                ++flat;
                best = std::max(best, flat);
            } else {
                flat = 0;
            }
        }
        run.width_hz = best * dx;
        runs.push_back(run);
        i = j + 1;
    }
    return runs;
}

}  // namespace

EntrainmentClass classify_entrainment(const scheduler::StimProgram& program,
                                      const EntrainmentParams& params) {
    program.validate();
    if (program.amplitude_ma <= 0.0) return EntrainmentClass::Neutral;
    const double coupling = program.amplitude_ma * params.coupling_per_ma;
    if (coupling <= 0.0) return EntrainmentClass::Neutral;
    const double tol = params.resolved_tol();

    circlemap::CircleMapConfig healthy;
    healthy.natural_hz = params.healthy_f0_hz;
    healthy.stim_hz = program.frequency_hz;
    healthy.coupling = coupling;
    healthy.n_pulses = params.n_pulses;
    healthy.n_trials = params.n_trials;
    healthy.seed = params.seed;
    const auto healthy_lock =
        tongues::classify_lock(circlemap::winding_number(healthy).mean, params.max_q, tol);
    const bool protective = healthy_lock && healthy_lock->p == 1 && healthy_lock->q == 1;

    const auto runs = scan_lock_runs(program.frequency_hz, coupling, params);
    double one_to_one_width = 0.0;
    for (const auto& r : runs)
        if (r.lock.p == 1 && r.lock.q == 1) one_to_one_width = std::max(one_to_one_width, r.width_hz);
    bool harmful = false;
    for (const auto& r : runs) {
        if (r.x_max_hz < params.band_lo_hz || r.x_min_hz > params.band_hi_hz) continue;
        if (r.width_hz > 0.0 && r.width_hz >= params.narrowness_ratio * one_to_one_width)
            harmful = true;
    }

    if (harmful) return EntrainmentClass::Harmful;  // dominates
    if (protective) return EntrainmentClass::Protective;
    return EntrainmentClass::Neutral;
}

SeizureModelConfig::SeizureModelConfig() {
    // Elevated risk through the sleep hours, matching the diary pattern the
    // schedule defends against.
    for (int h = 0; h < 24; ++h)
        circadian_profile[static_cast<std::size_t>(h)] = (h >= 7 && h < 22) ? 0.8 : 1.6;
}

void SeizureModelConfig::validate() const {
    if (!(base_rate_per_day >= 0.0)) throw config_error("base rate must be >= 0");
    for (double m : circadian_profile)
        if (!(m > 0.0)) throw config_error("circadian multipliers must be > 0");
    if (!(cluster_gain >= 0.0)) throw config_error("cluster gain must be >= 0");
    if (!(cluster_decay_per_hour > 0.0)) throw config_error("cluster decay must be > 0");
    if (!(entrainment_protective > 0.0 && entrainment_protective <= 1.0))
        throw config_error("protective multiplier must be in (0, 1]");
    if (!(entrainment_harmful >= 1.0)) throw config_error("harmful multiplier must be >= 1");
    if (!(interruption_success_prob >= 0.0 && interruption_success_prob <= 1.0))
        throw config_error("interruption probability must be in [0, 1]");
}

double entrainment_factor(const scheduler::StimProgram& program, const EntrainmentParams& params,
                          const SeizureModelConfig& model) {
    switch (classify_entrainment(program, params)) {
        case EntrainmentClass::Protective: return model.entrainment_protective;
        case EntrainmentClass::Harmful: return model.entrainment_harmful;
        case EntrainmentClass::Neutral: break;
    }
    return 1.0;
}

PolicySpec::PolicySpec() : schedule(scheduler::default_schedule()) {}

namespace {

using scheduler::DeviceMode;

constexpr double kNever = std::numeric_limits<double>::infinity();

// Entrainment factors are pure functions of a program under a fixed policy;
// resolving them once per policy keeps replicate loops free of sweeps.
struct FactorTable {
    std::vector<std::pair<scheduler::StimProgram, double>> entries;

    double get(const scheduler::StimProgram& p, const EntrainmentParams& params,
               const SeizureModelConfig& model) {
        for (const auto& [prog, f] : entries)
            if (prog == p) return f;
        const double f = entrainment_factor(p, params, model);
        entries.emplace_back(p, f);
        return f;
    }
};

FactorTable build_factor_table(const PolicySpec& policy) {
    FactorTable table;
    for (const auto& seg : policy.schedule.segments)
        table.get(seg.basal_program, policy.entrainment, policy.model);
    table.get(policy.adaptive.sleep_program, policy.entrainment, policy.model);
    table.get(policy.adaptive.boost_program, policy.entrainment, policy.model);
    table.get(policy.adaptive.fallback_program, policy.entrainment, policy.model);
    return table;
}

double next_schedule_boundary(const scheduler::ClockSchedule& schedule, double t) {
    const double sod = timeutil::seconds_of_day(t);
    const double day_start = t - sod;
    double best = day_start + timeutil::kSecondsPerDay +
                  static_cast<double>(schedule.segments.front().start_sod);
    for (const auto& seg : schedule.segments) {
        // Schedule starts are second-aligned; the slack absorbs rounding in
        // day_start so a just-passed boundary is never returned again.
        const double cand = day_start + static_cast<double>(seg.start_sod);
        if (cand > t + 1e-6) {
            best = std::min(best, cand);
            break;
        }
    }
    return best;
}

}  // namespace

namespace {

SimResult simulate_days_with(FactorTable& factors, int days, const PolicySpec& policy,
                             double start, std::uint64_t seed, double period_gap_h) {
    if (days < 1) throw config_error("days must be >= 1");
    policy.schedule.validate();
    policy.adaptive.validate();
    policy.model.validate();

    const double end = start + static_cast<double>(days) * timeutil::kSecondsPerDay;
    SimResult result;
    result.start = start;
    result.duration_s = end - start;

    rng::Stream stream(rng::derive(seed ^ policy.model.seed, 0x51a7eULL));

    scheduler::DeviceState state = scheduler::initial_state(policy.schedule, start);
    result.timeline.points.emplace_back(start, state.active_program);

    double excitation = 0.0;  // current self-excitation term
    double excitation_at = start;
    double boost_expiry = kNever;
    std::vector<double> pending_taps;  // ascending carer tap times

    const auto decay_to = [&](double t) {
        excitation *= std::exp(-policy.model.cluster_decay_per_hour * (t - excitation_at) / 3600.0);
        excitation_at = t;
    };

    const auto rate_per_s = [&](double t, double current_factor) {
        const int hour = static_cast<int>(timeutil::seconds_of_day(t) / 3600.0) % 24;
        return policy.model.base_rate_per_day / 86400.0 *
               policy.model.circadian_profile[static_cast<std::size_t>(hour)] * current_factor *
               (1.0 + excitation);
    };

    double t = start;
    while (t < end) {
        // Next instant where the program or the circadian multiplier changes.
        const double hour_mark = std::floor(t / 3600.0 + 1e-9) * 3600.0 + 3600.0;
        double boundary = std::min(end, std::min(hour_mark, next_schedule_boundary(policy.schedule, t)));
        boundary = std::min(boundary, boost_expiry);
        if (!pending_taps.empty()) boundary = std::min(boundary, pending_taps.front());

        const double factor = factors.get(state.active_program, policy.entrainment, policy.model);

        // Thin a homogeneous bound over [t, boundary): the program and the
        // circadian multiplier are constant there and the excitation only
        // decays between events, so the rate at t bounds the segment.
        decay_to(t);
        const double bound = rate_per_s(t, factor);
        double s = t;
        bool advanced_to_boundary = true;
        while (bound > 0.0) {
            const double step = stream.next_exponential() / bound;
            if (s + step >= boundary) break;
            s += step;
            decay_to(s);
            if (stream.next_unit() * bound <= rate_per_s(s, factor)) {
                // Seizure.
                SeizureRecord rec;
                rec.timestamp = s;
                rec.during_mode = state.mode;
                bool jump = true;
                if (policy.carer.policy == TapPolicy::TapOnSeizure) {
                    rec.interruption_attempted = true;
                    ++result.interruption_attempts;
                    if (stream.next_unit() < policy.model.interruption_success_prob) {
                        rec.interruption_success = true;
                        ++result.interruption_successes;
                        jump = false;  // success cancels the excitation jump
                    }
                    const double tap_at = s + policy.carer.reaction_delay_s;
                    if (tap_at < end) {
                        pending_taps.insert(
                            std::upper_bound(pending_taps.begin(), pending_taps.end(), tap_at),
                            tap_at);
                    }
                }
                if (jump) excitation += policy.model.cluster_gain;
                result.seizures.push_back(rec);
                // The excitation may have jumped; restart the segment bound.
                advanced_to_boundary = false;
                break;
            }
        }
        if (!advanced_to_boundary) {
            t = s;
            continue;
        }

        t = boundary;
        if (t >= end) break;
        decay_to(t);

        if (!pending_taps.empty() && t == pending_taps.front()) {
            pending_taps.erase(pending_taps.begin());
            if (state.mode != DeviceMode::Fallback) {
                if (state.mode == DeviceMode::Boost) {
                    state.mode_entered_at = t;  // retrigger, no log entry
                } else {
                    scheduler::LogEntry entry{t, state.mode, DeviceMode::Boost,
                                              scheduler::TransitionCause::Tap,
                                              policy.adaptive.boost_program};
                    state.mode = DeviceMode::Boost;
                    state.mode_entered_at = t;
                    state.active_program = policy.adaptive.boost_program;
                    result.log.entries.push_back(entry);
                    result.timeline.points.emplace_back(t, state.active_program);
                }
                boost_expiry = t + policy.adaptive.boost_duration_s;
            }
            continue;
        }

        if (t == boost_expiry) {
            boost_expiry = kNever;
            const auto& seg = policy.schedule.segment_at(t);
            scheduler::LogEntry entry{t, state.mode,
                                      seg.night ? DeviceMode::BasalNight : DeviceMode::BasalDay,
                                      scheduler::TransitionCause::BoostExpired, seg.basal_program};
            state.mode = entry.to;
            state.mode_entered_at = t;
            state.active_program = seg.basal_program;
            result.log.entries.push_back(entry);
            result.timeline.points.emplace_back(t, state.active_program);
            continue;
        }

        // Hour marks and schedule boundaries: switch basal program if due.
        if (state.mode == DeviceMode::BasalDay || state.mode == DeviceMode::BasalNight) {
            const auto& seg = policy.schedule.segment_at(t);
            const auto mode = seg.night ? DeviceMode::BasalNight : DeviceMode::BasalDay;
            if (mode != state.mode || !(seg.basal_program == state.active_program)) {
                scheduler::LogEntry entry{t, state.mode, mode,
                                          scheduler::TransitionCause::ScheduleBoundary,
                                          seg.basal_program};
                state.mode = mode;
                state.mode_entered_at = t;
                state.active_program = seg.basal_program;
                result.log.entries.push_back(entry);
                result.timeline.points.emplace_back(t, state.active_program);
            }
        }
    }

    // Periods via the diary machinery.
    std::vector<diary::DiaryEvent> events;
    events.reserve(result.seizures.size());
    for (const auto& s : result.seizures) {
        diary::DiaryEvent ev;
        ev.timestamp = s.timestamp;
        ev.interruption_attempted = s.interruption_attempted;
        ev.interruption_success = s.interruption_success;
        events.push_back(ev);
    }
    if (!events.empty()) result.periods = diary::group_periods(std::move(events), period_gap_h);
    return result;
}

}  // namespace

SimResult simulate_days(int days, const PolicySpec& policy, double start, std::uint64_t seed,
                        double period_gap_h) {
    policy.schedule.validate();
    policy.adaptive.validate();
    policy.model.validate();
    auto factors = build_factor_table(policy);
    return simulate_days_with(factors, days, policy, start, seed, period_gap_h);
}

namespace {

PolicyStats stats_from(const std::vector<SimResult>& results) {
    PolicyStats st;
    double period_count_sum = 0.0;
    for (const auto& r : results) {
        st.seizure_counts.push_back(static_cast<double>(r.seizures.size()));
        period_count_sum += static_cast<double>(r.periods.size());
        for (const auto& p : r.periods) st.period_durations_h.push_back(p.duration_h);
    }
    const double n = static_cast<double>(results.size());
    double sum = 0.0;
    for (double c : st.seizure_counts) sum += c;
    st.mean_seizures = sum / n;
    if (results.size() > 1) {
        double sq = 0.0;
        for (double c : st.seizure_counts) sq += (c - st.mean_seizures) * (c - st.mean_seizures);
        st.sd_seizures = std::sqrt(sq / (n - 1.0));
    }
    st.mean_periods = period_count_sum / n;
    if (!st.period_durations_h.empty()) {
        double d = 0.0;
        for (double x : st.period_durations_h) d += x;
        st.mean_period_duration_h = d / static_cast<double>(st.period_durations_h.size());
    }
    return st;
}

}  // namespace

ComparisonSummary compare_policies(const PolicySpec& policy_a, const PolicySpec& policy_b,
                                   int n_reps, int days, double start, std::uint64_t seed,
                                   int workers) {
    if (n_reps < 2) throw config_error("n_reps must be >= 2");
    if (workers < 1) throw config_error("workers must be >= 1");

    std::vector<SimResult> results_a(static_cast<std::size_t>(n_reps));
    std::vector<SimResult> results_b(static_cast<std::size_t>(n_reps));

    policy_a.model.validate();
    policy_b.model.validate();
    const auto factors_a = build_factor_table(policy_a);
    const auto factors_b = build_factor_table(policy_b);

    auto eval = [&](int rep) {
        auto fa = factors_a;  // per-thread copy; lookups stay read-only in practice
        auto fb = factors_b;
        results_a[static_cast<std::size_t>(rep)] = simulate_days_with(
            fa, days, policy_a, start, rng::derive(seed, 0, static_cast<std::uint64_t>(rep)),
            24.0);
        results_b[static_cast<std::size_t>(rep)] = simulate_days_with(
            fb, days, policy_b, start, rng::derive(seed, 1, static_cast<std::uint64_t>(rep)),
            24.0);
    };

    if (workers == 1) {
        for (int r = 0; r < n_reps; ++r) eval(r);
    } else {
        std::atomic<int> next{0};
        auto run = [&] {
            for (;;) {
                const int r = next.fetch_add(1, std::memory_order_relaxed);
                if (r >= n_reps) return;
                eval(r);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }

    ComparisonSummary summary;
    summary.n_reps = n_reps;
    summary.a = stats_from(results_a);
    summary.b = stats_from(results_b);
    summary.count_test = diary::mann_whitney_one_tailed(
        summary.a.seizure_counts, summary.b.seizure_counts, diary::Alternative::XGreater);
    if (!summary.a.period_durations_h.empty() && !summary.b.period_durations_h.empty()) {
        summary.duration_test = diary::mann_whitney_one_tailed(
            summary.a.period_durations_h, summary.b.period_durations_h,
            diary::Alternative::XGreater);
        summary.duration_test_valid = true;
    }
    return summary;
}

namespace {

nlohmann::json program_brief(const scheduler::StimProgram& p) {
    return {
        {"label", p.label},
        {"frequency_hz", p.frequency_hz},
        {"pulse_width_us", p.pulse_width_us},
        {"amplitude_ma", p.amplitude_ma},
        {"electrode_mode",
         p.electrode_mode == scheduler::ElectrodeMode::Bipolar ? "bipolar" : "monopolar"},
    };
}

nlohmann::json mw_json(const diary::MannWhitneyResult& r) {
    return {
        {"u_x", r.u_x},
        {"u_y", r.u_y},
        {"p_one_tailed", r.p_one_tailed},
        {"method", r.method == diary::MannWhitneyResult::Method::ExactEnumeration
                       ? "exact_enumeration"
                       : "normal_approx_tie_corrected"},
    };
}

}  // namespace

std::string sim_result_to_json(const SimResult& result) {
    nlohmann::json j;
    j["start"] = timeutil::format_iso8601(result.start);
    j["duration_s"] = result.duration_s;
    j["interruption_attempts"] = result.interruption_attempts;
    j["interruption_successes"] = result.interruption_successes;
    j["seizures"] = nlohmann::json::array();
    for (const auto& s : result.seizures) {
        j["seizures"].push_back({
            {"timestamp", timeutil::format_iso8601(s.timestamp)},
            {"during_mode", scheduler::to_string(s.during_mode)},
            {"interruption_attempted", s.interruption_attempted},
            {"interruption_success", s.interruption_success},
        });
    }
    j["periods"] = nlohmann::json::array();
    for (const auto& p : result.periods) {
        j["periods"].push_back({
            {"start", timeutil::format_iso8601(p.start)},
            {"end", timeutil::format_iso8601(p.end)},
            {"duration_h", p.duration_h},
            {"kind", p.kind == diary::PeriodKind::Isolated ? "IS" : "CS"},
            {"seizures", p.events.size()},
        });
    }
    j["timeline"] = nlohmann::json::array();
    for (const auto& [t, p] : result.timeline.points) {
        auto entry = program_brief(p);
        entry["timestamp"] = timeutil::format_iso8601(t);
        j["timeline"].push_back(entry);
    }
    j["transitions"] = nlohmann::json::array();
    for (const auto& e : result.log.entries) {
        j["transitions"].push_back({
            {"timestamp", timeutil::format_iso8601(e.timestamp)},
            {"from", scheduler::to_string(e.from)},
            {"to", scheduler::to_string(e.to)},
            {"cause", scheduler::to_string(e.cause)},
            {"program", e.program.label},
        });
    }
    return j.dump(2) + "\n";
}

std::string sim_result_to_diary_csv(const SimResult& result) {
    std::vector<diary::DiaryEvent> events;
    events.reserve(result.seizures.size());
    for (const auto& s : result.seizures) {
        diary::DiaryEvent ev;
        ev.timestamp = s.timestamp;
        ev.interruption_attempted = s.interruption_attempted;
        ev.interruption_success = s.interruption_success;
        ev.note = "simulated";
        events.push_back(ev);
    }
    return diary::diary_to_csv(events);
}

std::string comparison_to_json(const ComparisonSummary& summary) {
    nlohmann::json j;
    j["n_reps"] = summary.n_reps;
    const auto policy_json = [](const PolicyStats& st) {
        return nlohmann::json{
            {"mean_seizures", st.mean_seizures},
            {"sd_seizures", st.sd_seizures},
            {"mean_periods", st.mean_periods},
            {"mean_period_duration_h", st.mean_period_duration_h},
        };
    };
    j["policy_a"] = policy_json(summary.a);
    j["policy_b"] = policy_json(summary.b);
    j["seizure_count_test"] = mw_json(summary.count_test);
    if (summary.duration_test_valid) j["period_duration_test"] = mw_json(summary.duration_test);
    return j.dump(2) + "\n";
}

std::string model_to_json(const SeizureModelConfig& m) {
    nlohmann::json j;
    j["base_rate_per_day"] = m.base_rate_per_day;
    j["circadian_profile"] = m.circadian_profile;
    j["cluster_gain"] = m.cluster_gain;
    j["cluster_decay_per_hour"] = m.cluster_decay_per_hour;
    j["entrainment_protective"] = m.entrainment_protective;
    j["entrainment_harmful"] = m.entrainment_harmful;
    j["interruption_success_prob"] = m.interruption_success_prob;
    j["seed"] = m.seed;
    return j.dump(2) + "\n";
}

SeizureModelConfig model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("model JSON: ") + e.what(), 1);
    }
    SeizureModelConfig m;
    m.base_rate_per_day = j.value("base_rate_per_day", m.base_rate_per_day);
    if (j.contains("circadian_profile")) {
        const auto& arr = j.at("circadian_profile");
        if (arr.size() != 24) throw config_error("circadian_profile must have 24 entries");
        for (std::size_t h = 0; h < 24; ++h) m.circadian_profile[h] = arr[h].get<double>();
    }
    m.cluster_gain = j.value("cluster_gain", m.cluster_gain);
    m.cluster_decay_per_hour = j.value("cluster_decay_per_hour", m.cluster_decay_per_hour);
    m.entrainment_protective = j.value("entrainment_protective", m.entrainment_protective);
    m.entrainment_harmful = j.value("entrainment_harmful", m.entrainment_harmful);
    m.interruption_success_prob = j.value("interruption_success_prob", m.interruption_success_prob);
    m.seed = j.value("seed", m.seed);
    m.validate();
    return m;
}

}  // namespace chronostim::simharness
