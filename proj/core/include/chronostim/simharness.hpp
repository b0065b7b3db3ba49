#pragma once

// Stochastic seizure-process harness: a thinned inhomogeneous Poisson process
// with exponentially-decaying self-excitation, whose instantaneous rate is
// modulated by the circadian profile and by the entrainment class of the
// stimulation program in force. A modeling layer for comparing stimulation
// policies end to end; not a clinical predictor.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chronostim/diary.hpp"
#include "chronostim/scheduler.hpp"
#include "chronostim/tongues.hpp"

namespace chronostim::simharness {

struct EntrainmentParams {
    double healthy_f0_hz = 13.0;
    double band_lo_hz = 2.0;
    double band_hi_hz = 3.0;
    /// Device milliamps to circle-map coupling; a configuration knob, not a
    /// measured constant.
    double coupling_per_ma = 0.5;
    int max_q = 6;
    double classify_tol = -1.0;  // <= 0 resolves to default_classify_tol(n_pulses)
    double narrowness_ratio = 0.1;
    tongues::SweepAxis f0_axis{1.0, 26.0, 251};
    int n_pulses = 50;
    int n_trials = 20;
    std::uint64_t seed = 0x7a11e5ULL;

    double resolved_tol() const {
        return classify_tol > 0.0 ? classify_tol : tongues::default_classify_tol(n_pulses);
    }
};

enum class EntrainmentClass { Protective, Neutral, Harmful };

/// Protective when the healthy rhythm locks 1:1 under the program; harmful
/// when any q <= max_q lock reaches the pathological band with
/// super-threshold width (harmful dominates); neutral otherwise, and always
/// neutral at zero amplitude.
EntrainmentClass classify_entrainment(const scheduler::StimProgram& program,
                                      const EntrainmentParams& params);

struct SeizureModelConfig {
    double base_rate_per_day = 0.15;
    std::array<double, 24> circadian_profile{};  // hourly multipliers, > 0
    double cluster_gain = 1.0;                   // excitation jump per seizure
    double cluster_decay_per_hour = 0.2;
    double entrainment_protective = 0.5;  // multiplier < 1
    double entrainment_harmful = 2.0;     // multiplier > 1
    double interruption_success_prob = 0.64;
    std::uint64_t seed = 0;

    SeizureModelConfig();
    void validate() const;
};

/// Rate multiplier for a program under the model.
double entrainment_factor(const scheduler::StimProgram& program, const EntrainmentParams& params,
                          const SeizureModelConfig& model);

enum class TapPolicy { None, TapOnSeizure };

struct CarerPolicy {
    TapPolicy policy = TapPolicy::None;
    double reaction_delay_s = 30.0;
};

struct SeizureRecord {
    double timestamp = 0.0;
    scheduler::DeviceMode during_mode = scheduler::DeviceMode::BasalDay;
    bool interruption_attempted = false;
    bool interruption_success = false;
};

struct SimResult {
    double start = 0.0;
    double duration_s = 0.0;
    std::vector<SeizureRecord> seizures;
    std::vector<diary::OccurrencePeriod> periods;
    scheduler::StimTimeline timeline;
    scheduler::EventLog log;
    std::size_t interruption_attempts = 0;
    std::size_t interruption_successes = 0;
};

struct PolicySpec {
    scheduler::ClockSchedule schedule;
    scheduler::AdaptiveConfig adaptive;
    SeizureModelConfig model;
    CarerPolicy carer;
    EntrainmentParams entrainment;

    PolicySpec();
};

/// Event-driven simulation of `days` days from `start`. No accelerometer
/// input is modeled: the subject is permanently Active; boosts come from the
/// carer tap policy. Deterministic per seed.
SimResult simulate_days(int days, const PolicySpec& policy, double start, std::uint64_t seed,
                        double period_gap_h = 24.0);

struct PolicyStats {
    double mean_seizures = 0.0;
    double sd_seizures = 0.0;
    double mean_periods = 0.0;
    double mean_period_duration_h = 0.0;
    std::vector<double> seizure_counts;       // one per replicate
    std::vector<double> period_durations_h;   // pooled across replicates
};

struct ComparisonSummary {
    PolicyStats a;
    PolicyStats b;
    /// H1: policy B produces fewer seizures per replicate than policy A.
    diary::MannWhitneyResult count_test;
    /// H1: policy B periods are shorter.
    diary::MannWhitneyResult duration_test;
    bool duration_test_valid = false;  // needs at least one period on each side
    int n_reps = 0;
};

/// Paired replicate streams (distinct sub-seeds per side and replicate).
/// `workers` > 1 runs replicates concurrently with identical results.
ComparisonSummary compare_policies(const PolicySpec& policy_a, const PolicySpec& policy_b,
                                   int n_reps, int days, double start, std::uint64_t seed,
                                   int workers = 1);

std::string sim_result_to_json(const SimResult& result);
std::string sim_result_to_diary_csv(const SimResult& result);
std::string comparison_to_json(const ComparisonSummary& summary);

std::string model_to_json(const SeizureModelConfig& model);
SeizureModelConfig model_from_json(const std::string& json_text);

}  // namespace chronostim::simharness
