#pragma once

// Sine circle map dynamics: a phase oscillator of natural frequency f0 driven
// by periodic pulses at frequency fs with dimensionless amplitude I,
//
//     theta' = theta + 2*pi*(f0/fs) + I*sin(theta).
//
// Phases are kept unwrapped; the winding number is read from cumulative phase
// as (theta_N - theta_0) / (2*pi*N), averaged over trials with random initial
// phases. Trial t of grid cell c draws theta_0 from the counter-based stream
// keyed (seed, c, t), so sweeps parallelize without changing results.

#include <cstdint>
#include <vector>

namespace chronostim::circlemap {

struct CircleMapConfig {
    double natural_hz = 13.0;   // f0
    double stim_hz = 13.0;      // fs
    double coupling = 0.0;      // I, dimensionless
    int n_pulses = 50;          // N
    int n_trials = 20;
    std::uint64_t seed = 0;

    /// Throws config_error if any field is out of range.
    void validate() const;
};

struct PhaseTrajectory {
    /// theta_0 ... theta_N, unwrapped radians; size() == n_pulses + 1.
    std::vector<double> phases;
};

struct WindingEstimate {
    double mean = 0.0;
    double std_dev = 0.0;  // population convention (divide by n_trials)
    std::vector<double> per_trial;
};

/// One application of the map. Validates the config.
double step(double theta, const CircleMapConfig& config);

/// Iterate n_pulses steps from theta0.
PhaseTrajectory iterate(double theta0, const CircleMapConfig& config);

/// Initial phase of a given trial: Uniform[0, 2*pi) from (seed, cell, trial).
double initial_phase(std::uint64_t seed, std::uint64_t cell_index, std::uint64_t trial);

/// Monte-Carlo winding number over n_trials random initial phases.
/// Deterministic given (config.seed, cell_index).
WindingEstimate winding_number(const CircleMapConfig& config, std::uint64_t cell_index = 0);

}  // namespace chronostim::circlemap
