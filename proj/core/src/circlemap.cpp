#include "chronostim/circlemap.hpp"

#include <cmath>
#include <numbers>

#include "chronostim/errors.hpp"
#include "chronostim/rng.hpp"

namespace chronostim::circlemap {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void CircleMapConfig::validate() const {
    if (!(natural_hz > 0.0)) throw config_error("natural frequency must be > 0 Hz");
    if (!(stim_hz > 0.0)) throw config_error("stimulation frequency must be > 0 Hz");
    if (!(coupling >= 0.0)) throw config_error("coupling must be >= 0");
    if (n_pulses < 1) throw config_error("n_pulses must be >= 1");
    if (n_trials < 1) throw config_error("n_trials must be >= 1");
}

double step(double theta, const CircleMapConfig& config) {
    config.validate();
    return theta + kTwoPi * (config.natural_hz / config.stim_hz) +
           config.coupling * std::sin(theta);
}

PhaseTrajectory iterate(double theta0, const CircleMapConfig& config) {
    config.validate();
    const double omega = kTwoPi * (config.natural_hz / config.stim_hz);
    PhaseTrajectory traj;
    traj.phases.resize(static_cast<std::size_t>(config.n_pulses) + 1);
    double theta = theta0;
    traj.phases[0] = theta;
    for (int i = 1; i <= config.n_pulses; ++i) {
        theta = theta + omega + config.coupling * std::sin(theta);
        traj.phases[static_cast<std::size_t>(i)] = theta;
    }
    return traj;
}

double initial_phase(std::uint64_t seed, std::uint64_t cell_index, std::uint64_t trial) {
    return kTwoPi * rng::to_unit(rng::derive(seed, cell_index, trial));
}

WindingEstimate winding_number(const CircleMapConfig& config, std::uint64_t cell_index) {
    config.validate();
    const double omega = kTwoPi * (config.natural_hz / config.stim_hz);
    const double denom = kTwoPi * static_cast<double>(config.n_pulses);

    WindingEstimate est;
    est.per_trial.resize(static_cast<std::size_t>(config.n_trials));
    double sum = 0.0;
    for (int t = 0; t < config.n_trials; ++t) {
        const double theta0 =
            initial_phase(config.seed, cell_index, static_cast<std::uint64_t>(t));
        double theta = theta0;
        for (int i = 0; i < config.n_pulses; ++i)
            theta = theta + omega + config.coupling * std::sin(theta);
        const double w = (theta - theta0) / denom;
        est.per_trial[static_cast<std::size_t>(t)] = w;
        sum += w;
    }
    est.mean = sum / static_cast<double>(config.n_trials);
    double sq = 0.0;
    for (double w : est.per_trial) sq += (w - est.mean) * (w - est.mean);
    est.std_dev = std::sqrt(sq / static_cast<double>(config.n_trials));
    return est;
}

}  // namespace chronostim::circlemap
