#pragma once

// Synthetic field-potential and accelerometer traces plus the spectral
// pipeline used for rhythm characterization: Welch PSD (Hann window,
// one-sided, integral ~ signal mean square) and band-limited peak picking.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace chronostim::telemetry {

struct TimeSeries {
    double sample_rate_hz = 250.0;
    std::vector<double> samples;
    double start_time = 0.0;  // epoch seconds
};

struct SineComponent {
    double frequency_hz = 0.0;
    double amplitude = 0.0;
};

enum class LfpState { Restful, Active, Seizure };

struct SyntheticLfpSpec {
    LfpState state_label = LfpState::Restful;
    std::vector<SineComponent> components;
    double noise_exponent = 1.0;  // noise power ~ 1/f^exponent
    double noise_gain = 0.0;
};

/// Canonical daily-living presets: a ~13 Hz rhythm at rest, a broader noisy
/// mix while active, and a dominant 2 Hz rhythm in the seizure state.
SyntheticLfpSpec restful_spec();
SyntheticLfpSpec active_spec();
SyntheticLfpSpec seizure_spec();

struct PowerSpectrum {
    std::vector<double> freqs_hz;  // ascending, one-sided
    std::vector<double> power;     // per-bin density
    double resolution_hz = 0.0;    // sample_rate / segment_length
};

struct AccelTrace {
    double sample_rate_hz = 50.0;
    std::vector<std::array<double, 3>> samples;  // (x, y, z) in g
    double start_time = 0.0;
};

enum class AccelKind { Inactive, Active, Tap };

struct AccelEvent {
    double begin_s = 0.0;  // seconds from trace start
    double end_s = 0.0;    // taps are instantaneous; end_s is ignored
    AccelKind kind = AccelKind::Inactive;
    double tap_magnitude_g = 0.0;
};

/// Sum of sinusoids plus 1/f^exponent-shaped noise. Deterministic per seed.
TimeSeries synth_lfp(const SyntheticLfpSpec& spec, double duration_s, double sample_rate_hz,
                     std::uint64_t seed);

/// Averaged windowed periodograms. overlap_fraction in [0, 1).
PowerSpectrum welch_psd(const TimeSeries& ts, int segment_length, double overlap_fraction = 0.5);

/// Local maxima inside [band_lo, band_hi] whose power exceeds
/// min_prominence_ratio times the in-band median, sorted by power descending.
std::vector<std::pair<double, double>> dominant_peaks(const PowerSpectrum& ps, double band_lo_hz,
                                                      double band_hi_hz,
                                                      double min_prominence_ratio = 4.0);

/// Gravity baseline with noise; active intervals add a band-limited
/// oscillation; a tap writes a single-sample z-axis spike of the given
/// magnitude. Events must be ascending and non-overlapping.
AccelTrace synth_accel(const std::vector<AccelEvent>& events, double sample_rate_hz,
                       std::uint64_t seed);

/// Trace files: CSV "t,v" / "t,x,y,z" with t in seconds from start; the JSON
/// sidecar carries sample rate and ISO 8601 start time.
std::string lfp_to_csv(const TimeSeries& ts);
std::string trace_sidecar_json(double sample_rate_hz, double start_time);
TimeSeries lfp_from_csv(const std::string& csv_text, const std::string& sidecar_json);
std::string accel_to_csv(const AccelTrace& trace);
AccelTrace accel_from_csv(const std::string& csv_text, const std::string& sidecar_json);

}  // namespace chronostim::telemetry
