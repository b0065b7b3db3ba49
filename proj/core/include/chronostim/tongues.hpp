#pragma once

// Arnold-tongue analysis over the sine circle map: winding-number sweeps in
// (stimulation frequency x amplitude) or (natural frequency x equivalent
// amplitude) planes, p:q lock classification, tongue geometry, and the
// stimulation-frequency selection rule (entrain the healthy rhythm 1:1 while
// every lock reaching the pathological band stays narrow).

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chronostim/circlemap.hpp"

namespace chronostim::tongues {

struct SweepAxis {
    double min = 0.0;
    double max = 1.0;
    int steps = 2;  // inclusive endpoints; steps == 1 pins the axis at min

    /// Throws config_error on a malformed axis (and, when frequency_axis,
    /// on non-positive values).
    void validate(bool frequency_axis = false) const;
    double value(int i) const;
    /// Grid spacing; 0 for a single-step axis.
    double spacing() const;
};

enum class GridMode {
    /// x = stimulation frequency, y = coupling I, fixed natural frequency.
    StimVsAmplitude,
    /// x = natural frequency, y = equivalent amplitude (coupling * f0/f_max),
    /// fixed stimulation frequency. Per-cell coupling = eq * f_max / f0.
    NaturalVsEquivalentAmplitude,
};

struct GridSpec {
    GridMode mode = GridMode::StimVsAmplitude;
    SweepAxis x;             // Hz
    SweepAxis y;             // coupling or equivalent amplitude
    double fixed_hz = 13.0;  // f0 (StimVsAmplitude) or fs (NaturalVs...)
    double f_max_hz = 26.0;  // equivalent-amplitude reference (NaturalVs... only)
    int n_pulses = 50;
    int n_trials = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TongueGrid {
    GridSpec spec;
    /// Row-major, y outer: winding[iy * x.steps + ix].
    std::vector<double> winding;

    double at(int iy, int ix) const {
        return winding[static_cast<std::size_t>(iy) * static_cast<std::size_t>(spec.x.steps) +
                       static_cast<std::size_t>(ix)];
    }
};

/// Flat cell index used for per-cell seed derivation.
std::uint64_t cell_index(const GridSpec& spec, int ix, int iy);

/// Circle-map parameters of one grid cell (the consistency contract: a
/// standalone winding_number(cell_config, cell_index) reproduces the cell).
circlemap::CircleMapConfig cell_config(const GridSpec& spec, int ix, int iy);

/// Fill the winding matrix. Cells are independent; `workers` > 1 evaluates
/// them concurrently with identical results.
TongueGrid sweep(const GridSpec& spec, int workers = 1);

/// Equivalent stimulation amplitude: coupling * f0 / f_max.
double equivalent_amplitude(double coupling, double f0_hz, double f_max_hz);

/// Inverse transform: actual coupling realizing a requested equivalent amplitude.
double coupling_for_equivalent(double equivalent, double f0_hz, double f_max_hz);

/// Default classification tolerance: half the winding resolution of an
/// n_pulses estimate.
constexpr double default_classify_tol(int n_pulses) { return 0.5 / static_cast<double>(n_pulses); }

struct RationalLock {
    int p = 1;
    int q = 1;
    double value() const { return static_cast<double>(p) / static_cast<double>(q); }
    friend bool operator==(const RationalLock&, const RationalLock&) = default;
};

/// Lowest-denominator reduced rational p/q (p >= 1, q <= max_q) within tol of
/// the winding value; denominator ties break toward the smaller error.
std::optional<RationalLock> classify_lock(double winding, int max_q, double tol);

struct TongueRegion {
    RationalLock lock;
    /// Row-major boolean mask of cells classified to this lock.
    std::vector<std::uint8_t> cell_mask;
    /// Per-row resolved width in Hz. A tongue is an area of constant winding
    /// number, so this counts only flat steps: consecutive cells whose
    /// winding difference stays below half the free-rotation step across one
    /// cell. Cells where the smooth rotation-number curve merely passes
    /// through the tolerance window contribute nothing, and an isolated cell
    /// has zero resolved width. This is the measure entrainment checks use.
    std::vector<double> width_by_row;
    /// Per-row classified extent in Hz: the longest contiguous run of masked
    /// cells times the x spacing. Smoother than the resolved width (the
    /// tolerance window absorbs estimator noise) and monotone in amplitude,
    /// but it cannot resolve below the tolerance-crossing footprint.
    std::vector<double> extent_by_row;
    std::size_t cell_count = 0;
    /// Natural/stimulation frequency extent of the region (cell centers).
    double x_min_hz = 0.0;
    double x_max_hz = 0.0;
};

/// Free-rotation winding step between cells (ix, iy) and (ix + 1, iy): the
/// change in f0/fs across one cell at zero coupling.
double free_rotation_step(const GridSpec& spec, int ix, int iy);

/// Classify every cell and group same-lock cells into 4-connected regions,
/// sorted by descending cell count.
std::vector<TongueRegion> tongue_regions(const TongueGrid& grid, int max_q, double tol);

struct OffendingLock {
    RationalLock lock;
    double width_hz = 0.0;      // widest row of the region inside the band
    double x_min_hz = 0.0;      // region extent
    double x_max_hz = 0.0;
};

struct CandidateReport {
    double fs_hz = 0.0;
    bool healthy_lock_ok = false;
    bool admissible = false;
    std::vector<OffendingLock> offending;
    std::string reason;
};

struct StimFrequencyChoice {
    std::optional<double> chosen_fs_hz;
    bool healthy_lock_ok = false;
    std::vector<OffendingLock> offending_locks;  // for the chosen candidate
    std::string rationale;
    std::vector<CandidateReport> candidates;
};

struct SelectionParams {
    double eval_equiv_amplitude = 0.5;
    int max_q = 6;
    double narrowness_ratio = 0.1;
    /// Classification tolerance; NaN resolves to default_classify_tol(n_pulses).
    double classify_tol = -1.0;
    SweepAxis f0_axis{1.0, 26.0, 251};
    double f_max_hz = 26.0;
    int n_pulses = 50;
    int n_trials = 20;
    std::uint64_t seed = 0;

    double resolved_tol() const {
        return classify_tol > 0.0 ? classify_tol : default_classify_tol(n_pulses);
    }
};

/// Pick the admissible candidate stimulation frequency closest to
/// healthy_peak_hz. A candidate is admissible when the healthy rhythm
/// classifies 1:1 at the evaluation amplitude and every q <= max_q lock whose
/// natural-frequency extent intersects the pathological band measures
/// narrower than narrowness_ratio times the 1:1 width in the same row.
/// When nothing is admissible, chosen_fs_hz is empty and each candidate
/// report carries its rejection reason.
StimFrequencyChoice select_stim_frequency(double healthy_peak_hz,
                                          std::pair<double, double> pathological_band_hz,
                                          const SweepAxis& candidates,
                                          const SelectionParams& params = {});

/// CSV serialization: header "x,y,winding", row-major, 9 significant digits.
std::string grid_to_csv(const TongueGrid& grid);

/// JSON sidecar carrying the full grid spec and seed.
std::string grid_spec_to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const std::string& json_text);

}  // namespace chronostim::tongues
