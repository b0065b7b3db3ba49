#include "chronostim/tongues.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "chronostim/errors.hpp"
#include "chronostim/rng.hpp"

namespace chronostim::tongues {

void SweepAxis::validate(bool frequency_axis) const {
    if (steps < 1) throw config_error("axis steps must be >= 1");
    if (steps == 1) {
        if (min != max) throw config_error("single-step axis requires min == max");
    } else if (!(min < max)) {
        throw config_error("axis requires min < max");
    }
    if (frequency_axis && !(min > 0.0))
        throw config_error("frequency axis requires positive values");
}

double SweepAxis::value(int i) const {
    if (steps == 1) return min;
    return min + static_cast<double>(i) * spacing();
}

double SweepAxis::spacing() const {
    if (steps == 1) return 0.0;
    return (max - min) / static_cast<double>(steps - 1);
}

void GridSpec::validate() const {
    x.validate(/*frequency_axis=*/true);
    y.validate(/*frequency_axis=*/false);
    if (!(y.min >= 0.0)) throw config_error("amplitude axis must be non-negative");
    if (!(fixed_hz > 0.0)) throw config_error("fixed frequency must be > 0 Hz");
    if (mode == GridMode::NaturalVsEquivalentAmplitude) {
        if (!(f_max_hz > 0.0)) throw config_error("f_max must be > 0 Hz");
        if (f_max_hz < x.max)
            throw config_error("f_max must cover the natural-frequency axis maximum");
    }
    if (n_pulses < 1) throw config_error("n_pulses must be >= 1");
    if (n_trials < 1) throw config_error("n_trials must be >= 1");
}

std::uint64_t cell_index(const GridSpec& spec, int ix, int iy) {
    return static_cast<std::uint64_t>(iy) * static_cast<std::uint64_t>(spec.x.steps) +
           static_cast<std::uint64_t>(ix);
}

circlemap::CircleMapConfig cell_config(const GridSpec& spec, int ix, int iy) {
    circlemap::CircleMapConfig cfg;
    cfg.n_pulses = spec.n_pulses;
    cfg.n_trials = spec.n_trials;
    cfg.seed = spec.seed;
    if (spec.mode == GridMode::StimVsAmplitude) {
        cfg.natural_hz = spec.fixed_hz;
        cfg.stim_hz = spec.x.value(ix);
        cfg.coupling = spec.y.value(iy);
    } else {
        const double f0 = spec.x.value(ix);
        cfg.natural_hz = f0;
        cfg.stim_hz = spec.fixed_hz;
        cfg.coupling = coupling_for_equivalent(spec.y.value(iy), f0, spec.f_max_hz);
    }
    return cfg;
}

TongueGrid sweep(const GridSpec& spec, int workers) {
    spec.validate();
    if (workers < 1) throw config_error("workers must be >= 1");

    TongueGrid grid;
    grid.spec = spec;
    const std::size_t n_cells =
        static_cast<std::size_t>(spec.x.steps) * static_cast<std::size_t>(spec.y.steps);
    grid.winding.resize(n_cells);

    auto eval_cell = [&](std::size_t flat) {
        const int ix = static_cast<int>(flat % static_cast<std::size_t>(spec.x.steps));
        const int iy = static_cast<int>(flat / static_cast<std::size_t>(spec.x.steps));
        const auto cfg = cell_config(spec, ix, iy);
        grid.winding[flat] = circlemap::winding_number(cfg, cell_index(spec, ix, iy)).mean;
    };

    if (workers == 1) {
        for (std::size_t i = 0; i < n_cells; ++i) eval_cell(i);
        return grid;
    }

    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n_cells) return;
            eval_cell(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    return grid;
}

double equivalent_amplitude(double coupling, double f0_hz, double f_max_hz) {
    if (!(f0_hz > 0.0) || !(f_max_hz > 0.0))
        throw config_error("equivalent amplitude requires positive frequencies");
    if (!(coupling >= 0.0)) throw config_error("coupling must be >= 0");
    return coupling * f0_hz / f_max_hz;
}

double coupling_for_equivalent(double equivalent, double f0_hz, double f_max_hz) {
    if (!(f0_hz > 0.0) || !(f_max_hz > 0.0))
        throw config_error("equivalent amplitude requires positive frequencies");
    if (!(equivalent >= 0.0)) throw config_error("equivalent amplitude must be >= 0");
    return equivalent * f_max_hz / f0_hz;
}

std::optional<RationalLock> classify_lock(double winding, int max_q, double tol) {
    if (max_q < 1) throw config_error("max_q must be >= 1");
    if (!(tol > 0.0)) throw config_error("classification tolerance must be > 0");

    std::optional<RationalLock> best;
    double best_err = 0.0;
    // Ascending denominator = Farey order; the first hit wins, later hits only
    // replace on strictly smaller denominators (never reached) so ties on q
    // resolve to the smaller error within that q.
    for (int q = 1; q <= max_q; ++q) {
        const double scaled = winding * q;
        const int lo = static_cast<int>(std::floor(scaled - tol * q));
        const int hi = static_cast<int>(std::ceil(scaled + tol * q));
        for (int p = std::max(1, lo); p <= hi; ++p) {
            if (std::gcd(p, q) != 1) continue;
            const double err = std::abs(winding - static_cast<double>(p) / q);
            if (err > tol) continue;
            if (!best || err < best_err) {
                best = RationalLock{p, q};
                best_err = err;
            }
        }
        if (best) break;  // lowest denominator found; done
    }
    return best;
}

namespace {

struct CellLock {
    bool locked = false;
    RationalLock lock;
};

// A step counts as flat (constant winding) when it is below this fraction of
// the zero-coupling rotation step across one cell.
constexpr double kFlatStepFraction = 0.5;

}  // namespace

double free_rotation_step(const GridSpec& spec, int ix, int iy) {
    const auto a = cell_config(spec, ix, iy);
    const auto b = cell_config(spec, ix + 1, iy);
    return std::abs(b.natural_hz / b.stim_hz - a.natural_hz / a.stim_hz);
}

std::vector<TongueRegion> tongue_regions(const TongueGrid& grid, int max_q, double tol) {
    grid.spec.validate();
    const int nx = grid.spec.x.steps;
    const int ny = grid.spec.y.steps;
    const std::size_t n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    if (grid.winding.size() != n) throw input_error("grid winding matrix not filled");

    std::vector<CellLock> locks(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (auto l = classify_lock(grid.winding[i], max_q, tol)) {
            locks[i].locked = true;
            locks[i].lock = *l;
        }
    }

    // 4-connected components of same-lock cells, iterative flood fill.
    std::vector<int> component(n, -1);
    std::vector<TongueRegion> regions;
    std::vector<std::size_t> stack;
    const double dx = grid.spec.x.spacing();

    for (std::size_t start = 0; start < n; ++start) {
        if (!locks[start].locked || component[start] >= 0) continue;
        const int id = static_cast<int>(regions.size());
        TongueRegion region;
        region.lock = locks[start].lock;
        region.cell_mask.assign(n, 0);
        region.width_by_row.assign(static_cast<std::size_t>(ny), 0.0);
        region.extent_by_row.assign(static_cast<std::size_t>(ny), 0.0);

        stack.assign(1, start);
        component[start] = id;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            region.cell_mask[cur] = 1;
            ++region.cell_count;

            const int ix = static_cast<int>(cur % static_cast<std::size_t>(nx));
            const int iy = static_cast<int>(cur / static_cast<std::size_t>(nx));
            const auto visit = [&](int jx, int jy) {
                if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) return;
                const std::size_t j = static_cast<std::size_t>(jy) * static_cast<std::size_t>(nx) +
                                      static_cast<std::size_t>(jx);
                if (component[j] >= 0 || !locks[j].locked) return;
                if (!(locks[j].lock == region.lock)) return;
                component[j] = id;
                stack.push_back(j);
            };
            visit(ix - 1, iy);
            visit(ix + 1, iy);
            visit(ix, iy - 1);
            visit(ix, iy + 1);
        }

        // Per-row geometry: the longest run of flat steps between region
        // cells (resolved width) and the longest run of masked cells
        // (classified extent), both in Hz.
        double xmin = 0.0, xmax = 0.0;
        bool any = false;
        for (int iy = 0; iy < ny; ++iy) {
            int flat_steps = 0, best_steps = 0;
            int run_cells = 0, best_cells = 0;
            for (int ix = 0; ix < nx; ++ix) {
                const std::size_t j = static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) +
                                      static_cast<std::size_t>(ix);
                if (!region.cell_mask[j]) {
                    flat_steps = 0;
                    run_cells = 0;
                    continue;
                }
                ++run_cells;
                best_cells = std::max(best_cells, run_cells);
                const double xv = grid.spec.x.value(ix);
                if (!any) {
                    xmin = xmax = xv;
                    any = true;
                } else {
                    xmin = std::min(xmin, xv);
                    xmax = std::max(xmax, xv);
                }
                if (ix + 1 < nx && region.cell_mask[j + 1]) {
                    const double dw = std::abs(grid.winding[j + 1] - grid.winding[j]);
                    if (dw <= kFlatStepFraction * free_rotation_step(grid.spec, ix, iy)) {
                        ++flat_steps;
                        best_steps = std::max(best_steps, flat_steps);
                        continue;
                    }
                }
                flat_steps = 0;
            }
            region.width_by_row[static_cast<std::size_t>(iy)] = best_steps * dx;
            region.extent_by_row[static_cast<std::size_t>(iy)] = best_cells * dx;
        }
        region.x_min_hz = xmin;
        region.x_max_hz = xmax;
        regions.push_back(std::move(region));
    }

    std::sort(regions.begin(), regions.end(), [](const TongueRegion& a, const TongueRegion& b) {
        if (a.cell_count != b.cell_count) return a.cell_count > b.cell_count;
        if (a.lock.q != b.lock.q) return a.lock.q < b.lock.q;
        return a.lock.p < b.lock.p;
    });
    return regions;
}

namespace {

std::string describe_lock(const RationalLock& l) {
    return std::to_string(l.p) + ":" + std::to_string(l.q);
}

}  // namespace

StimFrequencyChoice select_stim_frequency(double healthy_peak_hz,
                                          std::pair<double, double> band,
                                          const SweepAxis& candidates,
                                          const SelectionParams& params) {
    candidates.validate(/*frequency_axis=*/true);
    if (!(healthy_peak_hz > 0.0)) throw config_error("healthy peak must be > 0 Hz");
    if (!(band.first < band.second)) throw config_error("pathological band must be non-empty");
    if (band.first <= healthy_peak_hz && healthy_peak_hz <= band.second)
        throw config_error("pathological band must not contain the healthy peak");
    const double tol = params.resolved_tol();

    StimFrequencyChoice choice;
    for (int c = 0; c < candidates.steps; ++c) {
        const double fs = candidates.value(c);
        CandidateReport report;
        report.fs_hz = fs;

        // (a) the healthy rhythm must lock 1:1 at the evaluation amplitude.
        circlemap::CircleMapConfig healthy_cfg;
        healthy_cfg.natural_hz = healthy_peak_hz;
        healthy_cfg.stim_hz = fs;
        healthy_cfg.coupling =
            coupling_for_equivalent(params.eval_equiv_amplitude, healthy_peak_hz, params.f_max_hz);
        healthy_cfg.n_pulses = params.n_pulses;
        healthy_cfg.n_trials = params.n_trials;
        healthy_cfg.seed = rng::derive(params.seed, static_cast<std::uint64_t>(c));
        const auto healthy_lock =
            classify_lock(circlemap::winding_number(healthy_cfg).mean, params.max_q, tol);
        report.healthy_lock_ok = healthy_lock && healthy_lock->p == 1 && healthy_lock->q == 1;

        // (b) every lock reaching the band must be narrow relative to 1:1.
        GridSpec row;
        row.mode = GridMode::NaturalVsEquivalentAmplitude;
        row.x = params.f0_axis;
        row.y = SweepAxis{params.eval_equiv_amplitude, params.eval_equiv_amplitude, 1};
        row.fixed_hz = fs;
        row.f_max_hz = params.f_max_hz;
        row.n_pulses = params.n_pulses;
        row.n_trials = params.n_trials;
        row.seed = rng::derive(params.seed, static_cast<std::uint64_t>(c), 0x5e1ec7ULL);
        const auto grid = sweep(row);
        const auto regions = tongue_regions(grid, params.max_q, tol);

        double one_to_one_width = 0.0;
        for (const auto& r : regions)
            if (r.lock.p == 1 && r.lock.q == 1)
                one_to_one_width = std::max(one_to_one_width, r.width_by_row[0]);

        bool narrow_ok = true;
        for (const auto& r : regions) {
            if (r.x_max_hz < band.first || r.x_min_hz > band.second) continue;
            report.offending.push_back(
                OffendingLock{r.lock, r.width_by_row[0], r.x_min_hz, r.x_max_hz});
            // Reject on any band lock with resolved width at or above the
            // narrowness threshold; unresolved (zero-width) locks never reject.
            if (r.width_by_row[0] > 0.0 &&
                r.width_by_row[0] >= params.narrowness_ratio * one_to_one_width)
                narrow_ok = false;
        }

        report.admissible = report.healthy_lock_ok && narrow_ok;
        if (!report.healthy_lock_ok) {
            report.reason = "healthy rhythm does not lock 1:1 at the evaluation amplitude";
        } else if (!narrow_ok) {
            std::string locks;
            for (const auto& o : report.offending) {
                if (o.width_hz > 0.0 && o.width_hz >= params.narrowness_ratio * one_to_one_width) {
                    if (!locks.empty()) locks += ", ";
                    locks += describe_lock(o.lock);
                }
            }
            report.reason = "lock(s) " + locks + " intersect the pathological band above the width threshold";
        } else {
            report.reason = "admissible";
        }
        choice.candidates.push_back(std::move(report));
    }

    const CandidateReport* best = nullptr;
    for (const auto& r : choice.candidates) {
        if (!r.admissible) continue;
        if (!best || std::abs(r.fs_hz - healthy_peak_hz) < std::abs(best->fs_hz - healthy_peak_hz))
            best = &r;
    }
    if (best) {
        choice.chosen_fs_hz = best->fs_hz;
        choice.healthy_lock_ok = best->healthy_lock_ok;
        choice.offending_locks = best->offending;
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "%.9g Hz is the admissible candidate closest to the %.9g Hz healthy rhythm",
                      best->fs_hz, healthy_peak_hz);
        choice.rationale = buf;
    } else {
        choice.rationale = "no safe frequency: every candidate was rejected";
    }
    return choice;
}

std::string grid_to_csv(const TongueGrid& grid) {
    std::string out = "x,y,winding\n";
    char buf[96];
    for (int iy = 0; iy < grid.spec.y.steps; ++iy) {
        const double yv = grid.spec.y.value(iy);
        for (int ix = 0; ix < grid.spec.x.steps; ++ix) {
            std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", grid.spec.x.value(ix), yv,
                          grid.at(iy, ix));
            out += buf;
        }
    }
    return out;
}

namespace {

nlohmann::json axis_to_json(const SweepAxis& a) {
    return {{"min", a.min}, {"max", a.max}, {"steps", a.steps}};
}

SweepAxis axis_from_json(const nlohmann::json& j) {
    SweepAxis a;
    a.min = j.at("min").get<double>();
    a.max = j.at("max").get<double>();
    a.steps = j.at("steps").get<int>();
    return a;
}

}  // namespace

std::string grid_spec_to_json(const GridSpec& spec) {
    nlohmann::json j;
    j["mode"] = spec.mode == GridMode::StimVsAmplitude ? "stim_vs_amplitude"
                                                       : "natural_vs_equivalent_amplitude";
    j["x_axis"] = axis_to_json(spec.x);
    j["y_axis"] = axis_to_json(spec.y);
    j["fixed_hz"] = spec.fixed_hz;
    j["f_max_hz"] = spec.f_max_hz;
    j["n_pulses"] = spec.n_pulses;
    j["n_trials"] = spec.n_trials;
    j["seed"] = spec.seed;
    return j.dump(2) + "\n";
}

GridSpec grid_spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("grid spec JSON: ") + e.what(), 1);
    }
    GridSpec spec;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "stim_vs_amplitude")
        spec.mode = GridMode::StimVsAmplitude;
    else if (mode == "natural_vs_equivalent_amplitude")
        spec.mode = GridMode::NaturalVsEquivalentAmplitude;
    else
        throw config_error("unknown grid mode: " + mode);
    spec.x = axis_from_json(j.at("x_axis"));
    spec.y = axis_from_json(j.at("y_axis"));
    spec.fixed_hz = j.at("fixed_hz").get<double>();
    spec.f_max_hz = j.value("f_max_hz", 26.0);
    spec.n_pulses = j.at("n_pulses").get<int>();
    spec.n_trials = j.at("n_trials").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

}  // namespace chronostim::tongues
