#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "chronostim/circlemap.hpp"
#include "chronostim/errors.hpp"
#include "chronostim/rng.hpp"
#include "chronostim/tongues.hpp"

using namespace chronostim;
using tongues::GridMode;
using tongues::GridSpec;
using tongues::RationalLock;
using tongues::SweepAxis;

namespace {

GridSpec small_stim_grid() {
    GridSpec spec;
    spec.mode = GridMode::StimVsAmplitude;
    spec.x = SweepAxis{6.0, 30.0, 121};
    spec.y = SweepAxis{0.0, 1.0, 21};
    spec.fixed_hz = 13.0;
    spec.seed = 17;
    return spec;
}

// Brute-force re-classification of a filled grid: per-lock cell totals and
// per-row flat-run widths, written as straight loops independent of the
// region/flood-fill machinery.
struct LockTally {
    std::size_t cells = 0;
    std::vector<double> width_by_row;
};

std::map<std::pair<int, int>, LockTally> oracle_tally(const tongues::TongueGrid& grid, int max_q,
                                                      double tol) {
    std::map<std::pair<int, int>, LockTally> tally;
    const int nx = grid.spec.x.steps;
    const int ny = grid.spec.y.steps;
    const double dx = grid.spec.x.spacing();
    for (int iy = 0; iy < ny; ++iy) {
        std::map<std::pair<int, int>, int> flat;  // current flat-run steps per lock
        std::map<std::pair<int, int>, int> best;
        for (int ix = 0; ix < nx; ++ix) {
            const auto lock = tongues::classify_lock(grid.at(iy, ix), max_q, tol);
            if (lock) {
                auto key = std::make_pair(lock->p, lock->q);
                auto& t = tally[key];
                if (t.width_by_row.empty()) t.width_by_row.assign(ny, 0.0);
                ++t.cells;
                std::optional<RationalLock> next;
                if (ix + 1 < nx) next = tongues::classify_lock(grid.at(iy, ix + 1), max_q, tol);
                if (next && *next == *lock &&
                    std::abs(grid.at(iy, ix + 1) - grid.at(iy, ix)) <=
                        0.5 * tongues::free_rotation_step(grid.spec, ix, iy)) {
                    flat[key] += 1;
                    best[key] = std::max(best[key], flat[key]);
                } else {
                    flat[key] = 0;
                }
            }
        }
        for (const auto& [key, steps] : best)
            tally[key].width_by_row[static_cast<std::size_t>(iy)] =
                std::max(tally[key].width_by_row[static_cast<std::size_t>(iy)],
                         static_cast<double>(steps) * dx);
    }
    return tally;
}

}  // namespace

TEST_SUITE("tongues") {

TEST_CASE("equivalent amplitude transform") {
    CHECK(tongues::equivalent_amplitude(1.0, 13.0, 26.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tongues::equivalent_amplitude(0.73, 26.0, 26.0) == 0.73);
    CHECK(tongues::equivalent_amplitude(0.0, 5.0, 26.0) == 0.0);
    CHECK_THROWS_AS(tongues::equivalent_amplitude(1.0, 0.0, 26.0), config_error);
    CHECK_THROWS_AS(tongues::coupling_for_equivalent(1.0, 1.0, -2.0), config_error);

    rng::Stream s(4);
    for (int i = 0; i < 100; ++i) {
        const double coupling = s.next_uniform(0.0, 3.0);
        const double f0 = s.next_uniform(0.5, 26.0);
        const double eq = tongues::equivalent_amplitude(coupling, f0, 26.0);
        CHECK(tongues::coupling_for_equivalent(eq, f0, 26.0) ==
              doctest::Approx(coupling).epsilon(1e-12));
    }
}

TEST_CASE("classify_lock picks the lowest admissible denominator") {
    auto lock = tongues::classify_lock(1.0, 6, 0.01);
    REQUIRE(lock);
    CHECK((lock->p == 1 && lock->q == 1));

    lock = tongues::classify_lock(2.0, 6, 0.01);
    REQUIRE(lock);
    CHECK((lock->p == 2 && lock->q == 1));

    // Nearest admissible rational to the golden mean is 3/5, off by ~0.018.
    CHECK_FALSE(tongues::classify_lock(0.61803, 6, 1e-4));

    lock = tongues::classify_lock(0.5005, 6, 0.01);
    REQUIRE(lock);
    CHECK((lock->p == 1 && lock->q == 2));

    lock = tongues::classify_lock(0.334, 6, 0.01);
    REQUIRE(lock);
    CHECK((lock->p == 1 && lock->q == 3));

    // Result is always reduced.
    lock = tongues::classify_lock(0.5, 6, 1e-9);
    REQUIRE(lock);
    CHECK(lock->q == 2);

    CHECK_THROWS_AS(tongues::classify_lock(1.0, 0, 0.01), config_error);
    CHECK_THROWS_AS(tongues::classify_lock(1.0, 6, 0.0), config_error);
}

TEST_CASE("sweep zero-coupling row equals f0/fs per cell") {
    GridSpec spec;
    spec.mode = GridMode::StimVsAmplitude;
    spec.x = SweepAxis{6.0, 30.0, 49};
    spec.y = SweepAxis{0.0, 0.0, 1};
    spec.fixed_hz = 13.0;
    const auto grid = tongues::sweep(spec);
    for (int ix = 0; ix < spec.x.steps; ++ix)
        CHECK(std::abs(grid.at(0, ix) - 13.0 / spec.x.value(ix)) <= 1e-12);
}

TEST_CASE("single-cell grid equals a direct winding_number call") {
    GridSpec spec;
    spec.mode = GridMode::StimVsAmplitude;
    spec.x = SweepAxis{20.0, 20.0, 1};
    spec.y = SweepAxis{0.8, 0.8, 1};
    spec.fixed_hz = 13.0;
    spec.seed = 42;
    const auto grid = tongues::sweep(spec);
    const auto direct = circlemap::winding_number(tongues::cell_config(spec, 0, 0),
                                                  tongues::cell_index(spec, 0, 0));
    CHECK(grid.at(0, 0) == direct.mean);
}

TEST_CASE("grid cells are reproducible pointwise") {
    auto spec = small_stim_grid();
    spec.x.steps = 25;
    spec.y.steps = 7;
    const auto grid = tongues::sweep(spec);
    rng::Stream pick(8);
    for (int k = 0; k < 30; ++k) {
        const int ix = static_cast<int>(pick.next_u64() % 25);
        const int iy = static_cast<int>(pick.next_u64() % 7);
        const auto direct = circlemap::winding_number(tongues::cell_config(spec, ix, iy),
                                                      tongues::cell_index(spec, ix, iy));
        CHECK(grid.at(iy, ix) == direct.mean);
    }
}

TEST_CASE("sweep is worker-count independent") {
    auto spec = small_stim_grid();
    spec.x.steps = 41;
    spec.y.steps = 6;
    const auto serial = tongues::sweep(spec, 1);
    const auto parallel = tongues::sweep(spec, 4);
    CHECK(serial.winding == parallel.winding);
}

TEST_CASE("mode C derives coupling through the inverse transform") {
    GridSpec spec;
    spec.mode = GridMode::NaturalVsEquivalentAmplitude;
    spec.x = SweepAxis{1.0, 26.0, 26};
    spec.y = SweepAxis{0.2, 0.8, 4};
    spec.fixed_hz = 13.0;
    spec.f_max_hz = 26.0;
    const auto cfg = tongues::cell_config(spec, 4, 1);  // f0 = 5, eq = 0.4
    CHECK(cfg.natural_hz == doctest::Approx(5.0));
    CHECK(cfg.stim_hz == 13.0);
    CHECK(cfg.coupling == doctest::Approx(0.4 * 26.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("sweep validation") {
    GridSpec spec;
    spec.x = SweepAxis{0.0, 30.0, 10};  // frequency axis must be positive
    CHECK_THROWS_AS(tongues::sweep(spec), config_error);
    spec.x = SweepAxis{6.0, 5.0, 10};
    CHECK_THROWS_AS(tongues::sweep(spec), config_error);
    spec.x = SweepAxis{6.0, 30.0, 10};
    spec.y = SweepAxis{0.0, 1.0, 0};
    CHECK_THROWS_AS(tongues::sweep(spec), config_error);
    spec.y = SweepAxis{0.0, 1.0, 11};
    spec.mode = GridMode::NaturalVsEquivalentAmplitude;
    spec.f_max_hz = 20.0;  // must cover the axis maximum
    CHECK_THROWS_AS(tongues::sweep(spec), config_error);
}

TEST_CASE("cells driven at the natural frequency classify 1:1 above threshold amplitude") {
    GridSpec spec;
    spec.mode = GridMode::StimVsAmplitude;
    spec.x = SweepAxis{12.0, 14.0, 21};
    spec.y = SweepAxis{0.0, 1.0, 6};
    spec.fixed_hz = 13.0;
    const auto grid = tongues::sweep(spec);
    const int ix13 = 10;  // x value 13.0
    for (int iy = 1; iy < spec.y.steps; ++iy) {  // I = 0.2 .. 1.0
        const auto lock = tongues::classify_lock(grid.at(iy, ix13), 6, 0.01);
        REQUIRE(lock);
        CHECK((lock->p == 1 && lock->q == 1));
    }
}

TEST_CASE("largest region on a stimulation-frequency grid is the 1:1 tongue") {
    const auto grid = tongues::sweep(small_stim_grid(), 4);
    const auto regions = tongues::tongue_regions(grid, 6, 0.01);
    REQUIRE(!regions.empty());
    CHECK((regions[0].lock.p == 1 && regions[0].lock.q == 1));
    for (std::size_t i = 1; i < regions.size(); ++i) {
        if (regions[i].lock.p == 1 && regions[i].lock.q == 1) continue;
        CHECK(regions[0].cell_count > regions[i].cell_count);
    }
}

TEST_CASE("region masks and widths agree with a brute-force pass") {
    const auto grid = tongues::sweep(small_stim_grid(), 4);
    const auto regions = tongues::tongue_regions(grid, 6, 0.01);
    const auto tally = oracle_tally(grid, 6, 0.01);

    // Per-lock cell totals match.
    std::map<std::pair<int, int>, std::size_t> region_cells;
    std::map<std::pair<int, int>, std::vector<double>> region_widths;
    for (const auto& r : regions) {
        const auto key = std::make_pair(r.lock.p, r.lock.q);
        region_cells[key] += r.cell_count;
        auto& w = region_widths[key];
        if (w.empty()) w.assign(r.width_by_row.size(), 0.0);
        for (std::size_t iy = 0; iy < r.width_by_row.size(); ++iy)
            w[iy] = std::max(w[iy], r.width_by_row[iy]);
    }
    REQUIRE(region_cells.size() == tally.size());
    for (const auto& [key, t] : tally) {
        REQUIRE(region_cells.count(key));
        CHECK(region_cells.at(key) == t.cells);
        const auto& w = region_widths.at(key);
        for (std::size_t iy = 0; iy < w.size(); ++iy)
            CHECK(w[iy] == doctest::Approx(t.width_by_row[iy]).epsilon(1e-12));
    }

    // Invariant: every masked cell classifies to the region's lock.
    for (const auto& r : regions) {
        for (int iy = 0; iy < grid.spec.y.steps; ++iy)
            for (int ix = 0; ix < grid.spec.x.steps; ++ix) {
                const std::size_t j =
                    static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.spec.x.steps) +
                    static_cast<std::size_t>(ix);
                if (!r.cell_mask[j]) continue;
                CHECK(std::abs(grid.at(iy, ix) - r.lock.value()) <= 0.01);
            }
    }
}

TEST_CASE("zero-amplitude row: tongues have no resolved width") {
    GridSpec spec;
    spec.mode = GridMode::StimVsAmplitude;
    spec.x = SweepAxis{6.0, 30.0, 241};
    spec.y = SweepAxis{0.0, 0.0, 1};
    spec.fixed_hz = 13.0;
    const auto grid = tongues::sweep(spec);

    // At I = 0 the winding is exactly f0/fs everywhere: with a tight
    // tolerance only exact rationals on grid points classify, and no region
    // resolves any width.
    const auto regions = tongues::tongue_regions(grid, 6, 1e-9);
    CHECK(!regions.empty());  // 13.0, 6.5, 26.0 sit on grid points
    for (const auto& r : regions) {
        CHECK(r.cell_count == 1);
        CHECK(r.width_by_row[0] == 0.0);
    }
    // The default tolerance also resolves no width on the sloped curve.
    for (const auto& r : tongues::tongue_regions(grid, 6, 0.01))
        CHECK(r.width_by_row[0] <= grid.spec.x.spacing());
}

TEST_CASE("1:1 extent grows with amplitude") {
    const auto grid = tongues::sweep(small_stim_grid(), 4);
    const auto regions = tongues::tongue_regions(grid, 6, 0.01);
    const auto& one = regions[0];
    REQUIRE((one.lock.p == 1 && one.lock.q == 1));
    const double slack = grid.spec.x.spacing();
    for (std::size_t iy = 1; iy < one.extent_by_row.size(); ++iy)
        CHECK(one.extent_by_row[iy] >= one.extent_by_row[iy - 1] - slack - 1e-12);
    CHECK(one.extent_by_row.back() > one.extent_by_row.front());
    // The resolved width never exceeds the classified extent.
    for (std::size_t iy = 0; iy < one.width_by_row.size(); ++iy)
        CHECK(one.width_by_row[iy] <= one.extent_by_row[iy] + 1e-12);
}

TEST_CASE("narrow subharmonic regions stay unresolved on a natural-frequency row") {
    GridSpec spec;
    spec.mode = GridMode::NaturalVsEquivalentAmplitude;
    spec.x = SweepAxis{1.0, 26.0, 251};
    spec.y = SweepAxis{0.3, 0.3, 1};
    spec.fixed_hz = 13.0;
    spec.f_max_hz = 26.0;
    spec.seed = 5;
    const auto grid = tongues::sweep(spec, 4);
    const auto regions = tongues::tongue_regions(grid, 6, 0.01);

    double width_11 = 0.0;
    for (const auto& r : regions)
        if (r.lock.p == 1 && r.lock.q == 1) width_11 = std::max(width_11, r.width_by_row[0]);
    CHECK(width_11 > 0.5);

    for (const auto& r : regions) {
        if (r.lock.q < 5) continue;
        if (r.x_max_hz < 2.0 || r.x_min_hz > 3.0) continue;
        CHECK(r.width_by_row[0] < 0.1 * width_11);
    }
}

TEST_CASE("select_stim_frequency picks the candidate entraining the healthy rhythm") {
    tongues::SelectionParams params;
    params.seed = 21;
    const auto choice = tongues::select_stim_frequency(
        12.0, {2.0, 3.0}, SweepAxis{6.5, 26.0, 4}, params);  // candidates 6.5, 13, 19.5, 26
    REQUIRE(choice.chosen_fs_hz.has_value());
    CHECK(*choice.chosen_fs_hz == doctest::Approx(13.0));
    CHECK(choice.healthy_lock_ok);
    // Driving at 6.5 Hz locks the 12 Hz rhythm 2:1, not 1:1.
    for (const auto& c : choice.candidates)
        if (c.fs_hz == doctest::Approx(6.5)) CHECK_FALSE(c.healthy_lock_ok);
}

TEST_CASE("select_stim_frequency: band beyond every low-order subharmonic") {
    tongues::SelectionParams params;
    params.f0_axis = SweepAxis{1.0, 26.0, 251};
    const auto choice =
        tongues::select_stim_frequency(10.0, {40.0, 50.0}, SweepAxis{9.0, 11.0, 3}, params);
    REQUIRE(choice.chosen_fs_hz.has_value());
    CHECK(*choice.chosen_fs_hz == doctest::Approx(10.0));
    CHECK(choice.offending_locks.empty());
}

TEST_CASE("select_stim_frequency rejects a wide subharmonic tongue in the band") {
    tongues::SelectionParams params;
    params.eval_equiv_amplitude = 0.6;
    params.f0_axis = SweepAxis{1.0, 5.0, 81};
    params.f_max_hz = 5.0;
    params.seed = 3;
    const auto choice =
        tongues::select_stim_frequency(4.0, {1.8, 2.2}, SweepAxis{4.0, 4.0, 1}, params);
    CHECK_FALSE(choice.chosen_fs_hz.has_value());
    REQUIRE(choice.candidates.size() == 1);
    const auto& rep = choice.candidates[0];
    CHECK(rep.healthy_lock_ok);
    CHECK_FALSE(rep.admissible);
    bool half_lock_offends = false;
    for (const auto& o : rep.offending)
        if (o.lock.p == 1 && o.lock.q == 2 && o.width_hz > 0.0) half_lock_offends = true;
    CHECK(half_lock_offends);

    // Oracle: the 1:2 plateau measured through the public sweep machinery is
    // indeed wide at this amplitude.
    GridSpec row;
    row.mode = GridMode::NaturalVsEquivalentAmplitude;
    row.x = params.f0_axis;
    row.y = SweepAxis{0.6, 0.6, 1};
    row.fixed_hz = 4.0;
    row.f_max_hz = 5.0;
    const auto regions = tongues::tongue_regions(tongues::sweep(row), 6, 0.01);
    double w_half = 0.0, w_one = 0.0;
    for (const auto& r : regions) {
        if (r.lock.p == 1 && r.lock.q == 2) w_half = std::max(w_half, r.width_by_row[0]);
        if (r.lock.p == 1 && r.lock.q == 1) w_one = std::max(w_one, r.width_by_row[0]);
    }
    CHECK(w_half >= 0.1 * w_one);
    CHECK(w_half > 0.0);
}

TEST_CASE("select_stim_frequency validates its inputs") {
    CHECK_THROWS_AS(
        tongues::select_stim_frequency(2.5, {2.0, 3.0}, SweepAxis{10.0, 16.0, 7}, {}),
        config_error);
    CHECK_THROWS_AS(
        tongues::select_stim_frequency(12.0, {3.0, 2.0}, SweepAxis{10.0, 16.0, 7}, {}),
        config_error);
}

TEST_CASE("grid CSV is exact and stable") {
    GridSpec spec;
    spec.mode = GridMode::StimVsAmplitude;
    spec.x = SweepAxis{6.5, 13.0, 2};
    spec.y = SweepAxis{0.0, 0.0, 1};
    spec.fixed_hz = 13.0;
    const auto grid = tongues::sweep(spec);
    CHECK(tongues::grid_to_csv(grid) == "x,y,winding\n6.5,0,2\n13,0,1\n");
}

TEST_CASE("grid spec JSON round trip") {
    GridSpec spec;
    spec.mode = GridMode::NaturalVsEquivalentAmplitude;
    spec.x = SweepAxis{1.0, 26.0, 251};
    spec.y = SweepAxis{0.05, 1.0, 96};
    spec.fixed_hz = 13.0;
    spec.f_max_hz = 26.0;
    spec.n_pulses = 50;
    spec.n_trials = 20;
    spec.seed = 0xfeedULL;
    const auto back = tongues::grid_spec_from_json(tongues::grid_spec_to_json(spec));
    CHECK(back.mode == spec.mode);
    CHECK(back.x.min == spec.x.min);
    CHECK(back.x.max == spec.x.max);
    CHECK(back.x.steps == spec.x.steps);
    CHECK(back.y.steps == spec.y.steps);
    CHECK(back.fixed_hz == spec.fixed_hz);
    CHECK(back.f_max_hz == spec.f_max_hz);
    CHECK(back.seed == spec.seed);
}

}  // TEST_SUITE
