#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "chronostim/errors.hpp"
#include "chronostim/rng.hpp"
#include "chronostim/telemetry.hpp"

using namespace chronostim;
using telemetry::AccelEvent;
using telemetry::AccelKind;
using telemetry::TimeSeries;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t argmax_bin(const telemetry::PowerSpectrum& ps) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < ps.power.size(); ++k)
        if (ps.power[k] > ps.power[best]) best = k;
    return best;
}

// Naive windowed periodogram of the first segment, as an independent check
// of the transform inside welch_psd.
std::size_t oracle_first_segment_argmax(const TimeSeries& ts, int seg) {
    std::size_t best = 1;
    double best_power = -1.0;
    for (int k = 1; k <= seg / 2; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (int n = 0; n < seg; ++n) {
            const double w = 0.5 * (1.0 - std::cos(kTwoPi * n / seg));
            const double ang = -kTwoPi * k * n / seg;
            acc += ts.samples[static_cast<std::size_t>(n)] * w *
                   std::complex<double>(std::cos(ang), std::sin(ang));
        }
        if (std::norm(acc) > best_power) {
            best_power = std::norm(acc);
            best = static_cast<std::size_t>(k);
        }
    }
    return best;
}

double variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return sq / static_cast<double>(v.size());
}

}  // namespace

TEST_SUITE("telemetry") {

TEST_CASE("restful trace peaks near 13 Hz") {
    const auto ts = telemetry::synth_lfp(telemetry::restful_spec(), 8.0, 250.0, 11);
    const auto ps = telemetry::welch_psd(ts, 512);
    CHECK(std::abs(ps.freqs_hz[argmax_bin(ps)] - 13.0) <= ps.resolution_hz);
}

TEST_CASE("seizure trace peaks near 2 Hz") {
    const auto ts = telemetry::synth_lfp(telemetry::seizure_spec(), 8.0, 250.0, 11);
    const auto ps = telemetry::welch_psd(ts, 512);
    CHECK(std::abs(ps.freqs_hz[argmax_bin(ps)] - 2.0) <= ps.resolution_hz);
}

TEST_CASE("silent spec produces an all-zero series") {
    telemetry::SyntheticLfpSpec spec;
    spec.components = {{13.0, 0.0}};
    spec.noise_gain = 0.0;
    const auto ts = telemetry::synth_lfp(spec, 2.0, 250.0, 1);
    for (double v : ts.samples) CHECK(v == 0.0);
}

TEST_CASE("component above Nyquist is rejected") {
    telemetry::SyntheticLfpSpec spec;
    spec.components = {{130.0, 1.0}};
    CHECK_THROWS_AS(telemetry::synth_lfp(spec, 1.0, 250.0, 1), config_error);
}

TEST_CASE("synthesis is deterministic per seed") {
    const auto a = telemetry::synth_lfp(telemetry::restful_spec(), 2.0, 250.0, 5);
    const auto b = telemetry::synth_lfp(telemetry::restful_spec(), 2.0, 250.0, 5);
    const auto c = telemetry::synth_lfp(telemetry::restful_spec(), 2.0, 250.0, 6);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
}

TEST_CASE("welch recovers a pure sine against the naive transform") {
    TimeSeries ts;
    ts.sample_rate_hz = 250.0;
    ts.samples.resize(2000);
    for (std::size_t n = 0; n < ts.samples.size(); ++n)
        ts.samples[n] = std::sin(kTwoPi * 13.0 * static_cast<double>(n) / 250.0);
    const auto ps = telemetry::welch_psd(ts, 512);
    const auto peak = argmax_bin(ps);
    CHECK(std::abs(ps.freqs_hz[peak] - 13.0) <= ps.resolution_hz);
    CHECK(peak == oracle_first_segment_argmax(ts, 512));
}

TEST_CASE("welch handles non-power-of-two segments") {
    TimeSeries ts;
    ts.sample_rate_hz = 100.0;
    ts.samples.resize(900);
    for (std::size_t n = 0; n < ts.samples.size(); ++n)
        ts.samples[n] = std::sin(kTwoPi * 10.0 * static_cast<double>(n) / 100.0);
    const auto ps = telemetry::welch_psd(ts, 300, 0.5);
    CHECK(std::abs(ps.freqs_hz[argmax_bin(ps)] - 10.0) <= ps.resolution_hz);
}

TEST_CASE("constant series concentrates at DC") {
    TimeSeries ts;
    ts.sample_rate_hz = 100.0;
    ts.samples.assign(1024, 3.5);
    const auto ps = telemetry::welch_psd(ts, 256);
    CHECK(argmax_bin(ps) == 0);
    // The Hann main lobe reaches bin 1; everything beyond is numerically zero.
    for (std::size_t k = 2; k < ps.power.size(); ++k)
        CHECK(ps.power[k] <= 1e-16 * ps.power[0]);
}

TEST_CASE("PSD integral approximates the variance") {
    TimeSeries ts;
    ts.sample_rate_hz = 250.0;
    ts.samples.resize(4096);
    rng::Stream noise(77);
    for (auto& v : ts.samples) v = noise.next_gaussian();
    const auto ps = telemetry::welch_psd(ts, 512);
    double integral = 0.0;
    for (double p : ps.power) integral += p * ps.resolution_hz;
    const double var = variance(ts.samples);
    CHECK(std::abs(integral - var) <= 0.10 * var);
}

TEST_CASE("injected frequencies are recovered within one bin") {
    rng::Stream s(31);
    for (int trial = 0; trial < 12; ++trial) {
        TimeSeries ts;
        ts.sample_rate_hz = 250.0;
        ts.samples.resize(2048);
        const double res = 250.0 / 512.0;
        const double f = s.next_uniform(2.0 * res, 125.0 - 2.0 * res);
        for (std::size_t n = 0; n < ts.samples.size(); ++n)
            ts.samples[n] = std::sin(kTwoPi * f * static_cast<double>(n) / 250.0);
        const auto ps = telemetry::welch_psd(ts, 512);
        CHECK(std::abs(ps.freqs_hz[argmax_bin(ps)] - f) <= ps.resolution_hz);
    }
}

TEST_CASE("welch input validation") {
    TimeSeries ts;
    ts.sample_rate_hz = 250.0;
    ts.samples.resize(100);
    CHECK_THROWS_AS(telemetry::welch_psd(ts, 512), input_error);
    ts.samples.resize(1024);
    CHECK_THROWS_AS(telemetry::welch_psd(ts, 512, 1.0), config_error);
    CHECK_THROWS_AS(telemetry::welch_psd(ts, 1), config_error);
}

TEST_CASE("dominant_peaks orders by power and honors the band") {
    telemetry::SyntheticLfpSpec spec;
    spec.components = {{2.0, 2.0}, {13.0, 0.5}};
    spec.noise_exponent = 1.0;
    spec.noise_gain = 0.02;
    const auto ts = telemetry::synth_lfp(spec, 8.0, 250.0, 9);
    const auto ps = telemetry::welch_psd(ts, 512);
    const auto peaks = telemetry::dominant_peaks(ps, 1.0, 20.0);
    REQUIRE(peaks.size() >= 2);
    CHECK(std::abs(peaks[0].first - 2.0) <= ps.resolution_hz);
    CHECK(std::abs(peaks[1].first - 13.0) <= ps.resolution_hz);

    const auto restful = telemetry::synth_lfp(telemetry::restful_spec(), 8.0, 250.0, 9);
    const auto rps = telemetry::welch_psd(restful, 512);
    const auto rpeaks = telemetry::dominant_peaks(rps, 8.0, 20.0);
    REQUIRE(!rpeaks.empty());
    CHECK(std::abs(rpeaks[0].first - 13.0) <= rps.resolution_hz);
}

TEST_CASE("flat spectrum yields no peaks") {
    telemetry::PowerSpectrum ps;
    for (int k = 0; k < 64; ++k) {
        ps.freqs_hz.push_back(k * 0.5);
        ps.power.push_back(1.0);
    }
    ps.resolution_hz = 0.5;
    CHECK(telemetry::dominant_peaks(ps, 2.0, 20.0).empty());
    CHECK_THROWS_AS(telemetry::dominant_peaks(ps, 20.0, 2.0), input_error);
    CHECK_THROWS_AS(telemetry::dominant_peaks(ps, 100.0, 200.0), input_error);
}

TEST_CASE("tap event writes exactly one super-threshold z sample") {
    std::vector<AccelEvent> events;
    events.push_back({5.0, 5.0, AccelKind::Tap, 7.5});
    const auto trace = telemetry::synth_accel(events, 50.0, 13);
    int hits = 0;
    for (const auto& s : trace.samples)
        if (s[2] >= 7.0) ++hits;
    CHECK(hits == 1);
}

TEST_CASE("inactive trace stays below the activity threshold") {
    std::vector<AccelEvent> events;
    events.push_back({0.0, 30.0, AccelKind::Inactive, 0.0});
    const auto trace = telemetry::synth_accel(events, 50.0, 13);
    for (int axis = 0; axis < 3; ++axis) {
        std::vector<double> vals;
        for (const auto& s : trace.samples) vals.push_back(s[static_cast<std::size_t>(axis)]);
        CHECK(std::sqrt(variance(vals)) < 0.05);
    }
}

TEST_CASE("active interval exceeds the threshold in every full window") {
    std::vector<AccelEvent> events;
    events.push_back({0.0, 60.0, AccelKind::Active, 0.0});
    const auto trace = telemetry::synth_accel(events, 50.0, 13);
    const std::size_t window = 500;  // 10 s at 50 Hz
    for (std::size_t first = 0; first + window <= trace.samples.size(); first += window) {
        std::vector<double> mags;
        for (std::size_t i = first; i < first + window; ++i) {
            const auto& s = trace.samples[i];
            mags.push_back(std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]));
        }
        CHECK(std::sqrt(variance(mags)) > 0.05);
    }
}

TEST_CASE("accel events must be ascending and disjoint") {
    std::vector<AccelEvent> events;
    events.push_back({0.0, 10.0, AccelKind::Active, 0.0});
    events.push_back({5.0, 15.0, AccelKind::Inactive, 0.0});
    CHECK_THROWS_AS(telemetry::synth_accel(events, 50.0, 1), input_error);
}

TEST_CASE("trace CSV round trips") {
    const auto ts = telemetry::synth_lfp(telemetry::restful_spec(), 0.1, 250.0, 3);
    const auto back = telemetry::lfp_from_csv(telemetry::lfp_to_csv(ts),
                                              telemetry::trace_sidecar_json(250.0, 0.0));
    REQUIRE(back.samples.size() == ts.samples.size());
    for (std::size_t i = 0; i < ts.samples.size(); ++i)
        CHECK(back.samples[i] == doctest::Approx(ts.samples[i]).epsilon(1e-8));

    std::vector<AccelEvent> events;
    events.push_back({0.0, 1.0, AccelKind::Inactive, 0.0});
    const auto trace = telemetry::synth_accel(events, 50.0, 3);
    const auto accel_back = telemetry::accel_from_csv(
        telemetry::accel_to_csv(trace), telemetry::trace_sidecar_json(50.0, 0.0));
    REQUIRE(accel_back.samples.size() == trace.samples.size());
    CHECK(accel_back.samples[5][2] == doctest::Approx(trace.samples[5][2]).epsilon(1e-8));

    CHECK_THROWS_AS(telemetry::lfp_from_csv("bad header\n1,2\n",
                                            telemetry::trace_sidecar_json(250.0, 0.0)),
                    parse_error);
}

}  // TEST_SUITE
