#include "chronostim/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "chronostim/errors.hpp"
#include "chronostim/rng.hpp"
#include "chronostim/timeutil.hpp"

namespace chronostim::telemetry {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT; naive DFT fallback for other lengths.
void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -kTwoPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<std::complex<double>> dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    if (is_power_of_two(n)) {
        for (std::size_t i = 0; i < n; ++i) out[i] = x[i];
        fft_pow2(out);
        return out;
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -kTwoPi * static_cast<double>(k) * static_cast<double>(t) /
                               static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

SyntheticLfpSpec restful_spec() {
    SyntheticLfpSpec s;
    s.state_label = LfpState::Restful;
    s.components = {{13.0, 1.0}};
    s.noise_exponent = 1.0;
    s.noise_gain = 0.05;
    return s;
}

SyntheticLfpSpec active_spec() {
    SyntheticLfpSpec s;
    s.state_label = LfpState::Active;
    s.components = {{13.0, 0.35}, {22.0, 0.2}};
    s.noise_exponent = 1.0;
    s.noise_gain = 0.25;
    return s;
}

SyntheticLfpSpec seizure_spec() {
    SyntheticLfpSpec s;
    s.state_label = LfpState::Seizure;
    s.components = {{2.0, 2.0}, {13.0, 0.2}};
    s.noise_exponent = 1.0;
    s.noise_gain = 0.05;
    return s;
}

TimeSeries synth_lfp(const SyntheticLfpSpec& spec, double duration_s, double sample_rate_hz,
                     std::uint64_t seed) {
    if (!(duration_s > 0.0)) throw config_error("duration must be > 0 s");
    if (!(sample_rate_hz > 0.0)) throw config_error("sample rate must be > 0 Hz");
    const double nyquist = sample_rate_hz / 2.0;
    for (const auto& c : spec.components)
        if (!(c.frequency_hz < nyquist))
            throw config_error("component frequency above Nyquist");

    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
    if (n < 2) throw config_error("duration too short for the sample rate");

    TimeSeries ts;
    ts.sample_rate_hz = sample_rate_hz;
    ts.samples.assign(n, 0.0);

    rng::Stream phases(rng::derive(seed, 0xc0317ULL));
    for (const auto& c : spec.components) {
        const double phi = phases.next_uniform(0.0, kTwoPi);
        for (std::size_t t = 0; t < n; ++t) {
            const double time = static_cast<double>(t) / sample_rate_hz;
            ts.samples[t] += c.amplitude * std::sin(kTwoPi * c.frequency_hz * time + phi);
        }
    }

    if (spec.noise_gain > 0.0) {
        // Random-phase harmonic noise with amplitude ~ f^(-exponent/2): an
        // explicit inverse DFT, one bin per resolvable frequency.
        rng::Stream noise(rng::derive(seed, 0x105eULL));
        const std::size_t n_bins = n / 2;
        for (std::size_t k = 1; k <= n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n);
            const double amp =
                spec.noise_gain * std::pow(f, -spec.noise_exponent / 2.0) *
                std::sqrt(2.0 / static_cast<double>(n_bins));
            const double phi = noise.next_uniform(0.0, kTwoPi);
            for (std::size_t t = 0; t < n; ++t) {
                const double ang =
                    kTwoPi * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(n);
                ts.samples[t] += amp * std::cos(ang + phi);
            }
        }
    }
    return ts;
}

PowerSpectrum welch_psd(const TimeSeries& ts, int segment_length, double overlap_fraction) {
    if (ts.sample_rate_hz <= 0.0) throw config_error("sample rate must be > 0 Hz");
    if (segment_length < 2) throw config_error("segment length must be >= 2");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
        throw config_error("overlap fraction must be in [0, 1)");
    const std::size_t n = ts.samples.size();
    const std::size_t seg = static_cast<std::size_t>(segment_length);
    if (n < seg) throw input_error("series shorter than one segment");

    std::vector<double> window(seg);
    double window_power = 0.0;
    for (std::size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(seg)));
        window_power += window[i] * window[i];
    }

    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::llround(static_cast<double>(seg) * (1.0 - overlap_fraction))));
    const std::size_t n_segments = (n - seg) / hop + 1;
    const std::size_t n_bins = seg / 2 + 1;

    PowerSpectrum ps;
    ps.resolution_hz = ts.sample_rate_hz / static_cast<double>(seg);
    ps.freqs_hz.resize(n_bins);
    ps.power.assign(n_bins, 0.0);
    for (std::size_t k = 0; k < n_bins; ++k)
        ps.freqs_hz[k] = static_cast<double>(k) * ps.resolution_hz;

    std::vector<double> buf(seg);
    const double scale = 1.0 / (ts.sample_rate_hz * window_power * static_cast<double>(n_segments));
    for (std::size_t s = 0; s < n_segments; ++s) {
        const std::size_t off = s * hop;
        for (std::size_t i = 0; i < seg; ++i) buf[i] = ts.samples[off + i] * window[i];
        const auto spectrum = dft(buf);
        for (std::size_t k = 0; k < n_bins; ++k) {
            double p = std::norm(spectrum[k]) * scale;
            const bool interior = k != 0 && !(seg % 2 == 0 && k == n_bins - 1);
            if (interior) p *= 2.0;  // one-sided
            ps.power[k] += p;
        }
    }
    return ps;
}

std::vector<std::pair<double, double>> dominant_peaks(const PowerSpectrum& ps, double band_lo_hz,
                                                      double band_hi_hz,
                                                      double min_prominence_ratio) {
    if (ps.freqs_hz.size() != ps.power.size() || ps.freqs_hz.size() < 3)
        throw input_error("spectrum too short");
    if (!(band_lo_hz < band_hi_hz)) throw input_error("empty band");
    if (band_lo_hz > ps.freqs_hz.back() || band_hi_hz < ps.freqs_hz.front())
        throw input_error("band outside spectrum range");

    std::vector<double> in_band;
    for (std::size_t k = 0; k < ps.freqs_hz.size(); ++k)
        if (ps.freqs_hz[k] >= band_lo_hz && ps.freqs_hz[k] <= band_hi_hz)
            in_band.push_back(ps.power[k]);
    if (in_band.empty()) throw input_error("band contains no spectral bins");

    std::vector<double> sorted = in_band;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];

    std::vector<std::pair<double, double>> peaks;
    for (std::size_t k = 1; k + 1 < ps.freqs_hz.size(); ++k) {
        if (ps.freqs_hz[k] < band_lo_hz || ps.freqs_hz[k] > band_hi_hz) continue;
        if (!(ps.power[k] > ps.power[k - 1] && ps.power[k] > ps.power[k + 1])) continue;
        const bool prominent =
            median > 0.0 ? ps.power[k] > min_prominence_ratio * median : ps.power[k] > 0.0;
        if (prominent) peaks.emplace_back(ps.freqs_hz[k], ps.power[k]);
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    return peaks;
}

AccelTrace synth_accel(const std::vector<AccelEvent>& events, double sample_rate_hz,
                       std::uint64_t seed) {
    if (!(sample_rate_hz > 0.0)) throw config_error("sample rate must be > 0 Hz");
    double last_end = 0.0;
    double span = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        const double end = e.kind == AccelKind::Tap ? e.begin_s : e.end_s;
        if (e.begin_s < 0.0 || end < e.begin_s) throw input_error("malformed accel event interval");
        if (i > 0 && e.begin_s < last_end) throw input_error("overlapping accel event intervals");
        last_end = std::max(last_end, end);
        span = std::max(span, end);
    }

    const std::size_t n =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(span * sample_rate_hz)) + 1);
    AccelTrace trace;
    trace.sample_rate_hz = sample_rate_hz;
    trace.samples.assign(n, {0.0, 0.0, 1.0});  // gravity on z

    rng::Stream noise(rng::derive(seed, 0xacce1ULL));
    // Quiet floor everywhere first.
    for (auto& s : trace.samples) {
        s[0] += 0.005 * noise.next_gaussian();
        s[1] += 0.005 * noise.next_gaussian();
        s[2] += 0.005 * noise.next_gaussian();
    }

    for (const auto& e : events) {
        if (e.kind == AccelKind::Tap) {
            const std::size_t idx = std::min(
                n - 1, static_cast<std::size_t>(std::llround(e.begin_s * sample_rate_hz)));
            trace.samples[idx][2] = e.tap_magnitude_g;
            continue;
        }
        if (e.kind == AccelKind::Inactive) continue;  // floor already laid down
        const std::size_t first =
            static_cast<std::size_t>(std::llround(e.begin_s * sample_rate_hz));
        const std::size_t last = std::min(
            n - 1, static_cast<std::size_t>(std::llround(e.end_s * sample_rate_hz)));
        rng::Stream jitter(rng::derive(seed, 0xac71eULL, first));
        const double phase_x = jitter.next_uniform(0.0, kTwoPi);
        const double phase_y = jitter.next_uniform(0.0, kTwoPi);
        const double phase_z = jitter.next_uniform(0.0, kTwoPi);
        for (std::size_t i = first; i <= last && i < n; ++i) {
            const double t = static_cast<double>(i) / sample_rate_hz;
            trace.samples[i][0] += 0.30 * std::sin(kTwoPi * 1.9 * t + phase_x) +
                                   0.02 * jitter.next_gaussian();
            trace.samples[i][1] += 0.22 * std::sin(kTwoPi * 2.7 * t + phase_y) +
                                   0.02 * jitter.next_gaussian();
            // Vertical bounce carries the signal into the magnitude.
            trace.samples[i][2] += 0.25 * std::sin(kTwoPi * 1.9 * t + phase_z) +
                                   0.02 * jitter.next_gaussian();
        }
    }
    return trace;
}

std::string lfp_to_csv(const TimeSeries& ts) {
    std::string out = "t,v\n";
    char buf[72];
    for (std::size_t i = 0; i < ts.samples.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n",
                      static_cast<double>(i) / ts.sample_rate_hz, ts.samples[i]);
        out += buf;
    }
    return out;
}

std::string trace_sidecar_json(double sample_rate_hz, double start_time) {
    nlohmann::json j;
    j["sample_rate_hz"] = sample_rate_hz;
    j["start_time"] = timeutil::format_iso8601(start_time);
    return j.dump(2) + "\n";
}

namespace {

void parse_sidecar(const std::string& sidecar_json, double& rate, double& start) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(sidecar_json);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("trace sidecar JSON: ") + e.what(), 1);
    }
    rate = j.at("sample_rate_hz").get<double>();
    start = timeutil::parse_iso8601(j.at("start_time").get<std::string>());
}

}  // namespace

TimeSeries lfp_from_csv(const std::string& csv_text, const std::string& sidecar_json) {
    TimeSeries ts;
    parse_sidecar(sidecar_json, ts.sample_rate_hz, ts.start_time);
    std::istringstream in(csv_text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "t,v") throw parse_error("expected header 't,v'", line_no);
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2) throw parse_error("expected 2 fields", line_no);
        try {
            ts.samples.push_back(std::stod(fields[1]));
        } catch (const std::exception&) {
            throw parse_error("bad sample value '" + fields[1] + "'", line_no);
        }
    }
    return ts;
}

std::string accel_to_csv(const AccelTrace& trace) {
    std::string out = "t,x,y,z\n";
    char buf[120];
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g\n",
                      static_cast<double>(i) / trace.sample_rate_hz, trace.samples[i][0],
                      trace.samples[i][1], trace.samples[i][2]);
        out += buf;
    }
    return out;
}

AccelTrace accel_from_csv(const std::string& csv_text, const std::string& sidecar_json) {
    AccelTrace trace;
    parse_sidecar(sidecar_json, trace.sample_rate_hz, trace.start_time);
    std::istringstream in(csv_text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "t,x,y,z") throw parse_error("expected header 't,x,y,z'", line_no);
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) throw parse_error("expected 4 fields", line_no);
        try {
            trace.samples.push_back(
                {std::stod(fields[1]), std::stod(fields[2]), std::stod(fields[3])});
        } catch (const std::exception&) {
            throw parse_error("bad accel sample", line_no);
        }
    }
    return trace;
}

}  // namespace chronostim::telemetry
