// chronostim: Arnold-tongue sweeps, stimulation-frequency selection, spectral
// characterization, schedule simulation, the stochastic seizure harness, and
// diary statistics behind one deterministic command line.
//
// Every run echoes its fully resolved configuration (defaults and seeds
// included) to a JSON sidecar next to the primary output; `--config
// <sidecar>` re-runs it bit for bit. Exit codes: 0 success, 1 I/O error,
// 2 configuration or validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "chronostim/diary.hpp"
#include "chronostim/errors.hpp"
#include "chronostim/scheduler.hpp"
#include "chronostim/simharness.hpp"
#include "chronostim/telemetry.hpp"
#include "chronostim/timeutil.hpp"
#include "chronostim/tongues.hpp"
#include "svg_render.hpp"

namespace cs = chronostim;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;  // fixed default, never entropy

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cs::io_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw cs::io_error("read failed for '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cs::io_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out.good()) throw cs::io_error("write failed for '" + path + "'");
}

// Pre-scan for --config so flag defaults can be seeded from the sidecar
// before CLI11 applies explicit command-line overrides.
std::optional<json> load_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            const auto j = json::parse(read_file(argv[i + 1]));
            if (!j.contains("flags")) throw cs::config_error("config sidecar has no 'flags' object");
            return j.at("flags");
        }
    }
    return std::nullopt;
}

template <typename T>
void seed_from(const std::optional<json>& cfg, const char* key, T& value) {
    if (cfg && cfg->contains(key)) value = cfg->at(key).get<T>();
}

void write_sidecar(const std::string& anchor_path, const std::string& subcommand, json flags,
                   json extra = json::object()) {
    json side;
    side["subcommand"] = subcommand;
    side["flags"] = std::move(flags);
    for (auto& [k, v] : extra.items()) side[k] = v;
    write_file(anchor_path + ".config.json", side.dump(2) + "\n");
}

json mw_to_json(const cs::diary::MannWhitneyResult& r) {
    return {
        {"u_x", r.u_x},
        {"u_y", r.u_y},
        {"p_one_tailed", r.p_one_tailed},
        {"method", r.method == cs::diary::MannWhitneyResult::Method::ExactEnumeration
                       ? "exact_enumeration"
                       : "normal_approx_tie_corrected"},
    };
}

// ---------------------------------------------------------------------------
// tongue
// ---------------------------------------------------------------------------

int run_tongue(CLI::App& app, const std::optional<json>& cfg) {
    struct Args {
        std::string mode = "fs-vs-amp";
        double f0_hz = 13.0, fs_hz = 13.0;
        double fs_min = 6.0, fs_max = 30.0;
        int fs_steps = 241;
        double f0_min = 1.0, f0_max = 26.0;
        int f0_steps = 251;
        double i_min = 0.0, i_max = 1.0;
        int i_steps = 101;
        double eq_min = 0.05, eq_max = 1.0;
        int eq_steps = 96;
        double f_max_hz = 26.0;
        int pulses = 50, trials = 20, workers = 1, max_q = 6;
        std::uint64_t seed = kDefaultSeed;
        double tol = -1.0;
        std::string out, svg, regions_out, config;
    };
    auto args = std::make_shared<Args>();
    seed_from(cfg, "mode", args->mode);
    seed_from(cfg, "f0_hz", args->f0_hz);
    seed_from(cfg, "fs_hz", args->fs_hz);
    seed_from(cfg, "fs_min_hz", args->fs_min);
    seed_from(cfg, "fs_max_hz", args->fs_max);
    seed_from(cfg, "fs_steps", args->fs_steps);
    seed_from(cfg, "f0_min_hz", args->f0_min);
    seed_from(cfg, "f0_max_hz", args->f0_max);
    seed_from(cfg, "f0_steps", args->f0_steps);
    seed_from(cfg, "i_min", args->i_min);
    seed_from(cfg, "i_max", args->i_max);
    seed_from(cfg, "i_steps", args->i_steps);
    seed_from(cfg, "eq_min", args->eq_min);
    seed_from(cfg, "eq_max", args->eq_max);
    seed_from(cfg, "eq_steps", args->eq_steps);
    seed_from(cfg, "f_max_hz", args->f_max_hz);
    seed_from(cfg, "pulses", args->pulses);
    seed_from(cfg, "trials", args->trials);
    seed_from(cfg, "workers", args->workers);
    seed_from(cfg, "max_q", args->max_q);
    seed_from(cfg, "seed", args->seed);
    seed_from(cfg, "tol", args->tol);
    seed_from(cfg, "out", args->out);
    seed_from(cfg, "svg", args->svg);
    seed_from(cfg, "regions_out", args->regions_out);

    auto* sub = app.add_subcommand("tongue", "winding-number sweep and tongue regions");
    sub->add_option("--config", args->config, "re-run from a sidecar config");
    sub->add_option("--mode", args->mode)->check(CLI::IsMember({"fs-vs-amp", "f0-vs-eqamp"}));
    sub->add_option("--f0-hz", args->f0_hz, "fixed natural frequency (fs-vs-amp mode)");
    sub->add_option("--fs-hz", args->fs_hz, "fixed stimulation frequency (f0-vs-eqamp mode)");
    sub->add_option("--fs-min-hz", args->fs_min);
    sub->add_option("--fs-max-hz", args->fs_max);
    sub->add_option("--fs-steps", args->fs_steps);
    sub->add_option("--f0-min-hz", args->f0_min);
    sub->add_option("--f0-max-hz", args->f0_max);
    sub->add_option("--f0-steps", args->f0_steps);
    sub->add_option("--i-min", args->i_min);
    sub->add_option("--i-max", args->i_max);
    sub->add_option("--i-steps", args->i_steps);
    sub->add_option("--eq-min", args->eq_min);
    sub->add_option("--eq-max", args->eq_max);
    sub->add_option("--eq-steps", args->eq_steps);
    sub->add_option("--f-max-hz", args->f_max_hz, "equivalent-amplitude reference");
    sub->add_option("--pulses", args->pulses);
    sub->add_option("--trials", args->trials);
    sub->add_option("--workers", args->workers);
    sub->add_option("--max-q", args->max_q);
    sub->add_option("--seed", args->seed);
    sub->add_option("--tol", args->tol, "classification tolerance (default 1/(2*pulses))");
    sub->add_option("--out", args->out, "grid CSV path")->required(cfg == std::nullopt);
    sub->add_option("--svg", args->svg, "optional heatmap SVG path");
    sub->add_option("--regions-out", args->regions_out, "optional region report JSON path");

    sub->callback([args] {
        cs::tongues::GridSpec spec;
        if (args->mode == "fs-vs-amp") {
            spec.mode = cs::tongues::GridMode::StimVsAmplitude;
            spec.x = {args->fs_min, args->fs_max, args->fs_steps};
            spec.y = {args->i_min, args->i_max, args->i_steps};
            spec.fixed_hz = args->f0_hz;
        } else {
            spec.mode = cs::tongues::GridMode::NaturalVsEquivalentAmplitude;
            spec.x = {args->f0_min, args->f0_max, args->f0_steps};
            spec.y = {args->eq_min, args->eq_max, args->eq_steps};
            spec.fixed_hz = args->fs_hz;
            spec.f_max_hz = args->f_max_hz;
        }
        spec.n_pulses = args->pulses;
        spec.n_trials = args->trials;
        spec.seed = args->seed;

        const double tol =
            args->tol > 0.0 ? args->tol : cs::tongues::default_classify_tol(args->pulses);
        const auto grid = cs::tongues::sweep(spec, args->workers);
        const auto regions = cs::tongues::tongue_regions(grid, args->max_q, tol);

        if (args->out.empty()) throw cs::config_error("--out is required");
        write_file(args->out, cs::tongues::grid_to_csv(grid));

        if (!args->regions_out.empty()) {
            json report = json::array();
            for (const auto& r : regions) {
                double max_width = 0.0;
                for (double w : r.width_by_row) max_width = std::max(max_width, w);
                report.push_back({
                    {"lock", std::to_string(r.lock.p) + ":" + std::to_string(r.lock.q)},
                    {"winding", r.lock.value()},
                    {"cells", r.cell_count},
                    {"x_min_hz", r.x_min_hz},
                    {"x_max_hz", r.x_max_hz},
                    {"max_width_hz", max_width},
                });
            }
            write_file(args->regions_out, report.dump(2) + "\n");
        }
        if (!args->svg.empty())
            write_file(args->svg, cs::svg::heatmap(grid, regions, "winding number sweep"));

        json flags{
            {"mode", args->mode},       {"f0_hz", args->f0_hz},
            {"fs_hz", args->fs_hz},     {"fs_min_hz", args->fs_min},
            {"fs_max_hz", args->fs_max},{"fs_steps", args->fs_steps},
            {"f0_min_hz", args->f0_min},{"f0_max_hz", args->f0_max},
            {"f0_steps", args->f0_steps},{"i_min", args->i_min},
            {"i_max", args->i_max},     {"i_steps", args->i_steps},
            {"eq_min", args->eq_min},   {"eq_max", args->eq_max},
            {"eq_steps", args->eq_steps},{"f_max_hz", args->f_max_hz},
            {"pulses", args->pulses},   {"trials", args->trials},
            {"workers", args->workers}, {"max_q", args->max_q},
            {"seed", args->seed},       {"tol", args->tol},
            {"out", args->out},         {"svg", args->svg},
            {"regions_out", args->regions_out},
        };
        write_sidecar(args->out, "tongue", std::move(flags),
                      {{"grid_spec", json::parse(cs::tongues::grid_spec_to_json(spec))},
                       {"resolved_tol", tol}});
    });
    return 0;
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

int run_select(CLI::App& app, const std::optional<json>& cfg) {
    struct Args {
        double healthy_peak = -1.0;
        std::string trace, trace_sidecar;
        double peak_band_lo = 8.0, peak_band_hi = 20.0;
        int segment = 512;
        double overlap = 0.5;
        double band_lo = 2.0, band_hi = 3.0;
        double cand_min = 10.0, cand_max = 16.0;
        int cand_steps = 7;
        double eval_eq = 0.5, narrowness = 0.1, tol = -1.0;
        double f0_min = 1.0, f0_max = 26.0;
        int f0_steps = 251;
        double f_max_hz = 26.0;
        int pulses = 50, trials = 20, max_q = 6;
        std::uint64_t seed = kDefaultSeed;
        std::string out, config;
    };
    auto args = std::make_shared<Args>();
    seed_from(cfg, "healthy_peak_hz", args->healthy_peak);
    seed_from(cfg, "trace", args->trace);
    seed_from(cfg, "trace_sidecar", args->trace_sidecar);
    seed_from(cfg, "peak_band_lo_hz", args->peak_band_lo);
    seed_from(cfg, "peak_band_hi_hz", args->peak_band_hi);
    seed_from(cfg, "segment", args->segment);
    seed_from(cfg, "overlap", args->overlap);
    seed_from(cfg, "band_lo_hz", args->band_lo);
    seed_from(cfg, "band_hi_hz", args->band_hi);
    seed_from(cfg, "cand_min_hz", args->cand_min);
    seed_from(cfg, "cand_max_hz", args->cand_max);
    seed_from(cfg, "cand_steps", args->cand_steps);
    seed_from(cfg, "eval_equiv_amplitude", args->eval_eq);
    seed_from(cfg, "narrowness_ratio", args->narrowness);
    seed_from(cfg, "tol", args->tol);
    seed_from(cfg, "f0_min_hz", args->f0_min);
    seed_from(cfg, "f0_max_hz", args->f0_max);
    seed_from(cfg, "f0_steps", args->f0_steps);
    seed_from(cfg, "f_max_hz", args->f_max_hz);
    seed_from(cfg, "pulses", args->pulses);
    seed_from(cfg, "trials", args->trials);
    seed_from(cfg, "max_q", args->max_q);
    seed_from(cfg, "seed", args->seed);
    seed_from(cfg, "out", args->out);

    auto* sub = app.add_subcommand("select", "choose a stimulation frequency");
    sub->add_option("--config", args->config);
    sub->add_option("--healthy-peak-hz", args->healthy_peak,
                    "healthy rhythm frequency; omit to measure from --trace");
    sub->add_option("--trace", args->trace, "restful LFP CSV to measure the peak from");
    sub->add_option("--trace-sidecar", args->trace_sidecar);
    sub->add_option("--peak-band-lo-hz", args->peak_band_lo);
    sub->add_option("--peak-band-hi-hz", args->peak_band_hi);
    sub->add_option("--segment", args->segment);
    sub->add_option("--overlap", args->overlap);
    sub->add_option("--band-lo-hz", args->band_lo, "pathological band low edge");
    sub->add_option("--band-hi-hz", args->band_hi);
    sub->add_option("--cand-min-hz", args->cand_min);
    sub->add_option("--cand-max-hz", args->cand_max);
    sub->add_option("--cand-steps", args->cand_steps);
    sub->add_option("--eval-equiv-amplitude", args->eval_eq);
    sub->add_option("--narrowness-ratio", args->narrowness);
    sub->add_option("--tol", args->tol);
    sub->add_option("--f0-min-hz", args->f0_min);
    sub->add_option("--f0-max-hz", args->f0_max);
    sub->add_option("--f0-steps", args->f0_steps);
    sub->add_option("--f-max-hz", args->f_max_hz);
    sub->add_option("--pulses", args->pulses);
    sub->add_option("--trials", args->trials);
    sub->add_option("--max-q", args->max_q);
    sub->add_option("--seed", args->seed);
    sub->add_option("--out", args->out, "choice report JSON")->required(cfg == std::nullopt);

    sub->callback([args] {
        double healthy = args->healthy_peak;
        std::optional<double> measured;
        if (healthy <= 0.0) {
            if (args->trace.empty())
                throw cs::config_error("provide --healthy-peak-hz or --trace");
            const auto ts = cs::telemetry::lfp_from_csv(read_file(args->trace),
                                                        read_file(args->trace_sidecar));
            const auto ps = cs::telemetry::welch_psd(ts, args->segment, args->overlap);
            const auto peaks =
                cs::telemetry::dominant_peaks(ps, args->peak_band_lo, args->peak_band_hi);
            if (peaks.empty())
                throw cs::input_error("no dominant peak found in the restful trace band");
            healthy = peaks[0].first;
            measured = healthy;
        }

        cs::tongues::SelectionParams params;
        params.eval_equiv_amplitude = args->eval_eq;
        params.max_q = args->max_q;
        params.narrowness_ratio = args->narrowness;
        params.classify_tol = args->tol;
        params.f0_axis = {args->f0_min, args->f0_max, args->f0_steps};
        params.f_max_hz = args->f_max_hz;
        params.n_pulses = args->pulses;
        params.n_trials = args->trials;
        params.seed = args->seed;

        const auto choice = cs::tongues::select_stim_frequency(
            healthy, {args->band_lo, args->band_hi},
            {args->cand_min, args->cand_max, args->cand_steps}, params);

        json j;
        if (measured) j["measured_healthy_peak_hz"] = *measured;
        j["healthy_peak_hz"] = healthy;
        if (choice.chosen_fs_hz) j["chosen_fs_hz"] = *choice.chosen_fs_hz;
        else j["chosen_fs_hz"] = nullptr;
        j["healthy_lock_ok"] = choice.healthy_lock_ok;
        j["rationale"] = choice.rationale;
        j["offending_locks"] = json::array();
        for (const auto& o : choice.offending_locks)
            j["offending_locks"].push_back(
                {{"lock", std::to_string(o.lock.p) + ":" + std::to_string(o.lock.q)},
                 {"width_hz", o.width_hz},
                 {"x_min_hz", o.x_min_hz},
                 {"x_max_hz", o.x_max_hz}});
        j["candidates"] = json::array();
        for (const auto& c : choice.candidates)
            j["candidates"].push_back({{"fs_hz", c.fs_hz},
                                       {"healthy_lock_ok", c.healthy_lock_ok},
                                       {"admissible", c.admissible},
                                       {"reason", c.reason}});
        if (args->out.empty()) throw cs::config_error("--out is required");
        write_file(args->out, j.dump(2) + "\n");

        json flags{
            {"healthy_peak_hz", args->healthy_peak},
            {"trace", args->trace},
            {"trace_sidecar", args->trace_sidecar},
            {"peak_band_lo_hz", args->peak_band_lo},
            {"peak_band_hi_hz", args->peak_band_hi},
            {"segment", args->segment},
            {"overlap", args->overlap},
            {"band_lo_hz", args->band_lo},
            {"band_hi_hz", args->band_hi},
            {"cand_min_hz", args->cand_min},
            {"cand_max_hz", args->cand_max},
            {"cand_steps", args->cand_steps},
            {"eval_equiv_amplitude", args->eval_eq},
            {"narrowness_ratio", args->narrowness},
            {"tol", args->tol},
            {"f0_min_hz", args->f0_min},
            {"f0_max_hz", args->f0_max},
            {"f0_steps", args->f0_steps},
            {"f_max_hz", args->f_max_hz},
            {"pulses", args->pulses},
            {"trials", args->trials},
            {"max_q", args->max_q},
            {"seed", args->seed},
            {"out", args->out},
        };
        write_sidecar(args->out, "select", std::move(flags));
    });
    return 0;
}

// ---------------------------------------------------------------------------
// psd
// ---------------------------------------------------------------------------

int run_psd(CLI::App& app, const std::optional<json>& cfg) {
    struct Args {
        std::string in, in_sidecar;
        std::string synth;  // restful | active | seizure
        double duration_s = 8.0, sample_rate = 250.0;
        std::uint64_t seed = kDefaultSeed;
        int segment = 512;
        double overlap = 0.5;
        double band_lo = 0.0, band_hi = 0.0, prominence = 4.0;
        std::string out, peaks_out, trace_out, config;
    };
    auto args = std::make_shared<Args>();
    seed_from(cfg, "in", args->in);
    seed_from(cfg, "in_sidecar", args->in_sidecar);
    seed_from(cfg, "synth", args->synth);
    seed_from(cfg, "duration_s", args->duration_s);
    seed_from(cfg, "sample_rate_hz", args->sample_rate);
    seed_from(cfg, "seed", args->seed);
    seed_from(cfg, "segment", args->segment);
    seed_from(cfg, "overlap", args->overlap);
    seed_from(cfg, "band_lo_hz", args->band_lo);
    seed_from(cfg, "band_hi_hz", args->band_hi);
    seed_from(cfg, "prominence_ratio", args->prominence);
    seed_from(cfg, "out", args->out);
    seed_from(cfg, "peaks_out", args->peaks_out);
    seed_from(cfg, "trace_out", args->trace_out);

    auto* sub = app.add_subcommand("psd", "Welch power spectrum of a trace");
    sub->add_option("--config", args->config);
    sub->add_option("--in", args->in, "LFP trace CSV");
    sub->add_option("--in-sidecar", args->in_sidecar, "trace sidecar JSON");
    sub->add_option("--synth", args->synth, "synthesize a preset trace instead")
        ->check(CLI::IsMember({"restful", "active", "seizure"}));
    sub->add_option("--duration-s", args->duration_s);
    sub->add_option("--sample-rate-hz", args->sample_rate);
    sub->add_option("--seed", args->seed);
    sub->add_option("--segment", args->segment);
    sub->add_option("--overlap", args->overlap);
    sub->add_option("--band-lo-hz", args->band_lo, "peak-report band low edge");
    sub->add_option("--band-hi-hz", args->band_hi);
    sub->add_option("--prominence-ratio", args->prominence);
    sub->add_option("--out", args->out, "PSD CSV path")->required(cfg == std::nullopt);
    sub->add_option("--peaks-out", args->peaks_out);
    sub->add_option("--trace-out", args->trace_out, "write the synthesized trace CSV");

    sub->callback([args] {
        cs::telemetry::TimeSeries ts;
        if (!args->synth.empty()) {
            cs::telemetry::SyntheticLfpSpec spec;
            if (args->synth == "restful") spec = cs::telemetry::restful_spec();
            else if (args->synth == "active") spec = cs::telemetry::active_spec();
            else spec = cs::telemetry::seizure_spec();
            ts = cs::telemetry::synth_lfp(spec, args->duration_s, args->sample_rate, args->seed);
            if (!args->trace_out.empty()) {
                write_file(args->trace_out, cs::telemetry::lfp_to_csv(ts));
                write_file(args->trace_out + ".sidecar.json",
                           cs::telemetry::trace_sidecar_json(ts.sample_rate_hz, ts.start_time));
            }
        } else {
            if (args->in.empty()) throw cs::config_error("provide --in or --synth");
            ts = cs::telemetry::lfp_from_csv(read_file(args->in), read_file(args->in_sidecar));
        }

        const auto ps = cs::telemetry::welch_psd(ts, args->segment, args->overlap);
        std::string csv = "freq_hz,power\n";
        char buf[64];
        for (std::size_t k = 0; k < ps.freqs_hz.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", ps.freqs_hz[k], ps.power[k]);
            csv += buf;
        }
        if (args->out.empty()) throw cs::config_error("--out is required");
        write_file(args->out, csv);

        if (!args->peaks_out.empty()) {
            if (!(args->band_lo < args->band_hi))
                throw cs::config_error("--peaks-out requires --band-lo-hz < --band-hi-hz");
            const auto peaks =
                cs::telemetry::dominant_peaks(ps, args->band_lo, args->band_hi, args->prominence);
            json j = json::array();
            for (const auto& [f, p] : peaks) j.push_back({{"freq_hz", f}, {"power", p}});
            write_file(args->peaks_out, j.dump(2) + "\n");
        }

        json flags{
            {"in", args->in},
            {"in_sidecar", args->in_sidecar},
            {"synth", args->synth},
            {"duration_s", args->duration_s},
            {"sample_rate_hz", args->sample_rate},
            {"seed", args->seed},
            {"segment", args->segment},
            {"overlap", args->overlap},
            {"band_lo_hz", args->band_lo},
            {"band_hi_hz", args->band_hi},
            {"prominence_ratio", args->prominence},
            {"out", args->out},
            {"peaks_out", args->peaks_out},
            {"trace_out", args->trace_out},
        };
        write_sidecar(args->out, "psd", std::move(flags),
                      {{"resolution_hz", ps.resolution_hz}});
    });
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int run_simulate(CLI::App& app, const std::optional<json>& cfg) {
    struct Args {
        std::string schedule, adaptive;
        std::string accel, accel_sidecar, profile;
        std::string start = "2021-03-01T00:00:00";
        double duration_s = 86400.0;
        std::string out_events, out_timeline, svg, config;
    };
    auto args = std::make_shared<Args>();
    seed_from(cfg, "schedule", args->schedule);
    seed_from(cfg, "adaptive", args->adaptive);
    seed_from(cfg, "accel", args->accel);
    seed_from(cfg, "accel_sidecar", args->accel_sidecar);
    seed_from(cfg, "profile", args->profile);
    seed_from(cfg, "start", args->start);
    seed_from(cfg, "duration_s", args->duration_s);
    seed_from(cfg, "out_events", args->out_events);
    seed_from(cfg, "out_timeline", args->out_timeline);
    seed_from(cfg, "svg", args->svg);

    auto* sub = app.add_subcommand("simulate", "run the control state machine over a span");
    sub->add_option("--config", args->config);
    sub->add_option("--schedule", args->schedule, "schedule JSON (defaults when omitted)");
    sub->add_option("--adaptive", args->adaptive, "adaptive config JSON");
    sub->add_option("--accel", args->accel, "accelerometer trace CSV");
    sub->add_option("--accel-sidecar", args->accel_sidecar);
    sub->add_option("--profile", args->profile, "synthetic accel profile JSON");
    sub->add_option("--start", args->start, "ISO 8601 start time");
    sub->add_option("--duration-s", args->duration_s);
    sub->add_option("--out-events", args->out_events, "event log CSV")
        ->required(cfg == std::nullopt);
    sub->add_option("--out-timeline", args->out_timeline, "stimulation timeline CSV");
    sub->add_option("--svg", args->svg, "24 h rose SVG");

    sub->callback([args] {
        const auto schedule = args->schedule.empty()
                                  ? cs::scheduler::default_schedule()
                                  : cs::scheduler::schedule_from_json(read_file(args->schedule));
        const auto adaptive = args->adaptive.empty()
                                  ? cs::scheduler::AdaptiveConfig{}
                                  : cs::scheduler::adaptive_from_json(read_file(args->adaptive));
        const double start = cs::timeutil::parse_iso8601(args->start);

        std::optional<cs::telemetry::AccelTrace> trace;
        if (!args->accel.empty()) {
            trace = cs::telemetry::accel_from_csv(read_file(args->accel),
                                                  read_file(args->accel_sidecar));
        } else if (!args->profile.empty()) {
            const auto j = json::parse(read_file(args->profile));
            std::vector<cs::telemetry::AccelEvent> events;
            for (const auto& e : j.at("events")) {
                cs::telemetry::AccelEvent ev;
                ev.begin_s = e.at("begin_s").get<double>();
                ev.end_s = e.value("end_s", ev.begin_s);
                const std::string kind = e.at("kind").get<std::string>();
                if (kind == "active") ev.kind = cs::telemetry::AccelKind::Active;
                else if (kind == "inactive") ev.kind = cs::telemetry::AccelKind::Inactive;
                else if (kind == "tap") ev.kind = cs::telemetry::AccelKind::Tap;
                else throw cs::config_error("unknown accel event kind: " + kind);
                ev.tap_magnitude_g = e.value("magnitude_g", 0.0);
                events.push_back(ev);
            }
            // Pad the profile so it covers the whole simulated span.
            const double rate = j.value("sample_rate_hz", 50.0);
            auto t = cs::telemetry::synth_accel(events, rate, j.value("seed", kDefaultSeed));
            const double covered = static_cast<double>(t.samples.size()) / rate;
            if (covered < args->duration_s) {
                const auto n_more = static_cast<std::size_t>(
                    std::llround((args->duration_s - covered) * rate) + 1);
                t.samples.insert(t.samples.end(), n_more, {0.0, 0.0, 1.0});
            }
            t.start_time = start;
            trace = std::move(t);
        }

        const auto run = cs::scheduler::run_schedule(trace ? &*trace : nullptr, schedule,
                                                     adaptive, start, args->duration_s);
        if (args->out_events.empty()) throw cs::config_error("--out-events is required");
        write_file(args->out_events, cs::scheduler::event_log_to_csv(run.log));
        if (!args->out_timeline.empty())
            write_file(args->out_timeline, cs::scheduler::timeline_to_csv(run.timeline));
        if (!args->svg.empty())
            write_file(args->svg,
                       cs::svg::rose(run, start, args->duration_s, "stimulation timeline"));

        json flags{
            {"schedule", args->schedule},
            {"adaptive", args->adaptive},
            {"accel", args->accel},
            {"accel_sidecar", args->accel_sidecar},
            {"profile", args->profile},
            {"start", args->start},
            {"duration_s", args->duration_s},
            {"out_events", args->out_events},
            {"out_timeline", args->out_timeline},
            {"svg", args->svg},
        };
        write_sidecar(args->out_events, "simulate", std::move(flags),
                      {{"schedule_resolved", json::parse(cs::scheduler::schedule_to_json(schedule))},
                       {"adaptive_resolved", json::parse(cs::scheduler::adaptive_to_json(adaptive))}});
    });
    return 0;
}

// ---------------------------------------------------------------------------
// harness
// ---------------------------------------------------------------------------

int run_harness(CLI::App& app, const std::optional<json>& cfg) {
    struct Args {
        int days = 30, reps = 200, workers = 1;
        std::string start = "2021-03-01T00:00:00";
        std::uint64_t seed = kDefaultSeed;
        std::string model, schedule, adaptive;
        std::string tap_policy = "carer";
        double reaction_delay_s = 30.0;
        double healthy_f0 = 13.0, band_lo = 2.0, band_hi = 3.0, coupling_per_ma = 0.5;
        std::string compare_model, compare_schedule, compare_adaptive;
        std::string out, diary_out, config;
    };
    auto args = std::make_shared<Args>();
    seed_from(cfg, "days", args->days);
    seed_from(cfg, "reps", args->reps);
    seed_from(cfg, "workers", args->workers);
    seed_from(cfg, "start", args->start);
    seed_from(cfg, "seed", args->seed);
    seed_from(cfg, "model", args->model);
    seed_from(cfg, "schedule", args->schedule);
    seed_from(cfg, "adaptive", args->adaptive);
    seed_from(cfg, "tap_policy", args->tap_policy);
    seed_from(cfg, "reaction_delay_s", args->reaction_delay_s);
    seed_from(cfg, "healthy_f0_hz", args->healthy_f0);
    seed_from(cfg, "band_lo_hz", args->band_lo);
    seed_from(cfg, "band_hi_hz", args->band_hi);
    seed_from(cfg, "coupling_per_ma", args->coupling_per_ma);
    seed_from(cfg, "compare_model", args->compare_model);
    seed_from(cfg, "compare_schedule", args->compare_schedule);
    seed_from(cfg, "compare_adaptive", args->compare_adaptive);
    seed_from(cfg, "out", args->out);
    seed_from(cfg, "diary_out", args->diary_out);

    auto* sub = app.add_subcommand("harness", "stochastic seizure-process simulation");
    sub->add_option("--config", args->config);
    sub->add_option("--days", args->days);
    sub->add_option("--reps", args->reps, "replicates per policy (compare mode)");
    sub->add_option("--workers", args->workers);
    sub->add_option("--start", args->start);
    sub->add_option("--seed", args->seed);
    sub->add_option("--model", args->model, "seizure model JSON (defaults when omitted)");
    sub->add_option("--schedule", args->schedule);
    sub->add_option("--adaptive", args->adaptive);
    sub->add_option("--tap-policy", args->tap_policy)->check(CLI::IsMember({"none", "carer"}));
    sub->add_option("--reaction-delay-s", args->reaction_delay_s);
    sub->add_option("--healthy-f0-hz", args->healthy_f0);
    sub->add_option("--band-lo-hz", args->band_lo);
    sub->add_option("--band-hi-hz", args->band_hi);
    sub->add_option("--coupling-per-ma", args->coupling_per_ma);
    sub->add_option("--compare-model", args->compare_model,
                    "second policy model JSON; enables compare mode");
    sub->add_option("--compare-schedule", args->compare_schedule);
    sub->add_option("--compare-adaptive", args->compare_adaptive);
    sub->add_option("--out", args->out, "result JSON")->required(cfg == std::nullopt);
    sub->add_option("--diary-out", args->diary_out, "diary CSV of simulated seizures");

    sub->callback([args] {
        const auto load_policy = [&](const std::string& model_path,
                                     const std::string& schedule_path,
                                     const std::string& adaptive_path) {
            cs::simharness::PolicySpec policy;
            if (!model_path.empty())
                policy.model = cs::simharness::model_from_json(read_file(model_path));
            if (!schedule_path.empty())
                policy.schedule = cs::scheduler::schedule_from_json(read_file(schedule_path));
            if (!adaptive_path.empty())
                policy.adaptive = cs::scheduler::adaptive_from_json(read_file(adaptive_path));
            policy.carer.policy = args->tap_policy == "carer"
                                      ? cs::simharness::TapPolicy::TapOnSeizure
                                      : cs::simharness::TapPolicy::None;
            policy.carer.reaction_delay_s = args->reaction_delay_s;
            policy.entrainment.healthy_f0_hz = args->healthy_f0;
            policy.entrainment.band_lo_hz = args->band_lo;
            policy.entrainment.band_hi_hz = args->band_hi;
            policy.entrainment.coupling_per_ma = args->coupling_per_ma;
            return policy;
        };

        const auto policy_a = load_policy(args->model, args->schedule, args->adaptive);
        const double start = cs::timeutil::parse_iso8601(args->start);
        if (args->out.empty()) throw cs::config_error("--out is required");

        if (!args->compare_model.empty() || !args->compare_schedule.empty() ||
            !args->compare_adaptive.empty()) {
            const auto policy_b = load_policy(
                args->compare_model.empty() ? args->model : args->compare_model,
                args->compare_schedule.empty() ? args->schedule : args->compare_schedule,
                args->compare_adaptive.empty() ? args->adaptive : args->compare_adaptive);
            const auto summary = cs::simharness::compare_policies(
                policy_a, policy_b, args->reps, args->days, start, args->seed, args->workers);
            write_file(args->out, cs::simharness::comparison_to_json(summary));
        } else {
            const auto result = cs::simharness::simulate_days(args->days, policy_a, start,
                                                              args->seed);
            write_file(args->out, cs::simharness::sim_result_to_json(result));
            if (!args->diary_out.empty())
                write_file(args->diary_out, cs::simharness::sim_result_to_diary_csv(result));
        }

        json flags{
            {"days", args->days},
            {"reps", args->reps},
            {"workers", args->workers},
            {"start", args->start},
            {"seed", args->seed},
            {"model", args->model},
            {"schedule", args->schedule},
            {"adaptive", args->adaptive},
            {"tap_policy", args->tap_policy},
            {"reaction_delay_s", args->reaction_delay_s},
            {"healthy_f0_hz", args->healthy_f0},
            {"band_lo_hz", args->band_lo},
            {"band_hi_hz", args->band_hi},
            {"coupling_per_ma", args->coupling_per_ma},
            {"compare_model", args->compare_model},
            {"compare_schedule", args->compare_schedule},
            {"compare_adaptive", args->compare_adaptive},
            {"out", args->out},
            {"diary_out", args->diary_out},
        };
        write_sidecar(args->out, "harness", std::move(flags),
                      {{"model_resolved",
                        json::parse(cs::simharness::model_to_json(
                            args->model.empty() ? cs::simharness::SeizureModelConfig{}
                                                : cs::simharness::model_from_json(
                                                      read_file(args->model))))}});
    });
    return 0;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

int run_stats(CLI::App& app, const std::optional<json>& cfg) {
    struct Args {
        std::string diary_path, diary_post, split;
        double gap_hours = 24.0;
        std::string alternative = "x_greater";
        std::string out, config;
    };
    auto args = std::make_shared<Args>();
    seed_from(cfg, "diary", args->diary_path);
    seed_from(cfg, "diary_post", args->diary_post);
    seed_from(cfg, "split", args->split);
    seed_from(cfg, "gap_hours", args->gap_hours);
    seed_from(cfg, "alternative", args->alternative);
    seed_from(cfg, "out", args->out);

    auto* sub = app.add_subcommand("stats", "diary statistics and epoch comparison");
    sub->add_option("--config", args->config);
    sub->add_option("--diary", args->diary_path, "diary CSV")->required(cfg == std::nullopt);
    sub->add_option("--diary-post", args->diary_post, "second-epoch diary CSV");
    sub->add_option("--split", args->split, "ISO 8601 split timestamp");
    sub->add_option("--gap-hours", args->gap_hours);
    sub->add_option("--alternative", args->alternative)
        ->check(CLI::IsMember({"x_less", "x_greater"}));
    sub->add_option("--out", args->out, "statistics JSON")->required(cfg == std::nullopt);

    sub->callback([args] {
        const auto events = cs::diary::parse_diary(read_file(args->diary_path));
        std::vector<cs::diary::DiaryEvent> pre = events, post;
        if (!args->diary_post.empty()) {
            post = cs::diary::parse_diary(read_file(args->diary_post));
        } else if (!args->split.empty()) {
            const double split = cs::timeutil::parse_iso8601(args->split);
            pre.clear();
            for (const auto& e : events)
                (e.timestamp < split ? pre : post).push_back(e);
            if (pre.empty())
                throw cs::input_error("split leaves the pre epoch empty");
            if (post.empty())
                throw cs::input_error("split leaves the post epoch empty");
        }

        const auto alt = args->alternative == "x_less" ? cs::diary::Alternative::XLess
                                                       : cs::diary::Alternative::XGreater;

        const auto epoch_json = [&](const std::vector<cs::diary::DiaryEvent>& evs,
                                    std::vector<double>& counts, std::vector<double>& durations) {
            json j;
            j["n_events"] = evs.size();
            const auto rate = cs::diary::interruption_rate(evs);
            j["interruption"] = {{"attempts", rate.attempts}, {"successes", rate.successes}};
            if (rate.rate) j["interruption"]["rate"] = *rate.rate;
            else j["interruption"]["rate"] = "undefined";
            if (evs.empty()) {
                j["periods"] = "no events";
                return j;
            }
            const auto periods = cs::diary::group_periods(evs, args->gap_hours);
            for (const auto& p : periods) {
                counts.push_back(static_cast<double>(p.events.size()));
                durations.push_back(p.duration_h);
            }
            const auto summary = cs::diary::summarize_periods(periods);
            const auto metric = [](const cs::diary::MetricSummary& m) {
                return json{{"mean", m.mean}, {"sd", m.sd}, {"min", m.min}, {"max", m.max}};
            };
            j["periods"] = {
                {"n", summary.n_periods},
                {"seizures_per_period", metric(summary.seizures_per_period)},
                {"duration_h", metric(summary.duration_h)},
                {"sd_well_defined", summary.sd_well_defined},
            };
            return j;
        };

        json j;
        j["gap_hours"] = args->gap_hours;
        std::vector<double> pre_counts, pre_durations, post_counts, post_durations;
        j["pre"] = epoch_json(pre, pre_counts, pre_durations);
        const bool two_epochs = !post.empty();
        if (two_epochs) j["post"] = epoch_json(post, post_counts, post_durations);

        if (two_epochs && pre_counts.size() >= 2 && post_counts.size() >= 2) {
            j["seizures_per_period_test"] = mw_to_json(
                cs::diary::mann_whitney_one_tailed(pre_counts, post_counts, alt));
            j["duration_test"] = mw_to_json(
                cs::diary::mann_whitney_one_tailed(pre_durations, post_durations, alt));
            j["alternative"] = args->alternative;
        } else {
            j["seizures_per_period_test"] = "insufficient data";
            j["duration_test"] = "insufficient data";
        }

        if (args->out.empty()) throw cs::config_error("--out is required");
        write_file(args->out, j.dump(2) + "\n");

        json flags{
            {"diary", args->diary_path},
            {"diary_post", args->diary_post},
            {"split", args->split},
            {"gap_hours", args->gap_hours},
            {"alternative", args->alternative},
            {"out", args->out},
        };
        write_sidecar(args->out, "stats", std::move(flags));
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chronostim: entrainment analysis and chronotherapy scheduling toolkit"};
    app.require_subcommand(1);

    try {
        const auto cfg = load_config(argc, argv);
        run_tongue(app, cfg);
        run_select(app, cfg);
        run_psd(app, cfg);
        run_simulate(app, cfg);
        run_harness(app, cfg);
        run_stats(app, cfg);

        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    } catch (const cs::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const cs::config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const cs::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
