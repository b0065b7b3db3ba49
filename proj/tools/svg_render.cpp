#include "svg_render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "chronostim/timeutil.hpp"

namespace chronostim::svg {

namespace {

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

// Three-stop blue -> green -> yellow ramp.
std::string ramp_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    double r, g, b;
    if (t < 0.5) {
        const double u = t / 0.5;
        r = 40 + u * (40 - 40);
        g = 60 + u * (160 - 60);
        b = 150 + u * (90 - 150);
    } else {
        const double u = (t - 0.5) / 0.5;
        r = 40 + u * (235 - 40);
        g = 160 + u * (210 - 160);
        b = 90 + u * (40 - 90);
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r), static_cast<int>(g),
                  static_cast<int>(b));
    return buf;
}

}  // namespace

std::string heatmap(const tongues::TongueGrid& grid,
                    const std::vector<tongues::TongueRegion>& regions,
                    const std::string& title) {
    const int nx = grid.spec.x.steps;
    const int ny = grid.spec.y.steps;
    const double plot_w = 720.0, plot_h = 480.0, margin = 60.0;
    const double cw = plot_w / nx, ch = plot_h / ny;

    double wmin = grid.winding[0], wmax = grid.winding[0];
    for (double w : grid.winding) {
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
    }
    const double span = wmax > wmin ? wmax - wmin : 1.0;

    std::string out;
    out += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n",
               plot_w + 2 * margin, plot_h + 2 * margin);
    out += "<text x=\"" + std::to_string(margin) + "\" y=\"30\" font-family=\"sans-serif\" font-size=\"16\">" +
           title + "</text>\n";

    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const double w = grid.at(iy, ix);
            const double x = margin + ix * cw;
            const double y = margin + plot_h - (iy + 1) * ch;  // amplitude grows upward
            out += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"", x, y,
                       cw + 0.5, ch + 0.5);
            out += ramp_color((w - wmin) / span);
            out += "\"/>\n";
        }
    }

    // Outline the largest regions, one stroked rect per per-row run.
    std::size_t outlined = 0;
    for (const auto& region : regions) {
        if (outlined++ >= 6) break;
        for (int iy = 0; iy < ny; ++iy) {
            int run_start = -1;
            for (int ix = 0; ix <= nx; ++ix) {
                const bool in =
                    ix < nx &&
                    region.cell_mask[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) +
                                     static_cast<std::size_t>(ix)];
                if (in && run_start < 0) run_start = ix;
                if (!in && run_start >= 0) {
                    const double x = margin + run_start * cw;
                    const double y = margin + plot_h - (iy + 1) * ch;
                    out += fmt(
                        "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                        "fill=\"none\" stroke=\"#ffffff\" stroke-opacity=\"0.55\" "
                        "stroke-width=\"0.6\"/>\n",
                        x, y, (ix - run_start) * cw, ch);
                    run_start = -1;
                }
            }
        }
    }

    // Axis labels.
    out += fmt("<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">%.9g</text>\n",
               margin, margin + plot_h + 18.0, grid.spec.x.min);
    out += fmt("<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">%.9g</text>\n",
               margin + plot_w, margin + plot_h + 18.0, grid.spec.x.max);
    out += fmt("<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">%.9g</text>\n",
               margin - 45.0, margin + plot_h, grid.spec.y.min);
    out += fmt("<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">%.9g</text>\n",
               margin - 45.0, margin + 10.0, grid.spec.y.max);
    const char* xlabel =
        grid.spec.mode == tongues::GridMode::StimVsAmplitude ? "stimulation frequency (Hz)"
                                                             : "natural frequency (Hz)";
    const char* ylabel = grid.spec.mode == tongues::GridMode::StimVsAmplitude
                             ? "coupling"
                             : "equivalent amplitude";
    out += "<text x=\"" + std::to_string(margin + plot_w / 2) + "\" y=\"" +
           std::to_string(margin + plot_h + 40) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" + xlabel +
           "</text>\n";
    out += "<text x=\"18\" y=\"" + std::to_string(margin + plot_h / 2) +
           "\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
           std::to_string(margin + plot_h / 2) + ")\" text-anchor=\"middle\">" + ylabel +
           "</text>\n";
    out += "</svg>\n";
    return out;
}

namespace {

struct RoseSegment {
    double t0, t1;
    scheduler::DeviceMode mode;
};

int ring_of(scheduler::DeviceMode mode) {
    switch (mode) {
        case scheduler::DeviceMode::SleepMode: return 1;
        case scheduler::DeviceMode::Boost: return 2;
        default: return 0;
    }
}

const char* mode_color(scheduler::DeviceMode mode) {
    switch (mode) {
        case scheduler::DeviceMode::BasalDay: return "#7db8dc";
        case scheduler::DeviceMode::BasalNight: return "#2b5d8c";
        case scheduler::DeviceMode::SleepMode: return "#7a52a8";
        case scheduler::DeviceMode::Boost: return "#d94f2a";
        case scheduler::DeviceMode::Fallback: return "#707070";
    }
    return "#000000";
}

std::string arc_path(double cx, double cy, double r0, double r1, double a0, double a1) {
    const auto px = [&](double r, double a) { return cx + r * std::cos(a); };
    const auto py = [&](double r, double a) { return cy + r * std::sin(a); };
    const int large = (a1 - a0) > std::numbers::pi ? 1 : 0;
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "M %.2f %.2f A %.2f %.2f 0 %d 1 %.2f %.2f L %.2f %.2f A %.2f %.2f 0 %d 0 %.2f %.2f Z",
                  px(r1, a0), py(r1, a0), r1, r1, large, px(r1, a1), py(r1, a1), px(r0, a1),
                  py(r0, a1), r0, r0, large, px(r0, a0), py(r0, a0));
    return buf;
}

}  // namespace

std::string rose(const scheduler::ScheduleRun& run, double start, double duration_s,
                 const std::string& title) {
    // Reconstruct mode segments from the transition log.
    std::vector<RoseSegment> segments;
    scheduler::DeviceMode mode =
        run.log.entries.empty() ? run.final_state.mode : run.log.entries.front().from;
    double t = start;
    for (const auto& e : run.log.entries) {
        segments.push_back({t, e.timestamp, mode});
        mode = e.to;
        t = e.timestamp;
    }
    segments.push_back({t, start + duration_s, mode});

    const double cx = 280.0, cy = 300.0;
    const double ring_r[4] = {70.0, 120.0, 150.0, 180.0};

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"620\">\n";
    out += "<text x=\"20\" y=\"30\" font-family=\"sans-serif\" font-size=\"16\">" + title +
           "</text>\n";

    // Hour ticks.
    for (int h = 0; h < 24; ++h) {
        const double a = 2.0 * std::numbers::pi * h / 24.0 - std::numbers::pi / 2;
        out += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#cccccc\"/>\n",
                   cx + 60.0 * std::cos(a), cy + 60.0 * std::sin(a),
                   cx + 185.0 * std::cos(a), cy + 185.0 * std::sin(a));
        if (h % 6 == 0) {
            out += fmt("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"middle\">%.0f</text>\n",
                       cx + 200.0 * std::cos(a), cy + 200.0 * std::sin(a) + 4.0,
                       static_cast<double>(h));
        }
    }

    for (const auto& seg : segments) {
        double t0 = seg.t0;
        while (t0 < seg.t1 - 1e-9) {
            const double sod0 = timeutil::seconds_of_day(t0);
            const double until_midnight = timeutil::kSecondsPerDay - sod0;
            const double t1 = std::min(seg.t1, t0 + until_midnight);
            const double sod1 = sod0 + (t1 - t0);
            double a0 = 2.0 * std::numbers::pi * sod0 / timeutil::kSecondsPerDay -
                        std::numbers::pi / 2;
            double a1 = 2.0 * std::numbers::pi * sod1 / timeutil::kSecondsPerDay -
                        std::numbers::pi / 2;
            if (a1 - a0 >= 2.0 * std::numbers::pi - 1e-9) a1 = a0 + 2.0 * std::numbers::pi - 1e-4;
            const int ring = ring_of(seg.mode);
            out += "<path d=\"" +
                   arc_path(cx, cy, ring_r[ring], ring_r[ring + 1] - 4.0, a0, a1) + "\" fill=\"" +
                   mode_color(seg.mode) + "\" fill-opacity=\"0.85\"/>\n";
            t0 = t1;
        }
    }

    // Legend.
    const scheduler::DeviceMode legend[] = {
        scheduler::DeviceMode::BasalDay, scheduler::DeviceMode::BasalNight,
        scheduler::DeviceMode::SleepMode, scheduler::DeviceMode::Boost,
        scheduler::DeviceMode::Fallback};
    double ly = 520.0;
    for (const auto m : legend) {
        out += fmt("<rect x=\"20\" y=\"%.0f\" width=\"14\" height=\"14\" fill=\"", ly);
        out += mode_color(m);
        out += "\"/>\n<text x=\"40\" y=\"" + std::to_string(static_cast<int>(ly) + 12) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + scheduler::to_string(m) +
               "</text>\n";
        ly += 18.0;
    }
    out += "</svg>\n";
    return out;
}

}  // namespace chronostim::svg
