#pragma once

// Minimal SVG emitters for the CLI: a winding-number heatmap with region
// outlines, and a 24 h rose rendering of a stimulation timeline (one ring per
// control layer).

#include <string>

#include "chronostim/scheduler.hpp"
#include "chronostim/tongues.hpp"

namespace chronostim::svg {

std::string heatmap(const tongues::TongueGrid& grid,
                    const std::vector<tongues::TongueRegion>& regions,
                    const std::string& title);

std::string rose(const scheduler::ScheduleRun& run, double start, double duration_s,
                 const std::string& title);

}  // namespace chronostim::svg
