#pragma once

// Self-contained SVG plots of experiment traces: estimator tracking against
// the true-n staircase, loss/detector internals, and step-time bars.

#include <filesystem>
#include <string>
#include <vector>

#include "wifiload/trace.hpp"

namespace wifiload {

enum class PlotKind { Tracking, Loss, Timing };

PlotKind plot_kind_from_name(std::string_view name);  // throws ConfigError

// Renders the trace as a static SVG. Deterministic bytes for identical
// input. Throws ConfigError on an empty trace.
std::string render_plot(const std::vector<TraceRecord>& trace, PlotKind kind);

void write_plot(const std::vector<TraceRecord>& trace, PlotKind kind,
                const std::filesystem::path& path);

}  // namespace wifiload
