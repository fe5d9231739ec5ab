#pragma once

#include "rescast/series.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace rescast::chart {

/// A labeled line. `offset` places values[0] at that position of the shared x
/// axis, so a test-window line can sit to the right of a training line.
struct ChartSeries {
    std::string label;
    std::vector<double> values;
    std::size_t offset = 0;
    std::optional<std::string> color;  // palette entry when unset
    bool dashed = false;
};

struct ChartOptions {
    std::string title;
    std::string y_label = "Price (USD/bbl)";
    std::vector<Date> dates;  // x tick labels by axis position; indices when empty
    int width = 960;
    int height = 480;
    int x_ticks = 6;
    int y_ticks = 5;
};

/// Deterministic SVG line chart: axes with date and value ticks, a legend and
/// one <polyline> per series. Identical input gives byte-identical output.
/// Throws Error(Empty) when no series has values.
std::string render_chart(const std::vector<ChartSeries>& series, const ChartOptions& options);

}  // namespace rescast::chart
