#include "rescast/chart.hpp"

#include "rescast/error.hpp"
#include "rescast/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace rescast::chart {

namespace {

constexpr std::array<std::string_view, 6> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                                      "#d62728", "#9467bd", "#8c564b"};
constexpr int kMarginLeft = 72;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 56;

std::string escape(std::string_view raw) {
    std::string out;
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

double nice_step(double span, int ticks) {
    const double raw = span / std::max(ticks, 1);
    const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (m * magnitude >= raw) {
            return m * magnitude;
        }
    }
    return 10.0 * magnitude;
}

int decimals_for(double step) {
    return step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
}

}  // namespace

std::string render_chart(const std::vector<ChartSeries>& series, const ChartOptions& options) {
    std::size_t extent = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const ChartSeries& s : series) {
        if (s.values.empty()) {
            continue;
        }
        extent = std::max(extent, s.offset + s.values.size());
        for (double v : s.values) {
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    if (extent == 0 || !(lo <= hi)) {
        throw Error(ErrorKind::Empty, "chart needs at least one nonempty series");
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
        // Flat data: centre it vertically.
        const double pad = std::max(1.0, std::abs(hi) * 0.1);
        lo -= pad;
        hi += pad;
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }

    const double plot_w = options.width - kMarginLeft - kMarginRight;
    const double plot_h = options.height - kMarginTop - kMarginBottom;
    const double last = static_cast<double>(extent - 1);
    const auto px = [&](double pos) {
        return kMarginLeft + (extent == 1 ? 0.5 * plot_w : pos / last * plot_w);
    };
    const auto py = [&](double v) { return kMarginTop + (hi - v) / (hi - lo) * plot_h; };
    const auto f2 = [](double v) { return text::format_fixed(v, 2); };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
        << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << options.width << "\" height=\"" << options.height
        << "\" fill=\"#ffffff\"/>\n";
    if (!options.title.empty()) {
        svg << "<text x=\"" << options.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-size=\"15\">" << escape(options.title) << "</text>\n";
    }

    // Value grid and ticks.
    const double step = nice_step(hi - lo, options.y_ticks);
    const int decimals = decimals_for(step);
    svg << "<g class=\"y-axis\" stroke=\"#dddddd\">\n";
    for (double tick = std::ceil(lo / step) * step; tick <= hi + 1e-9 * step; tick += step) {
        const std::string y = f2(py(tick));
        svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << y << "\" x2=\""
            << f2(kMarginLeft + plot_w) << "\" y2=\"" << y << "\"/>\n"
            << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << y
            << "\" dy=\"4\" text-anchor=\"end\" stroke=\"none\" fill=\"#333333\">"
            << text::format_fixed(tick, decimals) << "</text>\n";
    }
    svg << "</g>\n";

    // Position ticks labelled by date.
    const int x_ticks = extent == 1 ? 1 : std::max(options.x_ticks, 2);
    svg << "<g class=\"x-axis\" stroke=\"#333333\">\n";
    for (int k = 0; k < x_ticks; ++k) {
        const std::size_t pos =
            x_ticks == 1 ? 0
                         : static_cast<std::size_t>(std::llround(last * k / (x_ticks - 1)));
        const std::string x = f2(px(static_cast<double>(pos)));
        const std::string label = pos < options.dates.size() ? format_iso_date(options.dates[pos])
                                                              : std::to_string(pos);
        svg << "<line x1=\"" << x << "\" y1=\"" << f2(kMarginTop + plot_h) << "\" x2=\"" << x
            << "\" y2=\"" << f2(kMarginTop + plot_h + 5) << "\"/>\n"
            << "<text x=\"" << x << "\" y=\"" << f2(kMarginTop + plot_h + 20)
            << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333333\">" << label
            << "</text>\n";
    }
    svg << "</g>\n";
    svg << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << f2(plot_w)
        << "\" height=\"" << f2(plot_h) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"16\" y=\"" << f2(kMarginTop + plot_h / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << f2(kMarginTop + plot_h / 2)
        << ")\">" << escape(options.y_label) << "</text>\n";

    std::size_t index = 0;
    std::size_t legend_row = 0;
    for (const ChartSeries& s : series) {
        const std::string color =
            s.color.value_or(std::string(kPalette[index % kPalette.size()]));
        ++index;
        if (s.values.empty()) {
            continue;
        }
        svg << "<polyline fill=\"none\" stroke=\"" << escape(color) << "\" stroke-width=\"1.2\"";
        if (s.dashed) {
            svg << " stroke-dasharray=\"5,3\"";
        }
        svg << " points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (i > 0) {
                svg << ' ';
            }
            svg << f2(px(static_cast<double>(s.offset + i))) << ',' << f2(py(s.values[i]));
        }
        svg << "\"/>\n";

        const double ly = kMarginTop + 14.0 + 16.0 * static_cast<double>(legend_row++);
        svg << "<line x1=\"" << kMarginLeft + 10 << "\" y1=\"" << f2(ly) << "\" x2=\""
            << kMarginLeft + 34 << "\" y2=\"" << f2(ly) << "\" stroke=\"" << escape(color)
            << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n"
            << "<text x=\"" << kMarginLeft + 40 << "\" y=\"" << f2(ly + 4) << "\">"
            << escape(s.label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace rescast::chart
