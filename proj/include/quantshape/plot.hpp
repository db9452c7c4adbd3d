#pragma once

#include <string>
#include <vector>

namespace quantshape {

struct Series {
    std::string         label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool        log_y = false;
    int         width = 720;
    int         height = 420;
};

/// Minimal SVG line chart: axes, min/max tick labels and one polyline per series.
std::string svg_line_plot(const std::vector<Series>& series, const PlotOptions& options);

}  // namespace quantshape
