#pragma once

#include <string>
#include <vector>

#include "akb/common.hpp"

namespace akb {

// Minimal static SVG rendering for sweep curves and confusion heatmaps.
// Not a plotting library; just enough to eyeball results without
// external tooling.

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yerr;  // optional; one-sigma bars when non-empty
};

void svg_line_plot(const std::string& path, const std::string& title,
                   const std::string& x_label, const std::string& y_label,
                   const std::vector<PlotSeries>& series);

void svg_heatmap(const std::string& path, const std::string& title,
                 const Eigen::MatrixXd& values, const std::vector<std::string>& labels);

}  // namespace akb
