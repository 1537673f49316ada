#pragma once

#include <string>
#include <utility>
#include <vector>

namespace modrec {

struct SvgSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
    bool markers_only = false;  // scatter style, no connecting line
};

/// Self-contained line/scatter chart with auto-scaled axes and a legend.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series);

/// Heat map of a row-major matrix (e.g. a row-normalized confusion matrix),
/// dark = high. Values are expected in [0, 1].
std::string svg_heatmap(const std::string& title, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        const std::vector<std::vector<double>>& values);

}  // namespace modrec
