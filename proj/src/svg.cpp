#include "modrec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "modrec/errors.hpp"

namespace modrec {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 440;
constexpr int kMarginL = 70, kMarginR = 30, kMarginT = 50, kMarginB = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

std::string escape(const std::string& text) {
    std::string out;
    for (const char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += ch;
        }
    }
    return out;
}

// Round outward to a tidy tick step (1/2/5 progression).
double nice_step(double span) {
    if (span <= 0.0) return 1.0;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    if (frac <= 1.0) return mag;
    if (frac <= 2.0) return 2.0 * mag;
    if (frac <= 5.0) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series) {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (first) {
                x_min = x_max = x;
                y_min = y_max = y;
                first = false;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const double plot_w = kWidth - kMarginL - kMarginR;
    const double plot_h = kHeight - kMarginT - kMarginB;
    auto px = [&](double x) { return kMarginL + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) { return kMarginT + (y_max - y) / (y_max - y_min) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(title) << "</text>\n";

    const double x_step = nice_step(x_max - x_min);
    for (double t = std::ceil(x_min / x_step) * x_step; t <= x_max + 1e-9; t += x_step) {
        svg << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << kMarginT << "\" x2=\"" << fmt(px(t))
            << "\" y2=\"" << kHeight - kMarginB << "\" stroke=\"#e0e0e0\"/>\n";
        svg << "<text x=\"" << fmt(px(t)) << "\" y=\"" << kHeight - kMarginB + 18
            << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    const double y_step = nice_step(y_max - y_min);
    for (double t = std::ceil(y_min / y_step) * y_step; t <= y_max + 1e-9; t += y_step) {
        svg << "<line x1=\"" << kMarginL << "\" y1=\"" << fmt(py(t)) << "\" x2=\""
            << kWidth - kMarginR << "\" y2=\"" << fmt(py(t)) << "\" stroke=\"#e0e0e0\"/>\n";
        svg << "<text x=\"" << kMarginL - 8 << "\" y=\"" << fmt(py(t) + 4)
            << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    }
    svg << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << fmt(plot_w)
        << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"#404040\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    svg << "<text x=\"18\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << kHeight / 2 << ")\">" << escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (!series[s].markers_only && series[s].points.size() > 1) {
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
            for (const auto& [x, y] : series[s].points) svg << fmt(px(x)) << ',' << fmt(py(y)) << ' ';
            svg << "\"/>\n";
        }
        for (const auto& [x, y] : series[s].points)
            svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const int ly = kMarginT + 16 + static_cast<int>(s) * 18;
        svg << "<line x1=\"" << kWidth - kMarginR - 150 << "\" y1=\"" << ly << "\" x2=\""
            << kWidth - kMarginR - 128 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kWidth - kMarginR - 122 << "\" y=\"" << ly + 4 << "\">"
            << escape(series[s].name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string svg_heatmap(const std::string& title, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        const std::vector<std::vector<double>>& values) {
    const std::size_t rows = values.size();
    if (rows == 0 || rows != row_labels.size())
        throw ConfigError("heatmap: row labels must match value rows");
    const std::size_t cols = values[0].size();
    for (const auto& row : values)
        if (row.size() != cols) throw ConfigError("heatmap: ragged value matrix");
    if (cols != col_labels.size())
        throw ConfigError("heatmap: column labels must match value columns");

    const double cell = std::min(48.0, 420.0 / static_cast<double>(std::max(rows, cols)));
    const double grid_w = cell * static_cast<double>(cols);
    const double grid_h = cell * static_cast<double>(rows);
    const int width = static_cast<int>(kMarginL + grid_w + 40);
    const int height = static_cast<int>(kMarginT + grid_h + 70);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(title) << "</text>\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = std::clamp(values[r][c], 0.0, 1.0);
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
            const double x = kMarginL + cell * static_cast<double>(c);
            const double y = kMarginT + cell * static_cast<double>(r);
            svg << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(cell)
                << "\" height=\"" << fmt(cell) << "\" fill=\"rgb(" << shade << ',' << shade
                << ",255)\" stroke=\"#ccc\"/>\n";
            if (cell >= 26.0)
                svg << "<text x=\"" << fmt(x + cell / 2) << "\" y=\"" << fmt(y + cell / 2 + 4)
                    << "\" text-anchor=\"middle\" fill=\"" << (v > 0.55 ? "white" : "#333")
                    << "\">" << fmt(std::round(v * 100.0) / 100.0) << "</text>\n";
        }
        svg << "<text x=\"" << kMarginL - 6 << "\" y=\""
            << fmt(kMarginT + cell * (static_cast<double>(r) + 0.5) + 4)
            << "\" text-anchor=\"end\">" << escape(row_labels[r]) << "</text>\n";
    }
    for (std::size_t c = 0; c < cols; ++c) {
        const double x = kMarginL + cell * (static_cast<double>(c) + 0.5);
        const double y = kMarginT + grid_h + 14;
        svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" text-anchor=\"end\" transform=\"rotate(-45 "
            << fmt(x) << ' ' << fmt(y) << ")\">" << escape(col_labels[c]) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace modrec
