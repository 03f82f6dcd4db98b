#include "akb/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace akb {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

}  // namespace

void svg_line_plot(const std::string& path, const std::string& title,
                   const std::string& x_label, const std::string& y_label,
                   const std::vector<PlotSeries>& series) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");

    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const PlotSeries& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double err = i < s.yerr.size() ? s.yerr[i] : 0.0;
            if (first) {
                x_min = x_max = s.x[i];
                y_min = s.y[i] - err;
                y_max = s.y[i] + err;
                first = false;
            }
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i] - err);
            y_max = std::max(y_max, s.y[i] + err);
        }
    }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) {
        return kMarginTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h;
    };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";

    // Axes with 5 ticks each.
    out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double xv = x_min + (x_max - x_min) * tick / 5.0;
        const double yv = y_min + (y_max - y_min) * tick / 5.0;
        out << "<line x1=\"" << px(xv) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
            << px(xv) << "\" y2=\"" << kMarginTop + plot_h + 5 << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << px(xv) << "\" y=\"" << kMarginTop + plot_h + 20
            << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
        out << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << py(yv) << "\" x2=\""
            << kMarginLeft << "\" y2=\"" << py(yv) << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    }
    out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << kMarginTop + plot_h / 2
        << ")\">" << y_label << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const PlotSeries& s = series[si];
        const char* color = kPalette[si % 6];
        std::ostringstream points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            points << (i ? " " : "") << px(s.x[i]) << ',' << py(s.y[i]);
            if (i < s.yerr.size() && s.yerr[i] > 0.0) {
                out << "<line x1=\"" << px(s.x[i]) << "\" y1=\"" << py(s.y[i] - s.yerr[i])
                    << "\" x2=\"" << px(s.x[i]) << "\" y2=\"" << py(s.y[i] + s.yerr[i])
                    << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
            }
            out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        out << "<polyline points=\"" << points.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << kWidth - kMarginRight - 8 << "\" y=\""
            << kMarginTop + 16 + 16 * si << "\" text-anchor=\"end\" fill=\"" << color << "\">"
            << s.name << "</text>\n";
    }
    out << "</svg>\n";
}

void svg_heatmap(const std::string& path, const std::string& title,
                 const Eigen::MatrixXd& values, const std::vector<std::string>& labels) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    const int n = static_cast<int>(values.rows());
    const int m = static_cast<int>(values.cols());
    const double cell = 64;
    const double left = 110, top = 70;
    const double width = left + m * cell + 40;
    const double height = top + n * cell + 60;

    const double peak = std::max(1e-12, values.maxCoeff());

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"26\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";
    out << "<text x=\"" << left + m * cell / 2
        << "\" y=\"50\" text-anchor=\"middle\">prediction</text>\n";
    out << "<text x=\"20\" y=\"" << top + n * cell / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << top + n * cell / 2
        << ")\">true label</text>\n";

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < m; ++c) {
            const double v = values(r, c) / peak;
            const int blue = static_cast<int>(255 - 175 * v);
            const int rg = static_cast<int>(255 - 205 * v);
            out << "<rect x=\"" << left + c * cell << "\" y=\"" << top + r * cell
                << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << rg
                << ',' << rg << ',' << blue << ")\" stroke=\"#999\"/>\n";
            out << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\""
                << top + r * cell + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
                << (v > 0.55 ? "white" : "#222") << "\">" << fmt(values(r, c)) << "</text>\n";
        }
    }
    for (int i = 0; i < std::max(n, m); ++i) {
        const std::string label =
            i < static_cast<int>(labels.size()) ? labels[i] : "c" + std::to_string(i);
        if (i < m)
            out << "<text x=\"" << left + i * cell + cell / 2 << "\" y=\"" << top - 8
                << "\" text-anchor=\"middle\">" << label << "</text>\n";
        if (i < n)
            out << "<text x=\"" << left - 10 << "\" y=\"" << top + i * cell + cell / 2 + 4
                << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace akb
