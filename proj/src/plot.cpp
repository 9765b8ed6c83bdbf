#include "rcfusion/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

namespace rcfusion {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Extent {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    bool any = false;

    void add(const Point2& p) {
        if (!any) {
            xmin = xmax = p.x;
            ymin = ymax = p.y;
            any = true;
            return;
        }
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
};

// Largest {1,2,5}*10^k step not exceeding the raw spacing, for readable ticks.
double nice_step(double range, int target_ticks) {
    const double raw = range / std::max(target_ticks, 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {5.0, 2.0, 1.0}) {
        if (mag * m <= raw) return mag * m;
    }
    return mag;
}

}  // namespace

std::string render_tracks_svg(const TrackLog& tracks, const GroundTruth& truth) {
    std::map<std::int64_t, std::vector<Point2>> track_paths;
    for (const TrackFrame& frame : tracks) {
        for (const TrackSnapshot& snap : frame.tracks) track_paths[snap.id].push_back(snap.position);
    }
    std::map<std::int64_t, std::vector<Point2>> truth_paths;
    for (const GroundTruthFrame& frame : truth) {
        for (const GroundTruthEntry& entry : frame.entries) {
            truth_paths[entry.object_id].push_back(entry.position);
        }
    }

    Extent extent;
    for (const auto& [id, path] : track_paths) {
        for (const Point2& p : path) extent.add(p);
    }
    for (const auto& [id, path] : truth_paths) {
        for (const Point2& p : path) extent.add(p);
    }
    if (!extent.any) {
        extent = {-10.0, 10.0, 0.0, 25.0, true};
    }
    const double pad_x = std::max(1.0, 0.05 * (extent.xmax - extent.xmin));
    const double pad_y = std::max(1.0, 0.05 * (extent.ymax - extent.ymin));
    const double xmin = extent.xmin - pad_x, xmax = extent.xmax + pad_x;
    const double ymin = extent.ymin - pad_y, ymax = extent.ymax + pad_y;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const auto sx = [&](double x) { return kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    const auto sy = [&](double y) { return kMarginTop + (ymax - y) / (ymax - ymin) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\""
        << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << ' ' << fmt(kHeight) << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "  <text x=\"" << fmt(kWidth / 2.0)
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
           "ground-plane trajectories</text>\n";

    // Axes frame.
    svg << "  <rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(kMarginTop) << "\" width=\""
        << fmt(plot_w) << "\" height=\"" << fmt(plot_h)
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

    const double x_step = nice_step(xmax - xmin, 6);
    for (double x = std::ceil(xmin / x_step) * x_step; x <= xmax + 1e-9; x += x_step) {
        const double px = sx(x);
        svg << "  <line x1=\"" << fmt(px) << "\" y1=\"" << fmt(kMarginTop + plot_h) << "\" x2=\""
            << fmt(px) << "\" y2=\"" << fmt(kMarginTop + plot_h + 5)
            << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
        svg << "  <text x=\"" << fmt(px) << "\" y=\"" << fmt(kMarginTop + plot_h + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(x)
            << "</text>\n";
    }
    const double y_step = nice_step(ymax - ymin, 6);
    for (double y = std::ceil(ymin / y_step) * y_step; y <= ymax + 1e-9; y += y_step) {
        const double py = sy(y);
        svg << "  <line x1=\"" << fmt(kMarginLeft - 5) << "\" y1=\"" << fmt(py) << "\" x2=\""
            << fmt(kMarginLeft) << "\" y2=\"" << fmt(py)
            << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
        svg << "  <text x=\"" << fmt(kMarginLeft - 9) << "\" y=\"" << fmt(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(y)
            << "</text>\n";
    }
    svg << "  <text x=\"" << fmt(kMarginLeft + plot_w / 2.0) << "\" y=\"" << fmt(kHeight - 14)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">x [m]</text>\n";
    svg << "  <text x=\"18\" y=\"" << fmt(kMarginTop + plot_h / 2.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 "
        << fmt(kMarginTop + plot_h / 2.0) << ")\">y [m]</text>\n";

    const auto emit_path = [&](const std::vector<Point2>& path, const std::string& stroke,
                               bool dashed) {
        if (path.size() == 1) {
            svg << "  <circle cx=\"" << fmt(sx(path[0].x)) << "\" cy=\"" << fmt(sy(path[0].y))
                << "\" r=\"3\" fill=\"" << stroke << "\"/>\n";
            return;
        }
        svg << "  <polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\"";
        if (dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << " points=\"";
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i > 0) svg << ' ';
            svg << fmt(sx(path[i].x)) << ',' << fmt(sy(path[i].y));
        }
        svg << "\"/>\n";
    };

    for (const auto& [id, path] : truth_paths) {
        emit_path(path, "#999999", true);
    }
    for (const auto& [id, path] : track_paths) {
        emit_path(path, kPalette[static_cast<std::size_t>(((id % static_cast<std::int64_t>(
                                     kPaletteSize)) + static_cast<std::int64_t>(kPaletteSize)) %
                                 static_cast<std::int64_t>(kPaletteSize))],
                  false);
    }

    svg << "</svg>\n";
    return svg.str();
}

}  // namespace rcfusion
