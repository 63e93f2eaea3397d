#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tilekit/colormap.hpp"
#include "tilekit/contours.hpp"
#include "tilekit/detail/png.hpp"
#include "tilekit/grid.hpp"
#include "tilekit/performance.hpp"
#include "tilekit/ranking.hpp"

namespace tilekit {

struct RenderOptions {
    int width = 640;
    int height = 560;
    std::string title;
    bool corner_labels = true; // TNR/TPR/NPV/PPV, Accuracy, F1
    bool colorbar = true;
    double vmin = 0.0;
    double vmax = 1.0;
    bool auto_range = false;
    double hatch_spacing = 6.0;
    std::string colormap = "viridis";
};

namespace detail {

inline constexpr int kMaxRaster = 512;

inline std::string fmt_px(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string fmt_label(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 4);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
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

struct Raster {
    int size = 0;
    std::vector<Rgb> pixels; // row 0 = top (b = 1)
};

// Nearest tile index for a raster position; endpoints land on the grid
// boundary exactly.
inline int sample_index(int r, int raster_size, int grid_size) {
    if (raster_size == 1) return 0;
    double t = static_cast<double>(r) / static_cast<double>(raster_size - 1);
    return static_cast<int>(std::lround(t * static_cast<double>(grid_size - 1)));
}

// Scalar tile to pixels through the sequential colormap. Grids above the
// raster cap are nearest-sampled down to kMaxRaster.
inline Raster rasterize_scalar(const ScalarTile& tile, double vmin, double vmax) {
    Raster raster;
    raster.size = std::min(tile.grid.size, kMaxRaster);
    raster.pixels.resize(static_cast<std::size_t>(raster.size) * raster.size);
    double span = vmax > vmin ? vmax - vmin : 1.0;
    for (int r = 0; r < raster.size; ++r) {
        int i = sample_index(raster.size - 1 - r, raster.size, tile.grid.size);
        for (int c = 0; c < raster.size; ++c) {
            int j = sample_index(c, raster.size, tile.grid.size);
            double v = tile.at(i, j);
            raster.pixels[static_cast<std::size_t>(r) * raster.size + c] =
                sequential_color(is_defined(v) ? (v - vmin) / span : kUndefined);
        }
    }
    return raster;
}

inline std::vector<std::uint8_t> sample_mask(const BoolTile& mask, int raster_size) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(raster_size) * raster_size);
    for (int r = 0; r < raster_size; ++r) {
        int i = sample_index(raster_size - 1 - r, raster_size, mask.grid.size);
        for (int c = 0; c < raster_size; ++c) {
            int j = sample_index(c, raster_size, mask.grid.size);
            out[static_cast<std::size_t>(r) * raster_size + c] = mask.at(i, j) ? 1 : 0;
        }
    }
    return out;
}

struct PlotFrame {
    double left = 52.0, top = 18.0;
    double plot_w = 0.0, plot_h = 0.0;

    double x(double a) const { return left + a * plot_w; }
    double y(double b) const { return top + (1.0 - b) * plot_h; }
};

inline void append_png_image(std::string& svg, const Raster& raster, const PlotFrame& f) {
    std::vector<std::uint8_t> png = encode_png_rgb(raster.pixels, raster.size, raster.size);
    svg += "<image x=\"" + fmt_px(f.left) + "\" y=\"" + fmt_px(f.top) + "\" width=\"" +
           fmt_px(f.plot_w) + "\" height=\"" + fmt_px(f.plot_h) +
           "\" preserveAspectRatio=\"none\" style=\"image-rendering:pixelated\" "
           "href=\"data:image/png;base64," +
           base64_encode(png) + "\"/>\n";
}

inline void append_axes(std::string& svg, const PlotFrame& f, const char* xlabel = "a",
                        const char* ylabel = "b", bool italic = true) {
    svg += "<g class=\"axes\" font-family=\"Helvetica,Arial,sans-serif\" font-size=\"11\" "
           "fill=\"#222\">\n";
    svg += "<rect x=\"" + fmt_px(f.left) + "\" y=\"" + fmt_px(f.top) + "\" width=\"" +
           fmt_px(f.plot_w) + "\" height=\"" + fmt_px(f.plot_h) +
           "\" fill=\"none\" stroke=\"#222\" stroke-width=\"1\"/>\n";
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        double x = f.x(t), y = f.y(t);
        double bottom = f.top + f.plot_h;
        svg += "<line x1=\"" + fmt_px(x) + "\" y1=\"" + fmt_px(bottom) + "\" x2=\"" +
               fmt_px(x) + "\" y2=\"" + fmt_px(bottom + 4) + "\" stroke=\"#222\"/>\n";
        svg += "<text x=\"" + fmt_px(x) + "\" y=\"" + fmt_px(bottom + 15) +
               "\" text-anchor=\"middle\">" + fmt_label(t) + "</text>\n";
        svg += "<line x1=\"" + fmt_px(f.left - 4) + "\" y1=\"" + fmt_px(y) + "\" x2=\"" +
               fmt_px(f.left) + "\" y2=\"" + fmt_px(y) + "\" stroke=\"#222\"/>\n";
        svg += "<text x=\"" + fmt_px(f.left - 7) + "\" y=\"" + fmt_px(y + 3.5) +
               "\" text-anchor=\"end\">" + fmt_label(t) + "</text>\n";
    }
    const char* style = italic ? " font-style=\"italic\"" : "";
    double bottom = f.top + f.plot_h;
    svg += "<text x=\"" + fmt_px(f.left + f.plot_w / 2) + "\" y=\"" + fmt_px(bottom + 30) +
           "\" text-anchor=\"middle\"" + style + ">" + xlabel + "</text>\n";
    svg += "<text x=\"" + fmt_px(f.left - 34) + "\" y=\"" +
           fmt_px(f.top + f.plot_h / 2 + 3.5) + "\" text-anchor=\"middle\"" + style + ">" +
           ylabel + "</text>\n";
    svg += "</g>\n";
}

inline void append_halo_text(std::string& svg, double x, double y, const std::string& text,
                             const char* anchor) {
    svg += "<text x=\"" + fmt_px(x) + "\" y=\"" + fmt_px(y) + "\" text-anchor=\"" + anchor +
           "\" paint-order=\"stroke\" stroke=\"#ffffff\" stroke-width=\"3\" fill=\"#000\">" +
           xml_escape(text) + "</text>\n";
}

inline void append_corner_labels(std::string& svg, const PlotFrame& f) {
    svg += "<g class=\"corner-labels\" font-family=\"Helvetica,Arial,sans-serif\" "
           "font-size=\"12\" font-weight=\"bold\">\n";
    append_halo_text(svg, f.x(0.0) + 4, f.y(0.0) - 5, "TNR", "start");
    append_halo_text(svg, f.x(1.0) - 4, f.y(1.0) + 13, "TPR", "end");
    append_halo_text(svg, f.x(0.0) + 4, f.y(1.0) + 13, "NPV", "start");
    append_halo_text(svg, f.x(1.0) - 4, f.y(0.0) - 5, "PPV", "end");
    append_halo_text(svg, f.x(0.5), f.y(0.5) + 4, "Accuracy", "middle");
    append_halo_text(svg, f.x(1.0) - 4, f.y(0.5) + 4, "F1", "end");
    svg += "</g>\n";
}

inline void append_hatch_defs(std::string& svg, double spacing) {
    svg += "<defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"" +
           fmt_px(spacing) + "\" height=\"" + fmt_px(spacing) +
           "\" patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"" +
           fmt_px(spacing) +
           "\" stroke=\"#444\" stroke-width=\"1.2\"/></pattern></defs>\n";
}

inline void append_hatch_overlay(std::string& svg, const BoolTile& mask, const PlotFrame& f,
                                 int raster_size) {
    std::vector<std::uint8_t> sampled = sample_mask(mask, raster_size);
    double cw = f.plot_w / raster_size;
    double ch = f.plot_h / raster_size;
    svg += "<g class=\"hatch\" fill=\"url(#hatch)\" fill-opacity=\"0.55\">\n";
    for (int r = 0; r < raster_size; ++r) {
        int c = 0;
        while (c < raster_size) {
            if (!sampled[static_cast<std::size_t>(r) * raster_size + c]) {
                ++c;
                continue;
            }
            int c0 = c;
            while (c < raster_size && sampled[static_cast<std::size_t>(r) * raster_size + c])
                ++c;
            svg += "<rect x=\"" + fmt_px(f.left + c0 * cw) + "\" y=\"" +
                   fmt_px(f.top + r * ch) + "\" width=\"" + fmt_px((c - c0) * cw) +
                   "\" height=\"" + fmt_px(ch + 0.3) + "\"/>\n";
        }
    }
    svg += "</g>\n";
}

inline void append_contours(std::string& svg, const ScalarTile& tile,
                            std::span<const double> levels, const PlotFrame& f) {
    std::vector<ContourLine> lines = iso_contours(tile, levels);
    if (lines.empty()) return;
    svg += "<g class=\"contours\" fill=\"none\" stroke=\"#2c7fb8\" stroke-width=\"1\">\n";
    for (const ContourLine& line : lines) {
        svg += "<polyline points=\"";
        for (std::size_t k = 0; k < line.points.size(); ++k) {
            if (k > 0) svg += ' ';
            svg += fmt_px(f.x(line.points[k][0])) + "," + fmt_px(f.y(line.points[k][1]));
        }
        svg += "\"/>\n";
    }
    svg += "</g>\n";
}

inline void append_colorbar(std::string& svg, const PlotFrame& f, double vmin, double vmax) {
    const int steps = 128;
    std::vector<Rgb> strip(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k)
        strip[static_cast<std::size_t>(k)] =
            sequential_color(1.0 - static_cast<double>(k) / (steps - 1));
    std::vector<std::uint8_t> png = encode_png_rgb(strip, 1, steps);
    double x = f.left + f.plot_w + 14;
    svg += "<image x=\"" + fmt_px(x) + "\" y=\"" + fmt_px(f.top) +
           "\" width=\"12\" height=\"" + fmt_px(f.plot_h) +
           "\" preserveAspectRatio=\"none\" href=\"data:image/png;base64," +
           base64_encode(png) + "\"/>\n";
    svg += "<g font-family=\"Helvetica,Arial,sans-serif\" font-size=\"10\" fill=\"#222\">\n";
    svg += "<text x=\"" + fmt_px(x + 16) + "\" y=\"" + fmt_px(f.top + 8) + "\">" +
           fmt_label(vmax) + "</text>\n";
    svg += "<text x=\"" + fmt_px(x + 16) + "\" y=\"" + fmt_px(f.top + f.plot_h) + "\">" +
           fmt_label(vmin) + "</text>\n";
    svg += "</g>\n";
}

inline std::string svg_open(int width, int height) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
           std::to_string(width) + " " + std::to_string(height) +
           "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

inline void append_title(std::string& svg, const RenderOptions& opts, const PlotFrame& f) {
    if (opts.title.empty()) return;
    svg += "<text x=\"" + fmt_px(f.left + f.plot_w / 2) + "\" y=\"13\" "
           "text-anchor=\"middle\" font-family=\"Helvetica,Arial,sans-serif\" "
           "font-size=\"12\" font-weight=\"bold\" fill=\"#111\">" +
           xml_escape(opts.title) + "</text>\n";
}

inline PlotFrame make_frame(const RenderOptions& opts, double legend_height = 0.0) {
    PlotFrame f;
    double right = opts.colorbar ? 64.0 : 16.0;
    f.plot_w = opts.width - f.left - right;
    f.plot_h = opts.height - f.top - 42.0 - legend_height;
    return f;
}

inline void value_range(const ScalarTile& tile, const RenderOptions& opts, double& vmin,
                        double& vmax) {
    vmin = opts.vmin;
    vmax = opts.vmax;
    if (!opts.auto_range) return;
    bool any = false;
    double lo = 0.0, hi = 0.0;
    for (double v : tile.values) {
        if (!is_defined(v)) continue;
        if (!any) {
            lo = hi = v;
            any = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!any) return;
    vmin = lo;
    vmax = hi > lo ? hi : lo + 1.0;
}

} // namespace detail

// Scalar-tile heatmap: PNG raster of the cells (downsampled past 512),
// optional hatch overlay and iso-value contour lines, axes in (a, b).
inline std::string render_heatmap(const ScalarTile& tile, const BoolTile* hatch = nullptr,
                                  std::span<const double> contour_levels = {},
                                  const RenderOptions& opts = {}) {
    if (hatch) require_same_grid(tile.grid, hatch->grid);
    double vmin, vmax;
    detail::value_range(tile, opts, vmin, vmax);

    detail::PlotFrame f = detail::make_frame(opts);
    std::string svg = detail::svg_open(opts.width, opts.height);
    detail::append_title(svg, opts, f);
    detail::Raster raster = detail::rasterize_scalar(tile, vmin, vmax);
    detail::append_png_image(svg, raster, f);
    if (!contour_levels.empty()) detail::append_contours(svg, tile, contour_levels, f);
    if (hatch) {
        detail::append_hatch_defs(svg, opts.hatch_spacing);
        detail::append_hatch_overlay(svg, *hatch, f, raster.size);
    }
    detail::append_axes(svg, f);
    if (opts.corner_labels) detail::append_corner_labels(svg, f);
    if (opts.colorbar) detail::append_colorbar(svg, f, vmin, vmax);
    svg += "</svg>\n";
    return svg;
}

// Entity map: categorical fill per cell plus a legend in lexicographic id
// order, paginated into columns of 32 entries.
inline std::string render_entity_map(const EntityTile& tile, const BoolTile* hatch = nullptr,
                                     const RenderOptions& opts = {}) {
    if (hatch) require_same_grid(tile.grid, hatch->grid);

    std::set<std::uint16_t> present(tile.cells.begin(), tile.cells.end());
    std::vector<std::string> shown;
    shown.reserve(present.size());
    for (std::uint16_t c : present) shown.push_back(tile.entity_ids[c]);
    std::sort(shown.begin(), shown.end());
    std::map<std::string, std::size_t> color_of;
    for (std::size_t k = 0; k < shown.size(); ++k) color_of[shown[k]] = k;

    const int rows_per_col = 32;
    int legend_rows = static_cast<int>(std::min<std::size_t>(shown.size(), rows_per_col));
    double legend_height = 10.0 + 16.0 * legend_rows;

    RenderOptions local = opts;
    local.colorbar = false;
    detail::PlotFrame f = detail::make_frame(local, legend_height);

    std::string svg = detail::svg_open(opts.width, opts.height);
    detail::append_title(svg, local, f);

    detail::Raster raster;
    raster.size = std::min(tile.grid.size, detail::kMaxRaster);
    raster.pixels.resize(static_cast<std::size_t>(raster.size) * raster.size);
    for (int r = 0; r < raster.size; ++r) {
        int i = detail::sample_index(raster.size - 1 - r, raster.size, tile.grid.size);
        for (int c = 0; c < raster.size; ++c) {
            int j = detail::sample_index(c, raster.size, tile.grid.size);
            raster.pixels[static_cast<std::size_t>(r) * raster.size + c] =
                categorical_color(color_of.at(tile.id_at(i, j)));
        }
    }
    detail::append_png_image(svg, raster, f);
    if (hatch) {
        detail::append_hatch_defs(svg, opts.hatch_spacing);
        detail::append_hatch_overlay(svg, *hatch, f, raster.size);
    }
    detail::append_axes(svg, f);
    if (opts.corner_labels) detail::append_corner_labels(svg, f);

    // legend
    double ly = f.top + f.plot_h + 46.0;
    svg += "<g class=\"legend\" font-family=\"Helvetica,Arial,sans-serif\" font-size=\"11\" "
           "fill=\"#222\">\n";
    double col_width = 180.0;
    for (std::size_t k = 0; k < shown.size(); ++k) {
        double cx = f.left + static_cast<double>(k / rows_per_col) * col_width;
        double cy = ly + 16.0 * static_cast<double>(k % rows_per_col);
        Rgb c = categorical_color(k);
        svg += "<rect x=\"" + detail::fmt_px(cx) + "\" y=\"" + detail::fmt_px(cy) +
               "\" width=\"12\" height=\"12\" fill=\"rgb(" + std::to_string(c.r) + "," +
               std::to_string(c.g) + "," + std::to_string(c.b) + ")\"/>\n";
        svg += "<text x=\"" + detail::fmt_px(cx + 17) + "\" y=\"" + detail::fmt_px(cy + 10) +
               "\">" + detail::xml_escape(shown[k]) + "</text>\n";
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

namespace detail {

struct Point2 {
    double x = 0.0, y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Upper envelope (monotone chain) of the points sorted by x then y.
inline std::vector<Point2> upper_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(),
              [](const Point2& p, const Point2& q) {
                  return p.x < q.x || (p.x == q.x && p.y < q.y);
              });
    std::vector<Point2> hull;
    for (const Point2& p : pts) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0.0)
            hull.pop_back();
        hull.push_back(p);
    }
    return hull;
}

inline std::vector<Point2> lower_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(),
              [](const Point2& p, const Point2& q) {
                  return p.x < q.x || (p.x == q.x && p.y < q.y);
              });
    std::vector<Point2> hull;
    for (const Point2& p : pts) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0.0)
            hull.pop_back();
        hull.push_back(p);
    }
    return hull;
}

} // namespace detail

// ROC scatter of (FPR, TPR) per entity, colored by group, with the dashed
// upper and lower frontiers of performances achievable by combining the
// classifiers. Entities with an undefined rate are skipped with a warning.
inline std::string roc_scatter(const EntitySet& entities, const RenderOptions& opts = {},
                               std::vector<std::string>* warnings = nullptr) {
    if (entities.empty()) raise(errc::empty_entity_set, "nothing to plot");

    struct Dot {
        detail::Point2 p;
        std::string group;
    };
    std::vector<Dot> dots;
    for (const EntityRecord& e : entities.entities) {
        double neg = e.perf.tn + e.perf.fp;
        double pos = e.perf.tp + e.perf.fn;
        if (neg == 0.0 || pos == 0.0) {
            if (warnings)
                warnings->push_back("entity '" + e.id + "' has an undefined ROC rate");
            continue;
        }
        dots.push_back(Dot{{e.perf.fp / neg, e.perf.tp / pos}, e.group});
    }

    std::vector<detail::Point2> pts{{0.0, 0.0}, {1.0, 1.0}};
    for (const Dot& d : dots) pts.push_back(d.p);
    std::vector<detail::Point2> upper = detail::upper_hull(pts);
    std::vector<detail::Point2> lower = detail::lower_hull(pts);

    std::vector<std::string> groups;
    for (const Dot& d : dots) groups.push_back(d.group);
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    std::map<std::string, std::size_t> group_color;
    for (std::size_t k = 0; k < groups.size(); ++k) group_color[groups[k]] = k;

    RenderOptions local = opts;
    local.colorbar = false;
    double legend_height = 10.0 + 16.0 * static_cast<double>(groups.size());
    detail::PlotFrame f = detail::make_frame(local, legend_height);

    std::string svg = detail::svg_open(opts.width, opts.height);
    detail::append_title(svg, local, f);

    auto polyline = [&](const std::vector<detail::Point2>& path) {
        svg += "<polyline fill=\"none\" stroke=\"#555\" stroke-width=\"1.2\" "
               "stroke-dasharray=\"6 4\" points=\"";
        for (std::size_t k = 0; k < path.size(); ++k) {
            if (k > 0) svg += ' ';
            svg += detail::fmt_px(f.x(path[k].x)) + "," + detail::fmt_px(f.y(path[k].y));
        }
        svg += "\"/>\n";
    };
    svg += "<g class=\"frontiers\">\n";
    polyline(upper);
    polyline(lower);
    svg += "</g>\n<g class=\"points\">\n";
    for (const Dot& d : dots) {
        Rgb c = categorical_color(group_color.at(d.group));
        svg += "<circle cx=\"" + detail::fmt_px(f.x(d.p.x)) + "\" cy=\"" +
               detail::fmt_px(f.y(d.p.y)) + "\" r=\"3.2\" fill=\"rgb(" +
               std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b) +
               ")\" fill-opacity=\"0.85\"/>\n";
    }
    svg += "</g>\n";

    detail::append_axes(svg, f, "FPR", "TPR", false);

    double ly = f.top + f.plot_h + 50.0;
    svg += "<g class=\"legend\" font-family=\"Helvetica,Arial,sans-serif\" font-size=\"11\" "
           "fill=\"#222\">\n";
    for (std::size_t k = 0; k < groups.size(); ++k) {
        double cy = ly + 16.0 * static_cast<double>(k);
        Rgb c = categorical_color(k);
        svg += "<circle cx=\"" + detail::fmt_px(f.left + 6) + "\" cy=\"" +
               detail::fmt_px(cy + 5) + "\" r=\"4\" fill=\"rgb(" + std::to_string(c.r) + "," +
               std::to_string(c.g) + "," + std::to_string(c.b) + ")\"/>\n";
        svg += "<text x=\"" + detail::fmt_px(f.left + 16) + "\" y=\"" +
               detail::fmt_px(cy + 9) + "\">" +
               detail::xml_escape(groups[k].empty() ? "(ungrouped)" : groups[k]) +
               "</text>\n";
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

} // namespace tilekit
