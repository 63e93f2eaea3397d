#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "tilekit/grid.hpp"

namespace tilekit {

struct ContourLine {
    double level = 0.0;
    std::vector<std::array<double, 2>> points; // (a, b)
};

namespace detail {

using ContourPoint = std::array<double, 2>;
using ContourSegment = std::array<ContourPoint, 2>;

inline double edge_cross(double lo_coord, double hi_coord, double v0, double v1,
                         double level) noexcept {
    double t = (level - v0) / (v1 - v0);
    return lo_coord + t * (hi_coord - lo_coord);
}

// Joins raw marching-squares segments into polylines. Shared cell edges
// produce bitwise-identical endpoints, so exact matching suffices.
inline std::vector<std::vector<ContourPoint>> stitch_segments(
    const std::vector<ContourSegment>& segments) {
    std::map<std::pair<double, double>, std::vector<std::size_t>> incident;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        incident[{segments[s][0][0], segments[s][0][1]}].push_back(s);
        incident[{segments[s][1][0], segments[s][1][1]}].push_back(s);
    }
    std::vector<bool> used(segments.size(), false);
    std::vector<std::vector<ContourPoint>> chains;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        used[s] = true;
        std::vector<ContourPoint> chain{segments[s][0], segments[s][1]};
        for (int dir = 0; dir < 2; ++dir) {
            bool extended = true;
            while (extended) {
                extended = false;
                ContourPoint tip = dir == 0 ? chain.back() : chain.front();
                auto it = incident.find({tip[0], tip[1]});
                if (it == incident.end()) break;
                for (std::size_t cand : it->second) {
                    if (used[cand]) continue;
                    const ContourSegment& seg = segments[cand];
                    ContourPoint next = seg[0] == tip ? seg[1] : seg[0];
                    if (!(seg[0] == tip) && !(seg[1] == tip)) continue;
                    used[cand] = true;
                    if (dir == 0)
                        chain.push_back(next);
                    else
                        chain.insert(chain.begin(), next);
                    extended = true;
                    break;
                }
            }
        }
        chains.push_back(std::move(chain));
    }
    return chains;
}

} // namespace detail

// Marching squares over the tile; cells touching an undefined corner are
// skipped. Every vertex lies on a grid-cell edge at the linearly interpolated
// level crossing.
inline std::vector<ContourLine> iso_contours(const ScalarTile& tile,
                                             std::span<const double> levels) {
    const Grid& g = tile.grid;
    std::vector<ContourLine> result;
    for (double level : levels) {
        if (!std::isfinite(level)) continue;
        std::vector<detail::ContourSegment> segments;
        for (int i = 0; i + 1 < g.size; ++i) {
            double b0 = g.coord(i), b1 = g.coord(i + 1);
            for (int j = 0; j + 1 < g.size; ++j) {
                double a0 = g.coord(j), a1 = g.coord(j + 1);
                double vbl = tile.at(i, j), vbr = tile.at(i, j + 1);
                double vtl = tile.at(i + 1, j), vtr = tile.at(i + 1, j + 1);
                if (!is_defined(vbl) || !is_defined(vbr) || !is_defined(vtl) ||
                    !is_defined(vtr))
                    continue;
                int c = (vbl >= level ? 1 : 0) | (vbr >= level ? 2 : 0) |
                        (vtr >= level ? 4 : 0) | (vtl >= level ? 8 : 0);
                if (c == 0 || c == 15) continue;

                auto bottom = [&] {
                    return detail::ContourPoint{
                        detail::edge_cross(a0, a1, vbl, vbr, level), b0};
                };
                auto top = [&] {
                    return detail::ContourPoint{
                        detail::edge_cross(a0, a1, vtl, vtr, level), b1};
                };
                auto left = [&] {
                    return detail::ContourPoint{
                        a0, detail::edge_cross(b0, b1, vbl, vtl, level)};
                };
                auto right = [&] {
                    return detail::ContourPoint{
                        a1, detail::edge_cross(b0, b1, vbr, vtr, level)};
                };
                auto emit = [&](detail::ContourPoint p, detail::ContourPoint q) {
                    if (p == q) return; // zero-length
                    segments.push_back({p, q});
                };

                switch (c) {
                    case 1: emit(left(), bottom()); break;
                    case 2: emit(bottom(), right()); break;
                    case 3: emit(left(), right()); break;
                    case 4: emit(top(), right()); break;
                    case 6: emit(bottom(), top()); break;
                    case 7: emit(left(), top()); break;
                    case 8: emit(left(), top()); break;
                    case 9: emit(bottom(), top()); break;
                    case 11: emit(top(), right()); break;
                    case 12: emit(left(), right()); break;
                    case 13: emit(bottom(), right()); break;
                    case 14: emit(left(), bottom()); break;
                    case 5: // saddle: disambiguate with the cell-center mean
                    case 10: {
                        double center = 0.25 * (vbl + vbr + vtl + vtr);
                        bool high = center >= level;
                        bool diag_bl = (c == 5);
                        if (diag_bl == high) {
                            emit(left(), top());
                            emit(bottom(), right());
                        } else {
                            emit(left(), bottom());
                            emit(top(), right());
                        }
                        break;
                    }
                    default: break;
                }
            }
        }
        for (auto& chain : detail::stitch_segments(segments))
            result.push_back(ContourLine{level, std::move(chain)});
    }
    return result;
}

} // namespace tilekit
