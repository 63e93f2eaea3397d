#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "tilekit/grid.hpp"
#include "tilekit/parallel.hpp"
#include "tilekit/performance.hpp"

namespace tilekit {

enum class ValueTileMethod { direct, interpolation, recovery };

// The two f-means are exact in real arithmetic regardless of which direction
// is filled first; the vertical-first order reproduces the F-beta family on
// the right edge and is the default.
enum class InterpolationOrder { vertical_first, horizontal_first };

namespace detail {

// Weighted f-mean with f(x) = 1/x between two corner scores. Exact endpoints
// bypass the blend so that a zero weight never multiplies an infinity.
inline double harmonic_blend(double w1, double v0, double v1) noexcept {
    if (w1 == 0.0) return v0;
    if (w1 == 1.0) return v1;
    return 1.0 / ((1.0 - w1) / v0 + w1 / v1);
}

// Weighted f-mean with f(x) = 1/(1-x).
inline double complement_blend(double w1, double v0, double v1) noexcept {
    if (w1 == 0.0) return v0;
    if (w1 == 1.0) return v1;
    double f = (1.0 - w1) / (1.0 - v0) + w1 / (1.0 - v1);
    return 1.0 - 1.0 / f;
}

inline ScalarTile value_tile_direct(const Performance& p, Grid g, int threads) {
    ScalarTile tile(g, "value");
    parallel_rows(g.size, threads, [&](int i) {
        double b = g.coord(i);
        for (int j = 0; j < g.size; ++j)
            tile.at(i, j) = ranking_score(p, Importance{g.coord(j), b});
    });
    return tile;
}

inline ScalarTile value_tile_interpolated(const Performance& p, Grid g, int threads,
                                          InterpolationOrder order) {
    ScoreSet corner = named_scores(p);
    ScalarTile tile(g, "value");
    if (order == InterpolationOrder::vertical_first) {
        parallel_rows(g.size, threads, [&](int i) {
            double b = g.coord(i);
            double left = harmonic_blend(b, corner.tnr, corner.npv);
            double right = harmonic_blend(b, corner.ppv, corner.tpr);
            for (int j = 0; j < g.size; ++j)
                tile.at(i, j) = complement_blend(g.coord(j), left, right);
        });
    } else {
        parallel_rows(g.size, threads, [&](int i) {
            double b = g.coord(i);
            for (int j = 0; j < g.size; ++j) {
                double a = g.coord(j);
                double bottom = complement_blend(a, corner.tnr, corner.ppv);
                double top = complement_blend(a, corner.npv, corner.tpr);
                tile.at(i, j) = harmonic_blend(b, bottom, top);
            }
        });
    }
    return tile;
}

inline ScalarTile value_tile_recovered(const Performance& p, Grid g, int threads) {
    // Sample three scores, rebuild the performance, then evaluate directly.
    // A fallback triple of interior points covers performances whose corner
    // scores are undefined.
    const std::array<std::array<Importance, 3>, 2> triples = {{
        {Importance{0.5, 0.5}, Importance{1.0, 1.0}, Importance{0.0, 0.0}},
        {Importance{0.25, 0.25}, Importance{0.75, 0.25}, Importance{0.5, 0.75}},
    }};
    for (const auto& triple : triples) {
        std::array<ScoreConstraint, 3> cs{};
        bool ok = true;
        for (int k = 0; k < 3; ++k) {
            double s = ranking_score(p, triple[static_cast<std::size_t>(k)]);
            if (!is_defined(s)) {
                ok = false;
                break;
            }
            cs[static_cast<std::size_t>(k)] =
                ScoreConstraint{triple[static_cast<std::size_t>(k)], s};
        }
        if (!ok) continue;
        try {
            Performance q = recover_performance(cs);
            return value_tile_direct(q, g, threads);
        } catch (const Error& e) {
            if (e.code() != errc::singular_system) throw;
        }
    }
    // Scores alone cannot pin down a degenerate performance (a perfect
    // classifier scores 1 everywhere regardless of its prior), so fall back
    // to the two-scores-plus-prior form of the system.
    std::array<ScoreConstraint, 2> cs{};
    const std::array<Importance, 2> pair = {Importance{1.0, 1.0}, Importance{0.0, 0.0}};
    for (int k = 0; k < 2; ++k) {
        double s = ranking_score(p, pair[static_cast<std::size_t>(k)]);
        if (!is_defined(s))
            raise(errc::singular_system, "no usable score constraints for recovery");
        cs[static_cast<std::size_t>(k)] = ScoreConstraint{pair[static_cast<std::size_t>(k)], s};
    }
    Performance q = recover_performance(cs, p.prior_pos());
    return value_tile_direct(q, g, threads);
}

} // namespace detail

inline ScalarTile value_tile(const Performance& p, Grid g,
                             ValueTileMethod method = ValueTileMethod::direct,
                             int threads = 1,
                             InterpolationOrder order = InterpolationOrder::vertical_first) {
    switch (method) {
        case ValueTileMethod::direct: return detail::value_tile_direct(p, g, threads);
        case ValueTileMethod::interpolation:
            return detail::value_tile_interpolated(p, g, threads, order);
        case ValueTileMethod::recovery: return detail::value_tile_recovered(p, g, threads);
    }
    raise(errc::invalid_argument, "unknown value tile method");
}

namespace detail {

template <typename Better>
inline ScalarTile extremum_tile(const EntitySet& entities, Grid g, int threads,
                                std::string kind, Better better) {
    if (entities.empty()) raise(errc::empty_entity_set, "no entities to aggregate");
    ScalarTile tile(g, std::move(kind));
    parallel_rows(g.size, threads, [&](int i) {
        double b = g.coord(i);
        for (int j = 0; j < g.size; ++j) {
            Importance w{g.coord(j), b};
            double best = kUndefined;
            for (const EntityRecord& e : entities.entities) {
                double s = ranking_score(e.perf, w);
                if (!is_defined(s)) continue; // undefined entries never poison the aggregate
                if (!is_defined(best) || better(s, best)) best = s;
            }
            tile.at(i, j) = best;
        }
    });
    return tile;
}

} // namespace detail

// Pointwise minimum of the entity value tiles: the score of whoever is ranked
// last at each point.
inline ScalarTile baseline_tile(const EntitySet& entities, Grid g, int threads = 1) {
    return detail::extremum_tile(entities, g, threads, "baseline",
                                 [](double s, double best) { return s < best; });
}

// Pointwise maximum: the score of whoever is ranked first at each point.
inline ScalarTile sota_tile(const EntitySet& entities, Grid g, int threads = 1) {
    return detail::extremum_tile(entities, g, threads, "sota",
                                 [](double s, double best) { return s > best; });
}

inline ScalarTile noskill_tile(double prior_pos, Grid g, int threads = 1) {
    if (!(prior_pos >= 0.0 && prior_pos <= 1.0))
        raise(errc::invalid_argument, "prior must lie in [0,1]");
    ScalarTile tile(g, "noskill");
    parallel_rows(g.size, threads, [&](int i) {
        double b = g.coord(i);
        for (int j = 0; j < g.size; ++j)
            tile.at(i, j) = noskill_score(prior_pos, Importance{g.coord(j), b});
    });
    return tile;
}

// (sota - noskill) / (1 - noskill): how far the state of the art sits above
// chance. Undefined where no-skill already achieves 1.
inline ScalarTile relative_skill_tile(const ScalarTile& sota, const ScalarTile& noskill) {
    require_same_grid(sota.grid, noskill.grid);
    ScalarTile tile(sota.grid, "skill");
    for (std::size_t k = 0; k < tile.values.size(); ++k) {
        double s = sota.values[k];
        double n = noskill.values[k];
        if (!is_defined(s) || !is_defined(n) || n == 1.0) continue;
        tile.values[k] = (s - n) / (1.0 - n);
    }
    return tile;
}

// True where chance-level performance beats (or outlives) the given values.
inline BoolTile hatch_mask(const ScalarTile& value, const ScalarTile& noskill) {
    require_same_grid(value.grid, noskill.grid);
    BoolTile mask(value.grid, "hatch");
    for (std::size_t k = 0; k < mask.mask.size(); ++k) {
        double v = value.values[k];
        double n = noskill.values[k];
        if (!is_defined(n)) continue;
        mask.mask[k] = (!is_defined(v) || n > v) ? 1 : 0;
    }
    return mask;
}

} // namespace tilekit
