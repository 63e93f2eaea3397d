#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tilekit/grid.hpp"
#include "tilekit/parallel.hpp"
#include "tilekit/performance.hpp"
#include "tilekit/ranking.hpp"

namespace tilekit {

enum class CorrCoef { pearson, spearman, kendall };

inline const char* corr_coef_name(CorrCoef c) {
    switch (c) {
        case CorrCoef::pearson: return "pearson";
        case CorrCoef::spearman: return "spearman";
        case CorrCoef::kendall: return "kendall";
    }
    return "unknown";
}

// External per-entity reference values (e.g. a community benchmark score).
using ReferenceScores = std::map<std::string, double>;

namespace detail {

inline void check_pair_sizes(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        raise(errc::invalid_argument, "correlation inputs differ in length");
}

} // namespace detail

// Product-moment correlation. Degenerate input (fewer than two points or a
// constant vector) yields NaN. Exactly linear data short-circuits to +/-1 so
// that self-correlation is 1 without a rounding wobble.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    detail::check_pair_sizes(x, y);
    const std::size_t n = x.size();
    if (n < 2) return kUndefined;
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double dx = x[k] - mx, dy = y[k] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return kUndefined;
    if (sxy * sxy == sxx * syy) return sxy > 0.0 ? 1.0 : -1.0;
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

// Average ranks (1-based); tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t p, std::uint32_t q) { return x[p] < x[q]; });
    std::vector<double> rank(n, 0.0);
    std::size_t k = 0;
    while (k < n) {
        std::size_t e = k;
        while (e + 1 < n && x[order[e + 1]] == x[order[k]]) ++e;
        double avg = 0.5 * (static_cast<double>(k) + static_cast<double>(e)) + 1.0;
        for (std::size_t t = k; t <= e; ++t) rank[order[t]] = avg;
        k = e + 1;
    }
    return rank;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
    detail::check_pair_sizes(x, y);
    if (x.size() < 2) return kUndefined;
    std::vector<double> rx = average_ranks(x);
    std::vector<double> ry = average_ranks(y);
    return pearson(rx, ry);
}

// Kendall's tau-b: (C - D) / sqrt((n0 - n1)(n0 - n2)) with n1/n2 the pair
// counts tied in x/y. O(n^2); entity sets are small.
inline double kendall(std::span<const double> x, std::span<const double> y) {
    detail::check_pair_sizes(x, y);
    const std::size_t n = x.size();
    if (n < 2) return kUndefined;
    long long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0.0) ++tied_x;
            if (dy == 0.0) ++tied_y;
            if (dx == 0.0 || dy == 0.0) continue;
            if ((dx > 0.0) == (dy > 0.0))
                ++concordant;
            else
                ++discordant;
        }
    }
    double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    double denom_x = n0 - static_cast<double>(tied_x);
    double denom_y = n0 - static_cast<double>(tied_y);
    if (denom_x <= 0.0 || denom_y <= 0.0) return kUndefined;
    double tau = (static_cast<double>(concordant) - static_cast<double>(discordant)) /
                 std::sqrt(denom_x * denom_y);
    return std::clamp(tau, -1.0, 1.0);
}

inline double correlate(CorrCoef coef, std::span<const double> x,
                        std::span<const double> y) {
    switch (coef) {
        case CorrCoef::pearson: return pearson(x, y);
        case CorrCoef::spearman: return spearman(x, y);
        case CorrCoef::kendall: return kendall(x, y);
    }
    raise(errc::invalid_argument, "unknown correlation coefficient");
}

namespace detail {

// Correlation between a fixed reference vector and the per-performance
// ranking scores at one importance point; pairs with an undefined score are
// deleted pointwise.
inline double point_correlation(CorrCoef coef, std::span<const double> ref,
                                std::span<const Performance> perfs, Importance w,
                                std::vector<double>& bx, std::vector<double>& by) {
    bx.clear();
    by.clear();
    for (std::size_t k = 0; k < perfs.size(); ++k) {
        if (!is_defined(ref[k])) continue;
        double s = ranking_score(perfs[k], w);
        if (!is_defined(s)) continue;
        bx.push_back(ref[k]);
        by.push_back(s);
    }
    if (bx.size() < 2) return kUndefined;
    return correlate(coef, bx, by);
}

} // namespace detail

// Correlation Tile: entry (i, j) correlates the reference scores with the
// ranking scores at (a_j, b_i) across entities holding a reference value.
inline ScalarTile correlation_tile(const EntitySet& entities, const ReferenceScores& ref,
                                   Grid g, CorrCoef coef = CorrCoef::pearson,
                                   int threads = 1) {
    std::vector<double> refv;
    std::vector<Performance> perfs;
    for (const EntityRecord& e : entities.entities) {
        auto it = ref.find(e.id);
        if (it == ref.end()) continue;
        refv.push_back(it->second);
        perfs.push_back(e.perf);
    }
    if (refv.size() < 3)
        raise(errc::too_few_entities,
              "correlation needs at least 3 entities with reference scores");

    ScalarTile tile(g, "correlation");
    tile.meta["coefficient"] = corr_coef_name(coef);
    parallel_rows(g.size, threads, [&](int i) {
        double b = g.coord(i);
        std::vector<double> bx, by;
        for (int j = 0; j < g.size; ++j)
            tile.at(i, j) =
                detail::point_correlation(coef, refv, perfs, Importance{g.coord(j), b}, bx, by);
    });
    return tile;
}

struct ZoneReport {
    double threshold = 0.85;
    bool empty_zone = false;
    std::size_t zone_cells = 0;
    double zone_fraction = 0.0; // of all grid cells
    std::map<std::string, double> shares;
};

// Within the zone where the correlation clears the threshold, how often each
// entity is the one ranked first.
inline ZoneReport zone_analysis(const ScalarTile& corr, const EntityTile& rank1,
                                double threshold) {
    require_same_grid(corr.grid, rank1.grid);
    ZoneReport report;
    report.threshold = threshold;
    std::vector<std::size_t> counts(rank1.entity_ids.size(), 0);
    for (std::size_t k = 0; k < corr.values.size(); ++k) {
        double c = corr.values[k];
        if (!is_defined(c) || c < threshold) continue;
        ++report.zone_cells;
        ++counts[rank1.cells[k]];
    }
    if (report.zone_cells == 0) {
        report.empty_zone = true;
        return report;
    }
    report.zone_fraction =
        static_cast<double>(report.zone_cells) / static_cast<double>(corr.values.size());
    for (std::size_t e = 0; e < counts.size(); ++e)
        if (counts[e] > 0)
            report.shares[rank1.entity_ids[e]] =
                static_cast<double>(counts[e]) / static_cast<double>(report.zone_cells);
    return report;
}

struct PerformanceDistribution {
    enum class Kind { uniform_all, uniform_fixed_prior, empirical };
    Kind kind = Kind::uniform_all;
    double prior_pos = 0.5;              // uniform_fixed_prior
    std::vector<Performance> performances; // empirical
    int sample_count = 1000;
    std::uint64_t seed = 0;
};

namespace detail {

// splitmix64: tiny, seedable, and identical on every platform. Each grid
// point derives its own stream from (seed, i, j), so sampling is independent
// of the parallel schedule.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t s) : state(s) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform on [0, 1)
    double next_double() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    SplitMix64 s(seed);
    std::uint64_t h = s.next() ^ (i * 0xd6e8feb86659fd93ULL);
    SplitMix64 t(h);
    return t.next() ^ (j * 0xa5a5a5a5a5a5a5a5ULL);
}

inline Performance sample_performance(const PerformanceDistribution& dist,
                                      SplitMix64& rng) {
    if (dist.kind == PerformanceDistribution::Kind::uniform_all) {
        // flat Dirichlet over the 4-outcome simplex via normalized exponentials
        double e0 = -std::log(1.0 - rng.next_double());
        double e1 = -std::log(1.0 - rng.next_double());
        double e2 = -std::log(1.0 - rng.next_double());
        double e3 = -std::log(1.0 - rng.next_double());
        double s = e0 + e1 + e2 + e3;
        return Performance{e0 / s, e1 / s, e2 / s, e3 / s};
    }
    // uniform over the fixed-prior slice: (tp, fp) uniform on its rectangle
    double pi = dist.prior_pos;
    double tp = rng.next_double() * pi;
    double fp = rng.next_double() * (1.0 - pi);
    return Performance{(1.0 - pi) - fp, fp, pi - tp, tp};
}

} // namespace detail

// Behavior-of-scores tile: correlation between one chosen score and every
// canonical ranking score, estimated over a performance distribution.
inline ScalarTile behavior_tile(Importance score_point, const PerformanceDistribution& dist,
                                Grid g, CorrCoef coef = CorrCoef::spearman,
                                int threads = 1) {
    const bool empirical = dist.kind == PerformanceDistribution::Kind::empirical;
    if (empirical && dist.performances.size() < 2)
        raise(errc::too_few_samples, "empirical distribution needs >= 2 performances");
    if (!empirical && dist.sample_count < 100)
        raise(errc::too_few_samples, "Monte-Carlo estimation needs >= 100 samples");

    ScalarTile tile(g, "behavior");
    tile.meta["coefficient"] = corr_coef_name(coef);

    if (empirical) {
        std::vector<double> refv(dist.performances.size());
        for (std::size_t k = 0; k < dist.performances.size(); ++k)
            refv[k] = ranking_score(dist.performances[k], score_point);
        parallel_rows(g.size, threads, [&](int i) {
            double b = g.coord(i);
            std::vector<double> bx, by;
            for (int j = 0; j < g.size; ++j)
                tile.at(i, j) = detail::point_correlation(
                    coef, refv, dist.performances, Importance{g.coord(j), b}, bx, by);
        });
        return tile;
    }

    const std::size_t m = static_cast<std::size_t>(dist.sample_count);
    parallel_rows(g.size, threads, [&](int i) {
        double b = g.coord(i);
        std::vector<Performance> sample(m);
        std::vector<double> refv(m);
        std::vector<double> bx, by;
        for (int j = 0; j < g.size; ++j) {
            detail::SplitMix64 rng(detail::mix_seed(dist.seed, static_cast<std::uint64_t>(i),
                                                    static_cast<std::uint64_t>(j)));
            for (std::size_t k = 0; k < m; ++k) {
                sample[k] = detail::sample_performance(dist, rng);
                refv[k] = ranking_score(sample[k], score_point);
            }
            tile.at(i, j) = detail::point_correlation(
                coef, refv, sample, Importance{g.coord(j), b}, bx, by);
        }
    });
    return tile;
}

} // namespace tilekit
