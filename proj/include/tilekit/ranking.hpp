#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "tilekit/grid.hpp"
#include "tilekit/parallel.hpp"
#include "tilekit/performance.hpp"

namespace tilekit {

// Competition ranking of every entity at every grid point. Entities are
// ordered by descending score; exact value equality forms a tie group sharing
// the minimal rank, and undefined scores sort below every defined one.
struct RankCube {
    Grid grid;
    std::vector<std::string> entity_ids;
    std::vector<std::uint16_t> ranks; // (i * G + j) * N + e

    std::size_t entity_count() const noexcept { return entity_ids.size(); }

    int rank_at(int i, int j, std::size_t entity_index) const noexcept {
        std::size_t point = (static_cast<std::size_t>(i) * grid.size + j);
        return ranks[point * entity_ids.size() + entity_index];
    }

    std::size_t index_of(std::string_view id) const {
        for (std::size_t e = 0; e < entity_ids.size(); ++e)
            if (entity_ids[e] == id) return e;
        raise(errc::unknown_entity, std::string(id));
    }
};

// Entity occupying one requested rank at every grid point; cells index into
// entity_ids.
struct EntityTile {
    Grid grid;
    int rank = 1;
    std::vector<std::string> entity_ids;
    std::vector<std::uint16_t> cells;

    const std::string& id_at(int i, int j) const noexcept {
        return entity_ids[cells[static_cast<std::size_t>(i) * grid.size + j]];
    }
};

struct RankStats {
    std::string entity_id;
    int min_rank = 0;
    int max_rank = 0;
    double mean_rank = 0.0;
};

namespace detail {

// Lexicographic position of each id; used as the deterministic tie-break key.
inline std::vector<std::uint32_t> lex_keys(const std::vector<std::string>& ids) {
    std::vector<std::uint32_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t x, std::uint32_t y) { return ids[x] < ids[y]; });
    std::vector<std::uint32_t> key(ids.size());
    for (std::uint32_t pos = 0; pos < order.size(); ++pos) key[order[pos]] = pos;
    return key;
}

inline bool same_score(double x, double y) noexcept {
    return x == y || (!is_defined(x) && !is_defined(y));
}

// Sorted-order comparator: higher score first, undefined last, lexicographic
// id within exact ties. A total order independent of the entity set, which is
// what makes rankings stable under adding or removing entities.
inline bool score_before(double sx, std::uint32_t kx, double sy, std::uint32_t ky) noexcept {
    bool dx = is_defined(sx), dy = is_defined(sy);
    if (dx != dy) return dx;
    if (dx && sx != sy) return sx > sy;
    return kx < ky;
}

} // namespace detail

inline RankCube ranking_cube(const EntitySet& entities, Grid g, int threads = 1) {
    if (entities.empty()) raise(errc::empty_entity_set, "no entities to rank");
    const std::size_t n = entities.size();
    if (n > 65535) raise(errc::invalid_argument, "entity sets above 65535 are unsupported");

    RankCube cube;
    cube.grid = g;
    cube.entity_ids.reserve(n);
    for (const EntityRecord& e : entities.entities) cube.entity_ids.push_back(e.id);
    cube.ranks.assign(g.cells() * n, 0);

    std::vector<std::uint32_t> lex = detail::lex_keys(cube.entity_ids);
    std::vector<Performance> perfs(n);
    for (std::size_t e = 0; e < n; ++e) perfs[e] = entities.entities[e].perf;

    parallel_rows(g.size, threads, [&](int i) {
        double b = g.coord(i);
        std::vector<double> score(n);
        std::vector<std::uint32_t> order(n);
        for (int j = 0; j < g.size; ++j) {
            Importance w{g.coord(j), b};
            for (std::size_t e = 0; e < n; ++e) score[e] = ranking_score(perfs[e], w);
            std::iota(order.begin(), order.end(), 0u);
            std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
                return detail::score_before(score[x], lex[x], score[y], lex[y]);
            });
            std::size_t base = (static_cast<std::size_t>(i) * g.size + j) * n;
            int rank = 1;
            for (std::size_t pos = 0; pos < n; ++pos) {
                if (pos > 0 && !detail::same_score(score[order[pos]], score[order[pos - 1]]))
                    rank = static_cast<int>(pos) + 1;
                cube.ranks[base + order[pos]] = static_cast<std::uint16_t>(rank);
            }
        }
    });
    return cube;
}

inline ScalarTile rank_tile(const RankCube& cube, std::string_view entity_id) {
    std::size_t e = cube.index_of(entity_id);
    ScalarTile tile(cube.grid, "ranking");
    tile.meta["entity_id"] = std::string(entity_id);
    const std::size_t n = cube.entity_count();
    for (std::size_t point = 0; point < cube.grid.cells(); ++point)
        tile.values[point] = static_cast<double>(cube.ranks[point * n + e]);
    return tile;
}

// The entity holding rank r at each point. Within a tie group the r-th slot
// goes to the (r - group_rank)-th member in lexicographic id order, which is
// exactly the r-th entity under the (rank, lex) order.
inline EntityTile entity_tile(const RankCube& cube, int r, int threads = 1) {
    const std::size_t n = cube.entity_count();
    if (r < 1 || static_cast<std::size_t>(r) > n)
        raise(errc::rank_out_of_range, "rank " + std::to_string(r));

    EntityTile tile;
    tile.grid = cube.grid;
    tile.rank = r;
    tile.entity_ids = cube.entity_ids;
    tile.cells.assign(cube.grid.cells(), 0);

    std::vector<std::uint32_t> lex = detail::lex_keys(cube.entity_ids);
    parallel_rows(cube.grid.size, threads, [&](int i) {
        std::vector<std::uint32_t> idx(n);
        for (int j = 0; j < cube.grid.size; ++j) {
            std::size_t point = static_cast<std::size_t>(i) * cube.grid.size + j;
            const std::uint16_t* pr = &cube.ranks[point * n];
            std::iota(idx.begin(), idx.end(), 0u);
            auto nth = idx.begin() + (r - 1);
            std::nth_element(idx.begin(), nth, idx.end(),
                             [&](std::uint32_t x, std::uint32_t y) {
                                 if (pr[x] != pr[y]) return pr[x] < pr[y];
                                 return lex[x] < lex[y];
                             });
            tile.cells[point] = static_cast<std::uint16_t>(*nth);
        }
    });
    return tile;
}

// Fraction of grid cells held by each entity appearing in the tile.
inline std::map<std::string, double> area_share(const EntityTile& tile) {
    std::vector<std::size_t> counts(tile.entity_ids.size(), 0);
    for (std::uint16_t c : tile.cells) ++counts[c];
    std::map<std::string, double> shares;
    double total = static_cast<double>(tile.cells.size());
    for (std::size_t e = 0; e < counts.size(); ++e)
        if (counts[e] > 0)
            shares[tile.entity_ids[e]] = static_cast<double>(counts[e]) / total;
    return shares;
}

inline RankStats rank_stats(const RankCube& cube, std::string_view entity_id) {
    std::size_t e = cube.index_of(entity_id);
    const std::size_t n = cube.entity_count();
    RankStats st;
    st.entity_id = std::string(entity_id);
    int mn = static_cast<int>(n) + 1, mx = 0;
    std::uint64_t sum = 0;
    for (std::size_t point = 0; point < cube.grid.cells(); ++point) {
        int rk = cube.ranks[point * n + e];
        mn = std::min(mn, rk);
        mx = std::max(mx, rk);
        sum += static_cast<std::uint64_t>(rk);
    }
    st.min_rank = mn;
    st.max_rank = mx;
    st.mean_rank = static_cast<double>(sum) / static_cast<double>(cube.grid.cells());
    return st;
}

inline std::vector<RankStats> all_rank_stats(const RankCube& cube) {
    const std::size_t n = cube.entity_count();
    std::vector<int> mn(n, static_cast<int>(n) + 1), mx(n, 0);
    std::vector<std::uint64_t> sum(n, 0);
    for (std::size_t point = 0; point < cube.grid.cells(); ++point) {
        const std::uint16_t* pr = &cube.ranks[point * n];
        for (std::size_t e = 0; e < n; ++e) {
            int rk = pr[e];
            if (rk < mn[e]) mn[e] = rk;
            if (rk > mx[e]) mx[e] = rk;
            sum[e] += static_cast<std::uint64_t>(rk);
        }
    }
    std::vector<RankStats> stats(n);
    for (std::size_t e = 0; e < n; ++e) {
        stats[e] = RankStats{cube.entity_ids[e], mn[e], mx[e],
                             static_cast<double>(sum[e]) /
                                 static_cast<double>(cube.grid.cells())};
    }
    return stats;
}

struct MinimaxSelection {
    std::string winner;
    int best_max_rank = 0;
    std::vector<RankStats> max_rank_survivors;  // stage 1: minimal max rank
    std::vector<RankStats> mean_rank_survivors; // stage 2: minimal mean among them
};

// Scenario-4 fallback when nothing is known about the importance: minimize
// the worst rank, break ties by mean rank, then by id.
inline MinimaxSelection select_minimax(const RankCube& cube) {
    if (cube.entity_ids.empty()) raise(errc::empty_entity_set, "empty cube");
    std::vector<RankStats> stats = all_rank_stats(cube);

    MinimaxSelection sel;
    sel.best_max_rank = static_cast<int>(cube.entity_count()) + 1;
    for (const RankStats& st : stats) sel.best_max_rank = std::min(sel.best_max_rank, st.max_rank);
    for (const RankStats& st : stats)
        if (st.max_rank == sel.best_max_rank) sel.max_rank_survivors.push_back(st);
    std::sort(sel.max_rank_survivors.begin(), sel.max_rank_survivors.end(),
              [](const RankStats& x, const RankStats& y) { return x.entity_id < y.entity_id; });

    double best_mean = sel.max_rank_survivors.front().mean_rank;
    for (const RankStats& st : sel.max_rank_survivors)
        best_mean = std::min(best_mean, st.mean_rank);
    for (const RankStats& st : sel.max_rank_survivors)
        if (st.mean_rank == best_mean) sel.mean_rank_survivors.push_back(st);

    sel.winner = sel.mean_rank_survivors.front().entity_id; // already lex sorted
    return sel;
}

// Scenario-4 choice for known importance: whoever is ranked first at the
// nearest grid point.
inline std::string select_at(const RankCube& cube, Importance w) {
    if (!w.is_valid()) raise(errc::invalid_argument, "importance outside [0,1]^2");
    int j = cube.grid.snap(w.a);
    int i = cube.grid.snap(w.b);
    const std::size_t n = cube.entity_count();
    std::vector<std::uint32_t> lex = detail::lex_keys(cube.entity_ids);
    std::size_t point = static_cast<std::size_t>(i) * cube.grid.size + j;
    const std::uint16_t* pr = &cube.ranks[point * n];
    std::size_t pick = 0;
    for (std::size_t e = 1; e < n; ++e)
        if (pr[e] < pr[pick] || (pr[e] == pr[pick] && lex[e] < lex[pick])) pick = e;
    return cube.entity_ids[pick];
}

} // namespace tilekit
