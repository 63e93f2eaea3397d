#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tilekit/ranking.hpp"
#include "tilekit/tiles.hpp"
#include "test_support.hpp"

using namespace tilekit;

namespace {

EntitySet random_set(int n, std::uint64_t seed) {
    EntitySet set;
    testsup::Rng rng(seed);
    for (int k = 0; k < n; ++k)
        set.entities.push_back(
            EntityRecord{"e" + std::to_string(k), "", testsup::random_performance(rng)});
    return set;
}

// Independent per-point ordering: descending score, undefined last,
// lexicographic id inside exact ties.
std::vector<std::size_t> oracle_order(const EntitySet& set, Importance w) {
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<double> s(set.size());
    for (std::size_t e = 0; e < set.size(); ++e)
        s[e] = ranking_score(set.entities[e].perf, w);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        bool dx = is_defined(s[x]), dy = is_defined(s[y]);
        if (dx != dy) return dx;
        if (dx && s[x] != s[y]) return s[x] > s[y];
        return set.entities[x].id < set.entities[y].id;
    });
    return idx;
}

std::vector<int> oracle_ranks(const EntitySet& set, Importance w) {
    std::vector<std::size_t> order = oracle_order(set, w);
    std::vector<double> s(set.size());
    for (std::size_t e = 0; e < set.size(); ++e)
        s[e] = ranking_score(set.entities[e].perf, w);
    std::vector<int> rank(set.size(), 0);
    int current = 1;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (pos > 0) {
            double prev = s[order[pos - 1]], cur = s[order[pos]];
            bool tie = prev == cur || (!is_defined(prev) && !is_defined(cur));
            if (!tie) current = static_cast<int>(pos) + 1;
        }
        rank[order[pos]] = current;
    }
    return rank;
}

} // namespace

TEST_CASE("a perfect entity is ranked first everywhere") {
    EntitySet set;
    set.entities.push_back(EntityRecord{"neg", "", always_negative(0.3)});
    set.entities.push_back(EntityRecord{"perf", "", Performance{0.7, 0.0, 0.0, 0.3}});
    Grid g(11);
    RankCube cube = ranking_cube(set, g);
    std::size_t perf = cube.index_of("perf");
    std::size_t neg = cube.index_of("neg");
    for (int i = 0; i < g.size; ++i)
        for (int j = 0; j < g.size; ++j) {
            CHECK(cube.rank_at(i, j, perf) == 1);
            double s = ranking_score(set.entities[0].perf, Importance{g.coord(j), g.coord(i)});
            CHECK(cube.rank_at(i, j, neg) == (s == 1.0 ? 1 : 2));
        }
    // at (0,0) both score 1: tied at rank 1, entity tile picks the lex-first id
    CHECK(cube.rank_at(0, 0, neg) == 1);
    EntityTile first = entity_tile(cube, 1);
    CHECK(first.id_at(0, 0) == "neg");
    CHECK(first.id_at(g.size - 1, g.size - 1) == "perf");
}

TEST_CASE("exact ties share the minimal rank, competition style") {
    Performance p{0.5, 0.1, 0.1, 0.3};
    EntitySet set;
    set.entities.push_back(EntityRecord{"b", "", p});
    set.entities.push_back(EntityRecord{"a", "", p});
    set.entities.push_back(EntityRecord{"c", "", Performance{0.4, 0.2, 0.2, 0.2}});
    Grid g(5);
    RankCube cube = ranking_cube(set, g);
    for (int i = 0; i < g.size; ++i)
        for (int j = 0; j < g.size; ++j) {
            CHECK(cube.rank_at(i, j, 0) == 1);
            CHECK(cube.rank_at(i, j, 1) == 1);
            CHECK(cube.rank_at(i, j, 2) == 3); // 1, 1, 3
        }
    EntityTile first = entity_tile(cube, 1);
    EntityTile second = entity_tile(cube, 2);
    CHECK(first.id_at(2, 2) == "a");
    CHECK(second.id_at(2, 2) == "b");
}

TEST_CASE("undefined scores rank below every defined score") {
    EntitySet set;
    set.entities.push_back(EntityRecord{"pos", "", always_positive(0.0)}); // tpr 0/0
    set.entities.push_back(EntityRecord{"mid", "", Performance{0.5, 0.2, 0.2, 0.1}});
    Grid g(3);
    RankCube cube = ranking_cube(set, g);
    // at (1,1) the all-positive zero-prior classifier has an undefined score
    CHECK(cube.rank_at(g.size - 1, g.size - 1, 0) == 2);
    CHECK(cube.rank_at(g.size - 1, g.size - 1, 1) == 1);
}

TEST_CASE("rank tile matches an independent per-point sort") {
    EntitySet set = random_set(9, 77);
    Grid g(21);
    RankCube cube = ranking_cube(set, g);
    ScalarTile t3 = rank_tile(cube, "e3");
    testsup::Rng rng(101);
    for (int t = 0; t < 100; ++t) {
        int i = rng.pick(g.size), j = rng.pick(g.size);
        std::vector<int> expect = oracle_ranks(set, Importance{g.coord(j), g.coord(i)});
        CHECK(t3.at(i, j) == static_cast<double>(expect[3]));
        for (std::size_t e = 0; e < set.size(); ++e)
            CHECK(cube.rank_at(i, j, e) == expect[e]);
    }
    CHECK_THROWS_AS(rank_tile(cube, "nope"), Error);
}

TEST_CASE("single-entity cube is constant rank 1") {
    EntitySet one = random_set(1, 5);
    Grid g(7);
    RankCube cube = ranking_cube(one, g);
    ScalarTile t = rank_tile(cube, "e0");
    for (double v : t.values) CHECK(v == 1.0);
    EntityTile first = entity_tile(cube, 1);
    for (int i = 0; i < g.size; ++i)
        for (int j = 0; j < g.size; ++j) CHECK(first.id_at(i, j) == "e0");
    RankStats st = rank_stats(cube, "e0");
    CHECK(st.min_rank == 1);
    CHECK(st.max_rank == 1);
    CHECK(st.mean_rank == 1.0);
}

TEST_CASE("the last rank holds the per-point argmin") {
    EntitySet set = random_set(7, 91);
    Grid g(13);
    RankCube cube = ranking_cube(set, g);
    EntityTile last = entity_tile(cube, static_cast<int>(set.size()));
    for (int i = 0; i < g.size; ++i)
        for (int j = 0; j < g.size; ++j) {
            std::vector<std::size_t> order =
                oracle_order(set, Importance{g.coord(j), g.coord(i)});
            CHECK(last.id_at(i, j) == set.entities[order.back()].id);
        }
    CHECK_THROWS_AS(entity_tile(cube, 0), Error);
    CHECK_THROWS_AS(entity_tile(cube, static_cast<int>(set.size()) + 1), Error);
}

TEST_CASE("area shares partition the tile") {
    EntitySet set = random_set(6, 15);
    Grid g(17);
    RankCube cube = ranking_cube(set, g);
    EntityTile first = entity_tile(cube, 1);
    std::map<std::string, double> shares = area_share(first);
    double total = 0.0;
    for (const auto& [id, share] : shares) {
        CHECK(share > 0.0);
        total += share;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);

    EntitySet one = random_set(1, 2);
    RankCube single = ranking_cube(one, g);
    std::map<std::string, double> solo = area_share(entity_tile(single, 1));
    REQUIRE(solo.size() == 1);
    CHECK(solo.at("e0") == 1.0);
}

TEST_CASE("rank stats aggregate the rank tile") {
    EntitySet set = random_set(8, 33);
    Grid g(15);
    RankCube cube = ranking_cube(set, g);
    for (const EntityRecord& e : set.entities) {
        RankStats st = rank_stats(cube, e.id);
        ScalarTile t = rank_tile(cube, e.id);
        double sum = 0.0;
        double mn = 1e9, mx = 0.0;
        for (double v : t.values) {
            sum += v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        CHECK(st.min_rank == static_cast<int>(mn));
        CHECK(st.max_rank == static_cast<int>(mx));
        CHECK(std::abs(st.mean_rank - sum / static_cast<double>(t.values.size())) <= 1e-12);
        CHECK(st.min_rank >= 1);
        CHECK(st.mean_rank >= st.min_rank);
        CHECK(st.mean_rank <= st.max_rank);
    }
    CHECK_THROWS_AS(rank_stats(cube, "nope"), Error);
}

TEST_CASE("minimax selection and its audit trail") {
    EntitySet set = random_set(6, 57);
    Grid g(15);
    RankCube cube = ranking_cube(set, g);
    MinimaxSelection sel = select_minimax(cube);
    REQUIRE(!sel.max_rank_survivors.empty());
    for (const RankStats& st : sel.max_rank_survivors)
        CHECK(st.max_rank == sel.best_max_rank);
    CHECK(!sel.winner.empty());

    SECTION("single entity selects itself") {
        EntitySet one = random_set(1, 4);
        MinimaxSelection s1 = select_minimax(ranking_cube(one, g));
        CHECK(s1.winner == "e0");
    }

    SECTION("a strictly dominated entity never changes the winner") {
        EntitySet more = set;
        more.entities.push_back(
            EntityRecord{"zz_dominated", "", Performance{0.005, 0.87, 0.12, 0.005}});
        MinimaxSelection s2 = select_minimax(ranking_cube(more, g));
        CHECK(s2.winner == sel.winner);
    }

    SECTION("input order does not matter") {
        EntitySet shuffled = set;
        std::reverse(shuffled.entities.begin(), shuffled.entities.end());
        MinimaxSelection s3 = select_minimax(ranking_cube(shuffled, g));
        CHECK(s3.winner == sel.winner);
        REQUIRE(s3.max_rank_survivors.size() == sel.max_rank_survivors.size());
        for (std::size_t k = 0; k < s3.max_rank_survivors.size(); ++k)
            CHECK(s3.max_rank_survivors[k].entity_id ==
                  sel.max_rank_survivors[k].entity_id);
    }
}

TEST_CASE("select_at picks the per-point argmax") {
    EntitySet set = random_set(10, 71);
    Grid g(21);
    RankCube cube = ranking_cube(set, g);

    std::string at_center = select_at(cube, Importance{0.5, 0.5});
    std::string best_acc;
    double best = -1.0;
    for (const EntityRecord& e : set.entities) {
        double acc = e.perf.tn + e.perf.tp; // accuracy of a normalized performance
        if (acc > best) {
            best = acc;
            best_acc = e.id;
        }
    }
    CHECK(at_center == best_acc);

    std::string at_tpr = select_at(cube, Importance{1.0, 1.0});
    std::string best_tpr;
    best = -1.0;
    for (const EntityRecord& e : set.entities) {
        double tpr = e.perf.tp / (e.perf.tp + e.perf.fn);
        if (tpr > best) {
            best = tpr;
            best_tpr = e.id;
        }
    }
    CHECK(at_tpr == best_tpr);

    EntitySet one = random_set(1, 8);
    CHECK(select_at(ranking_cube(one, g), Importance{0.3, 0.9}) == "e0");
    CHECK_THROWS_AS(select_at(cube, Importance{1.5, 0.0}), Error);
}

TEST_CASE("subsets preserve the relative order of surviving entities") {
    EntitySet set = random_set(10, 121);
    Grid g(11);
    RankCube full = ranking_cube(set, g);
    testsup::Rng rng(900);
    for (int trial = 0; trial < 10; ++trial) {
        EntitySet subset;
        std::vector<std::size_t> kept;
        for (std::size_t e = 0; e < set.size(); ++e)
            if (rng.uniform() < 0.6) {
                subset.entities.push_back(set.entities[e]);
                kept.push_back(e);
            }
        if (subset.size() < 2) continue;
        RankCube part = ranking_cube(subset, g);
        for (int t = 0; t < 20; ++t) {
            int i = rng.pick(g.size), j = rng.pick(g.size);
            for (std::size_t x = 0; x < kept.size(); ++x)
                for (std::size_t y = x + 1; y < kept.size(); ++y) {
                    int full_cmp = full.rank_at(i, j, kept[x]) - full.rank_at(i, j, kept[y]);
                    int part_cmp = part.rank_at(i, j, x) - part.rank_at(i, j, y);
                    CHECK((full_cmp < 0) == (part_cmp < 0));
                    CHECK((full_cmp == 0) == (part_cmp == 0));
                }
        }
    }
}

TEST_CASE("rank-1 score equals the sota tile exactly") {
    EntitySet set = random_set(8, 201);
    Grid g(13);
    RankCube cube = ranking_cube(set, g);
    EntityTile first = entity_tile(cube, 1);
    ScalarTile hi = sota_tile(set, g);
    for (int i = 0; i < g.size; ++i)
        for (int j = 0; j < g.size; ++j) {
            const EntityRecord& e = set.at(first.id_at(i, j));
            CHECK(ranking_score(e.perf, Importance{g.coord(j), g.coord(i)}) == hi.at(i, j));
        }
}

TEST_CASE("cube construction is deterministic across thread counts") {
    EntitySet set = random_set(12, 313);
    Grid g(19);
    RankCube one = ranking_cube(set, g, 1);
    RankCube four = ranking_cube(set, g, 4);
    CHECK(one.ranks == four.ranks);
    CHECK_THROWS_AS(ranking_cube(EntitySet{}, g), Error);
}
