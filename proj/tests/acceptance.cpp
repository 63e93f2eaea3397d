// Acceptance suite: end-to-end checks of the published analysis targets on
// the 74-model performance table plus the numerical contracts. Prints one
// PASS/FAIL line per criterion and exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tilekit/tilekit.hpp"
#include "test_support.hpp"

using namespace tilekit;
namespace fs = std::filesystem;

namespace {

constexpr double kPrior = 0.124227;

int g_failures = 0;

void report(int criterion, const std::string& what, bool pass, const std::string& detail) {
    std::printf("%s  criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion,
                what.c_str(), detail.empty() ? "" : " | ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct ShareTarget {
    const char* id;
    double share;
};
constexpr ShareTarget kShareTargets[] = {
    {"SETR cityscapes", 0.4697},
    {"Mask2Former cityscapes", 0.2985},
    {"ISANet voc2012", 0.2052},
    {"DeepLabV3+ voc2012", 0.0266},
};

// criteria 1-4 share one full-resolution cube
void run_table_criteria(const EntitySet& entities, int threads) {
    auto start = std::chrono::steady_clock::now();
    Grid g(2001);
    RankCube cube = ranking_cube(entities, g, threads);
    EntityTile first = entity_tile(cube, 1, threads);
    std::map<std::string, double> shares = area_share(first);
    double elapsed = seconds_since(start);

    // 1: the rank-1 entity set, exactly
    {
        std::set<std::string> got;
        for (const auto& [id, share] : shares) got.insert(id);
        std::set<std::string> expect;
        for (const ShareTarget& t : kShareTargets) expect.insert(t.id);
        std::string listing;
        for (const std::string& id : got) listing += id + "; ";
        bool pass = got == expect && elapsed < 120.0;
        report(1, "rank-1 entity set at G=2001",
               pass, "{" + listing + "} in " + fmt(elapsed) + " s");
    }

    // 2: rank-1 area shares at both grid resolutions
    {
        bool pass = true;
        std::string detail;
        for (const ShareTarget& t : kShareTargets) {
            double got = shares.count(t.id) ? shares.at(t.id) : 0.0;
            double delta_pp = std::abs(got - t.share) * 100.0;
            if (delta_pp > 1.0) pass = false;
            detail += std::string(t.id) + " " + fmt(got * 100.0) + "% (|d|=" +
                      fmt(delta_pp) + "pp); ";
        }
        RankCube cube501 = ranking_cube(entities, Grid(501), threads);
        std::map<std::string, double> s501 = area_share(entity_tile(cube501, 1, threads));
        for (const ShareTarget& t : kShareTargets) {
            double got = s501.count(t.id) ? s501.at(t.id) : 0.0;
            if (std::abs(got - t.share) * 100.0 > 1.5) pass = false;
        }
        report(2, "rank-1 area shares within 1.0pp (G=2001) and 1.5pp (G=501)", pass,
               detail);
    }

    // 3: min-max selection
    {
        MinimaxSelection sel = select_minimax(cube);
        std::set<std::string> survivors;
        for (const RankStats& st : sel.max_rank_survivors) survivors.insert(st.entity_id);
        bool pass = survivors ==
                        std::set<std::string>{"SegFormer cityscapes", "SETR cityscapes"} &&
                    sel.best_max_rank == 14 && sel.winner == "SETR cityscapes";
        std::string detail = "winner " + sel.winner + ", max rank " +
                             std::to_string(sel.best_max_rank);
        for (const RankStats& st : sel.max_rank_survivors) {
            double target = st.entity_id == "SETR cityscapes" ? 4.0495 : 6.8558;
            if (std::abs(st.mean_rank - target) > 0.05) pass = false;
            detail += "; " + st.entity_id + " mean " + fmt(st.mean_rank);
        }
        report(3, "min-max survivors {SegFormer, SETR}, winner SETR, means within 0.05",
               pass, detail);
    }

    // 4: the SETR ranking tile spans ranks 1 through 14
    {
        RankStats st = rank_stats(cube, "SETR cityscapes");
        bool pass = st.min_rank == 1 && st.max_rank == 14;
        report(4, "SETR ranking tile spans ranks 1..14", pass,
               "min " + std::to_string(st.min_rank) + ", max " +
                   std::to_string(st.max_rank));
    }
}

void criterion5_method_equivalence(int threads) {
    auto start = std::chrono::steady_clock::now();
    testsup::Rng rng(2024);
    Grid g(101);
    double worst_interp = 0.0, worst_recov = 0.0;
    for (int t = 0; t < 20; ++t) {
        Performance p = testsup::random_performance(rng);
        ScalarTile direct = value_tile(p, g, ValueTileMethod::direct, threads);
        ScalarTile interp = value_tile(p, g, ValueTileMethod::interpolation, threads);
        ScalarTile recov = value_tile(p, g, ValueTileMethod::recovery, threads);
        for (std::size_t k = 0; k < direct.values.size(); ++k) {
            if (is_defined(direct.values[k]) && is_defined(interp.values[k]))
                worst_interp =
                    std::max(worst_interp, std::abs(direct.values[k] - interp.values[k]));
            if (is_defined(direct.values[k]) && is_defined(recov.values[k]))
                worst_recov =
                    std::max(worst_recov, std::abs(direct.values[k] - recov.values[k]));
        }
    }
    double elapsed = seconds_since(start);
    bool pass = worst_interp <= 1e-9 && worst_recov <= 1e-9 && elapsed < 10.0;
    report(5, "construction methods agree to 1e-9 at G=101", pass,
           "max |direct-interpolation| " + fmt(worst_interp) + ", max |direct-recovery| " +
               fmt(worst_recov) + ", " + fmt(elapsed) + " s");
}

void criterion6_corner_identities(const EntitySet& entities) {
    double worst = 0.0;
    bool pass = true;
    for (const EntityRecord& e : entities.entities) {
        ScalarTile t = value_tile(e.perf, Grid(3)); // corners and center
        const Performance& p = e.perf;
        struct {
            int i, j;
            double expect;
        } probes[] = {
            {2, 2, p.tp / (p.tp + p.fn)},                                        // TPR
            {0, 0, p.tn / (p.tn + p.fp)},                                        // TNR
            {2, 0, p.tn / (p.tn + p.fn)},                                        // NPV
            {0, 2, p.tp / (p.tp + p.fp)},                                        // PPV
            {1, 1, (0.5 * p.tp + 0.5 * p.tn) /
                       (0.5 * p.tp + 0.5 * p.fn + 0.5 * p.fp + 0.5 * p.tn)},     // accuracy
        };
        for (const auto& probe : probes) {
            double got = t.at(probe.i, probe.j);
            double delta = std::abs(got - probe.expect);
            worst = std::max(worst, delta);
            if (!(got == probe.expect || delta <= 1e-15)) pass = false;
        }
    }
    report(6, "canonical corner/center identities across all 74 entities", pass,
           "max |delta| " + fmt(worst));
}

void criterion7_noskill_oracle() {
    testsup::Rng rng(77);
    double worst = 0.0;
    bool pass = true;
    for (int t = 0; t < 100; ++t) {
        double pi = rng.uniform(0.001, 0.999);
        Importance w{rng.uniform(), rng.uniform()};
        double fast = noskill_score(pi, w);
        double brute = kUndefined;
        for (int k = 0; k <= 10000; ++k) {
            double q = static_cast<double>(k) / 10000.0;
            double num = (1.0 - w.a) * (1.0 - pi) * (1.0 - q) + w.a * pi * q;
            double den = num + (1.0 - w.b) * (1.0 - pi) * q + w.b * pi * (1.0 - q);
            if (den == 0.0) continue;
            double s = num / den;
            if (!is_defined(brute) || s > brute) brute = s;
        }
        if (is_defined(fast) != is_defined(brute)) {
            pass = false;
            continue;
        }
        if (is_defined(fast)) {
            double delta = std::abs(fast - brute);
            worst = std::max(worst, delta);
            if (delta > 1e-6) pass = false;
        }
    }
    report(7, "noskill_score matches brute force over 10001 rates", pass,
           "max |delta| " + fmt(worst) + " over 100 draws");
}

void criterion8_subset_stability(const EntitySet& entities, int threads) {
    Grid g(51);
    RankCube full = ranking_cube(entities, g, threads);
    testsup::Rng rng(4242);
    long long violations = 0;
    for (int trial = 0; trial < 20; ++trial) {
        EntitySet subset;
        std::vector<std::size_t> kept;
        for (std::size_t e = 0; e < entities.size(); ++e)
            if (rng.uniform() < 0.35) {
                subset.entities.push_back(entities.entities[e]);
                kept.push_back(e);
            }
        if (subset.size() < 2) {
            subset.entities.push_back(entities.entities[0]);
            subset.entities.push_back(entities.entities[1]);
            kept = {0, 1};
        }
        RankCube part = ranking_cube(subset, g, threads);
        for (int t = 0; t < 50; ++t) {
            int i = rng.pick(g.size), j = rng.pick(g.size);
            for (std::size_t x = 0; x < kept.size(); ++x)
                for (std::size_t y = x + 1; y < kept.size(); ++y) {
                    int f = full.rank_at(i, j, kept[x]) - full.rank_at(i, j, kept[y]);
                    int s = part.rank_at(i, j, x) - part.rank_at(i, j, y);
                    if ((f < 0) != (s < 0) || (f == 0) != (s == 0)) ++violations;
                }
        }
    }
    report(8, "subset stability over 20 subsets x 50 grid points", violations == 0,
           std::to_string(violations) + " violations");
}

void criterion9_correlation_sanity(const EntitySet& entities, int threads) {
    ReferenceScores accuracy;
    for (const EntityRecord& e : entities.entities)
        accuracy[e.id] = named_scores(e.perf).accuracy;

    Grid g(101);
    bool pass = true;
    std::string detail;
    for (CorrCoef coef : {CorrCoef::pearson, CorrCoef::spearman}) {
        ScalarTile tile = correlation_tile(entities, accuracy, g, coef, threads);
        double center = tile.at(g.size / 2, g.size / 2);
        if (center != 1.0) pass = false;
        detail += std::string(corr_coef_name(coef)) + " center " + fmt(center) + "; ";
    }

    // spearman invariance under strictly monotone reference transforms
    Grid small(21);
    ScalarTile base = correlation_tile(entities, accuracy, small, CorrCoef::spearman, threads);
    testsup::Rng rng(5150);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        double alpha = rng.uniform(0.5, 3.0);
        double beta = rng.uniform(-1.0, 1.0);
        int shape = rng.pick(3);
        ReferenceScores transformed;
        for (const auto& [id, v] : accuracy) {
            double x = alpha * v + beta;
            if (shape == 1) x = std::exp(x);
            if (shape == 2) x = x * x * x + 2.0 * x;
            transformed[id] = x;
        }
        ScalarTile tile =
            correlation_tile(entities, transformed, small, CorrCoef::spearman, threads);
        for (std::size_t k = 0; k < tile.values.size(); ++k) {
            if (!is_defined(tile.values[k]) || !is_defined(base.values[k])) {
                if (is_defined(tile.values[k]) != is_defined(base.values[k])) pass = false;
                continue;
            }
            worst = std::max(worst, std::abs(tile.values[k] - base.values[k]));
        }
    }
    if (worst > 1e-12) pass = false;
    report(9, "correlation sanity: accuracy reference and monotone invariance", pass,
           detail + "max spearman shift " + fmt(worst));
}

void criterion10_report_determinism(const EntitySet& entities) {
    ReportOptions opts;
    opts.grid = Grid(101);
    opts.seed = 7;

    fs::path base = fs::temp_directory_path() /
                    ("tilekit_acceptance_" + std::to_string(::getpid()));
    fs::path dir1 = base / "run_t1";
    fs::path dir2 = base / "run_t4";
    std::error_code ec;
    fs::remove_all(base, ec);

    opts.threads = 1;
    build_report(entities, nullptr, opts, dir1);
    opts.threads = 4;
    build_report(entities, nullptr, opts, dir2);

    auto tree = [](const fs::path& root) {
        std::map<std::string, std::string> files;
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (!entry.is_regular_file()) continue;
            std::ifstream in(entry.path(), std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            files[fs::relative(entry.path(), root).string()] =
                detail::sha256_hex(ss.str());
        }
        return files;
    };
    std::map<std::string, std::string> t1 = tree(dir1);
    std::map<std::string, std::string> t2 = tree(dir2);
    bool pass = !t1.empty() && t1 == t2;
    report(10, "byte-identical report trees at thread counts 1 and 4", pass,
           std::to_string(t1.size()) + " files");
    fs::remove_all(base, ec);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <sm74.csv> [threads]\n";
        return 2;
    }
    int threads = argc > 2 ? std::atoi(argv[2]) : resolve_threads(0);

    IngestConfig cfg;
    cfg.path = argv[1];
    cfg.repair_prior = kPrior;
    EntitySet entities;
    try {
        LoadResult loaded = load_performances(cfg);
        entities = std::move(loaded.entities);
        if (entities.size() != 74) {
            std::cerr << "expected 74 entities, loaded " << entities.size() << "\n";
            return 2;
        }
    } catch (const Error& e) {
        std::cerr << "cannot load " << argv[1] << ": " << e.what() << "\n";
        return 2;
    }

    run_table_criteria(entities, threads);
    criterion5_method_equivalence(threads);
    criterion6_corner_identities(entities);
    criterion7_noskill_oracle();
    criterion8_subset_stability(entities, threads);
    criterion9_correlation_sanity(entities, threads);
    criterion10_report_determinism(entities);

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
