#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tilekit/correlation.hpp"
#include "tilekit/detail/digest.hpp"
#include "tilekit/io.hpp"
#include "tilekit/parallel.hpp"
#include "tilekit/ranking.hpp"
#include "tilekit/render.hpp"
#include "tilekit/tiles.hpp"

namespace tilekit {

struct ReportOptions {
    Grid grid{2001};
    int threads = 1;
    std::uint64_t seed = 0;
    double zone_threshold = 0.85;
    std::vector<double> contour_levels = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    RenderOptions render;
};

struct ReportArtifact {
    std::string path; // relative to the report directory
    std::string kind;
    std::string sha256;
};

struct ReportManifest {
    std::vector<ReportArtifact> artifacts;
    nlohmann::json inputs;
};

namespace detail {

inline std::string slugify(const std::string& id) {
    std::string out;
    for (char c : id) {
        if (c == '+') {
            out += "plus";
        } else if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!out.empty() && out.back() != '_') {
            out.push_back('_');
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out.empty() ? "entity" : out;
}

// Unique slug per entity, first come first served.
inline std::vector<std::string> entity_slugs(const EntitySet& entities) {
    std::vector<std::string> slugs;
    std::set<std::string> taken;
    for (const EntityRecord& e : entities.entities) {
        std::string s = slugify(e.id);
        std::string candidate = s;
        int suffix = 2;
        while (!taken.insert(candidate).second)
            candidate = s + "_" + std::to_string(suffix++);
        slugs.push_back(candidate);
    }
    return slugs;
}

struct ReportWriter {
    std::filesystem::path dir;
    std::vector<ReportArtifact> artifacts;

    void add(const std::string& name, const std::string& kind, const std::string& bytes) {
        std::ofstream out = open_output(dir / name);
        out << bytes;
        if (!out) raise(errc::io_error, "failed writing " + (dir / name).string());
        artifacts.push_back(ReportArtifact{name, kind, sha256_hex(bytes)});
    }
};

} // namespace detail

// Emits the full analysis for an entity set into a directory: performance
// table, ROC scatter, per-entity value and ranking tiles, the aggregate
// tiles, entity maps for ranks 1/2/3/N, correlation and zone analyses when
// reference scores are supplied, the min-max selection, a markdown index and
// a checksum manifest. Output is a pure function of the inputs.
inline ReportManifest build_report(const EntitySet& entities,
                                   const ReferenceScores* ref,
                                   const ReportOptions& opts,
                                   const std::filesystem::path& out_dir) {
    if (entities.empty()) raise(errc::empty_entity_set, "nothing to report");
    std::filesystem::create_directories(out_dir);

    const Grid g = opts.grid;
    const int threads = std::max(1, opts.threads);
    const std::size_t n = entities.size();
    std::vector<std::string> slugs = detail::entity_slugs(entities);

    detail::ReportWriter writer{out_dir, {}};
    std::string index;
    index += "# Tile report\n\n";
    index += "Entities: " + std::to_string(n) + ", grid size: " + std::to_string(g.size) +
             "\n\n";

    // 1. performance table
    {
        std::filesystem::path table = out_dir / "table.csv";
        write_performances_csv(entities, table);
        writer.artifacts.push_back(ReportArtifact{
            "table.csv", "performance-table", detail::sha256_file(table.string())});
        index += "## Performances\n\nNormalized table: [table.csv](table.csv)\n\n";
    }

    // shared prior for the no-skill analysis
    double prior = entities.entities.front().perf.prior_pos();
    bool prior_uniform = true;
    for (const EntityRecord& e : entities.entities)
        if (std::abs(e.perf.prior_pos() - prior) > 1e-9) prior_uniform = false;

    // 2. ROC scatter
    {
        RenderOptions ro = opts.render;
        ro.title = "ROC scatter";
        std::vector<std::string> warnings;
        writer.add("roc.svg", "roc-scatter", roc_scatter(entities, ro, &warnings));
        index += "## ROC\n\n![roc](roc.svg)\n\n";
        for (const std::string& w : warnings) index += "- note: " + w + "\n";
        if (!warnings.empty()) index += "\n";
    }

    ScalarTile noskill = noskill_tile(prior, g, threads);
    ScalarTile sota = sota_tile(entities, g, threads);
    ScalarTile baseline = baseline_tile(entities, g, threads);
    RankCube cube = ranking_cube(entities, g, threads);

    // 3. per-entity value tiles (rendered in parallel, emitted in order)
    std::vector<std::string> value_svgs(n), ranking_svgs(n);
    parallel_rows(static_cast<int>(n), threads, [&](int k) {
        const EntityRecord& e = entities.entities[static_cast<std::size_t>(k)];
        ScalarTile value = value_tile(e.perf, g);
        BoolTile hatch = hatch_mask(value, noskill);
        RenderOptions ro = opts.render;
        ro.title = "Value tile: " + e.id;
        value_svgs[static_cast<std::size_t>(k)] =
            render_heatmap(value, &hatch, opts.contour_levels, ro);
        ScalarTile ranks = rank_tile(cube, e.id);
        RenderOptions rr = opts.render;
        rr.title = "Ranking tile: " + e.id;
        rr.auto_range = true;
        ranking_svgs[static_cast<std::size_t>(k)] = render_heatmap(ranks, &hatch, {}, rr);
    });
    index += "## Value tiles\n\n";
    for (std::size_t k = 0; k < n; ++k) {
        std::string name = "value_" + slugs[k] + ".svg";
        writer.add(name, "value-tile", value_svgs[k]);
        index += "![" + slugs[k] + "](" + name + ")\n";
        value_svgs[k].clear();
    }
    index += "\n";

    // 4. baseline and state of the art
    {
        RenderOptions ro = opts.render;
        ro.title = "Baseline value tile";
        BoolTile hatch = hatch_mask(baseline, noskill);
        writer.add("baseline.svg", "baseline-tile",
                   render_heatmap(baseline, &hatch, opts.contour_levels, ro));
        ro.title = "State-of-the-art value tile";
        BoolTile sota_hatch = hatch_mask(sota, noskill);
        writer.add("sota.svg", "sota-tile",
                   render_heatmap(sota, &sota_hatch, opts.contour_levels, ro));
        index += "## Baseline and state of the art\n\n![baseline](baseline.svg)\n"
                 "![sota](sota.svg)\n\n";
    }

    // 5. no-skill and relative skill
    {
        RenderOptions ro = opts.render;
        ro.title = "No-skill tile";
        writer.add("noskill.svg", "noskill-tile",
                   render_heatmap(noskill, nullptr, opts.contour_levels, ro));
        ScalarTile skill = relative_skill_tile(sota, noskill);
        ro.title = "Relative-skill tile";
        ro.auto_range = true;
        writer.add("skill.svg", "skill-tile", render_heatmap(skill, nullptr, {}, ro));
        index += "## No-skill and relative skill\n\n![noskill](noskill.svg)\n"
                 "![skill](skill.svg)\n\n";
    }

    // 6. per-entity ranking tiles
    index += "## Ranking tiles\n\n";
    for (std::size_t k = 0; k < n; ++k) {
        std::string name = "ranking_" + slugs[k] + ".svg";
        writer.add(name, "ranking-tile", ranking_svgs[k]);
        index += "![" + slugs[k] + "](" + name + ")\n";
        ranking_svgs[k].clear();
    }
    index += "\n";

    // 7. entity maps for ranks 1, 2, 3 and N
    {
        std::set<int> ranks{1, static_cast<int>(n)};
        if (n >= 2) ranks.insert(2);
        if (n >= 3) ranks.insert(3);
        index += "## Entity tiles\n\n";
        for (int r : ranks) {
            EntityTile tile = entity_tile(cube, r, threads);
            RenderOptions ro = opts.render;
            ro.title = "Entities at rank " + std::to_string(r);
            std::string svg;
            if (r == 1) {
                BoolTile hatch = hatch_mask(sota, noskill);
                svg = render_entity_map(tile, &hatch, ro);
            } else if (r == static_cast<int>(n)) {
                BoolTile hatch = hatch_mask(baseline, noskill);
                svg = render_entity_map(tile, &hatch, ro);
            } else {
                svg = render_entity_map(tile, nullptr, ro);
            }
            std::string name = "entities_rank_" + std::to_string(r) + ".svg";
            writer.add(name, "entity-tile", svg);
            index += "![rank " + std::to_string(r) + "](" + name + ")\n";
        }
        index += "\n";
    }

    // 8. correlation tiles and zone analyses
    if (ref) {
        index += "## Correlation tiles\n\n";
        EntityTile first = entity_tile(cube, 1, threads);
        for (CorrCoef coef : {CorrCoef::pearson, CorrCoef::spearman, CorrCoef::kendall}) {
            ScalarTile corr = correlation_tile(entities, *ref, g, coef, threads);
            RenderOptions ro = opts.render;
            ro.title = std::string("Correlation tile (") + corr_coef_name(coef) + ")";
            ro.vmin = -1.0;
            ro.vmax = 1.0;
            std::vector<double> level{opts.zone_threshold};
            std::string name = std::string("correlation_") + corr_coef_name(coef) + ".svg";
            writer.add(name, "correlation-tile", render_heatmap(corr, nullptr, level, ro));
            index += "![" + std::string(corr_coef_name(coef)) + "](" + name + ")\n";

            ZoneReport zone = zone_analysis(corr, first, opts.zone_threshold);
            nlohmann::json zj;
            zj["coefficient"] = corr_coef_name(coef);
            zj["threshold"] = zone.threshold;
            zj["empty_zone"] = zone.empty_zone;
            zj["zone_fraction"] = zone.zone_fraction;
            nlohmann::json shares = nlohmann::json::array();
            for (const auto& [id, share] : zone.shares)
                shares.push_back({{"entity", id}, {"share", share}});
            zj["rank1_shares"] = std::move(shares);
            std::string zname = std::string("zone_") + corr_coef_name(coef) + ".json";
            writer.add(zname, "zone-analysis", zj.dump(1) + "\n");
        }
        index += "\n### Zone analysis\n\n";
        for (CorrCoef coef : {CorrCoef::pearson, CorrCoef::spearman, CorrCoef::kendall}) {
            std::string zname = std::string("zone_") + corr_coef_name(coef) + ".json";
            index += "- [" + zname + "](" + zname + ")\n";
        }
        index += "\n";
    }

    // 9. min-max selection
    {
        MinimaxSelection sel = select_minimax(cube);
        nlohmann::json sj;
        sj["winner"] = sel.winner;
        sj["best_max_rank"] = sel.best_max_rank;
        auto stats_json = [](const std::vector<RankStats>& stats) {
            nlohmann::json arr = nlohmann::json::array();
            for (const RankStats& st : stats)
                arr.push_back({{"entity", st.entity_id},
                               {"min_rank", st.min_rank},
                               {"max_rank", st.max_rank},
                               {"mean_rank", st.mean_rank}});
            return arr;
        };
        sj["max_rank_survivors"] = stats_json(sel.max_rank_survivors);
        sj["mean_rank_survivors"] = stats_json(sel.mean_rank_survivors);
        writer.add("selection.json", "selection-analysis", sj.dump(1) + "\n");

        index += "## Selection without known importance\n\n";
        index += "Entities minimizing the maximum rank (max rank " +
                 std::to_string(sel.best_max_rank) + "):\n\n";
        for (const RankStats& st : sel.max_rank_survivors) {
            char mean[32];
            std::snprintf(mean, sizeof(mean), "%.4f", st.mean_rank);
            index += "- " + st.entity_id + " (max rank: " + std::to_string(st.max_rank) +
                     ", mean rank: " + mean + ")\n";
        }
        index += "\nWinner after the mean-rank tie break: **" + sel.winner + "**\n\n";
    }

    writer.add("index.md", "index", index);

    ReportManifest manifest;
    manifest.artifacts = writer.artifacts;
    manifest.inputs = {{"grid_size", g.size},
                       {"entity_count", n},
                       {"seed", opts.seed},
                       {"zone_threshold", opts.zone_threshold},
                       {"prior", prior},
                       {"prior_uniform", prior_uniform},
                       {"has_reference_scores", ref != nullptr}};
    nlohmann::json mj;
    nlohmann::json arts = nlohmann::json::array();
    for (const ReportArtifact& a : manifest.artifacts)
        arts.push_back({{"path", a.path}, {"kind", a.kind}, {"sha256", a.sha256}});
    mj["artifacts"] = std::move(arts);
    mj["inputs"] = manifest.inputs;
    std::ofstream out = detail::open_output(out_dir / "manifest.json");
    out << mj.dump(1) << '\n';
    if (!out) raise(errc::io_error, "failed writing manifest");
    return manifest;
}

} // namespace tilekit
