// Command-line front end: validation, tile computation, selection and full
// report generation for two-class classifier comparison.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tilekit/tilekit.hpp"

namespace fs = std::filesystem;
using namespace tilekit;

namespace {

struct GlobalArgs {
    std::string input;
    std::string out;
    int grid_size = 2001;
    double repair_prior = -1.0; // unset
    std::string mode = "auto";
    std::string format = "json";
    std::uint64_t seed = 0;
    int threads = 0; // 0: TILEKIT_THREADS or hardware
};

void add_common(CLI::App* cmd, GlobalArgs& args, bool needs_input = true) {
    auto* input = cmd->add_option("--input", args.input, "performance table (CSV)");
    if (needs_input) input->required();
    cmd->add_option("--out", args.out, "output file (default: stdout)");
    cmd->add_option("--grid-size", args.grid_size, "tile discretization")
        ->check(CLI::Range(2, 100000))
        ->capture_default_str();
    cmd->add_option("--repair-prior", args.repair_prior,
                    "rebuild rows to this positive prior, keeping tp and fp")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12));
    cmd->add_option("--mode", args.mode, "value interpretation")
        ->check(CLI::IsMember({"auto", "counts", "probabilities"}))
        ->capture_default_str();
    cmd->add_option("--format", args.format, "output format")
        ->check(CLI::IsMember({"json", "csv", "svg"}))
        ->capture_default_str();
    cmd->add_option("--seed", args.seed, "sampling seed")->capture_default_str();
    cmd->add_option("--threads", args.threads,
                    "worker threads (0: TILEKIT_THREADS or hardware)");
}

IngestConfig ingest_config(const GlobalArgs& args) {
    IngestConfig cfg;
    cfg.path = args.input;
    if (args.mode == "counts") cfg.mode = ValueMode::counts;
    else if (args.mode == "probabilities") cfg.mode = ValueMode::probabilities;
    else cfg.mode = ValueMode::auto_detect;
    if (args.repair_prior > 0.0) cfg.repair_prior = args.repair_prior;
    return cfg;
}

EntitySet load_or_die(const GlobalArgs& args) {
    LoadResult result = load_performances(ingest_config(args));
    for (const RowIssue& issue : result.report.issues)
        if (issue.rejected)
            std::cerr << "warning: row " << issue.row << " (" << issue.entity_id
                      << ") rejected: " << issue.message << "\n";
    if (result.entities.empty())
        raise(errc::empty_entity_set, "no usable rows in " + args.input);
    return result.entities;
}

TileFormat data_format(const GlobalArgs& args) {
    return args.format == "csv" ? TileFormat::csv : TileFormat::json;
}

void emit_text(const GlobalArgs& args, const std::string& bytes) {
    if (args.out.empty()) {
        std::cout << bytes;
        return;
    }
    std::ofstream out(args.out, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot write " + args.out);
    out << bytes;
}

template <typename Tile>
void emit_tile(const GlobalArgs& args, const Tile& tile) {
    if (args.out.empty()) {
        write_tile(tile, data_format(args), std::cout);
        return;
    }
    export_tile(tile, data_format(args), args.out);
}

double resolve_prior(const GlobalArgs& args, const EntitySet& entities,
                     double explicit_prior) {
    if (explicit_prior > 0.0) return explicit_prior;
    if (args.repair_prior > 0.0) return args.repair_prior;
    double prior = entities.entities.front().perf.prior_pos();
    for (const EntityRecord& e : entities.entities)
        if (std::abs(e.perf.prior_pos() - prior) > 1e-9)
            raise(errc::invalid_argument,
                  "entity priors differ; pass --prior or --repair-prior");
    return prior;
}

int run_validate(const GlobalArgs& args) {
    LoadResult result = load_performances(ingest_config(args));
    std::cout << report_to_json(result.report).dump(1) << '\n';
    return (result.report.rejected > 0 || result.report.loaded == 0) ? 1 : 0;
}

RenderOptions svg_options(const std::string& title) {
    RenderOptions ro;
    ro.title = title;
    return ro;
}

const std::vector<double> kDefaultLevels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tile-based evaluation, comparison and ranking of two-class classifiers"};
    app.require_subcommand(1);

    GlobalArgs args;

    // validate
    CLI::App* validate = app.add_subcommand("validate", "load a table and print the report");
    add_common(validate, args);

    // tile family
    CLI::App* tile = app.add_subcommand("tile", "compute one tile flavor");
    tile->require_subcommand(1);
    std::string entity_id, scores_path, coef_name = "pearson", method_name = "direct";
    int entity_rank = 1;
    double threshold = 0.85, prior_flag = -1.0;

    CLI::App* t_value = tile->add_subcommand("value", "one entity's score over the tile");
    add_common(t_value, args);
    t_value->add_option("--entity", entity_id, "entity id")->required();
    t_value->add_option("--method", method_name, "construction method")
        ->check(CLI::IsMember({"direct", "interpolation", "recovery"}))
        ->capture_default_str();

    CLI::App* t_baseline = tile->add_subcommand("baseline", "pointwise minimum over entities");
    add_common(t_baseline, args);
    CLI::App* t_sota = tile->add_subcommand("sota", "pointwise maximum over entities");
    add_common(t_sota, args);

    CLI::App* t_noskill = tile->add_subcommand("noskill", "best chance-level score");
    add_common(t_noskill, args, false);
    t_noskill->add_option("--prior", prior_flag, "positive prior (else from the table)");

    CLI::App* t_skill = tile->add_subcommand("skill", "(sota - noskill) / (1 - noskill)");
    add_common(t_skill, args);
    t_skill->add_option("--prior", prior_flag, "positive prior (else from the table)");

    CLI::App* t_ranking = tile->add_subcommand("ranking", "one entity's rank over the tile");
    add_common(t_ranking, args);
    t_ranking->add_option("--entity", entity_id, "entity id")->required();

    CLI::App* t_entity = tile->add_subcommand("entity", "who holds a given rank");
    add_common(t_entity, args);
    t_entity->add_option("--rank", entity_rank, "requested rank")->required();

    CLI::App* t_corr = tile->add_subcommand("correlation",
                                            "reference score vs the ranking scores");
    add_common(t_corr, args);
    t_corr->add_option("--scores", scores_path, "reference scores (CSV entity,score)")
        ->required();
    t_corr->add_option("--coef", coef_name, "correlation coefficient")
        ->check(CLI::IsMember({"pearson", "spearman", "kendall"}))
        ->capture_default_str();
    t_corr->add_option("--threshold", threshold, "zone analysis threshold")
        ->capture_default_str();

    // select
    CLI::App* select = app.add_subcommand("select", "pick an entity");
    add_common(select, args);
    std::string strategy = "minimax";
    double sel_a = -1.0, sel_b = -1.0;
    select->add_option("--strategy", strategy, "selection strategy")
        ->check(CLI::IsMember({"at", "minimax", "reference"}))
        ->capture_default_str();
    select->add_option("--a", sel_a, "importance a (strategy 'at')");
    select->add_option("--b", sel_b, "importance b (strategy 'at')");
    select->add_option("--scores", scores_path, "reference scores (strategy 'reference')");

    // report
    CLI::App* report = app.add_subcommand("report", "full multi-section analysis");
    add_common(report, args);
    report->add_option("--scores", scores_path, "optional reference scores");
    std::string report_dir;
    report->add_option("--out-dir", report_dir, "report directory")->required();
    report->add_option("--threshold", threshold, "zone analysis threshold")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    int threads = resolve_threads(args.threads);
    Grid grid(args.grid_size);

    try {
        if (validate->parsed()) return run_validate(args);

        if (tile->parsed()) {
            if (t_noskill->parsed()) {
                double prior = prior_flag;
                if (prior <= 0.0 && args.repair_prior > 0.0) prior = args.repair_prior;
                if (prior <= 0.0) {
                    if (args.input.empty())
                        raise(errc::invalid_argument, "need --prior, --repair-prior or --input");
                    prior = resolve_prior(args, load_or_die(args), -1.0);
                }
                ScalarTile t = noskill_tile(prior, grid, threads);
                if (args.format == "svg")
                    emit_text(args, render_heatmap(t, nullptr, kDefaultLevels,
                                                   svg_options("No-skill tile")));
                else
                    emit_tile(args, t);
                return 0;
            }

            EntitySet entities = load_or_die(args);

            if (t_value->parsed()) {
                const EntityRecord& e = entities.at(entity_id);
                ValueTileMethod method = ValueTileMethod::direct;
                if (method_name == "interpolation") method = ValueTileMethod::interpolation;
                if (method_name == "recovery") method = ValueTileMethod::recovery;
                ScalarTile t = value_tile(e.perf, grid, method, threads);
                t.meta["entity_id"] = e.id;
                if (args.format == "svg") {
                    double prior = resolve_prior(args, entities, -1.0);
                    BoolTile hatch = hatch_mask(t, noskill_tile(prior, grid, threads));
                    emit_text(args, render_heatmap(t, &hatch, kDefaultLevels,
                                                   svg_options("Value tile: " + e.id)));
                } else {
                    emit_tile(args, t);
                }
            } else if (t_baseline->parsed() || t_sota->parsed()) {
                bool lo = t_baseline->parsed();
                ScalarTile t = lo ? baseline_tile(entities, grid, threads)
                                  : sota_tile(entities, grid, threads);
                if (args.format == "svg")
                    emit_text(args, render_heatmap(t, nullptr, kDefaultLevels,
                                                   svg_options(lo ? "Baseline value tile"
                                                                  : "State-of-the-art value tile")));
                else
                    emit_tile(args, t);
            } else if (t_skill->parsed()) {
                double prior = resolve_prior(args, entities, prior_flag);
                ScalarTile ns = noskill_tile(prior, grid, threads);
                ScalarTile hi = sota_tile(entities, grid, threads);
                ScalarTile t = relative_skill_tile(hi, ns);
                if (args.format == "svg") {
                    RenderOptions ro = svg_options("Relative-skill tile");
                    ro.auto_range = true;
                    emit_text(args, render_heatmap(t, nullptr, {}, ro));
                } else {
                    emit_tile(args, t);
                }
            } else if (t_ranking->parsed()) {
                RankCube cube = ranking_cube(entities, grid, threads);
                ScalarTile t = rank_tile(cube, entity_id);
                if (args.format == "svg") {
                    RenderOptions ro = svg_options("Ranking tile: " + entity_id);
                    ro.auto_range = true;
                    emit_text(args, render_heatmap(t, nullptr, {}, ro));
                } else {
                    emit_tile(args, t);
                }
            } else if (t_entity->parsed()) {
                RankCube cube = ranking_cube(entities, grid, threads);
                EntityTile t = entity_tile(cube, entity_rank, threads);
                if (args.format == "svg")
                    emit_text(args, render_entity_map(t, nullptr,
                                                      svg_options("Entities at rank " +
                                                                  std::to_string(entity_rank))));
                else
                    emit_tile(args, t);
            } else if (t_corr->parsed()) {
                RefLoadResult ref = load_reference_scores(scores_path, entities);
                for (const std::string& w : ref.warnings) std::cerr << "warning: " << w << "\n";
                CorrCoef coef = CorrCoef::pearson;
                if (coef_name == "spearman") coef = CorrCoef::spearman;
                if (coef_name == "kendall") coef = CorrCoef::kendall;
                ScalarTile t = correlation_tile(entities, ref.scores, grid, coef, threads);
                RankCube cube = ranking_cube(entities, grid, threads);
                ZoneReport zone = zone_analysis(t, entity_tile(cube, 1, threads), threshold);
                nlohmann::json zj;
                zj["coefficient"] = coef_name;
                zj["threshold"] = zone.threshold;
                zj["empty_zone"] = zone.empty_zone;
                zj["zone_fraction"] = zone.zone_fraction;
                nlohmann::json shares = nlohmann::json::array();
                for (const auto& [id, share] : zone.shares)
                    shares.push_back({{"entity", id}, {"share", share}});
                zj["rank1_shares"] = std::move(shares);
                if (zone.empty_zone)
                    std::cerr << "warning: no zone reaches the " << threshold
                              << " threshold\n";

                if (args.format == "svg") {
                    RenderOptions ro = svg_options("Correlation tile (" + coef_name + ")");
                    ro.vmin = -1.0;
                    ro.vmax = 1.0;
                    std::vector<double> level{threshold};
                    emit_text(args, render_heatmap(t, nullptr, level, ro));
                    std::cout << zj.dump(1) << '\n';
                } else if (!args.out.empty()) {
                    export_tile(t, data_format(args), args.out);
                    std::cout << zj.dump(1) << '\n';
                } else if (args.format == "json") {
                    nlohmann::json combined;
                    combined["tile"] = tile_to_json(t);
                    combined["zone_analysis"] = zj;
                    std::cout << combined.dump(1) << '\n';
                } else {
                    write_tile(t, TileFormat::csv, std::cout);
                    std::cerr << zj.dump() << '\n';
                }
            }
            return 0;
        }

        if (select->parsed()) {
            EntitySet entities = load_or_die(args);
            RankCube cube = ranking_cube(entities, grid, threads);
            nlohmann::json out;
            if (strategy == "at") {
                if (sel_a < 0.0 || sel_b < 0.0)
                    raise(errc::invalid_argument, "strategy 'at' needs --a and --b");
                int j = grid.snap(sel_a), i = grid.snap(sel_b);
                if (grid.coord(j) != sel_a || grid.coord(i) != sel_b)
                    std::cerr << "note: snapped (a, b) to the nearest grid point ("
                              << grid.coord(j) << ", " << grid.coord(i) << ")\n";
                std::string winner = select_at(cube, Importance{sel_a, sel_b});
                out = {{"strategy", "at"},
                       {"a", grid.coord(j)},
                       {"b", grid.coord(i)},
                       {"winner", winner}};
                if (args.format == "json") std::cout << out.dump(1) << '\n';
                else std::cout << winner << '\n';
            } else if (strategy == "minimax") {
                MinimaxSelection sel = select_minimax(cube);
                if (args.format == "json") {
                    nlohmann::json survivors = nlohmann::json::array();
                    for (const RankStats& st : sel.max_rank_survivors)
                        survivors.push_back({{"entity", st.entity_id},
                                             {"max_rank", st.max_rank},
                                             {"mean_rank", st.mean_rank}});
                    out = {{"strategy", "minimax"},
                           {"winner", sel.winner},
                           {"best_max_rank", sel.best_max_rank},
                           {"max_rank_survivors", survivors}};
                    std::cout << out.dump(1) << '\n';
                } else {
                    std::cout << sel.winner << '\n';
                    std::cout << "max-rank survivors (max rank " << sel.best_max_rank
                              << "):\n";
                    for (const RankStats& st : sel.max_rank_survivors) {
                        char mean[32];
                        std::snprintf(mean, sizeof(mean), "%.4f", st.mean_rank);
                        std::cout << "  " << st.entity_id << " (mean rank " << mean << ")\n";
                    }
                }
            } else { // reference: pick rank 1 where Spearman's rho peaks
                if (scores_path.empty())
                    raise(errc::invalid_argument, "strategy 'reference' needs --scores");
                RefLoadResult ref = load_reference_scores(scores_path, entities);
                for (const std::string& w : ref.warnings)
                    std::cerr << "warning: " << w << "\n";
                ScalarTile corr =
                    correlation_tile(entities, ref.scores, grid, CorrCoef::spearman, threads);
                double best = -2.0;
                for (double v : corr.values)
                    if (is_defined(v) && v > best) best = v;
                if (best < -1.0)
                    raise(errc::degenerate_input, "correlation undefined everywhere");
                ZoneReport zone =
                    zone_analysis(corr, entity_tile(cube, 1, threads), best);
                std::string winner;
                double top = -1.0;
                for (const auto& [id, share] : zone.shares)
                    if (share > top) {
                        top = share;
                        winner = id;
                    }
                out = {{"strategy", "reference"},
                       {"peak_spearman", best},
                       {"winner", winner}};
                if (args.format == "json") std::cout << out.dump(1) << '\n';
                else std::cout << winner << '\n';
            }
            return 0;
        }

        if (report->parsed()) {
            EntitySet entities = load_or_die(args);
            ReportOptions opts;
            opts.grid = grid;
            opts.threads = threads;
            opts.seed = args.seed;
            opts.zone_threshold = threshold;
            ReferenceScores scores;
            bool has_scores = false;
            if (!scores_path.empty()) {
                RefLoadResult ref = load_reference_scores(scores_path, entities);
                for (const std::string& w : ref.warnings)
                    std::cerr << "warning: " << w << "\n";
                scores = std::move(ref.scores);
                has_scores = true;
            }
            build_report(entities, has_scores ? &scores : nullptr, opts, report_dir);
            std::cout << (fs::path(report_dir) / "manifest.json").string() << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
