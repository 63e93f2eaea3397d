#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tilekit/io.hpp"
#include "test_support.hpp"

using namespace tilekit;
namespace fs = std::filesystem;

namespace {

constexpr double kPrior = 0.124227;

fs::path data_file(const char* name) { return fs::path(TILEKIT_DATA_DIR) / name; }

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("tilekit_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path file(const char* name) const { return path / name; }
};

fs::path write_text(const TempDir& dir, const char* name, const std::string& text) {
    fs::path p = dir.file(name);
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("loading the SM table with the fixed-prior repair") {
    IngestConfig cfg;
    cfg.path = data_file("sm74.csv").string();
    cfg.repair_prior = kPrior;
    LoadResult result = load_performances(cfg);

    CHECK(result.report.total_rows == 74);
    CHECK(result.report.loaded == 74);
    CHECK(result.report.rejected == 0);
    REQUIRE(result.entities.size() == 74);

    const EntityRecord& ann = result.entities.at("ANN cityscapes");
    CHECK(ann.group == "cityscapes");
    CHECK(ann.perf.tp == 0.1064);
    CHECK(ann.perf.fp == 0.0368);
    CHECK(std::abs(ann.perf.fn - (kPrior - 0.1064)) <= 1e-15);
    CHECK(std::abs(ann.perf.tn - 0.838973) <= 1e-9);

    // repair forces the positive prior exactly; the negative prior reaches
    // the nearest representable sum (fp is kept bit-exact, and for a few
    // rows no double tn lands fl(tn+fp) on 1-prior: round-to-even tie)
    double neg = 1.0 - kPrior;
    double neg_ulp = std::nextafter(neg, 2.0) - neg;
    for (const EntityRecord& e : result.entities.entities) {
        CHECK(e.perf.fn + e.perf.tp == kPrior);
        CHECK(std::abs(e.perf.tn + e.perf.fp - neg) <= neg_ulp);
        CHECK(e.perf.is_valid());
    }

    // the recorded ANN discrepancy |0.8390 - 0.838973| is about 2.7e-5
    bool found = false;
    for (const auto& [id, delta] : result.report.repair_discrepancies)
        if (id == "ANN cityscapes") {
            found = true;
            CHECK(std::abs(delta - 2.7e-5) < 1e-6);
        }
    CHECK(found);

    // ANN/cityscapes sums to 1.0190 before repair: flagged, not rejected
    bool flagged = false;
    for (const RowIssue& issue : result.report.issues)
        if (issue.entity_id == "ANN cityscapes" && issue.code == "SumDeviation" &&
            !issue.rejected)
            flagged = true;
    CHECK(flagged);
}

TEST_CASE("count rows are normalized in auto mode") {
    TempDir dir;
    fs::path p = write_text(dir, "counts.csv",
                            "entity,group,tn,fp,fn,tp\n"
                            "x,,9,1,2,8\n");
    IngestConfig cfg;
    cfg.path = p.string();
    LoadResult r = load_performances(cfg);
    REQUIRE(r.entities.size() == 1);
    const Performance& perf = r.entities.entities[0].perf;
    CHECK(perf.tn == 0.45);
    CHECK(perf.fp == 0.05);
    CHECK(perf.fn == 0.10);
    CHECK(perf.tp == 0.40);
}

TEST_CASE("ingest rejects malformed tables") {
    TempDir dir;

    fs::path dup = write_text(dir, "dup.csv",
                              "entity,group,tn,fp,fn,tp\n"
                              "x,,1,1,1,1\nx,,2,2,2,2\n");
    IngestConfig cfg;
    cfg.path = dup.string();
    CHECK_THROWS_MATCHES(load_performances(cfg), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::duplicate_entity;
                         }));

    fs::path header = write_text(dir, "header.csv", "a,b,c\nx,,1,1,1,1\n");
    cfg.path = header.string();
    CHECK_THROWS_MATCHES(load_performances(cfg), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::parse_error;
                         }));

    fs::path bad = write_text(dir, "bad.csv",
                              "entity,group,tn,fp,fn,tp\nx,,1,oops,1,1\n");
    cfg.path = bad.string();
    try {
        load_performances(cfg);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::parse_error);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
        CHECK(std::string(e.what()).find("fp") != std::string::npos);
    }

    cfg.path = (dir.path / "missing.csv").string();
    CHECK_THROWS_MATCHES(load_performances(cfg), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::io_error;
                         }));
}

TEST_CASE("repair rejects infeasible rows and keeps the rest") {
    TempDir dir;
    fs::path p = write_text(dir, "mix.csv",
                            "entity,group,tn,fp,fn,tp\n"
                            "ok,,0.8,0.05,0.05,0.1\n"
                            "too_positive,,0.5,0.1,0.1,0.3\n"
                            "negative,,0.9,-0.1,0.1,0.1\n");
    IngestConfig cfg;
    cfg.path = p.string();
    cfg.repair_prior = 0.2;
    LoadResult r = load_performances(cfg);
    CHECK(r.report.total_rows == 3);
    CHECK(r.report.loaded == 1);
    CHECK(r.report.rejected == 2);
    CHECK(r.entities.index_of("ok") != EntitySet::npos);
    int infeasible = 0, negative = 0;
    for (const RowIssue& issue : r.report.issues) {
        if (issue.code == "InfeasibleRepair") ++infeasible;
        if (issue.code == "NegativeInput") ++negative;
    }
    CHECK(infeasible == 1);
    CHECK(negative == 1);
}

TEST_CASE("export then reload reproduces the entity set exactly") {
    IngestConfig cfg;
    cfg.path = data_file("sm74.csv").string();
    cfg.repair_prior = kPrior;
    EntitySet original = load_performances(cfg).entities;

    TempDir dir;
    fs::path out = dir.file("normalized.csv");
    write_performances_csv(original, out);

    IngestConfig back;
    back.path = out.string();
    back.mode = ValueMode::probabilities;
    EntitySet reloaded = load_performances(back).entities;

    REQUIRE(reloaded.size() == original.size());
    for (std::size_t k = 0; k < original.size(); ++k) {
        const Performance& a = original.entities[k].perf;
        const Performance& b = reloaded.entities[k].perf;
        CHECK(original.entities[k].id == reloaded.entities[k].id);
        CHECK(original.entities[k].group == reloaded.entities[k].group);
        // tn may carry the writer's one-ulp normalization nudge
        CHECK(std::abs(a.tn - b.tn) <= 1e-15);
        CHECK(a.fp == b.fp);
        CHECK(a.fn == b.fn);
        CHECK(a.tp == b.tp);
    }

    // the exported table is a fixed point: reloading it reproduces the set
    // bit for bit, and re-exporting it reproduces the bytes
    fs::path out2 = dir.file("normalized2.csv");
    write_performances_csv(reloaded, out2);
    CHECK(read_bytes(out) == read_bytes(out2));
    EntitySet again = load_performances(back).entities;
    for (std::size_t k = 0; k < reloaded.size(); ++k) {
        CHECK(again.entities[k].perf.tn == reloaded.entities[k].perf.tn);
        CHECK(again.entities[k].perf.fp == reloaded.entities[k].perf.fp);
        CHECK(again.entities[k].perf.fn == reloaded.entities[k].perf.fn);
        CHECK(again.entities[k].perf.tp == reloaded.entities[k].perf.tp);
    }
}

TEST_CASE("reference scores resolve against the entity set") {
    IngestConfig cfg;
    cfg.path = data_file("sm74.csv").string();
    cfg.repair_prior = kPrior;
    EntitySet entities = load_performances(cfg).entities;

    TempDir dir;
    fs::path three = write_text(dir, "ref3.csv",
                                "entity,score\n"
                                "SETR cityscapes,0.77\n"
                                "ANN cityscapes,0.61\n"
                                "ISANet voc2012,0.55\n");
    RefLoadResult r3 = load_reference_scores(three.string(), entities);
    CHECK(r3.scores.size() == 3);
    CHECK(r3.warnings.empty());

    fs::path five = write_text(dir, "ref5.csv",
                               "SETR cityscapes,0.77\n"
                               "ANN cityscapes,0.61\n"
                               "ISANet voc2012,0.55\n"
                               "NotAModel anywhere,0.99\n"
                               "DPT ade20k,0.42\n");
    RefLoadResult r5 = load_reference_scores(five.string(), entities);
    CHECK(r5.scores.size() == 4);
    REQUIRE(r5.warnings.size() == 1);
    CHECK(r5.warnings[0].find("NotAModel") != std::string::npos);

    fs::path empty = write_text(dir, "empty.csv", "");
    CHECK_THROWS_MATCHES(load_reference_scores(empty.string(), entities), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::no_matching_entities;
                         }));
}

TEST_CASE("scalar tile JSON roundtrip is bit identical") {
    testsup::Rng rng(55);
    Grid g(101);
    ScalarTile tile(g, "value");
    tile.meta["entity_id"] = "roundtrip";
    for (double& v : tile.values)
        v = rng.uniform() < 0.02 ? kUndefined : rng.uniform(0, 1);

    TempDir dir;
    fs::path p1 = dir.file("tile.json");
    export_tile(tile, TileFormat::json, p1);
    ScalarTile back = import_scalar_tile(p1);

    REQUIRE(back.grid == tile.grid);
    CHECK(back.kind == tile.kind);
    CHECK(back.meta.at("entity_id") == "roundtrip");
    for (std::size_t k = 0; k < tile.values.size(); ++k) {
        if (is_defined(tile.values[k]))
            CHECK(tile.values[k] == back.values[k]);
        else
            CHECK(!is_defined(back.values[k]));
    }

    fs::path p2 = dir.file("tile2.json");
    export_tile(back, TileFormat::json, p2);
    CHECK(read_bytes(p1) == read_bytes(p2));
}

TEST_CASE("undefined entries export as JSON null") {
    Grid g(2);
    ScalarTile tile(g, "value");
    tile.values = {0.5, kUndefined, 0.25, 1.0};
    nlohmann::json j = tile_to_json(tile);
    CHECK(j["values"][0][0] == 0.5);
    CHECK(j["values"][0][1].is_null());
    CHECK(j["grid_size"] == 2);
    CHECK(j["a"][0] == 0.0);
    CHECK(j["a"][1] == 1.0);
}

TEST_CASE("tile CSV layout") {
    Grid g(2);
    ScalarTile tile(g, "value");
    tile.values = {0.5, 0.5, 0.5, 0.5};
    TempDir dir;
    fs::path p = dir.file("tile.csv");
    export_tile(tile, TileFormat::csv, p);
    CHECK(read_bytes(p) == "b\\a,0,1\n0,0.5,0.5\n1,0.5,0.5\n");

    BoolTile mask(g, "hatch");
    mask.set(0, 1, true);
    fs::path m = dir.file("mask.csv");
    export_tile(mask, TileFormat::csv, m);
    CHECK(read_bytes(m) == "b\\a,0,1\n0,0,1\n1,0,0\n");
}

TEST_CASE("validation report serializes to JSON") {
    IngestConfig cfg;
    cfg.path = data_file("sm74.csv").string();
    cfg.repair_prior = kPrior;
    LoadResult r = load_performances(cfg);
    nlohmann::json j = report_to_json(r.report);
    CHECK(j["loaded"] == 74);
    CHECK(j["rejected"] == 0);
    CHECK(j["repair_applied"] == true);
    CHECK(j["repair_discrepancies"].size() == 74);
}
