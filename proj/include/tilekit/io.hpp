#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "tilekit/correlation.hpp"
#include "tilekit/grid.hpp"
#include "tilekit/performance.hpp"
#include "tilekit/ranking.hpp"

namespace tilekit {

enum class ValueMode { counts, probabilities, auto_detect };

struct IngestConfig {
    std::string path;
    ValueMode mode = ValueMode::auto_detect;
    std::optional<double> repair_prior;
    double sum_tolerance = 1e-3; // pre-repair |sum - 1| flag threshold
};

struct RowIssue {
    int row = 0; // 1-based data row number
    std::string entity_id;
    std::string code;
    std::string message;
    bool rejected = false;
};

struct ValidationReport {
    std::string source;
    int total_rows = 0;
    int loaded = 0;
    int rejected = 0;
    bool repair_applied = false;
    double repair_prior = kUndefined;
    std::vector<RowIssue> issues;
    std::vector<std::pair<std::string, double>> repair_discrepancies; // |given tn - rebuilt tn|
};

struct LoadResult {
    EntitySet entities;
    ValidationReport report;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// One CSV record; supports double-quoted fields with doubled quotes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double(const std::string& field, int row, const char* column) {
    std::string t = trim(field);
    if (t.empty())
        raise(errc::parse_error,
              "row " + std::to_string(row) + ", column " + column + ": empty value");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        raise(errc::parse_error, "row " + std::to_string(row) + ", column " + column +
                                     ": not a number: '" + t + "'");
    return v;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

// Largest-magnitude-correct subtraction: returns r with (r + b) == a exactly.
// The error term is exact by Sterbenz, but subtracting it from r can round,
// so iterate, nudging by one ulp when the correction is below r's precision.
inline double exact_complement(double a, double b) {
    double r = a - b;
    for (int pass = 0; pass < 16; ++pass) {
        double err = (r + b) - a;
        if (err == 0.0) break;
        double next = r - err;
        if (next == r)
            next = std::nextafter(r, err > 0.0 ? -std::numeric_limits<double>::infinity()
                                               : std::numeric_limits<double>::infinity());
        r = next;
    }
    return r;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open " + path);
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot write " + path.string());
    return out;
}

} // namespace detail

// Loads a performance table. CSV schema: entity,group,tn,fp,fn,tp with group
// optionally empty. Counts and probabilities are both accepted; in auto mode
// a row summing into [0.5, 1.5] is taken as probabilities. With a repair
// prior pi+, each row is rebuilt keeping tp and fp:
//   fn := pi+ - tp,  tn := (1 - pi+) - fp
// and the report records how far the given tn sat from the rebuilt one.
inline LoadResult load_performances(const IngestConfig& cfg) {
    std::ifstream in = detail::open_input(cfg.path);
    LoadResult result;
    result.report.source = cfg.path;
    if (cfg.repair_prior) {
        double pi = *cfg.repair_prior;
        if (!(pi > 0.0 && pi < 1.0))
            raise(errc::invalid_argument, "repair prior must lie in (0,1)");
        result.report.repair_applied = true;
        result.report.repair_prior = pi;
    }

    std::string line;
    if (!std::getline(in, line)) raise(errc::parse_error, "empty file: " + cfg.path);
    {
        std::vector<std::string> header = detail::split_csv_line(line);
        const char* expected[] = {"entity", "group", "tn", "fp", "fn", "tp"};
        bool ok = header.size() == 6;
        for (std::size_t k = 0; ok && k < 6; ++k)
            ok = detail::trim(header[k]) == expected[k];
        if (!ok)
            raise(errc::parse_error, "header must be 'entity,group,tn,fp,fn,tp'");
    }

    std::unordered_set<std::string> seen;
    int row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        ++result.report.total_rows;
        std::vector<std::string> f = detail::split_csv_line(line);
        if (f.size() != 6)
            raise(errc::parse_error,
                  "row " + std::to_string(row) + ": expected 6 fields, got " +
                      std::to_string(f.size()));
        std::string id = detail::trim(f[0]);
        if (id.empty())
            raise(errc::parse_error, "row " + std::to_string(row) + ": empty entity id");
        if (!seen.insert(id).second)
            raise(errc::duplicate_entity, "row " + std::to_string(row) + ": '" + id + "'");
        std::string group = detail::trim(f[1]);
        double tn = detail::parse_double(f[2], row, "tn");
        double fp = detail::parse_double(f[3], row, "fp");
        double fn = detail::parse_double(f[4], row, "fn");
        double tp = detail::parse_double(f[5], row, "tp");

        auto reject = [&](errc code, const std::string& msg) {
            result.report.issues.push_back(
                RowIssue{row, id, errc_name(code), msg, true});
            ++result.report.rejected;
        };

        if (tn < 0.0 || fp < 0.0 || fn < 0.0 || tp < 0.0) {
            reject(errc::negative_input, "negative confusion entry");
            continue;
        }
        double sum = ((tn + fp) + fn) + tp;
        if (sum == 0.0) {
            reject(errc::all_zero, "all confusion entries are zero");
            continue;
        }

        bool probabilities = cfg.mode == ValueMode::probabilities ||
                             (cfg.mode == ValueMode::auto_detect && sum >= 0.5 && sum <= 1.5);
        if (!probabilities) {
            tn /= sum;
            fp /= sum;
            fn /= sum;
            tp /= sum;
        } else if (std::abs(sum - 1.0) > cfg.sum_tolerance) {
            result.report.issues.push_back(RowIssue{
                row, id, "SumDeviation",
                "row sums to " + detail::format_double(sum) + " before repair", false});
        }

        Performance perf;
        if (cfg.repair_prior) {
            double pi = *cfg.repair_prior;
            if (tp > pi || fp > 1.0 - pi) {
                reject(errc::infeasible_repair,
                       tp > pi ? "tp exceeds the repair prior"
                               : "fp exceeds the negative prior");
                continue;
            }
            double given_tn = tn;
            double neg = detail::exact_complement(1.0, pi);
            perf.tp = tp;
            perf.fp = fp;
            perf.fn = detail::exact_complement(pi, tp);
            perf.tn = detail::exact_complement(neg, fp);
            result.report.repair_discrepancies.emplace_back(
                id, std::abs(given_tn - perf.tn));
        } else {
            perf = normalize_performance(tn, fp, fn, tp);
        }
        result.entities.entities.push_back(EntityRecord{id, group, perf});
        ++result.report.loaded;
    }
    return result;
}

struct RefLoadResult {
    ReferenceScores scores;
    std::vector<std::string> warnings;
};

// Two-column CSV (entity,score); the optional header row is skipped. Ids are
// resolved against the entity set; unmatched ids produce warnings.
inline RefLoadResult load_reference_scores(const std::string& path,
                                           const EntitySet& entities) {
    std::ifstream in = detail::open_input(path);
    RefLoadResult result;
    std::string line;
    int row = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        std::vector<std::string> f = detail::split_csv_line(line);
        if (f.size() != 2)
            raise(errc::parse_error,
                  "row " + std::to_string(row) + ": expected 2 fields");
        std::string id = detail::trim(f[0]);
        if (first) {
            first = false;
            if (id == "entity") continue; // header
        }
        double value = detail::parse_double(f[1], row, "score");
        if (entities.index_of(id) == EntitySet::npos) {
            result.warnings.push_back("unknown entity '" + id + "'");
            continue;
        }
        if (!result.scores.emplace(id, value).second)
            raise(errc::duplicate_entity, "row " + std::to_string(row) + ": '" + id + "'");
    }
    if (result.scores.empty())
        raise(errc::no_matching_entities, "no reference scores match the entity set");
    return result;
}

enum class TileFormat { json, csv };

namespace detail {

inline nlohmann::json axes_json(const Grid& g) {
    nlohmann::json a = nlohmann::json::array();
    for (int k = 0; k < g.size; ++k) a.push_back(g.coord(k));
    return a;
}

} // namespace detail

inline nlohmann::json tile_to_json(const ScalarTile& tile) {
    nlohmann::json j;
    j["kind"] = tile.kind;
    j["grid_size"] = tile.grid.size;
    j["a"] = detail::axes_json(tile.grid);
    j["b"] = detail::axes_json(tile.grid);
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < tile.grid.size; ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (int jx = 0; jx < tile.grid.size; ++jx) {
            double v = tile.at(i, jx);
            if (is_defined(v))
                r.push_back(v);
            else
                r.push_back(nullptr);
        }
        rows.push_back(std::move(r));
    }
    j["values"] = std::move(rows);
    j["metadata"] = tile.meta;
    return j;
}

inline nlohmann::json tile_to_json(const EntityTile& tile) {
    nlohmann::json j;
    j["kind"] = "entity";
    j["grid_size"] = tile.grid.size;
    j["rank"] = tile.rank;
    j["a"] = detail::axes_json(tile.grid);
    j["b"] = detail::axes_json(tile.grid);
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < tile.grid.size; ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (int jx = 0; jx < tile.grid.size; ++jx) r.push_back(tile.id_at(i, jx));
        rows.push_back(std::move(r));
    }
    j["values"] = std::move(rows);
    j["metadata"] = nlohmann::json::object();
    return j;
}

inline nlohmann::json tile_to_json(const BoolTile& tile) {
    nlohmann::json j;
    j["kind"] = tile.kind.empty() ? "mask" : tile.kind;
    j["grid_size"] = tile.grid.size;
    j["a"] = detail::axes_json(tile.grid);
    j["b"] = detail::axes_json(tile.grid);
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < tile.grid.size; ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (int jx = 0; jx < tile.grid.size; ++jx) r.push_back(tile.at(i, jx));
        rows.push_back(std::move(r));
    }
    j["values"] = std::move(rows);
    j["metadata"] = nlohmann::json::object();
    return j;
}

namespace detail {

template <typename CellWriter>
inline void write_tile_csv(const Grid& g, std::ostream& out, CellWriter cell) {
    out << "b\\a";
    for (int j = 0; j < g.size; ++j) out << ',' << format_double(g.coord(j));
    out << '\n';
    for (int i = 0; i < g.size; ++i) {
        out << format_double(g.coord(i));
        for (int j = 0; j < g.size; ++j) {
            out << ',';
            cell(out, i, j);
        }
        out << '\n';
    }
}

} // namespace detail

inline void write_tile(const ScalarTile& tile, TileFormat format, std::ostream& out) {
    if (format == TileFormat::json) {
        out << tile_to_json(tile).dump(1) << '\n';
        return;
    }
    detail::write_tile_csv(tile.grid, out, [&](std::ostream& os, int i, int j) {
        double v = tile.at(i, j);
        if (is_defined(v)) os << detail::format_double(v);
    });
}

inline void write_tile(const EntityTile& tile, TileFormat format, std::ostream& out) {
    if (format == TileFormat::json) {
        out << tile_to_json(tile).dump(1) << '\n';
        return;
    }
    detail::write_tile_csv(tile.grid, out, [&](std::ostream& os, int i, int j) {
        os << detail::csv_escape(tile.id_at(i, j));
    });
}

inline void write_tile(const BoolTile& tile, TileFormat format, std::ostream& out) {
    if (format == TileFormat::json) {
        out << tile_to_json(tile).dump(1) << '\n';
        return;
    }
    detail::write_tile_csv(tile.grid, out, [&](std::ostream& os, int i, int j) {
        os << (tile.at(i, j) ? '1' : '0');
    });
}

template <typename Tile>
inline void export_tile(const Tile& tile, TileFormat format,
                        const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    write_tile(tile, format, out);
    if (!out) raise(errc::io_error, "failed writing " + path.string());
}

inline ScalarTile import_scalar_tile(const std::filesystem::path& path) {
    std::ifstream in = detail::open_input(path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::parse_error, path.string() + ": " + e.what());
    }
    int g = j.at("grid_size").get<int>();
    ScalarTile tile(Grid(g), j.at("kind").get<std::string>());
    const nlohmann::json& rows = j.at("values");
    if (rows.size() != static_cast<std::size_t>(g))
        raise(errc::parse_error, "values row count does not match grid_size");
    for (int i = 0; i < g; ++i) {
        const nlohmann::json& r = rows[static_cast<std::size_t>(i)];
        if (r.size() != static_cast<std::size_t>(g))
            raise(errc::parse_error, "values column count does not match grid_size");
        for (int jx = 0; jx < g; ++jx) {
            const nlohmann::json& cell = r[static_cast<std::size_t>(jx)];
            tile.at(i, jx) = cell.is_null() ? kUndefined : cell.get<double>();
        }
    }
    if (j.contains("metadata"))
        for (auto& [key, value] : j.at("metadata").items())
            tile.meta[key] = value.get<std::string>();
    return tile;
}

// Writes a normalized table whose rows sum to exactly 1.0 in double
// arithmetic (left-to-right), nudging tn by the residual when needed, so a
// reload reproduces the set bit for bit.
inline void write_performances_csv(const EntitySet& entities,
                                   const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    out << "entity,group,tn,fp,fn,tp\n";
    for (const EntityRecord& e : entities.entities) {
        double tn = e.perf.tn, fp = e.perf.fp, fn = e.perf.fn, tp = e.perf.tp;
        // steer the row so its left-to-right sum is exactly 1; fn first, its
        // finer ulp grid can always reach an exact sum
        for (double* field : {&fn, &tn}) {
            for (int pass = 0; pass < 32; ++pass) {
                double s = ((tn + fp) + fn) + tp;
                if (s == 1.0) break;
                double err = s - 1.0;
                double next = *field - err;
                if (next == *field)
                    next = std::nextafter(*field,
                                          err > 0.0 ? -std::numeric_limits<double>::infinity()
                                                    : std::numeric_limits<double>::infinity());
                if (next < 0.0) break;
                *field = next;
            }
            if ((((tn + fp) + fn) + tp) == 1.0) break;
        }
        out << detail::csv_escape(e.id) << ',' << detail::csv_escape(e.group) << ','
            << detail::format_double(tn) << ',' << detail::format_double(fp) << ','
            << detail::format_double(fn) << ',' << detail::format_double(tp) << '\n';
    }
    if (!out) raise(errc::io_error, "failed writing " + path.string());
}

inline nlohmann::json report_to_json(const ValidationReport& report) {
    nlohmann::json j;
    j["source"] = report.source;
    j["total_rows"] = report.total_rows;
    j["loaded"] = report.loaded;
    j["rejected"] = report.rejected;
    j["repair_applied"] = report.repair_applied;
    if (report.repair_applied) j["repair_prior"] = report.repair_prior;
    nlohmann::json issues = nlohmann::json::array();
    for (const RowIssue& issue : report.issues) {
        issues.push_back({{"row", issue.row},
                          {"entity", issue.entity_id},
                          {"code", issue.code},
                          {"message", issue.message},
                          {"rejected", issue.rejected}});
    }
    j["issues"] = std::move(issues);
    if (report.repair_applied) {
        nlohmann::json d = nlohmann::json::array();
        for (const auto& [id, delta] : report.repair_discrepancies)
            d.push_back({{"entity", id}, {"tn_discrepancy", delta}});
        j["repair_discrepancies"] = std::move(d);
    }
    return j;
}

} // namespace tilekit
