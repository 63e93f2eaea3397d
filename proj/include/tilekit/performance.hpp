#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilekit/error.hpp"

namespace tilekit {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

inline bool is_defined(double x) noexcept { return !std::isnan(x); }

// A performance is a probability measure over {tn, fp, fn, tp}.
struct Performance {
    double tn = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double tp = 0.0;

    double prior_pos() const noexcept { return fn + tp; }
    double prior_neg() const noexcept { return tn + fp; }
    double sum() const noexcept { return tn + fp + fn + tp; }

    bool is_valid(double tol = 1e-9) const noexcept {
        return tn >= 0.0 && fp >= 0.0 && fn >= 0.0 && tp >= 0.0 &&
               std::abs(sum() - 1.0) <= tol;
    }
};

// The two degenerate no-skill classifiers at a fixed positive prior.
inline Performance always_negative(double prior_pos) noexcept {
    return Performance{1.0 - prior_pos, 0.0, prior_pos, 0.0};
}
inline Performance always_positive(double prior_pos) noexcept {
    return Performance{0.0, 1.0 - prior_pos, 0.0, prior_pos};
}

// Importance weights parameterizing a ranking score: a weighs true positives
// against true negatives, b weighs false negatives against false positives.
struct Importance {
    double a = 0.5;
    double b = 0.5;

    bool is_valid() const noexcept {
        return a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0;
    }
};

struct ScoreSet {
    double tpr = kUndefined;
    double tnr = kUndefined;
    double npv = kUndefined;
    double ppv = kUndefined;
    double accuracy = kUndefined;
    double f1 = kUndefined;
};

struct EntityRecord {
    std::string id;
    std::string group; // empty = ungrouped
    Performance perf;
};

struct EntitySet {
    std::vector<EntityRecord> entities;

    std::size_t size() const noexcept { return entities.size(); }
    bool empty() const noexcept { return entities.empty(); }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t index_of(std::string_view id) const noexcept {
        for (std::size_t i = 0; i < entities.size(); ++i)
            if (entities[i].id == id) return i;
        return npos;
    }

    const EntityRecord& at(std::string_view id) const {
        std::size_t i = index_of(id);
        if (i == npos) raise(errc::unknown_entity, std::string(id));
        return entities[i];
    }
};

inline Performance normalize_performance(double tn, double fp, double fn, double tp) {
    if (tn < 0.0 || fp < 0.0 || fn < 0.0 || tp < 0.0)
        raise(errc::negative_input, "confusion entries must be nonnegative");
    double s = ((tn + fp) + fn) + tp;
    if (s == 0.0) raise(errc::all_zero, "confusion entries sum to zero");
    // a sum already within a couple of ulp of 1 is as normalized as doubles
    // allow; dividing by it would only add rounding noise and break the
    // export/reload fixed point
    if (std::abs(s - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon())
        return Performance{tn, fp, fn, tp};
    return Performance{tn / s, fp / s, fn / s, tp / s};
}

// The importance-parameterized ranking score. Undefined (0/0) is reported as
// NaN. The denominator accumulates the numerator first, which guarantees
// num <= den and hence a result in [0, 1] whenever it is defined.
inline double ranking_score(const Performance& p, Importance w) noexcept {
    double num = (1.0 - w.a) * p.tn + w.a * p.tp;
    double den = num + ((1.0 - w.b) * p.fp + w.b * p.fn);
    if (den == 0.0) return kUndefined;
    return num / den;
}

// F-beta in (a, b) coordinates: the right edge of the tile, a = 1. Delegating
// keeps the identity f_beta(p, b) == ranking_score(p, (1, b)) bitwise.
inline double f_beta(const Performance& p, double b) {
    if (!(b > 0.0 && b < 1.0))
        raise(errc::invalid_argument, "f_beta weight must lie in (0,1)");
    return ranking_score(p, Importance{1.0, b});
}

// beta = sqrt(b/(1-b)) and its inverse: the classic F-beta parameter for a
// given vertical position b on the right edge.
inline double beta_from_weight(double b) noexcept { return std::sqrt(b / (1.0 - b)); }
inline double weight_from_beta(double beta) noexcept {
    return beta * beta / (1.0 + beta * beta);
}

inline ScoreSet named_scores(const Performance& p) noexcept {
    ScoreSet s;
    s.tpr = ranking_score(p, Importance{1.0, 1.0});
    s.tnr = ranking_score(p, Importance{0.0, 0.0});
    s.npv = ranking_score(p, Importance{0.0, 1.0});
    s.ppv = ranking_score(p, Importance{1.0, 0.0});
    s.accuracy = ranking_score(p, Importance{0.5, 0.5});
    s.f1 = ranking_score(p, Importance{1.0, 0.5});
    return s;
}

// Canonical (a, b) placement of the named scores on the tile.
inline std::optional<Importance> importance_for_named_score(std::string_view name) {
    if (name == "tpr") return Importance{1.0, 1.0};
    if (name == "tnr") return Importance{0.0, 0.0};
    if (name == "npv") return Importance{0.0, 1.0};
    if (name == "ppv") return Importance{1.0, 0.0};
    if (name == "accuracy") return Importance{0.5, 0.5};
    if (name == "f1") return Importance{1.0, 0.5};
    return std::nullopt;
}

// Best achievable ranking score among no-skill performances with the given
// positive prior. The score is linear-fractional, hence monotone, in the
// predicted-positive rate, so the maximum sits at one of the two endpoint
// classifiers. Undefined endpoints are skipped.
inline double noskill_score(double prior_pos, Importance w) noexcept {
    double neg = ranking_score(always_negative(prior_pos), w);
    double pos = ranking_score(always_positive(prior_pos), w);
    if (!is_defined(neg)) return pos;
    if (!is_defined(pos)) return neg;
    return std::max(neg, pos);
}

struct ScoreConstraint {
    Importance w;
    double value = 0.0;
};

namespace detail {

// Partial-pivot Gaussian elimination on a tiny dense system. Pivots are
// judged relative to the largest magnitude in their original row.
template <int N>
inline bool solve_linear(std::array<std::array<double, N + 1>, N>& m,
                         std::array<double, N>& out, double rel_tol) {
    std::array<double, N> row_scale{};
    for (int r = 0; r < N; ++r) {
        double mx = 0.0;
        for (int c = 0; c < N; ++c) mx = std::max(mx, std::abs(m[r][c]));
        row_scale[r] = mx;
    }
    for (int col = 0; col < N; ++col) {
        int best = -1;
        double best_ratio = 0.0;
        for (int r = col; r < N; ++r) {
            if (row_scale[r] == 0.0) continue;
            double ratio = std::abs(m[r][col]) / row_scale[r];
            if (ratio > best_ratio) {
                best_ratio = ratio;
                best = r;
            }
        }
        if (best < 0 || best_ratio <= rel_tol) return false;
        std::swap(m[col], m[best]);
        std::swap(row_scale[col], row_scale[best]);
        for (int r = col + 1; r < N; ++r) {
            double f = m[r][col] / m[col][col];
            if (f == 0.0) continue;
            for (int c = col; c <= N; ++c) m[r][c] -= f * m[col][c];
        }
    }
    for (int r = N - 1; r >= 0; --r) {
        double acc = m[r][N];
        for (int c = r + 1; c < N; ++c) acc -= m[r][c] * out[c];
        out[r] = acc / m[r][r];
    }
    return true;
}

} // namespace detail

// Rebuilds a performance from known ranking-score values: either three score
// constraints, or two plus the positive prior. Each known score s at (a, b)
// yields the linear equation
//   (1-a)(1-s) tn - s(1-b) fp - s b fn + a(1-s) tp = 0,
// and the normalization tn+fp+fn+tp = 1 completes the 4x4 system.
inline Performance recover_performance(std::span<const ScoreConstraint> constraints,
                                       std::optional<double> prior_pos = std::nullopt) {
    std::size_t needed = prior_pos.has_value() ? 2 : 3;
    if (constraints.size() != needed)
        raise(errc::invalid_argument,
              "need 3 score constraints, or 2 plus the positive prior");

    std::array<std::array<double, 5>, 4> m{};
    int r = 0;
    for (const ScoreConstraint& c : constraints) {
        if (!is_defined(c.value))
            raise(errc::invalid_argument, "undefined score constraint");
        double a = c.w.a, b = c.w.b, s = c.value;
        m[r][0] = (1.0 - a) * (1.0 - s);
        m[r][1] = -s * (1.0 - b);
        m[r][2] = -s * b;
        m[r][3] = a * (1.0 - s);
        m[r][4] = 0.0;
        ++r;
    }
    if (prior_pos) {
        m[r] = {0.0, 0.0, 1.0, 1.0, *prior_pos};
        ++r;
    }
    m[r] = {1.0, 1.0, 1.0, 1.0, 1.0};

    std::array<double, 4> x{};
    if (!detail::solve_linear<4>(m, x, 1e-10))
        raise(errc::singular_system, "constraint system is rank deficient");

    for (double& v : x) {
        if (v < 0.0) {
            if (v < -1e-9)
                raise(errc::infeasible_solution, "recovered component is negative");
            v = 0.0; // roundoff
        }
    }
    return Performance{x[0], x[1], x[2], x[3]};
}

} // namespace tilekit
