#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tilekit/error.hpp"
#include "tilekit/performance.hpp"

namespace tilekit {

// Square discretization of the importance plane: both axes hold G linearly
// spaced values covering [0, 1] inclusive.
struct Grid {
    int size = 2;

    Grid() = default;
    explicit Grid(int g) : size(g) {
        if (g < 2) raise(errc::invalid_argument, "grid size must be >= 2");
    }

    double coord(int k) const noexcept {
        return static_cast<double>(k) / static_cast<double>(size - 1);
    }

    std::vector<double> axis() const {
        std::vector<double> v(static_cast<std::size_t>(size));
        for (int k = 0; k < size; ++k) v[static_cast<std::size_t>(k)] = coord(k);
        return v;
    }

    // Nearest grid index for a coordinate in [0, 1]; clamped outside.
    int snap(double x) const noexcept {
        double k = std::round(x * static_cast<double>(size - 1));
        if (k < 0.0) return 0;
        if (k > static_cast<double>(size - 1)) return size - 1;
        return static_cast<int>(k);
    }

    std::size_t cells() const noexcept {
        return static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
    }

    friend bool operator==(const Grid& lhs, const Grid& rhs) noexcept {
        return lhs.size == rhs.size;
    }
};

// Scalar field over the grid. Row index i runs over b, column index j over a;
// undefined entries are NaN.
struct ScalarTile {
    Grid grid;
    std::vector<double> values;
    std::string kind;
    std::map<std::string, std::string> meta;

    ScalarTile() = default;
    ScalarTile(Grid g, std::string tile_kind)
        : grid(g), values(g.cells(), kUndefined), kind(std::move(tile_kind)) {}

    double& at(int i, int j) noexcept {
        return values[static_cast<std::size_t>(i) * grid.size + j];
    }
    double at(int i, int j) const noexcept {
        return values[static_cast<std::size_t>(i) * grid.size + j];
    }
};

struct BoolTile {
    Grid grid;
    std::vector<std::uint8_t> mask;
    std::string kind;

    BoolTile() = default;
    BoolTile(Grid g, std::string tile_kind)
        : grid(g), mask(g.cells(), 0), kind(std::move(tile_kind)) {}

    bool at(int i, int j) const noexcept {
        return mask[static_cast<std::size_t>(i) * grid.size + j] != 0;
    }
    void set(int i, int j, bool v) noexcept {
        mask[static_cast<std::size_t>(i) * grid.size + j] = v ? 1 : 0;
    }
};

inline void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) raise(errc::grid_mismatch, "tiles live on different grids");
}

} // namespace tilekit
