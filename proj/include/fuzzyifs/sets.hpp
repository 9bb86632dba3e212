#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"
#include "nets.hpp"

namespace fuzzyifs {

/// Membership values live on the grid {k/255 : k = 0..255}.
inline constexpr int kLevels = 255;

/// round(255 v) with halves rounded up, v clamped to [0,1].
inline std::uint8_t quantize(double v) noexcept {
    const double s = std::floor(std::clamp(v, 0.0, 1.0) * kLevels + 0.5);
    return static_cast<std::uint8_t>(std::clamp(s, 0.0, static_cast<double>(kLevels)));
}

inline double level_value(std::uint8_t level) noexcept { return static_cast<double>(level) / kLevels; }

/// Finite set of grid points (sorted linear indices).
struct DiscreteSet {
    Grid grid{};
    std::vector<std::uint32_t> points;

    DiscreteSet() = default;
    DiscreteSet(const Grid& g, std::vector<std::uint32_t> pts) : grid(g), points(std::move(pts)) {
        std::sort(points.begin(), points.end());
        points.erase(std::unique(points.begin(), points.end()), points.end());
    }

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
    bool contains(std::uint32_t p) const noexcept { return std::binary_search(points.begin(), points.end(), p); }

    bool operator==(const DiscreteSet& o) const noexcept { return grid == o.grid && points == o.points; }
};

/// Sparse fuzzy set on a grid: membership levels[k]/255 at points[k], 0 elsewhere.
/// Points are sorted and every stored level is positive.
struct DiscreteFuzzySet {
    Grid grid{};
    std::vector<std::uint32_t> points;
    std::vector<std::uint8_t> levels;

    DiscreteFuzzySet() = default;

    static DiscreteFuzzySet from_pairs(const Grid& g, std::vector<std::pair<std::uint32_t, std::uint8_t>> pairs) {
        std::sort(pairs.begin(), pairs.end());
        DiscreteFuzzySet u;
        u.grid = g;
        for (const auto& [p, lvl] : pairs) {
            if (lvl == 0)
                continue;
            if (!u.points.empty() && u.points.back() == p) {
                u.levels.back() = std::max(u.levels.back(), lvl);
                continue;
            }
            u.points.push_back(p);
            u.levels.push_back(lvl);
        }
        return u;
    }

    static DiscreteFuzzySet from_dense(const Grid& g, std::span<const std::uint8_t> dense) {
        DiscreteFuzzySet u;
        u.grid = g;
        for (std::uint32_t i = 0; i < dense.size(); ++i)
            if (dense[i]) {
                u.points.push_back(i);
                u.levels.push_back(dense[i]);
            }
        return u;
    }

    std::vector<std::uint8_t> to_dense() const {
        std::vector<std::uint8_t> dense(grid.size(), 0);
        for (std::size_t k = 0; k < points.size(); ++k)
            dense[points[k]] = levels[k];
        return dense;
    }

    std::uint8_t level_at(std::uint32_t p) const noexcept {
        auto it = std::lower_bound(points.begin(), points.end(), p);
        return it != points.end() && *it == p ? levels[it - points.begin()] : 0;
    }

    double at(std::uint32_t p) const noexcept { return level_value(level_at(p)); }

    std::uint8_t max_level() const noexcept {
        return levels.empty() ? 0 : *std::max_element(levels.begin(), levels.end());
    }

    bool normal() const noexcept { return max_level() == kLevels; }
    std::size_t support_size() const noexcept { return points.size(); }

    DiscreteSet support() const { return DiscreteSet(grid, points); }

    bool operator==(const DiscreteFuzzySet& o) const noexcept {
        return grid == o.grid && points == o.points && levels == o.levels;
    }
};

/// Crisp α-cut at an exact level: {x : level(x) >= k}, k >= 1.
inline DiscreteSet alpha_cut_level(const DiscreteFuzzySet& u, std::uint8_t k) {
    if (k == 0)
        throw Error("alpha-cut level must be positive");
    DiscreteSet out;
    out.grid = u.grid;
    for (std::size_t i = 0; i < u.points.size(); ++i)
        if (u.levels[i] >= k)
            out.points.push_back(u.points[i]);
    return out;
}

/// [u]^α = {x : u(x) >= α}, α in (0,1]. May be empty.
inline DiscreteSet alpha_cut(const DiscreteFuzzySet& u, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw Error("alpha must lie in (0,1]");
    DiscreteSet out;
    out.grid = u.grid;
    for (std::size_t i = 0; i < u.points.size(); ++i)
        if (level_value(u.levels[i]) >= alpha)
            out.points.push_back(u.points[i]);
    return out;
}

/// χ_K: membership 1 on K.
inline DiscreteFuzzySet characteristic(const DiscreteSet& k) {
    if (k.empty())
        throw Error("characteristic function of an empty set");
    DiscreteFuzzySet u;
    u.grid = k.grid;
    u.points = k.points;
    u.levels.assign(k.points.size(), static_cast<std::uint8_t>(kLevels));
    return u;
}

} // namespace fuzzyifs
