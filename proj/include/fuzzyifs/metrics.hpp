#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"
#include "nets.hpp"
#include "sets.hpp"

namespace fuzzyifs {

/// max_{a in A} min_{b in B} d(a, b), grid-bucketed nearest search.
inline double directed_hausdorff(const DiscreteSet& a, const GridOccupancy& b) {
    double worst = 0.0;
    for (std::uint32_t p : a.points)
        worst = std::max(worst, b.nearest_to_grid_point(p).distance);
    return worst;
}

/// Hausdorff distance between two nonempty sets on the same grid.
inline double hausdorff(const DiscreteSet& a, const DiscreteSet& b) {
    if (a.empty() || b.empty())
        throw Error("Hausdorff distance of an empty set");
    if (!(a.grid == b.grid))
        throw Error("Hausdorff distance between sets on different grids");
    if (a.points == b.points)
        return 0.0;
    const GridOccupancy occ_a(a.grid, a.points), occ_b(b.grid, b.points);
    return std::max(directed_hausdorff(a, occ_b), directed_hausdorff(b, occ_a));
}

/// d∞(u, v) = sup_α h([u]^α, [v]^α). The cuts only change at levels that occur
/// in u or v, so the sup is a max over those levels.
inline double d_infinity(const DiscreteFuzzySet& u, const DiscreteFuzzySet& v) {
    if (!(u.grid == v.grid))
        throw Error("d_infinity between fuzzy sets on different grids");
    if (!u.normal() || !v.normal())
        throw Error("d_infinity needs normal fuzzy sets");
    if (u == v)
        return 0.0;
    std::array<bool, 256> present{};
    for (auto l : u.levels)
        present[l] = true;
    for (auto l : v.levels)
        present[l] = true;
    double worst = 0.0;
    for (int k = 1; k <= kLevels; ++k)
        if (present[k])
            worst = std::max(worst, hausdorff(alpha_cut_level(u, static_cast<std::uint8_t>(k)),
                                              alpha_cut_level(v, static_cast<std::uint8_t>(k))));
    return worst;
}

enum class StopReason { none, max_iterations, tolerance, stall };

inline const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::none: return "none";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::tolerance: return "tolerance";
    case StopReason::stall: return "stall";
    }
    return "?";
}

/// Distances between consecutive iterates.
struct IterationHistory {
    std::vector<double> values;
    double tol = 0.0;
    /// Stop once this many trailing values are identical; 0 disables.
    int stall_count = 3;

    void record(double v) {
        if (v < 0.0)
            throw Error("negative distance in iteration history");
        values.push_back(v);
    }
};

inline StopReason should_stop(const IterationHistory& h, long n_done, long n_max) {
    if (!h.values.empty() && h.values.back() < h.tol)
        return StopReason::tolerance;
    const std::size_t k = h.stall_count > 0 ? static_cast<std::size_t>(h.stall_count) : 0;
    if (k > 0 && h.values.size() >= k &&
        std::all_of(h.values.end() - static_cast<std::ptrdiff_t>(k), h.values.end(),
                    [&](double v) { return v == h.values.back(); }))
        return StopReason::stall;
    if (n_done >= n_max)
        return StopReason::max_iterations;
    return StopReason::none;
}

} // namespace fuzzyifs
