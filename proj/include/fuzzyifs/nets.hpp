#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace fuzzyifs {

/// A point of R^1 or R^2; the second coordinate is unused (0) in dimension 1.
using Point = std::array<double, 2>;

/// Integer coordinates on a uniform grid, 0 <= i_k <= n.
using GridIndex = std::array<std::uint32_t, 2>;

/// Axis-aligned box [lo_1,hi_1] x ... in dimension 1 or 2.
struct Box {
    int dim = 2;
    Point lo{0.0, 0.0};
    Point hi{1.0, 1.0};

    static Box interval(double a, double b) { return make(1, {a, 0.0}, {b, 0.0}); }
    static Box rect(double a, double b, double c, double d) { return make(2, {a, c}, {b, d}); }
    static Box unit(int dim) { return dim == 1 ? interval(0.0, 1.0) : rect(0.0, 1.0, 0.0, 1.0); }

    static Box make(int dim, Point lo, Point hi) {
        if (dim != 1 && dim != 2)
            throw Error("box dimension must be 1 or 2");
        Box b{dim, lo, hi};
        for (int k = 0; k < dim; ++k)
            if (!(lo[k] < hi[k]))
                throw Error("box must have lo < hi on every axis");
        if (dim == 1)
            b.lo[1] = b.hi[1] = 0.0;
        return b;
    }

    double width(int k) const noexcept { return hi[k] - lo[k]; }

    /// Euclidean length of the main diagonal.
    double diameter() const noexcept {
        double s = 0.0;
        for (int k = 0; k < dim; ++k)
            s += width(k) * width(k);
        return std::sqrt(s);
    }

    /// Inside, allowing a slack of `rel_tol` times the axis width.
    bool contains(const Point& p, double rel_tol = 1e-9) const noexcept {
        for (int k = 0; k < dim; ++k) {
            const double slack = rel_tol * width(k);
            if (!(p[k] >= lo[k] - slack && p[k] <= hi[k] + slack))
                return false;
        }
        return true;
    }

    Point clamp(const Point& p) const noexcept {
        Point q{0.0, 0.0};
        for (int k = 0; k < dim; ++k)
            q[k] = std::clamp(p[k], lo[k], hi[k]);
        return q;
    }

    bool operator==(const Box&) const = default;
};

inline double euclidean(const Point& a, const Point& b) noexcept {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

/// The uniform grid {lo + (i/n)(hi - lo)} of a box. Points are addressed by a
/// linear index whose natural order is the lexicographic order of coordinates.
class Grid {
public:
    Grid() = default;
    Grid(const Box& box, std::uint32_t n) : box_(box), n_(n) {
        if (n == 0)
            throw Error("grid subdivision count must be positive");
        const std::uint64_t total = box.dim == 1 ? std::uint64_t{n} + 1 : (std::uint64_t{n} + 1) * (n + 1);
        if (total > std::numeric_limits<std::uint32_t>::max())
            throw BudgetError("grid too large: n = " + std::to_string(n));
        for (int k = 0; k < 2; ++k)
            step_[k] = k < box.dim ? box.width(k) / n : 0.0;
    }

    const Box& box() const noexcept { return box_; }
    int dim() const noexcept { return box_.dim; }
    std::uint32_t subdivisions() const noexcept { return n_; }
    std::uint32_t per_axis() const noexcept { return n_ + 1; }
    std::uint32_t size() const noexcept { return dim() == 1 ? per_axis() : per_axis() * per_axis(); }
    double spacing(int k) const noexcept { return step_[k]; }
    double min_spacing() const noexcept { return dim() == 1 ? step_[0] : std::min(step_[0], step_[1]); }

    /// Full cell diagonal ||(b-a)/n||.
    double cell_diagonal() const noexcept { return std::hypot(step_[0], step_[1]); }

    GridIndex index(std::uint32_t linear) const noexcept {
        if (dim() == 1)
            return {linear, 0};
        return {linear / per_axis(), linear % per_axis()};
    }

    std::uint32_t linear(const GridIndex& g) const noexcept {
        return dim() == 1 ? g[0] : g[0] * per_axis() + g[1];
    }

    double coord(int k, std::uint32_t i) const noexcept {
        if (i == n_)
            return box_.hi[k];
        return box_.lo[k] + box_.width(k) * (static_cast<double>(i) / n_);
    }

    Point coords(std::uint32_t linear) const noexcept {
        const GridIndex g = index(linear);
        Point p{0.0, 0.0};
        for (int k = 0; k < dim(); ++k)
            p[k] = coord(k, g[k]);
        return p;
    }

    /// Distance between two grid points computed from index differences, so it
    /// is symmetric and translation invariant bit-for-bit.
    double distance(std::uint32_t a, std::uint32_t b) const noexcept {
        const GridIndex ga = index(a), gb = index(b);
        const double dx = (static_cast<double>(ga[0]) - gb[0]) * step_[0];
        const double dy = (static_cast<double>(ga[1]) - gb[1]) * step_[1];
        return std::hypot(dx, dy);
    }

    /// Ceiling index along axis k of a coordinate already inside the box.
    /// Values within 1e-9 cells of a grid line snap to it so grid points are fixed.
    std::uint32_t ceil_index(int k, double x) const noexcept {
        const double t = n_ * ((x - box_.lo[k]) / box_.width(k));
        const double r = std::nearbyint(t);
        double i = std::fabs(t - r) <= 1e-9 ? r : std::ceil(t);
        i = std::clamp(i, 0.0, static_cast<double>(n_));
        return static_cast<std::uint32_t>(i);
    }

    std::uint32_t round_index(int k, double x) const noexcept {
        const double t = n_ * ((x - box_.lo[k]) / box_.width(k));
        return static_cast<std::uint32_t>(std::clamp(std::nearbyint(t), 0.0, static_cast<double>(n_)));
    }

    bool operator==(const Grid& o) const noexcept { return box_ == o.box_ && n_ == o.n_; }

private:
    Box box_{};
    std::uint32_t n_ = 1;
    std::array<double, 2> step_{1.0, 1.0};
};

/// Nearest-member queries over a subset of grid points. Scans Chebyshev rings
/// of cells around the query and falls back to a linear scan when the rings
/// would cost more than the member list. Ties go to the smallest linear index,
/// i.e. the lexicographically smallest point.
class GridOccupancy {
public:
    GridOccupancy() = default;
    GridOccupancy(const Grid& grid, std::vector<std::uint32_t> sorted_members)
        : grid_(grid), members_(std::move(sorted_members)), bits_(grid.size(), 0) {
        for (std::uint32_t m : members_)
            bits_[m] = 1;
    }

    const Grid& grid() const noexcept { return grid_; }
    std::span<const std::uint32_t> members() const noexcept { return members_; }
    bool contains(std::uint32_t linear) const noexcept { return bits_[linear] != 0; }
    bool empty() const noexcept { return members_.empty(); }

    struct Hit {
        std::uint32_t index = 0;
        double distance = std::numeric_limits<double>::infinity();
    };

    /// Nearest member to an arbitrary point.
    Hit nearest(const Point& p) const {
        std::uint32_t centre[2] = {grid_.round_index(0, p[0]), grid_.dim() == 2 ? grid_.round_index(1, p[1]) : 0};
        const Point pc = p;
        return search(centre, [&](std::uint32_t q) { return euclidean(pc, grid_.coords(q)); });
    }

    /// Nearest member to a grid point, distances from index differences.
    Hit nearest_to_grid_point(std::uint32_t a) const {
        if (bits_[a])
            return {a, 0.0};
        const GridIndex g = grid_.index(a);
        std::uint32_t centre[2] = {g[0], g[1]};
        return search(centre, [&](std::uint32_t q) { return grid_.distance(a, q); });
    }

private:
    template <class DistFn>
    Hit search(const std::uint32_t centre[2], DistFn dist) const {
        if (members_.empty())
            throw Error("nearest-point query on an empty set");
        Hit best;
        auto consider = [&](std::uint32_t q) {
            const double d = dist(q);
            if (d < best.distance || (d == best.distance && q < best.index))
                best = {q, d};
        };
        auto brute = [&] {
            best = Hit{};
            for (std::uint32_t q : members_)
                consider(q);
            return best;
        };

        const long n = grid_.subdivisions();
        const double h = grid_.min_spacing();
        const std::size_t budget = members_.size() + 64;
        std::size_t scanned = 0;
        const long cx = centre[0], cy = centre[1];

        for (long r = 0; r <= n; ++r) {
            if (grid_.dim() == 1) {
                for (long x : {cx - r, cx + r}) {
                    if (x >= 0 && x <= n && bits_[x])
                        consider(static_cast<std::uint32_t>(x));
                    if (r == 0)
                        break;
                }
                scanned += 2;
            } else {
                const long y0 = std::max(0L, cy - r), y1 = std::min(n, cy + r);
                const long x0 = std::max(0L, cx - r), x1 = std::min(n, cx + r);
                auto visit = [&](long x, long y) {
                    const std::uint32_t q = static_cast<std::uint32_t>(x * (n + 1) + y);
                    if (bits_[q])
                        consider(q);
                };
                if (r == 0) {
                    visit(cx, cy);
                } else {
                    for (long side : {cx - r, cx + r})
                        if (side >= 0 && side <= n)
                            for (long y = y0; y <= y1; ++y)
                                visit(side, y);
                    for (long side : {cy - r, cy + r})
                        if (side >= 0 && side <= n)
                            for (long x = std::max(x0, cx - r + 1); x <= std::min(x1, cx + r - 1); ++x)
                                visit(x, side);
                }
                scanned += static_cast<std::size_t>(8 * r + 1);
            }
            if ((static_cast<double>(r) + 0.5) * h > best.distance)
                return best;
            if (scanned > budget)
                return brute();
        }
        return best;
    }

    Grid grid_{};
    std::vector<std::uint32_t> members_;
    std::vector<std::uint8_t> bits_;
};

enum class NetKind { uniform, aleatory };

/// Finite ε-net of a box: either the whole uniform grid, or a sampled subset of it.
class Net {
public:
    static Net uniform(const Box& box, std::uint32_t n) {
        Net net;
        net.grid_ = Grid(box, n);
        net.kind_ = NetKind::uniform;
        return net;
    }

    /// Chaos game over the constant maps g_t(z) = t, t in the grid: every step
    /// emits an independent uniform grid point, so this draws `na` linear
    /// indices with XorShift64Star(seed).below(grid size), dedups and sorts.
    static Net aleatory(const Box& box, std::uint32_t n, std::uint64_t na, std::uint64_t seed) {
        if (na == 0)
            throw Error("aleatory net needs at least one sample");
        Grid grid(box, n);
        std::vector<std::uint8_t> hit(grid.size(), 0);
        XorShift64Star rng(seed);
        for (std::uint64_t k = 0; k < na; ++k)
            hit[rng.below(grid.size())] = 1;
        std::vector<std::uint32_t> members;
        for (std::uint32_t i = 0; i < grid.size(); ++i)
            if (hit[i])
                members.push_back(i);
        Net net = subset(box, n, std::move(members));
        net.sample_count_ = na;
        net.seed_ = seed;
        return net;
    }

    /// Explicit subset of the grid of (box, n); treated like an aleatory net.
    static Net subset(const Box& box, std::uint32_t n, std::vector<std::uint32_t> members) {
        Net net;
        net.grid_ = Grid(box, n);
        net.kind_ = NetKind::aleatory;
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        if (members.empty())
            throw Error("net must contain at least one point");
        if (members.back() >= net.grid_.size())
            throw Error("net point outside its grid");
        net.occupancy_ = GridOccupancy(net.grid_, std::move(members));
        net.sample_count_ = net.occupancy_.members().size();
        return net;
    }

    NetKind kind() const noexcept { return kind_; }
    const Grid& grid() const noexcept { return grid_; }
    const Box& box() const noexcept { return grid_.box(); }
    int dim() const noexcept { return grid_.dim(); }
    std::uint32_t subdivisions() const noexcept { return grid_.subdivisions(); }
    std::uint64_t sample_count() const noexcept { return sample_count_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::size_t size() const noexcept {
        return kind_ == NetKind::uniform ? grid_.size() : occupancy_.members().size();
    }

    /// k-th net point in lexicographic order.
    std::uint32_t point(std::size_t k) const noexcept {
        return kind_ == NetKind::uniform ? static_cast<std::uint32_t>(k) : occupancy_.members()[k];
    }

    std::vector<std::uint32_t> points() const {
        std::vector<std::uint32_t> out(size());
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = point(k);
        return out;
    }

    bool contains(std::uint32_t linear) const noexcept {
        return linear < grid_.size() && (kind_ == NetKind::uniform || occupancy_.contains(linear));
    }

    /// Nominal ε: half the cell diagonal, sqrt(d)/(2n) on the unit cube.
    double epsilon() const noexcept { return 0.5 * grid_.cell_diagonal(); }

    /// ε used in error bounds: the full cell diagonal (the ceiling projection
    /// can move a point that far). For aleatory nets this is the source grid's
    /// value and carries no guarantee.
    double epsilon_eff() const noexcept { return grid_.cell_diagonal(); }

    bool bound_is_heuristic() const noexcept { return kind_ == NetKind::aleatory; }

    Point coords(std::uint32_t linear) const noexcept { return grid_.coords(linear); }

    /// The net's ε-projection: ceiling for uniform nets, nearest point otherwise.
    std::uint32_t project(const Point& p) const;

    /// Like project(), but points outside the box are clamped onto it first and
    /// counted in `clamp_events`.
    std::uint32_t project_clamped(const Point& p, std::uint64_t& clamp_events) const {
        if (!box().contains(p)) {
            ++clamp_events;
            return project(box().clamp(p));
        }
        return project(p);
    }

    const GridOccupancy& occupancy() const noexcept { return occupancy_; }

private:
    Grid grid_{};
    NetKind kind_ = NetKind::uniform;
    GridOccupancy occupancy_;
    std::uint64_t sample_count_ = 0;
    std::uint64_t seed_ = 0;
};

inline Net build_uniform_net(const Box& box, std::uint32_t n) { return Net::uniform(box, n); }

inline Net build_aleatory_net(const Box& box, std::uint32_t n, std::uint64_t na, std::uint64_t seed) {
    return Net::aleatory(box, n, na, seed);
}

/// Ceiling projection r(z)_k = ceil(n (z_k - a_k)/(b_k - a_k)) mapped back to the grid.
inline std::uint32_t project_uniform(const Net& net, const Point& p) {
    const Box& box = net.box();
    if (!box.contains(p))
        throw OutOfDomainError("point outside the box");
    const Point q = box.clamp(p);
    GridIndex g{0, 0};
    for (int k = 0; k < box.dim; ++k)
        g[k] = net.grid().ceil_index(k, q[k]);
    return net.grid().linear(g);
}

/// Nearest net point, ties to the lexicographically smallest.
inline std::uint32_t project_nearest(const Net& net, const Point& p) {
    if (net.kind() == NetKind::uniform) {
        const Grid& grid = net.grid();
        const Point q = net.box().clamp(p);
        GridIndex g{0, 0};
        for (int k = 0; k < grid.dim(); ++k) {
            // Round half down so the smaller coordinate wins exact ties.
            const double t = grid.subdivisions() * ((q[k] - grid.box().lo[k]) / grid.box().width(k));
            const double lower = std::floor(t);
            double i = t - lower > 0.5 ? lower + 1.0 : lower;
            g[k] = static_cast<std::uint32_t>(std::clamp(i, 0.0, static_cast<double>(grid.subdivisions())));
        }
        return grid.linear(g);
    }
    return net.occupancy().nearest(p).index;
}

inline std::uint32_t Net::project(const Point& p) const {
    return kind_ == NetKind::uniform ? project_uniform(*this, p) : project_nearest(*this, p);
}

} // namespace fuzzyifs
