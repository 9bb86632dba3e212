#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "expr.hpp"
#include "nets.hpp"
#include "random.hpp"

namespace fuzzyifs {

/// φ(z) = A z + b with z = (x1, [y1,] x2, [y2,] ...) and A of shape d × (m·d), row major.
struct AffineForm {
    int dim = 2;
    int arity = 1;
    std::vector<double> matrix;
    std::vector<double> offset;

    double at(int row, int col) const { return matrix[static_cast<std::size_t>(row) * dim * arity + col]; }
};

/// Variable names visible to a map's coordinate expressions. With arity 1 the
/// short aliases x (and y) are declared as well.
inline std::vector<std::string> map_variables(int dim, int arity) {
    std::vector<std::string> vars;
    for (int i = 1; i <= arity; ++i) {
        vars.push_back("x" + std::to_string(i));
        if (dim == 2)
            vars.push_back("y" + std::to_string(i));
    }
    if (arity == 1) {
        vars.push_back("x");
        if (dim == 2)
            vars.push_back("y");
    }
    return vars;
}

/// A map X^m → X given as an affine form, coordinate expressions, or both.
class MapSpec {
public:
    MapSpec() = default;

    static MapSpec from_affine(AffineForm form) {
        if (form.dim != 1 && form.dim != 2)
            throw Error("map dimension must be 1 or 2");
        if (form.arity < 1)
            throw Error("map arity must be at least 1");
        if (form.matrix.size() != static_cast<std::size_t>(form.dim * form.dim * form.arity) ||
            form.offset.size() != static_cast<std::size_t>(form.dim))
            throw Error("affine form has the wrong shape");
        MapSpec m;
        m.dim_ = form.dim;
        m.arity_ = form.arity;
        m.affine_ = std::move(form);
        return m;
    }

    /// One expression per output coordinate over map_variables(dim, arity).
    static MapSpec from_expressions(int dim, int arity, std::vector<Expression> coords) {
        if (static_cast<int>(coords.size()) != dim)
            throw Error("need one expression per output coordinate");
        MapSpec m;
        m.dim_ = dim;
        m.arity_ = arity;
        m.exprs_ = std::move(coords);
        return m;
    }

    static MapSpec parse(int dim, int arity, const std::vector<std::string>& coords) {
        std::vector<Expression> exprs;
        for (const auto& c : coords)
            exprs.push_back(parse_expression(c, map_variables(dim, arity)));
        return from_expressions(dim, arity, std::move(exprs));
    }

    int dim() const noexcept { return dim_; }
    int arity() const noexcept { return arity_; }
    const std::optional<AffineForm>& affine() const noexcept { return affine_; }
    const std::vector<Expression>& expressions() const noexcept { return exprs_; }
    const std::optional<double>& lipschitz_override() const noexcept { return lipschitz_override_; }

    void set_lipschitz_override(double value) { lipschitz_override_ = value; }
    void set_affine(AffineForm form) {
        if (form.dim != dim_ || form.arity != arity_)
            throw Error("affine form does not match the map shape");
        affine_ = std::move(form);
    }

    /// Evaluate at (p_1, ..., p_m). Uses the affine form when present.
    Point apply(std::span<const Point> inputs) const {
        if (static_cast<int>(inputs.size()) != arity_)
            throw Error("map applied to the wrong number of points");
        Point out{0.0, 0.0};
        if (affine_) {
            const int cols = dim_ * arity_;
            for (int r = 0; r < dim_; ++r) {
                double s = affine_->offset[r];
                for (int c = 0; c < cols; ++c)
                    s += affine_->matrix[static_cast<std::size_t>(r) * cols + c] * inputs[c / dim_][c % dim_];
                out[r] = s;
            }
            return out;
        }
        std::array<double, 16> buf{};
        std::vector<double> heap;
        const std::size_t nvars = static_cast<std::size_t>(dim_ * arity_) + (arity_ == 1 ? dim_ : 0);
        double* values = buf.data();
        if (nvars > buf.size()) {
            heap.resize(nvars);
            values = heap.data();
        }
        std::size_t k = 0;
        for (int i = 0; i < arity_; ++i)
            for (int c = 0; c < dim_; ++c)
                values[k++] = inputs[i][c];
        if (arity_ == 1)
            for (int c = 0; c < dim_; ++c)
                values[k++] = inputs[0][c];
        for (int r = 0; r < dim_; ++r)
            out[r] = exprs_[r].evaluate(std::span<const double>(values, nvars));
        return out;
    }

    Point apply(const Point& p) const { return apply(std::span<const Point>(&p, 1)); }

private:
    int dim_ = 2;
    int arity_ = 1;
    std::optional<AffineForm> affine_;
    std::vector<Expression> exprs_;
    std::optional<double> lipschitz_override_;
};

/// Recover the affine form of an expression map by probing at the origin and
/// the unit vectors, then confirm it at `checks` random points of box^m.
/// Returns nothing when the map is not affine (or cannot be evaluated).
inline std::optional<AffineForm> detect_affine(const MapSpec& map, const Box& box, int checks = 1000) {
    if (map.expressions().empty())
        return map.affine();
    const int d = map.dim(), m = map.arity(), cols = d * m;
    AffineForm form;
    form.dim = d;
    form.arity = m;
    form.matrix.assign(static_cast<std::size_t>(d * cols), 0.0);
    form.offset.assign(d, 0.0);
    std::vector<Point> z(m, Point{0.0, 0.0});
    try {
        const Point b = map.apply(z);
        for (int r = 0; r < d; ++r)
            form.offset[r] = b[r];
        for (int c = 0; c < cols; ++c) {
            z.assign(m, Point{0.0, 0.0});
            z[c / d][c % d] = 1.0;
            const Point v = map.apply(z);
            for (int r = 0; r < d; ++r)
                form.matrix[static_cast<std::size_t>(r) * cols + c] = v[r] - b[r];
        }
        const MapSpec probe = MapSpec::from_affine(form);
        XorShift64Star rng(0xAFF1E);
        for (int t = 0; t < checks; ++t) {
            for (auto& p : z)
                for (int k = 0; k < d; ++k)
                    p[k] = box.lo[k] + rng.uniform() * box.width(k);
            const Point want = map.apply(z);
            const Point got = probe.apply(z);
            for (int r = 0; r < d; ++r)
                if (std::fabs(want[r] - got[r]) > 1e-9 * (1.0 + std::fabs(want[r])))
                    return std::nullopt;
        }
    } catch (const DomainError&) {
        return std::nullopt;
    }
    return form;
}

/// Grey maps are present exactly when the system is fuzzy.
struct SystemSpec {
    Box box{};
    int arity = 1;
    std::vector<MapSpec> maps;
    std::vector<GreyMap> grey;

    bool fuzzy() const noexcept { return !grey.empty(); }
    bool generalized() const noexcept { return arity > 1; }
    int dim() const noexcept { return box.dim; }
    std::size_t size() const noexcept { return maps.size(); }
};

namespace detail {

inline double spectral_norm_2x2(double a, double b, double c, double d) {
    // Largest eigenvalue of MᵀM for M = [[a,b],[c,d]].
    const double p = a * a + c * c, q = a * b + c * d, r = b * b + d * d;
    const double half = 0.5 * (p - r);
    const double lambda = 0.5 * (p + r) + std::sqrt(half * half + q * q);
    return std::sqrt(lambda);
}

/// sup ||Σ B_i u_i|| over unit vectors u_i in R^2, B_i the 2x2 blocks of an affine form.
/// Multi-start projected gradient ascent, then a random-sample cross-check.
inline double product_sphere_sup(const AffineForm& f) {
    const int m = f.arity;
    struct Block { double a, b, c, d; };
    std::vector<Block> blocks(m);
    for (int i = 0; i < m; ++i)
        blocks[i] = {f.at(0, 2 * i), f.at(0, 2 * i + 1), f.at(1, 2 * i), f.at(1, 2 * i + 1)};

    auto value = [&](const std::vector<double>& th, double& sx, double& sy) {
        sx = sy = 0.0;
        for (int i = 0; i < m; ++i) {
            const double ux = std::cos(th[i]), uy = std::sin(th[i]);
            sx += blocks[i].a * ux + blocks[i].b * uy;
            sy += blocks[i].c * ux + blocks[i].d * uy;
        }
        return std::hypot(sx, sy);
    };

    constexpr double two_pi = 6.283185307179586;
    XorShift64Star rng(0x11F5C0DEULL);
    double best = 0.0;
    std::vector<double> th(m), trial(m), grad(m);
    for (int start = 0; start < 64; ++start) {
        for (auto& t : th)
            t = two_pi * rng.uniform();
        double sx, sy;
        double f0 = value(th, sx, sy);
        double step = 0.1;
        for (int it = 0; it < 200 && step > 1e-14; ++it) {
            if (f0 == 0.0)
                break;
            // Tangential gradient: d/dθ_i of ||s|| = (s/||s||) · B_i u_i'.
            for (int i = 0; i < m; ++i) {
                const double dx = -std::sin(th[i]), dy = std::cos(th[i]);
                const double gx = blocks[i].a * dx + blocks[i].b * dy;
                const double gy = blocks[i].c * dx + blocks[i].d * dy;
                grad[i] = (sx * gx + sy * gy) / f0;
            }
            for (;;) {
                for (int i = 0; i < m; ++i)
                    trial[i] = th[i] + step * grad[i];
                double tx, ty;
                const double f1 = value(trial, tx, ty);
                if (f1 >= f0) {
                    th.swap(trial);
                    f0 = f1;
                    sx = tx;
                    sy = ty;
                    step = std::min(step * 1.5, 100.0);
                    break;
                }
                step *= 0.5;
                if (step < 1e-14)
                    break;
            }
        }
        best = std::max(best, f0);
    }

    for (int s = 0; s < 1000000; ++s) {
        for (auto& t : th)
            t = two_pi * rng.uniform();
        double sx, sy;
        best = std::max(best, value(th, sx, sy));
    }
    return best;
}

} // namespace detail

/// Lipschitz constant of an affine map, w.r.t. the maximum metric on X^m.
inline double lipschitz_affine(const AffineForm& f) {
    if (f.dim == 1) {
        double s = 0.0;
        for (double a : f.matrix)
            s += std::fabs(a);
        return s;
    }
    if (f.arity == 1)
        return detail::spectral_norm_2x2(f.at(0, 0), f.at(0, 1), f.at(1, 0), f.at(1, 1));
    return detail::product_sphere_sup(f);
}

inline double lipschitz_affine(const MapSpec& map) {
    if (!map.affine())
        throw Error("map has no affine form");
    return lipschitz_affine(*map.affine());
}

/// Lipschitz constant used for one map: the override if given, else the affine form.
inline double lipschitz_map(const MapSpec& map, const Box& box) {
    if (map.lipschitz_override())
        return *map.lipschitz_override();
    if (map.affine())
        return lipschitz_affine(*map.affine());
    if (auto form = detect_affine(map, box))
        return lipschitz_affine(*form);
    throw Error("cannot bound Lipschitz constant of a non-affine map; give a lipschitz override");
}

/// α_S = max_j Lip(φ_j).
inline double lipschitz_system(const SystemSpec& spec) {
    if (spec.maps.empty())
        throw Error("system has no maps");
    double alpha = 0.0;
    for (const auto& m : spec.maps)
        alpha = std::max(alpha, lipschitz_map(m, spec.box));
    return alpha;
}

/// Error bound after N steps: 5ε/(1-α) + α^N D.
inline double predicted_resolution(double epsilon, long iterations, double alpha, double diameter) {
    return 5.0 * epsilon / (1.0 - alpha) + std::pow(alpha, static_cast<double>(iterations)) * diameter;
}

struct ResolutionPlan {
    double delta = 0.0;
    double theta = 0.5;
    double epsilon = 0.0;
    long iterations = 0;
    double diameter = 0.0;
    double alpha = 0.0;
    bool feasible = false;
    /// (1-θ)δ >= D: no iteration is needed for the α^N D term.
    bool zero_iterations = false;
};

/// ε = (1-α)θδ/5 and N = ceil(log((1-θ)δ/D) / log α), clamped at 0.
inline ResolutionPlan plan_resolution(double delta, double theta, double diameter, double alpha) {
    if (!(delta > 0.0))
        throw Error("resolution must be positive");
    if (!(theta > 0.0 && theta < 1.0))
        throw Error("theta must lie in (0,1)");
    if (!(diameter > 0.0))
        throw Error("diameter must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error("Lipschitz constant must lie in (0,1)");

    ResolutionPlan plan;
    plan.delta = delta;
    plan.theta = theta;
    plan.diameter = diameter;
    plan.alpha = alpha;
    const long double eps = (1.0L - alpha) * theta * static_cast<long double>(delta) / 5.0L;
    plan.epsilon = static_cast<double>(eps);
    const long double ratio = (1.0L - theta) * static_cast<long double>(delta) / diameter;
    if (ratio >= 1.0L) {
        plan.iterations = 0;
        plan.zero_iterations = true;
    } else {
        plan.iterations = static_cast<long>(std::ceil(std::log(ratio) / std::log(static_cast<long double>(alpha))));
    }
    plan.feasible = predicted_resolution(plan.epsilon, plan.iterations, alpha, diameter) <= delta;
    return plan;
}

struct ValidationReport {
    double alpha = 0.0;
    bool alpha_known = false;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;

    bool ok() const noexcept { return errors.empty(); }
};

/// Contraction, grey-map admissibility and box invariance checks.
inline ValidationReport validate_system(const SystemSpec& spec) {
    ValidationReport rep;
    if (spec.maps.empty()) {
        rep.errors.push_back("system has no maps");
        return rep;
    }
    for (std::size_t j = 0; j < spec.maps.size(); ++j) {
        const MapSpec& m = spec.maps[j];
        if (m.dim() != spec.dim() || m.arity() != spec.arity)
            rep.errors.push_back("map " + std::to_string(j + 1) + " does not match system dimension/arity");
    }
    if (!rep.ok())
        return rep;

    try {
        rep.alpha = lipschitz_system(spec);
        rep.alpha_known = true;
        if (!(rep.alpha < 1.0))
            rep.errors.push_back("not a contraction: alpha = " + std::to_string(rep.alpha) + " >= 1");
    } catch (const Error& e) {
        rep.errors.push_back(e.what());
    }

    if (spec.fuzzy()) {
        if (spec.grey.size() != spec.maps.size()) {
            rep.errors.push_back("fuzzy system needs one grey map per map");
        } else {
            double top = 0.0;
            for (std::size_t j = 0; j < spec.grey.size(); ++j) {
                const std::string tag = "grey map " + std::to_string(j + 1);
                try {
                    const GreyMap& g = spec.grey[j];
                    if (g.evaluate(0.0).value != 0.0)
                        rep.errors.push_back(tag + ": rho(0) != 0");
                    bool clamped = false;
                    double prev = 0.0;
                    constexpr int samples = 10000;
                    for (int k = 0; k <= samples; ++k) {
                        const GreyValue v = g.evaluate(static_cast<double>(k) / samples);
                        clamped |= v.clamped;
                        if (k > 0 && v.value < prev - 1e-12) {
                            rep.errors.push_back(tag + ": not nondecreasing near t = " +
                                                 std::to_string(static_cast<double>(k) / samples));
                            break;
                        }
                        prev = v.value;
                    }
                    if (clamped)
                        rep.warnings.push_back(tag + ": values outside [0,1] were clamped");
                    top = std::max(top, g.evaluate(1.0).value);
                } catch (const Error& e) {
                    rep.errors.push_back(tag + ": " + e.what());
                }
            }
            if (top < 1.0 - 1e-12)
                rep.errors.push_back("no grey map has rho(1) = 1");
        }
    }

    XorShift64Star rng(0xB0C5ULL);
    std::vector<Point> z(spec.arity);
    for (std::size_t j = 0; j < spec.maps.size(); ++j) {
        int outside = 0;
        try {
            for (int s = 0; s < 1000; ++s) {
                for (auto& p : z)
                    for (int k = 0; k < spec.dim(); ++k)
                        p[k] = spec.box.lo[k] + rng.uniform() * spec.box.width(k);
                if (!spec.box.contains(spec.maps[j].apply(z)))
                    ++outside;
            }
        } catch (const Error& e) {
            rep.errors.push_back("map " + std::to_string(j + 1) + ": " + e.what());
            continue;
        }
        if (outside)
            rep.warnings.push_back("map " + std::to_string(j + 1) + " sends " + std::to_string(outside) +
                                   " of 1000 sampled points outside the box (they will be clamped)");
    }
    return rep;
}

} // namespace fuzzyifs
