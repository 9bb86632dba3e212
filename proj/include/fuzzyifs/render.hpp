#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "image.hpp"
#include "metrics.hpp"
#include "nets.hpp"
#include "operators.hpp"
#include "sets.hpp"
#include "systems.hpp"

namespace fuzzyifs {

struct RunReport {
    Mode mode = Mode::ifs;
    double alpha = 0.0;
    double diameter = 0.0;
    std::uint32_t n = 0;
    NetKind net_kind = NetKind::uniform;
    std::size_t net_points = 0;
    double epsilon = 0.0;
    double epsilon_eff = 0.0;
    bool bound_heuristic = false;
    std::optional<double> target_delta;
    std::optional<double> planned_epsilon;
    long planned_iterations = 0;
    long iterations = 0;
    StopReason stop_reason = StopReason::none;
    std::vector<double> distances;
    double predicted_delta = 0.0;
    std::uint64_t table_records = 0;
    double table_seconds = 0.0;
    double iteration_seconds = 0.0;
    double total_seconds = 0.0;
    std::uint64_t clamp_events = 0;
    std::uint64_t grey_clamps = 0;
    std::size_t final_support = 0;
    std::vector<std::string> warnings;

    /// Plain "key: value" lines.
    std::string to_text() const {
        std::ostringstream o;
        o.precision(10);
        o << "mode: " << to_string(mode) << "\n";
        o << "alpha: " << alpha << "\n";
        o << "diameter: " << diameter << "\n";
        o << "net: " << (net_kind == NetKind::uniform ? "uniform" : "aleatory") << "\n";
        o << "n: " << n << "\n";
        o << "net_points: " << net_points << "\n";
        o << "epsilon: " << epsilon << "\n";
        o << "epsilon_eff: " << epsilon_eff << "\n";
        o << "bound_heuristic: " << (bound_heuristic ? "true" : "false") << "\n";
        if (target_delta)
            o << "target_delta: " << *target_delta << "\n";
        if (planned_epsilon)
            o << "planned_epsilon: " << *planned_epsilon << "\n";
        o << "planned_iterations: " << planned_iterations << "\n";
        o << "iterations: " << iterations << "\n";
        o << "stop_reason: " << to_string(stop_reason) << "\n";
        o << "distances:";
        for (double d : distances)
            o << " " << d;
        o << "\n";
        o << "predicted_delta: " << predicted_delta << "\n";
        o << "table_records: " << table_records << "\n";
        o << "table_seconds: " << table_seconds << "\n";
        o << "iteration_seconds: " << iteration_seconds << "\n";
        o << "total_seconds: " << total_seconds << "\n";
        o << "clamp_events: " << clamp_events << "\n";
        o << "grey_clamps: " << grey_clamps << "\n";
        o << "final_support: " << final_support << "\n";
        for (const auto& w : warnings)
            o << "warning: " << w << "\n";
        return o.str();
    }
};

struct RunOptions {
    /// Caps applied to the configured net (used for quick regression runs).
    std::optional<std::uint32_t> max_n;
    std::optional<std::uint64_t> max_na;
    std::optional<TableBackend> backend;
    std::optional<std::string> table_path;
    /// Called after every step with the new iterate (exactly one pointer set).
    std::function<void(long, const DiscreteSet*, const DiscreteFuzzySet*)> on_iterate;
};

struct RunResult {
    GreyImage image;
    RunReport report;
    std::optional<DiscreteSet> final_set;
    std::optional<DiscreteFuzzySet> final_fuzzy;
};

struct RunPlan {
    double alpha = 0.0;
    double diameter = 0.0;
    std::uint32_t n = 0;
    long iterations = 0;
    std::optional<double> target_delta;
    std::optional<double> planned_epsilon;
    std::vector<std::string> warnings;
};

/// alpha, net size and iteration count for a config. With delta the plan
/// fixes epsilon and N (and n unless configured); otherwise n and N are taken
/// as given.
inline RunPlan plan_run(const RunConfig& cfg, std::optional<std::uint32_t> max_n = {}) {
    const SystemSpec& spec = cfg.system;
    RunPlan out;
    out.alpha = cfg.validation.alpha_known ? cfg.validation.alpha : lipschitz_system(spec);
    if (!(out.alpha < 1.0))
        throw ConfigError("system is not a contraction (alpha >= 1)");
    out.diameter = cfg.diameter.value_or(spec.box.diameter());
    if (cfg.delta) {
        const ResolutionPlan plan = plan_resolution(*cfg.delta, cfg.theta.value_or(0.5), out.diameter, out.alpha);
        if (!plan.feasible)
            throw InfeasiblePlanError("resolution plan is not feasible");
        if (plan.zero_iterations)
            out.warnings.push_back("(1-theta)*delta >= D: no iterations needed");
        out.target_delta = *cfg.delta;
        out.planned_epsilon = plan.epsilon;
        out.iterations = plan.iterations;
        if (cfg.net.n) {
            out.n = *cfg.net.n;
        } else {
            const double need = std::ceil(spec.box.diameter() / plan.epsilon);
            if (need > cfg.max_n)
                throw InfeasiblePlanError("resolution needs n = " + std::to_string(static_cast<long long>(need)) +
                                          " > max_n = " + std::to_string(cfg.max_n));
            out.n = static_cast<std::uint32_t>(need);
        }
    } else {
        out.n = *cfg.net.n;
        out.iterations = *cfg.iterations;
    }
    if (max_n && out.n > *max_n)
        out.n = *max_n;
    return out;
}

/// Build the net, plan, iterate the mode's operator until the stopping rule
/// fires, and rasterize the last iterate.
inline RunResult run(const RunConfig& cfg, const RunOptions& opt = {}) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto seconds_since = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };

    const SystemSpec& spec = cfg.system;
    RunResult result;
    RunReport& rep = result.report;
    rep.mode = cfg.mode;
    rep.warnings = cfg.warnings;
    rep.warnings.insert(rep.warnings.end(), cfg.validation.warnings.begin(), cfg.validation.warnings.end());

    const RunPlan plan = plan_run(cfg, opt.max_n);
    rep.alpha = plan.alpha;
    rep.diameter = plan.diameter;
    rep.target_delta = plan.target_delta;
    rep.planned_epsilon = plan.planned_epsilon;
    rep.planned_iterations = plan.iterations;
    rep.warnings.insert(rep.warnings.end(), plan.warnings.begin(), plan.warnings.end());
    const std::uint32_t n = plan.n;
    const long max_iter = plan.iterations;

    std::uint64_t na = cfg.net.na;
    if (opt.max_na && na > *opt.max_na)
        na = *opt.max_na;
    const Net net = cfg.net.kind == NetKind::uniform ? Net::uniform(spec.box, n)
                                                     : Net::aleatory(spec.box, n, na, cfg.net.seed);
    rep.n = n;
    rep.net_kind = net.kind();
    rep.net_points = net.size();
    rep.epsilon = net.epsilon();
    rep.epsilon_eff = net.epsilon_eff();
    rep.bound_heuristic = net.bound_is_heuristic();
    if (rep.planned_epsilon && rep.epsilon_eff > *rep.planned_epsilon)
        rep.warnings.push_back("net epsilon_eff exceeds the planned epsilon; the resolution bound does not hold");
    if (net.bound_is_heuristic())
        rep.warnings.push_back("aleatory net: epsilon is nominal, bounds are heuristic");

    IterationHistory history;
    history.tol = cfg.tol;
    history.stall_count = cfg.stall;
    StepDiagnostics diag;

    const Point centre{0.5 * (spec.box.lo[0] + spec.box.hi[0]), 0.5 * (spec.box.lo[1] + spec.box.hi[1])};
    auto initial_points = [&] {
        std::vector<std::uint32_t> pts;
        for (const Point& p : cfg.initial)
            pts.push_back(net.project_clamped(p, diag.clamp_events));
        if (pts.empty())
            pts.push_back(project_nearest(net, centre));
        return DiscreteSet(net.grid(), std::move(pts));
    };

    if (!is_fuzzy(cfg.mode)) {
        const auto ti = clock::now();
        DiscreteSet w = initial_points();
        long k = 0;
        while (k < max_iter) {
            DiscreteSet next = generalized_hutchinson_step(spec, net, w, cfg.limits, &diag);
            ++k;
            history.record(hausdorff(next, w));
            w = std::move(next);
            if (opt.on_iterate)
                opt.on_iterate(k, &w, nullptr);
            rep.stop_reason = should_stop(history, k, max_iter);
            if (rep.stop_reason != StopReason::none)
                break;
        }
        if (k == 0)
            rep.stop_reason = StopReason::max_iterations;
        rep.iterations = k;
        rep.iteration_seconds = seconds_since(ti);
        rep.final_support = w.size();
        result.image = rasterize(w, cfg.invert);
        result.final_set = std::move(w);
    } else {
        const TableBackend backend = opt.backend.value_or(cfg.backend);
        std::string table_path = opt.table_path.value_or(cfg.table_path);
        if (backend == TableBackend::file && table_path.empty())
            table_path = (cfg.image_path.empty() ? std::string("fuzzyifs") : cfg.image_path) + ".phiinv";
        const auto tt = clock::now();
        const InverseImageTable table = generate_inverse_table(spec, net, backend, table_path, cfg.limits, &diag);
        rep.table_seconds = seconds_since(tt);
        rep.table_records = table.size();

        const auto ti = clock::now();
        DiscreteFuzzySet u;
        if (!cfg.initial_fuzzy.empty()) {
            std::vector<std::pair<std::uint32_t, std::uint8_t>> pairs;
            for (const auto& [p, mu] : cfg.initial_fuzzy)
                pairs.emplace_back(net.project_clamped(p, diag.clamp_events), quantize(mu));
            u = DiscreteFuzzySet::from_pairs(net.grid(), std::move(pairs));
        } else {
            u = characteristic(initial_points());
        }
        long k = 0;
        while (k < max_iter) {
            DiscreteFuzzySet next = generalized_fuzzy_step(spec, table, u, &diag);
            ++k;
            history.record(d_infinity(next, u));
            u = std::move(next);
            if (opt.on_iterate)
                opt.on_iterate(k, nullptr, &u);
            rep.stop_reason = should_stop(history, k, max_iter);
            if (rep.stop_reason != StopReason::none)
                break;
        }
        if (k == 0)
            rep.stop_reason = StopReason::max_iterations;
        rep.iterations = k;
        rep.iteration_seconds = seconds_since(ti);
        rep.final_support = u.support_size();
        result.image = rasterize(u, cfg.invert);
        result.final_fuzzy = std::move(u);
    }

    rep.distances = history.values;
    rep.clamp_events = diag.clamp_events;
    rep.grey_clamps = diag.grey_clamps;
    rep.predicted_delta = predicted_resolution(rep.epsilon_eff, rep.iterations, rep.alpha, rep.diameter);
    rep.total_seconds = seconds_since(t0);
    return result;
}

} // namespace fuzzyifs
