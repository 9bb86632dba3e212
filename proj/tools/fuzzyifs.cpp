#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fuzzyifs/config.hpp"
#include "fuzzyifs/render.hpp"

using namespace fuzzyifs;

namespace {

enum Exit { kOk = 0, kConfig = 1, kInfeasible = 2, kRuntime = 3 };

// Anything that goes wrong while reading the config is a config error.
RunConfig load(const std::string& path, bool validate = true) {
    try {
        return load_config(path, validate);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

void print_validation(const ValidationReport& v) {
    if (v.alpha_known)
        std::printf("alpha: %.10g\n", v.alpha);
    for (const auto& w : v.warnings)
        std::printf("warning: %s\n", w.c_str());
    for (const auto& e : v.errors)
        std::printf("error: %s\n", e.c_str());
}

int cmd_render(const std::string& path, const std::string& output, const std::string& backend, bool invert,
               const std::string& report_path) {
    RunConfig cfg = load(path);
    if (!output.empty())
        cfg.image_path = output;
    if (!report_path.empty())
        cfg.report_path = report_path;
    if (invert)
        cfg.invert = true;
    if (backend == "ram")
        cfg.backend = TableBackend::ram;
    else if (backend == "file")
        cfg.backend = TableBackend::file;
    if (cfg.image_path.empty())
        throw ConfigError("no output image: set [output] image or pass --output");

    const RunResult res = run(cfg);
    write_pgm(res.image, cfg.image_path);
    const std::string text = res.report.to_text();
    if (cfg.report_path.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        std::ofstream out(cfg.report_path, std::ios::trunc);
        if (!(out << text))
            throw IoError("cannot write report " + cfg.report_path);
    }
    return kOk;
}

int cmd_validate(const std::string& path) {
    const RunConfig cfg = load(path, false);
    print_validation(cfg.validation);
    for (const auto& w : cfg.warnings)
        std::printf("warning: %s\n", w.c_str());
    if (!cfg.validation.ok()) {
        std::printf("invalid\n");
        return kConfig;
    }
    std::printf("valid\n");
    return kOk;
}

int cmd_plan(const std::string& path) {
    const RunConfig cfg = load(path);
    const RunPlan plan = plan_run(cfg);
    const Grid grid(cfg.system.box, plan.n);
    const double eps_eff = grid.cell_diagonal();
    std::printf("alpha: %.10g\n", plan.alpha);
    std::printf("diameter: %.10g\n", plan.diameter);
    if (plan.planned_epsilon)
        std::printf("epsilon: %.10g\n", *plan.planned_epsilon);
    std::printf("n: %u\n", plan.n);
    std::printf("epsilon_eff: %.10g\n", eps_eff);
    std::printf("iterations: %ld\n", plan.iterations);
    std::printf("predicted_delta: %.10g\n", predicted_resolution(eps_eff, plan.iterations, plan.alpha, plan.diameter));
    for (const auto& w : plan.warnings)
        std::printf("warning: %s\n", w.c_str());
    return kOk;
}

int cmd_lipschitz(const std::string& path) {
    const RunConfig cfg = load(path, false);
    const auto& maps = cfg.system.maps;
    double alpha = 0.0;
    for (std::size_t j = 0; j < maps.size(); ++j) {
        const double l = lipschitz_map(maps[j], cfg.system.box);
        alpha = std::max(alpha, l);
        std::printf("map.%zu: %.10g\n", j + 1, l);
    }
    std::printf("alpha: %.10g\n", alpha);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete and fuzzy IFS/GIFS attractor renderer"};
    app.require_subcommand(1);

    std::string config, output, backend, report;
    bool invert = false;
    auto* render = app.add_subcommand("render", "iterate the system and write a PGM image");
    render->add_option("config", config)->required();
    render->add_option("--output", output, "image path (overrides [output] image)");
    render->add_option("--backend", backend, "inverse-image table backend")->check(CLI::IsMember({"ram", "file"}));
    render->add_flag("--invert", invert, "flip the pixel convention");
    render->add_option("--report", report, "write the run report here instead of stdout");

    auto* validate = app.add_subcommand("validate", "parse and check a config");
    validate->add_option("config", config)->required();
    auto* plan = app.add_subcommand("plan", "print alpha, epsilon, N and the predicted resolution");
    plan->add_option("config", config)->required();
    auto* lip = app.add_subcommand("lipschitz", "print per-map Lipschitz constants");
    lip->add_option("config", config)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*render)
            return cmd_render(config, output, backend, invert, report);
        if (*validate)
            return cmd_validate(config);
        if (*plan)
            return cmd_plan(config);
        return cmd_lipschitz(config);
    } catch (const InfeasiblePlanError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kInfeasible;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntime;
    }
}
