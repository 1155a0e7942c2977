#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tightkit/error.hpp"
#include "tightkit/report.hpp"

using namespace tightkit;

int main(int argc, char** argv) {
    CLI::App app{"Tight-surface analysis pipeline"};
    app.require_subcommand(1);
    std::string out;
    long long seed = -1;
    double tol = 0.0;
    app.add_option("--out", out, "Output directory")->type_name("DIR");
    app.add_option("--seed", seed, "Seed for randomized sampling")->type_name("N")->check(CLI::NonNegativeNumber);
    app.add_option("--tol", tol, "Tolerance applied to every task")->type_name("X")->check(CLI::PositiveNumber);

    std::string config_path;
    const std::pair<const char*, const char*> commands[] = {
        {"analyze", "Tightness integrals"},
        {"trace", "Asymptotic curves through random points of the negative region"},
        {"invariant", "Rigidity invariant of closed asymptotic curves"},
        {"codazzi", "Symmetrizer search, uniqueness and energy audit"},
        {"chart", "Adapted chart near a closed asymptotic or parabolic curve"},
        {"all", "Tasks listed in the config (every task by default)"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->add_option("config", config_path, "Run configuration")->required()->check(CLI::ExistingFile);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd != "all") cfg.tasks = {cmd};
        if (!out.empty()) cfg.out = out;
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (tol > 0.0) cfg.tol = tol;
        const Manifest m = run_pipeline(cfg);
        std::cout << emit_summary(read_manifest(cfg.out + "/manifest.json"));
        for (const auto& t : m.tasks)
            if (t.status == "error" || t.status == "skipped") std::cerr << t.name << ": " << t.error << '\n';
        return m.exit_code();
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
}
