#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evoforge/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"evoforge: LLM-driven evolutionary search over solutions and heuristics"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Execute a search run from a config file");
    std::string run_config;
    std::string run_out;
    std::string run_backend;
    std::string run_script;
    std::uint64_t run_seed = 0;
    bool run_seed_set = false;
    run->add_option("--config", run_config, "Config file (JSON)")->required();
    run->add_option("--out", run_out, "Output directory (overrides config)");
    run->add_option("--seed", run_seed, "Seed override")->each([&](const std::string&) {
        run_seed_set = true;
    });
    run->add_option("--backend", run_backend, "Backend override: http|scripted|synthetic");
    run->add_option("--script", run_script, "Script file for the scripted backend");

    // replay
    auto* replay = app.add_subcommand("replay", "Re-run a logged run and verify its digests");
    std::string replay_log;
    replay->add_option("--log", replay_log, "run.jsonl produced by run")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Evaluate heuristics across an instance suite");
    std::string bench_suite;
    std::string bench_out = "bench.csv";
    bench->add_option("--suite", bench_suite, "Suite file (JSON)")->required();
    bench->add_option("--out", bench_out, "CSV report path");

    // eval-expr
    auto* eval = app.add_subcommand("eval-expr", "Score one heuristic on one instance");
    std::string eval_expr;
    std::string eval_instance;
    eval->add_option("--expr", eval_expr, "Heuristic expression")->required();
    eval->add_option("--instance", eval_instance, "BPP instance file")->required();

    // gen-instances
    auto* gen = app.add_subcommand("gen-instances", "Write seeded problem instances");
    evoforge::cli::GenParams params;
    std::string gen_out = ".";
    gen->add_option("--kind", params.kind, "tsp or bpp")->required();
    gen->add_option("--seed", params.seed, "Base seed")->required();
    gen->add_option("--count", params.count, "Number of instances")->required();
    gen->add_option("--out", gen_out, "Output directory");
    gen->add_option("--n", params.n, "TSP: number of cities");
    gen->add_option("--box", params.box, "TSP: square side length");
    gen->add_option("--items", params.n_items, "BPP: number of items");
    gen->add_option("--capacity", params.capacity, "BPP: bin capacity");
    gen->add_option("--size-min", params.size_min, "BPP: minimum item size");
    gen->add_option("--size-max", params.size_max, "BPP: maximum item size");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        evoforge::cli::CliOverrides overrides;
        if (!run_out.empty()) overrides.out = run_out;
        if (run_seed_set) overrides.seed = run_seed;
        if (!run_backend.empty()) overrides.backend = run_backend;
        if (!run_script.empty()) overrides.script = run_script;
        return evoforge::cli::cmd_run(run_config, overrides, std::cout, std::cerr);
    }
    if (replay->parsed()) {
        return evoforge::cli::cmd_replay(replay_log, std::cout, std::cerr);
    }
    if (bench->parsed()) {
        return evoforge::cli::cmd_bench(bench_suite, bench_out, std::cout, std::cerr);
    }
    if (eval->parsed()) {
        return evoforge::cli::cmd_eval_expr(eval_expr, eval_instance, std::cout, std::cerr);
    }
    if (gen->parsed()) {
        return evoforge::cli::cmd_gen_instances(params, gen_out, std::cout, std::cerr);
    }
    return 1;
}
