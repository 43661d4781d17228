#include "evoforge/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "evoforge/digest.hpp"
#include "evoforge/runlog_io.hpp"

namespace evoforge::cli {

namespace {

using nlohmann::json;

std::string fixed4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

int cmd_run(const std::filesystem::path& config_path, const CliOverrides& overrides,
            std::ostream& out, std::ostream& err) {
    ConfigFile config;
    engine::ProblemContext problem;
    engine::BackendSet backends;
    try {
        config = load_config(config_path, overrides);
        problem = build_problem(config);
        backends = build_backends(config);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }

    try {
        std::filesystem::create_directories(config.output_dir);
        JsonlWriter writer(config.output_dir / "run.jsonl");
        RunLog log;
        log.set_sink([&writer](const RunLogRecord& r) { writer.append(r); });

        engine::Engine eng(config.run, std::move(problem), std::move(backends), log);
        eng.set_meta_extra({{"config", config.resolved}});
        const engine::RunResult result = eng.run();

        json result_json;
        result_json["best_cost"] = result.best.cost();
        result_json["best_candidate"] = {
            {"kind", std::string(to_string(result.best.kind()))},
            {"payload", payload_text(result.best)},
            {"digest", candidate_digest(result.best)},
            {"generation_created", result.best.provenance().generation_created}};
        if (result.best.description()) {
            result_json["best_candidate"]["description"] = *result.best.description();
        }
        result_json["generations_run"] = result.generations_run;
        result_json["backend_calls"] = result.stats.backend_calls;
        result_json["evaluations"] = result.stats.evaluations;
        result_json["stop_reason"] = result.stop_reason;
        std::ofstream result_file(config.output_dir / "result.json");
        result_file << result_json.dump(2) << '\n';

        out << "best cost=" << prompting::cost_text(result.best.cost())
            << " candidate=" << payload_text(result.best) << '\n';
        out << "log: " << (config.output_dir / "run.jsonl").string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return 2;
    }
}

int cmd_replay(const std::filesystem::path& log_path, std::ostream& out, std::ostream& err) {
    std::vector<RunLogRecord> records;
    try {
        records = read_jsonl(log_path);
    } catch (const LogIoError& e) {
        err << "malformed log: " << e.what() << '\n';
        return 2;
    }

    const RunLogRecord* meta = nullptr;
    bool has_result = false;
    for (const RunLogRecord& r : records) {
        if (r.kind == RecordKind::Meta && meta == nullptr) {
            meta = &r;
        }
        if (r.kind == RecordKind::Result) {
            has_result = true;
        }
    }
    if (meta == nullptr || !has_result) {
        err << "malformed log: missing meta or result record (truncated?)\n";
        return 2;
    }

    ConfigFile config;
    engine::ProblemContext problem;
    try {
        config = config_from_json(meta->body.at("extra").at("config"));
        problem = build_problem(config);
    } catch (const std::exception& e) {
        err << "cannot rebuild run from log: " << e.what() << '\n';
        return 2;
    }
    if (problem.digest != meta->body.at("problem_digest").get<std::uint64_t>()) {
        err << "problem digest mismatch: instance files changed since the run\n";
        return 2;
    }

    // Feed the logged responses back through a single scripted backend shared
    // by both roles, so playback order matches the original interleaving.
    std::vector<std::string> responses;
    std::vector<std::pair<int, std::uint64_t>> original_generations;
    for (const RunLogRecord& r : records) {
        if (r.kind == RecordKind::Response) {
            const auto it = r.body.find("text");
            responses.push_back(it != r.body.end() ? it->get<std::string>() : std::string());
        } else if (r.kind == RecordKind::Generation) {
            original_generations.emplace_back(
                r.generation, r.body.at("population_digest").get<std::uint64_t>());
        }
    }

    auto scripted = std::make_shared<llmio::ScriptedBackend>(std::move(responses));
    engine::BackendSet backends{scripted, scripted};

    RunLog replay_log;
    try {
        engine::Engine eng(config.run, std::move(problem), std::move(backends), replay_log);
        eng.run();
    } catch (const llmio::BackendError& e) {
        err << "replay diverged: engine requested more backend calls than the log holds ("
            << e.what() << ")\n";
        return 3;
    } catch (const std::exception& e) {
        err << "replay failed: " << e.what() << '\n';
        return 2;
    }

    std::vector<std::pair<int, std::uint64_t>> new_generations;
    for (const RunLogRecord& r : replay_log.records()) {
        if (r.kind == RecordKind::Generation) {
            new_generations.emplace_back(r.generation,
                                         r.body.at("population_digest").get<std::uint64_t>());
        }
    }

    const std::size_t common = std::min(original_generations.size(), new_generations.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (original_generations[i] != new_generations[i]) {
            err << "replay diverged at generation " << original_generations[i].first << '\n';
            return 3;
        }
    }
    if (original_generations.size() != new_generations.size()) {
        err << "replay diverged: generation count " << new_generations.size() << " vs "
            << original_generations.size() << '\n';
        return 3;
    }
    out << "replay ok: " << new_generations.size() << " generations match\n";
    return 0;
}

int cmd_bench(const std::filesystem::path& suite_path, const std::filesystem::path& out_csv,
              std::ostream& out, std::ostream& err) {
    json suite;
    std::vector<problems::BppInstance> instances;
    std::vector<std::pair<std::string, std::string>> heuristics; // label, expression text
    try {
        std::ifstream in(suite_path);
        if (!in) {
            throw ConfigError("cannot open suite " + suite_path.string());
        }
        suite = json::parse(in);
        if (!suite.is_object()) {
            throw ConfigError("suite: expected a JSON object");
        }
        for (const auto& [key, value] : suite.items()) {
            (void)value;
            if (key != "instances" && key != "heuristics") {
                throw ConfigError("suite: unknown key \"" + key + "\"");
            }
        }
        const auto base = std::filesystem::absolute(suite_path).parent_path();
        for (const json& p : suite.at("instances")) {
            std::filesystem::path path(p.get<std::string>());
            if (!path.is_absolute()) {
                path = base / path;
            }
            instances.push_back(problems::load_bpp(path));
        }
        for (const json& h : suite.at("heuristics")) {
            heuristics.emplace_back(h.at("label").get<std::string>(),
                                    h.at("expr").get<std::string>());
        }
        if (instances.empty() || heuristics.empty()) {
            throw ConfigError("suite needs at least one instance and one heuristic");
        }
    } catch (const std::exception& e) {
        err << "suite error: " << e.what() << '\n';
        return 1;
    }

    struct Row {
        std::string heuristic;
        std::string instance;
        std::string bins;
        int lb;
        std::string excess;
        double excess_value = 0.0;
        bool feasible = false;
    };
    std::vector<Row> rows;
    const auto add_row = [&rows](const std::string& label, const problems::BppInstance& inst,
                                 std::optional<int> bins) {
        Row row;
        row.heuristic = label;
        row.instance = inst.name;
        row.lb = problems::bpp_lower_bound(inst);
        if (bins) {
            row.bins = std::to_string(*bins);
            row.excess_value = problems::excess_ratio(*bins, row.lb);
            row.excess = fixed4(row.excess_value);
            row.feasible = true;
        } else {
            row.bins = "infeasible";
            row.excess = "infeasible";
        }
        rows.push_back(std::move(row));
    };

    for (const auto& [label, text] : heuristics) {
        hdsl::ExprPtr expr;
        try {
            expr = hdsl::parse(text);
        } catch (const hdsl::ParseError& e) {
            err << "heuristic \"" << label << "\" does not parse: " << e.what() << '\n';
            for (const problems::BppInstance& inst : instances) {
                add_row(label, inst, std::nullopt);
            }
            continue;
        }
        for (const problems::BppInstance& inst : instances) {
            try {
                add_row(label, inst, problems::bpp_pack(inst, expr).bin_count());
            } catch (const hdsl::DomainError&) {
                add_row(label, inst, std::nullopt);
            } catch (const hdsl::UnboundVariableError&) {
                add_row(label, inst, std::nullopt);
            }
        }
    }
    for (const problems::BppInstance& inst : instances) {
        add_row("first_fit", inst, problems::bpp_first_fit(inst).bin_count());
    }
    for (const problems::BppInstance& inst : instances) {
        add_row("best_fit", inst, problems::bpp_best_fit(inst).bin_count());
    }

    try {
        std::ofstream csv(out_csv);
        if (!csv) {
            throw ConfigError("cannot write " + out_csv.string());
        }
        csv << "heuristic,instance,bins,lb,excess\n";
        for (const Row& row : rows) {
            csv << row.heuristic << ',' << row.instance << ',' << row.bins << ',' << row.lb
                << ',' << row.excess << '\n';
        }
    } catch (const std::exception& e) {
        err << "bench error: " << e.what() << '\n';
        return 2;
    }

    // Summary: mean excess per heuristic, in first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::pair<double, bool>> summary; // sum, any_infeasible
    std::map<std::string, int> counts;
    for (const Row& row : rows) {
        if (summary.find(row.heuristic) == summary.end()) {
            order.push_back(row.heuristic);
            summary[row.heuristic] = {0.0, false};
        }
        auto& [sum, bad] = summary[row.heuristic];
        if (row.feasible) {
            sum += row.excess_value;
        } else {
            bad = true;
        }
        ++counts[row.heuristic];
    }
    out << "heuristic mean_excess\n";
    for (const std::string& label : order) {
        const auto& [sum, bad] = summary[label];
        out << label << ' '
            << (bad ? std::string("infeasible") : fixed4(sum / counts[label])) << '\n';
    }
    out << "report: " << out_csv.string() << '\n';
    return 0;
}

int cmd_eval_expr(const std::string& expr_text, const std::filesystem::path& instance_path,
                  std::ostream& out, std::ostream& err) {
    hdsl::ExprPtr expr;
    problems::BppInstance inst;
    try {
        expr = hdsl::parse(expr_text);
        inst = problems::load_bpp(instance_path);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    try {
        const int bins = problems::bpp_pack(inst, expr).bin_count();
        const int lb = problems::bpp_lower_bound(inst);
        out << "bins=" << bins << " lb=" << lb << " excess="
            << fixed4(problems::excess_ratio(bins, lb)) << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "infeasible: " << e.what() << '\n';
        return 2;
    }
}

int cmd_gen_instances(const GenParams& params, const std::filesystem::path& out_dir,
                      std::ostream& out, std::ostream& err) {
    try {
        if (params.kind != "tsp" && params.kind != "bpp") {
            throw ConfigError("kind must be tsp or bpp");
        }
        if (params.count < 0) {
            throw ConfigError("count must be >= 0");
        }
        std::filesystem::create_directories(out_dir);
        for (int i = 0; i < params.count; ++i) {
            const std::uint64_t child_seed = mix_seed(params.seed, static_cast<std::uint64_t>(i));
            const std::string stem = params.kind + "-" + std::to_string(params.seed) + "-" +
                                     std::to_string(i);
            const std::filesystem::path path = out_dir / (stem + ".json");
            if (params.kind == "tsp") {
                problems::TspInstance inst = problems::gen_tsp(child_seed, params.n, params.box);
                inst = problems::make_tsp_instance(stem, std::move(inst.points));
                problems::save_instance(inst, path);
            } else {
                problems::BppInstance inst =
                    problems::gen_bpp(child_seed, params.n_items, params.capacity,
                                      params.size_min, params.size_max);
                inst = problems::make_bpp_instance(stem, inst.capacity, std::move(inst.items));
                problems::save_instance(inst, path);
            }
            out << path.string() << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace evoforge::cli
