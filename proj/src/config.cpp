#include "evoforge/config.hpp"

#include <fstream>

#include "evoforge/digest.hpp"
#include "evoforge/prompting.hpp"

namespace evoforge::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError(where + ": unknown key \"" + key + "\"");
        }
    }
}

const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

const json& require(const json& j, const char* key, const std::string& where) {
    const json* v = find(j, key);
    if (v == nullptr) {
        throw ConfigError(where + ": missing key \"" + key + "\"");
    }
    return *v;
}

template <typename T>
T get_as(const json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": wrong type");
    }
}

StrategyFamily parse_family(const std::string& name, const std::string& where) {
    if (name == "exploration") return StrategyFamily::Exploration;
    if (name == "modification") return StrategyFamily::Modification;
    throw ConfigError(where + ": family must be \"exploration\" or \"modification\"");
}

BackendBinding parse_binding(const json& j, BackendRole role, const std::string& where) {
    BackendBinding binding;
    binding.role = role;
    binding.temperature = role == BackendRole::Variation ? 1.0 : 0.2;
    if (!j.is_object()) {
        throw ConfigError(where + ": must be an object");
    }
    reject_unknown(j, {"backend", "base_url", "model", "script", "seed", "temperature",
                       "max_tokens"},
                   where);
    const std::string kind = get_as<std::string>(require(j, "backend", where), where + ".backend");
    if (kind == "http") {
        binding.backend = BackendKind::Http;
        binding.base_url = get_as<std::string>(require(j, "base_url", where), where + ".base_url");
        binding.model = get_as<std::string>(require(j, "model", where), where + ".model");
    } else if (kind == "scripted") {
        binding.backend = BackendKind::Scripted;
        binding.script_path =
            get_as<std::string>(require(j, "script", where), where + ".script");
    } else if (kind == "synthetic") {
        binding.backend = BackendKind::Synthetic;
        if (const json* seed = find(j, "seed")) {
            binding.seed = get_as<std::uint64_t>(*seed, where + ".seed");
        }
    } else {
        throw ConfigError(where + ": backend must be http, scripted, or synthetic");
    }
    if (const json* temp = find(j, "temperature")) {
        binding.temperature = get_as<double>(*temp, where + ".temperature");
    }
    if (const json* tokens = find(j, "max_tokens")) {
        binding.max_tokens = get_as<int>(*tokens, where + ".max_tokens");
    }
    return binding;
}

json binding_to_json(const BackendBinding& b) {
    json j;
    j["backend"] = std::string(to_string(b.backend));
    switch (b.backend) {
    case BackendKind::Http:
        j["base_url"] = b.base_url;
        j["model"] = b.model;
        break;
    case BackendKind::Scripted:
        j["script"] = b.script_path;
        break;
    case BackendKind::Synthetic:
        j["seed"] = b.seed;
        break;
    }
    j["temperature"] = b.temperature;
    j["max_tokens"] = b.max_tokens;
    return j;
}

std::string resolve_path(const std::string& path, const std::filesystem::path& base) {
    std::filesystem::path p(path);
    if (p.is_absolute()) {
        return p.lexically_normal().string();
    }
    return (base / p).lexically_normal().string();
}

ConfigFile parse_config(const json& j, const std::filesystem::path& base_dir,
                        const CliOverrides& overrides) {
    if (!j.is_object()) {
        throw ConfigError("config: expected a JSON object");
    }
    reject_unknown(j,
                   {"config_version", "mode", "seed", "population_size", "generations",
                    "selection", "variation", "reflection", "fitness", "backends", "budget",
                    "target_cost", "problem", "training", "output_dir"},
                   "config");
    const int version = get_as<int>(require(j, "config_version", "config"), "config_version");
    if (version != 1) {
        throw ConfigError("config_version must be 1, got " + std::to_string(version));
    }

    ConfigFile out;
    RunConfig& run = out.run;

    const std::string mode = get_as<std::string>(require(j, "mode", "config"), "mode");
    if (mode == "solution") {
        run.mode = Mode::SolutionSearch;
    } else if (mode == "heuristic") {
        run.mode = Mode::HeuristicSearch;
    } else {
        throw ConfigError("mode must be \"solution\" or \"heuristic\"");
    }

    run.seed = get_as<std::uint64_t>(require(j, "seed", "config"), "seed");
    run.population_size = get_as<int>(require(j, "population_size", "config"), "population_size");
    run.generations = get_as<int>(require(j, "generations", "config"), "generations");

    if (const json* sel = find(j, "selection")) {
        reject_unknown(*sel, {"tournament_size", "groups_per_generation", "group_size"},
                       "selection");
        if (const json* v = find(*sel, "tournament_size")) {
            run.selection.tournament_size = get_as<int>(*v, "selection.tournament_size");
        }
        if (const json* v = find(*sel, "groups_per_generation")) {
            run.selection.groups_per_generation = get_as<int>(*v, "selection.groups_per_generation");
        }
        if (const json* v = find(*sel, "group_size")) {
            run.selection.group_size = get_as<int>(*v, "selection.group_size");
        }
    }

    if (const json* variation = find(j, "variation")) {
        if (!variation->is_array()) {
            throw ConfigError("variation: must be an array of strategies");
        }
        for (std::size_t i = 0; i < variation->size(); ++i) {
            const json& s = (*variation)[i];
            const std::string where = "variation[" + std::to_string(i) + "]";
            reject_unknown(s, {"label", "family", "task_instruction", "examples_per_prompt",
                               "offspring_requested"},
                           where);
            StrategySpec spec;
            spec.label = get_as<std::string>(require(s, "label", where), where + ".label");
            spec.family = parse_family(
                get_as<std::string>(require(s, "family", where), where + ".family"), where);
            if (const json* instr = find(s, "task_instruction")) {
                spec.task_instruction = get_as<std::string>(*instr, where + ".task_instruction");
            } else {
                spec.task_instruction = prompting::default_task_instruction(spec.family);
            }
            if (const json* v = find(s, "examples_per_prompt")) {
                spec.examples_per_prompt = get_as<int>(*v, where + ".examples_per_prompt");
            }
            if (const json* v = find(s, "offspring_requested")) {
                spec.offspring_requested = get_as<int>(*v, where + ".offspring_requested");
            }
            run.variation.push_back(std::move(spec));
        }
    } else {
        run.variation.push_back({"e1", StrategyFamily::Exploration,
                                 prompting::default_task_instruction(StrategyFamily::Exploration),
                                 5, 1});
    }

    if (const json* refl = find(j, "reflection")) {
        reject_unknown(*refl, {"enabled", "cadence"}, "reflection");
        if (const json* v = find(*refl, "enabled")) {
            run.reflection.enabled = get_as<bool>(*v, "reflection.enabled");
        }
        if (const json* v = find(*refl, "cadence")) {
            run.reflection.cadence = get_as<int>(*v, "reflection.cadence");
        }
    }

    if (const json* fit = find(j, "fitness")) {
        reject_unknown(*fit, {"aggregator", "weights", "adaptive"}, "fitness");
        if (const json* agg = find(*fit, "aggregator")) {
            const std::string name = get_as<std::string>(*agg, "fitness.aggregator");
            if (name == "mean") {
                run.fitness.aggregator.kind = AggregatorKind::Mean;
            } else if (name == "weighted_sum") {
                run.fitness.aggregator.kind = AggregatorKind::WeightedSum;
            } else {
                throw ConfigError("fitness.aggregator must be \"mean\" or \"weighted_sum\"");
            }
        }
        if (const json* weights = find(*fit, "weights")) {
            run.fitness.aggregator.weights =
                get_as<std::vector<double>>(*weights, "fitness.weights");
        }
        if (const json* adaptive = find(*fit, "adaptive")) {
            reject_unknown(*adaptive, {"lambda_max", "ramp_generations", "exponent", "size_budget"},
                           "fitness.adaptive");
            AdaptiveSchedule& sched = run.fitness.schedule;
            if (const json* v = find(*adaptive, "lambda_max")) {
                sched.lambda_max = get_as<double>(*v, "fitness.adaptive.lambda_max");
            }
            if (const json* v = find(*adaptive, "ramp_generations")) {
                sched.ramp_generations = get_as<int>(*v, "fitness.adaptive.ramp_generations");
            }
            if (const json* v = find(*adaptive, "exponent")) {
                sched.exponent = get_as<double>(*v, "fitness.adaptive.exponent");
            }
            if (const json* v = find(*adaptive, "size_budget")) {
                sched.size_budget = get_as<int>(*v, "fitness.adaptive.size_budget");
            }
        }
    }

    const json& backends = require(j, "backends", "config");
    reject_unknown(backends, {"variation", "reflective"}, "backends");
    run.variation_backend = parse_binding(require(backends, "variation", "backends"),
                                          BackendRole::Variation, "backends.variation");
    if (const json* refl = find(backends, "reflective")) {
        run.reflective_backend = parse_binding(*refl, BackendRole::Reflective,
                                               "backends.reflective");
    } else {
        run.reflective_backend = run.variation_backend;
        run.reflective_backend.role = BackendRole::Reflective;
        run.reflective_backend.temperature = 0.2;
        run.reflective_backend.seed = mix_seed(run.variation_backend.seed, 2);
    }

    if (const json* budget = find(j, "budget")) {
        reject_unknown(*budget, {"max_backend_calls", "max_evaluations"}, "budget");
        if (const json* v = find(*budget, "max_backend_calls")) {
            run.budget.max_backend_calls = get_as<std::uint64_t>(*v, "budget.max_backend_calls");
        }
        if (const json* v = find(*budget, "max_evaluations")) {
            run.budget.max_evaluations = get_as<std::uint64_t>(*v, "budget.max_evaluations");
        }
    }

    if (const json* target = find(j, "target_cost")) {
        if (!target->is_null()) {
            run.target_cost = get_as<double>(*target, "target_cost");
        }
    }

    // Problem / training specs, with paths made absolute.
    if (run.mode == Mode::SolutionSearch) {
        const json& problem = require(j, "problem", "config");
        reject_unknown(problem, {"path", "generate"}, "problem");
        json resolved_spec;
        if (const json* path = find(problem, "path")) {
            resolved_spec["path"] =
                resolve_path(get_as<std::string>(*path, "problem.path"), base_dir);
        } else if (const json* gen = find(problem, "generate")) {
            reject_unknown(*gen, {"seed", "n", "box"}, "problem.generate");
            resolved_spec["generate"] = {
                {"seed", get_as<std::uint64_t>(require(*gen, "seed", "problem.generate"),
                                               "problem.generate.seed")},
                {"n", get_as<int>(require(*gen, "n", "problem.generate"), "problem.generate.n")},
                {"box", find(*gen, "box") ? get_as<double>(*find(*gen, "box"),
                                                           "problem.generate.box")
                                          : 1.0}};
        } else {
            throw ConfigError("problem: needs \"path\" or \"generate\"");
        }
        out.problem_spec = std::move(resolved_spec);
    } else {
        const json& training = require(j, "training", "config");
        reject_unknown(training, {"paths", "generate", "weights"}, "training");
        json resolved_spec;
        if (const json* paths = find(training, "paths")) {
            if (!paths->is_array() || paths->empty()) {
                throw ConfigError("training.paths: must be a non-empty array");
            }
            json resolved_paths = json::array();
            for (const json& p : *paths) {
                resolved_paths.push_back(
                    resolve_path(get_as<std::string>(p, "training.paths[]"), base_dir));
            }
            resolved_spec["paths"] = std::move(resolved_paths);
        } else if (const json* gen = find(training, "generate")) {
            reject_unknown(*gen, {"seed", "count", "n_items", "capacity", "size_min", "size_max"},
                           "training.generate");
            resolved_spec["generate"] = {
                {"seed", get_as<std::uint64_t>(require(*gen, "seed", "training.generate"),
                                               "training.generate.seed")},
                {"count", get_as<int>(require(*gen, "count", "training.generate"),
                                      "training.generate.count")},
                {"n_items", get_as<int>(require(*gen, "n_items", "training.generate"),
                                        "training.generate.n_items")},
                {"capacity", get_as<double>(require(*gen, "capacity", "training.generate"),
                                            "training.generate.capacity")},
                {"size_min", get_as<double>(require(*gen, "size_min", "training.generate"),
                                            "training.generate.size_min")},
                {"size_max", get_as<double>(require(*gen, "size_max", "training.generate"),
                                            "training.generate.size_max")}};
        } else {
            throw ConfigError("training: needs \"paths\" or \"generate\"");
        }
        if (const json* weights = find(training, "weights")) {
            resolved_spec["weights"] = get_as<std::vector<double>>(*weights, "training.weights");
        }
        out.problem_spec = std::move(resolved_spec);
    }

    out.output_dir = base_dir / "out";
    if (const json* dir = find(j, "output_dir")) {
        out.output_dir = resolve_path(get_as<std::string>(*dir, "output_dir"), base_dir);
    }

    // CLI overrides.
    if (overrides.seed) {
        run.seed = *overrides.seed;
    }
    if (overrides.backend) {
        BackendKind kind;
        if (*overrides.backend == "http") {
            kind = BackendKind::Http;
        } else if (*overrides.backend == "scripted") {
            kind = BackendKind::Scripted;
        } else if (*overrides.backend == "synthetic") {
            kind = BackendKind::Synthetic;
        } else {
            throw ConfigError("--backend must be http, scripted, or synthetic");
        }
        run.variation_backend.backend = kind;
        run.reflective_backend.backend = kind;
        if (kind == BackendKind::Synthetic) {
            run.variation_backend.seed = mix_seed(run.seed, 1);
            run.reflective_backend.seed = mix_seed(run.seed, 2);
        }
    }
    if (overrides.script) {
        const std::string script = overrides.script->string();
        run.variation_backend.script_path = script;
        run.reflective_backend.script_path = script;
    }
    if (overrides.out) {
        out.output_dir = *overrides.out;
    }
    if (run.variation_backend.backend == BackendKind::Scripted &&
        run.variation_backend.script_path.empty()) {
        throw ConfigError("scripted backend needs a script (config \"script\" or --script)");
    }

    validate_config(run);

    // Canonical resolved form, embedded in the run log's Meta record.
    json resolved;
    resolved["config_version"] = 1;
    resolved["mode"] = mode;
    resolved["seed"] = run.seed;
    resolved["population_size"] = run.population_size;
    resolved["generations"] = run.generations;
    resolved["selection"] = {{"tournament_size", run.selection.tournament_size},
                             {"groups_per_generation", run.selection.groups_per_generation},
                             {"group_size", run.selection.group_size}};
    json strategies = json::array();
    for (const StrategySpec& s : run.variation) {
        strategies.push_back({{"label", s.label},
                              {"family", std::string(to_string(s.family))},
                              {"task_instruction", s.task_instruction},
                              {"examples_per_prompt", s.examples_per_prompt},
                              {"offspring_requested", s.offspring_requested}});
    }
    resolved["variation"] = std::move(strategies);
    resolved["reflection"] = {{"enabled", run.reflection.enabled},
                              {"cadence", run.reflection.cadence}};
    json fitness_json;
    fitness_json["aggregator"] =
        run.fitness.aggregator.kind == AggregatorKind::Mean ? "mean" : "weighted_sum";
    if (!run.fitness.aggregator.weights.empty()) {
        fitness_json["weights"] = run.fitness.aggregator.weights;
    }
    fitness_json["adaptive"] = {{"lambda_max", run.fitness.schedule.lambda_max},
                                {"ramp_generations", run.fitness.schedule.ramp_generations},
                                {"exponent", run.fitness.schedule.exponent},
                                {"size_budget", run.fitness.schedule.size_budget}};
    resolved["fitness"] = std::move(fitness_json);
    resolved["backends"] = {{"variation", binding_to_json(run.variation_backend)},
                            {"reflective", binding_to_json(run.reflective_backend)}};
    resolved["budget"] = {{"max_backend_calls", run.budget.max_backend_calls},
                          {"max_evaluations", run.budget.max_evaluations}};
    if (run.target_cost) {
        resolved["target_cost"] = *run.target_cost;
    }
    resolved[run.mode == Mode::SolutionSearch ? "problem" : "training"] = out.problem_spec;
    resolved["output_dir"] = out.output_dir.string();
    out.resolved = std::move(resolved);
    return out;
}

} // namespace

ConfigFile load_config(const std::filesystem::path& path, const CliOverrides& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j, std::filesystem::absolute(path).parent_path(), overrides);
}

ConfigFile config_from_json(const nlohmann::json& resolved) {
    return parse_config(resolved, std::filesystem::current_path(), {});
}

engine::ProblemContext build_problem(const ConfigFile& config) {
    if (config.run.mode == Mode::SolutionSearch) {
        if (const auto it = config.problem_spec.find("path"); it != config.problem_spec.end()) {
            return engine::ProblemContext::solution(
                problems::load_tsp(it->get<std::string>()));
        }
        const nlohmann::json& gen = config.problem_spec.at("generate");
        return engine::ProblemContext::solution(
            problems::gen_tsp(gen.at("seed").get<std::uint64_t>(), gen.at("n").get<int>(),
                              gen.at("box").get<double>()));
    }
    std::vector<problems::BppInstance> instances;
    if (const auto it = config.problem_spec.find("paths"); it != config.problem_spec.end()) {
        for (const nlohmann::json& p : *it) {
            instances.push_back(problems::load_bpp(p.get<std::string>()));
        }
    } else {
        const nlohmann::json& gen = config.problem_spec.at("generate");
        const auto seed = gen.at("seed").get<std::uint64_t>();
        const int count = gen.at("count").get<int>();
        for (int i = 0; i < count; ++i) {
            instances.push_back(problems::gen_bpp(
                mix_seed(seed, static_cast<std::uint64_t>(i)), gen.at("n_items").get<int>(),
                gen.at("capacity").get<double>(), gen.at("size_min").get<double>(),
                gen.at("size_max").get<double>()));
        }
    }
    std::vector<double> weights;
    if (const auto it = config.problem_spec.find("weights"); it != config.problem_spec.end()) {
        weights = it->get<std::vector<double>>();
    }
    return engine::ProblemContext::heuristic(
        problems::make_training_set(std::move(instances), std::move(weights)));
}

engine::BackendSet build_backends(const ConfigFile& config) {
    const BackendBinding& var = config.run.variation_backend;
    const BackendBinding& refl = config.run.reflective_backend;
    engine::BackendSet set;
    set.variation = llmio::make_backend(var);
    if (refl.backend == BackendKind::Scripted && var.backend == BackendKind::Scripted &&
        refl.script_path == var.script_path) {
        set.reflective = set.variation; // one stream, interleaved playback
    } else {
        set.reflective = llmio::make_backend(refl);
    }
    return set;
}

} // namespace evoforge::cli
