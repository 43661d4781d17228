#pragma once

// The four frozen prompt scenarios derived from the shipped demo configs.
// Golden files live in tests/golden/; regenerate with
// EVOFORGE_UPDATE_GOLDENS=1 after an intentional format change.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "evoforge/config.hpp"
#include "evoforge/fitness.hpp"
#include "evoforge/prompting.hpp"

namespace golden {

struct Scenario {
    std::string name; // golden file stem
    std::string text;
};

inline double heuristic_base_cost(const std::string& expr,
                                  const evoforge::problems::TrainingSet& train) {
    const evoforge::Candidate cand(1, evoforge::CandidateKind::Heuristic,
                                   evoforge::hdsl::parse(expr), evoforge::Provenance{1, {}, "g"});
    return evoforge::fitness::eval_heuristic(cand, train, {}, 0, {}).cost;
}

inline std::vector<Scenario> demo_scenarios(const std::filesystem::path& source_dir) {
    namespace prompting = evoforge::prompting;
    using evoforge::cli::load_config;

    std::vector<Scenario> scenarios;

    // --- TSP demo ---
    const auto tsp_config = load_config(source_dir / "configs/demo_tsp.json");
    const auto tsp_problem = evoforge::cli::build_problem(tsp_config);
    const auto& inst = *tsp_problem.tsp;
    const std::string tsp_instruction = tsp_config.run.variation[0].task_instruction;

    {
        prompting::VariationPromptSpec spec;
        spec.problem_description = tsp_problem.description;
        spec.task_instruction = tsp_instruction;
        const evoforge::problems::TourPermutation worse{{0, 2, 1, 3}};
        const evoforge::problems::TourPermutation best{{0, 1, 2, 3}};
        spec.examples = {
            {evoforge::problems::tour_text(worse), evoforge::problems::tsp_tour_length(inst, worse)},
            {evoforge::problems::tour_text(best), evoforge::problems::tsp_tour_length(inst, best)},
        };
        spec.offspring_requested = 1;
        spec.output_contract = prompting::solution_output_contract(1, inst.size());
        scenarios.push_back({"variation_tsp", prompting::render_variation_prompt(spec)});
    }
    {
        prompting::ReflectivePromptSpec spec;
        spec.current_instruction = tsp_instruction;
        spec.short_term = {{"0,1,2,3", 4.82843, 4.0}};
        spec.long_term = {5.0, 4.5, 4.5};
        spec.directive = prompting::default_reflective_directive();
        scenarios.push_back({"reflective_tsp", prompting::render_reflective_prompt(spec)});
    }

    // --- BPP demo ---
    const auto bpp_config = load_config(source_dir / "configs/demo_bpp.json");
    const auto bpp_problem = evoforge::cli::build_problem(bpp_config);
    const auto& train = *bpp_problem.training;
    const std::string bpp_instruction = bpp_config.run.variation[0].task_instruction;
    const double ff_cost = heuristic_base_cost("-index", train);
    const double bf_cost = heuristic_base_cost("-(cap - item)", train);

    {
        prompting::VariationPromptSpec spec;
        spec.problem_description = bpp_problem.description;
        spec.task_instruction = bpp_instruction;
        spec.examples = {{"-index", ff_cost}, {"-(cap - item)", bf_cost}};
        if (spec.examples[0].cost < spec.examples[1].cost) {
            std::swap(spec.examples[0], spec.examples[1]);
        }
        spec.offspring_requested = 1;
        spec.output_contract =
            prompting::heuristic_output_contract(1, evoforge::hdsl::kDefaultMaxSize);
        scenarios.push_back({"variation_bpp", prompting::render_variation_prompt(spec)});
    }
    {
        prompting::ReflectivePromptSpec spec;
        spec.current_instruction = bpp_instruction;
        spec.short_term = {{"-(cap - item)", ff_cost, bf_cost}};
        spec.long_term = {ff_cost, bf_cost};
        spec.directive = prompting::default_reflective_directive();
        scenarios.push_back({"reflective_bpp", prompting::render_reflective_prompt(spec)});
    }
    return scenarios;
}

inline std::filesystem::path golden_path(const std::filesystem::path& source_dir,
                                         const std::string& name) {
    return source_dir / "tests" / "golden" / (name + ".golden.txt");
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace golden
