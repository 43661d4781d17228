#include "evoforge/engine.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

#include "evoforge/digest.hpp"

namespace evoforge::engine {

ProblemContext ProblemContext::solution(problems::TspInstance instance) {
    ProblemContext ctx;
    ctx.mode = Mode::SolutionSearch;
    ctx.description = problems::problem_description(instance);
    ctx.digest = instance.digest;
    ctx.tsp = std::move(instance);
    return ctx;
}

ProblemContext ProblemContext::heuristic(problems::TrainingSet training_set) {
    ProblemContext ctx;
    ctx.mode = Mode::HeuristicSearch;
    ctx.description = problems::problem_description(training_set);
    ctx.digest = training_set.digest();
    ctx.training = std::move(training_set);
    return ctx;
}

bool candidate_less(const Candidate& a, const Candidate& b) {
    const double ca = a.cost();
    const double cb = b.cost();
    if (ca != cb) {
        return ca < cb;
    }
    if (!a.fitness()->feasible && !b.fitness()->feasible &&
        a.complexity() != b.complexity()) {
        return a.complexity() < b.complexity();
    }
    if (a.provenance().generation_created != b.provenance().generation_created) {
        return a.provenance().generation_created < b.provenance().generation_created;
    }
    return a.id() < b.id();
}

std::uint64_t population_digest(const Population& pop) {
    std::uint64_t h = fnv1a64("pop");
    h = fnv1a64_u64(static_cast<std::uint64_t>(pop.generation), h);
    for (const Candidate& c : pop.members) {
        h = fnv1a64_u64(candidate_digest(c), h);
        h = fnv1a64_double(c.cost(), h);
    }
    return h;
}

namespace {

problems::TourPermutation random_permutation(int n, Rng& rng) {
    problems::TourPermutation tour;
    tour.order.resize(static_cast<std::size_t>(n));
    std::iota(tour.order.begin(), tour.order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, static_cast<std::uint64_t>(i) + 1));
        std::swap(tour.order[static_cast<std::size_t>(i)], tour.order[j]);
    }
    return tour;
}

const std::vector<std::string> kSeedExpressions = {"-index", "cap - item", "-(cap - item)"};

} // namespace

Population initialize(const RunConfig& config, const ProblemContext& problem, Rng& rng,
                      IdGen& ids) {
    Population pop;
    pop.generation = 1;
    const Provenance init_prov{1, {}, "init"};
    if (config.mode == Mode::SolutionSearch) {
        const problems::TspInstance& inst = *problem.tsp;
        pop.members.emplace_back(ids.next(), CandidateKind::Solution,
                                 problems::tsp_nearest_neighbor(inst, 0), init_prov);
        for (int i = 1; i < config.population_size; ++i) {
            pop.members.emplace_back(ids.next(), CandidateKind::Solution,
                                     random_permutation(inst.size(), rng), init_prov);
        }
    } else {
        const auto vars = problems::bpp_variables();
        for (int i = 0; i < config.population_size; ++i) {
            hdsl::ExprPtr expr =
                i < static_cast<int>(kSeedExpressions.size())
                    ? hdsl::parse(kSeedExpressions[static_cast<std::size_t>(i)])
                    : hdsl::random_expr(rng, vars, 3);
            pop.members.emplace_back(ids.next(), CandidateKind::Heuristic, std::move(expr),
                                     init_prov);
        }
    }
    return pop;
}

namespace {

std::size_t tournament(const Population& pop, int k, Rng& rng) {
    std::size_t winner = pick_index(rng, pop.members.size());
    for (int draw = 1; draw < k; ++draw) {
        const std::size_t challenger = pick_index(rng, pop.members.size());
        if (candidate_less(pop.members[challenger], pop.members[winner])) {
            winner = challenger;
        }
    }
    return winner;
}

} // namespace

std::vector<std::vector<std::size_t>> select_parents(const Population& pop,
                                                     const RunConfig& config, Rng& rng) {
    std::vector<std::vector<std::size_t>> groups;
    groups.reserve(static_cast<std::size_t>(config.selection.groups_per_generation));
    for (int g = 0; g < config.selection.groups_per_generation; ++g) {
        std::vector<std::size_t> group;
        group.reserve(static_cast<std::size_t>(config.selection.group_size));
        for (int slot = 0; slot < config.selection.group_size; ++slot) {
            std::size_t winner = tournament(pop, config.selection.tournament_size, rng);
            // Keep members distinct where the population permits: bounded
            // re-draws, then the best member not yet in the group.
            const auto taken = [&](std::size_t idx) {
                return std::find(group.begin(), group.end(), idx) != group.end();
            };
            if (pop.members.size() > group.size()) {
                for (int attempt = 0; attempt < 16 && taken(winner); ++attempt) {
                    winner = tournament(pop, config.selection.tournament_size, rng);
                }
                if (taken(winner)) {
                    std::optional<std::size_t> fallback;
                    for (std::size_t idx = 0; idx < pop.members.size(); ++idx) {
                        if (!taken(idx) &&
                            (!fallback ||
                             candidate_less(pop.members[idx], pop.members[*fallback]))) {
                            fallback = idx;
                        }
                    }
                    winner = *fallback;
                }
            }
            group.push_back(winner);
        }
        groups.push_back(std::move(group));
    }
    return groups;
}

Population survivor_select(const Population& parents, std::vector<Candidate> offspring, int n) {
    std::vector<Candidate> pool = parents.members;
    for (Candidate& c : offspring) {
        pool.push_back(std::move(c));
    }
    std::stable_sort(pool.begin(), pool.end(), candidate_less);
    if (static_cast<int>(pool.size()) > n) {
        pool.erase(pool.begin() + n, pool.end());
    }
    Population next;
    next.generation = parents.generation + 1;
    next.members = std::move(pool);
    return next;
}

// --- Evaluator ---------------------------------------------------------------

Evaluator::Evaluator(const RunConfig& config, const ProblemContext& problem)
    : config_(config), problem_(problem) {}

int Evaluator::effective_epoch(int t) const {
    const bool schedule_active = config_.mode == Mode::HeuristicSearch &&
                                 config_.fitness.schedule.lambda_max > 0.0;
    return schedule_active ? t : 0;
}

bool Evaluator::needs_simulation(const Candidate& candidate) const {
    if (config_.mode == Mode::SolutionSearch) {
        return !cache_.get({candidate_digest(candidate), problem_.digest, 0}).has_value();
    }
    return base_cache_.find(candidate_digest(candidate)) == base_cache_.end();
}

FitnessValue Evaluator::evaluate(const Candidate& candidate, int t) {
    const std::uint64_t digest = candidate_digest(candidate);
    const fitness::CacheKey key{digest, problem_.digest, effective_epoch(t)};
    if (auto hit = cache_.get(key)) {
        return *hit;
    }

    FitnessValue value;
    if (config_.mode == Mode::SolutionSearch) {
        value = fitness::eval_solution(*problem_.tsp, candidate);
        ++simulations_;
    } else {
        auto it = base_cache_.find(digest);
        if (it == base_cache_.end()) {
            AdaptiveSchedule unpenalized = config_.fitness.schedule;
            unpenalized.lambda_max = 0.0;
            FitnessValue raw = fitness::eval_heuristic(candidate, *problem_.training,
                                                       config_.fitness.aggregator, t, unpenalized);
            ++simulations_;
            it = base_cache_.emplace(digest, HeuristicBase{std::move(raw), candidate.complexity()})
                     .first;
        }
        const HeuristicBase& base = it->second;
        if (!base.raw.feasible) {
            value = base.raw;
        } else {
            const auto& schedule = config_.fitness.schedule;
            const int over = std::max(0, base.complexity - schedule.size_budget);
            const double penalty = fitness::adaptive_weight(t, schedule) *
                                   static_cast<double>(over) /
                                   static_cast<double>(schedule.size_budget);
            auto components = base.raw.components;
            components["penalty"] = penalty;
            const double cost = components.at("base") + penalty;
            value = FitnessValue::feasible_value(cost, std::move(components));
        }
    }
    cache_.put(key, value);
    return value;
}

// --- Engine ---------------------------------------------------------------------

Engine::Engine(RunConfig config, ProblemContext problem, BackendSet backends, RunLog& log)
    : config_(std::move(config)),
      problem_(std::move(problem)),
      backends_(std::move(backends)),
      log_(log),
      rng_(config_.seed),
      evaluator_(config_, problem_) {
    for (const StrategySpec& spec : config_.variation) {
        strategies_.push_back({spec, spec.task_instruction, {}});
    }
}

void Engine::note_best(const Candidate& candidate) {
    if (!best_ || candidate_less(candidate, *best_)) {
        best_ = candidate;
    }
}

bool Engine::evaluate_candidate(Candidate& candidate, int t) {
    if (evaluator_.needs_simulation(candidate) &&
        stats_.evaluations >= config_.budget.max_evaluations) {
        return false;
    }
    candidate.set_fitness(evaluator_.evaluate(candidate, t));
    stats_.evaluations = evaluator_.simulations();
    note_best(candidate);
    return true;
}

void Engine::refresh_population(Population& pop, int t) {
    for (Candidate& c : pop.members) {
        // Base objectives are cached; this only moves the adaptive penalty.
        c.set_fitness(evaluator_.evaluate(c, t));
    }
    stats_.evaluations = evaluator_.simulations();
}

nlohmann::json Engine::candidate_json(const Candidate& candidate) const {
    nlohmann::json j;
    j["id"] = candidate.id();
    j["kind"] = std::string(to_string(candidate.kind()));
    j["payload"] = payload_text(candidate);
    if (candidate.description()) {
        j["description"] = *candidate.description();
    }
    if (!candidate.knowledge_tags().empty()) {
        j["tags"] = candidate.knowledge_tags();
    }
    j["digest"] = candidate_digest(candidate);
    j["generation_created"] = candidate.provenance().generation_created;
    if (candidate.evaluated()) {
        j["cost"] = candidate.cost();
        j["feasible"] = candidate.fitness()->feasible;
    }
    return j;
}

void Engine::log_generation(const Population& pop) {
    nlohmann::json members = nlohmann::json::array();
    double best_in_pop = kInfeasibleCost;
    for (const Candidate& c : pop.members) {
        nlohmann::json m;
        m["id"] = c.id();
        m["digest"] = candidate_digest(c);
        m["cost"] = c.cost();
        m["feasible"] = c.fitness()->feasible;
        m["generation_created"] = c.provenance().generation_created;
        m["parents"] = c.provenance().parent_ids;
        members.push_back(std::move(m));
        best_in_pop = std::min(best_in_pop, c.cost());
    }
    GenerationSummary summary;
    summary.generation = pop.generation;
    summary.best_in_population = best_in_pop;
    summary.best_so_far = best_ ? best_->cost() : kInfeasibleCost;
    summary.digest = population_digest(pop);
    history_.push_back(summary);

    nlohmann::json body;
    body["population_digest"] = summary.digest;
    body["best_in_population"] = summary.best_in_population;
    body["best_so_far"] = summary.best_so_far;
    body["members"] = std::move(members);
    body["backend_calls"] = stats_.backend_calls;
    body["evaluations"] = stats_.evaluations;
    if (!pending_diagnostics_.empty()) {
        body["diagnostics"] = pending_diagnostics_;
        pending_diagnostics_.clear();
    }
    log_.append(RecordKind::Generation, pop.generation, std::move(body));
}

std::vector<Candidate> Engine::variation_step(const Population& pop,
                                              const std::vector<std::vector<std::size_t>>& groups,
                                              int t) {
    std::vector<Candidate> offspring;
    const CandidateKind kind = config_.mode == Mode::SolutionSearch ? CandidateKind::Solution
                                                                    : CandidateKind::Heuristic;
    const std::optional<int> n_cities =
        problem_.tsp ? std::optional<int>(problem_.tsp->size()) : std::nullopt;

    for (StrategyState& strategy : strategies_) {
        strategy.last_reports.clear();
    }
    for (StrategyState& strategy : strategies_) {
        for (const auto& group : groups) {
            if (stats_.backend_calls >= config_.budget.max_backend_calls) {
                call_budget_hit_ = true;
                pending_diagnostics_.push_back("backend call budget exhausted mid-generation");
                return offspring;
            }

            // Modification strategies work from a single parent: the best of
            // the group. Others use the whole group, capped at E examples.
            std::vector<std::size_t> members = group;
            std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
                return candidate_less(pop.members[a], pop.members[b]);
            });
            if (strategy.spec.family == StrategyFamily::Modification) {
                members.resize(1);
            } else if (static_cast<int>(members.size()) > strategy.spec.examples_per_prompt) {
                members.resize(static_cast<std::size_t>(strategy.spec.examples_per_prompt));
            }

            // Examples worst-to-best; members is currently best-first.
            prompting::VariationPromptSpec spec;
            spec.problem_description = problem_.description;
            spec.task_instruction = strategy.instruction;
            spec.offspring_requested = strategy.spec.offspring_requested;
            spec.output_contract =
                kind == CandidateKind::Solution
                    ? prompting::solution_output_contract(spec.offspring_requested,
                                                          problem_.tsp->size())
                    : prompting::heuristic_output_contract(spec.offspring_requested,
                                                           hdsl::kDefaultMaxSize);
            std::vector<std::uint64_t> parent_ids;
            double parent_best_cost = kInfeasibleCost;
            for (auto it = members.rbegin(); it != members.rend(); ++it) {
                const Candidate& parent = pop.members[*it];
                spec.examples.push_back(
                    {prompting::render_candidate(parent), parent.cost()});
            }
            for (std::size_t idx : members) {
                const Candidate& parent = pop.members[idx];
                parent_ids.push_back(parent.id());
                parent_best_cost = std::min(parent_best_cost, parent.cost());
            }

            const std::string prompt = prompting::render_variation_prompt(spec);
            const std::string correlation = "v" + std::to_string(++correlation_seq_);
            llmio::CompletionRequest request;
            request.messages = {{llmio::MessageRole::User, prompt}};
            request.temperature = config_.variation_backend.temperature;
            request.max_tokens = config_.variation_backend.max_tokens;
            request.correlation_id = correlation;

            log_.append(RecordKind::Prompt, t,
                        {{"correlation_id", correlation},
                         {"role", "variation"},
                         {"strategy", strategy.spec.label},
                         {"parents", parent_ids},
                         {"text", prompt}});
            ++stats_.backend_calls;

            std::string response;
            try {
                response = backends_.variation->complete(request);
            } catch (const llmio::BackendError& e) {
                log_.append(RecordKind::Response, t,
                            {{"correlation_id", correlation},
                             {"error", e.what()},
                             {"error_kind", std::string(llmio::to_string(e.kind()))}});
                pending_diagnostics_.push_back("call " + correlation + ": " + e.what());
                continue;
            }
            log_.append(RecordKind::Response, t,
                        {{"correlation_id", correlation}, {"text", response}});

            prompting::ParseCandidatesResult parsed;
            try {
                parsed = prompting::parse_candidates(response, kind,
                                                     strategy.spec.offspring_requested, n_cities);
            } catch (const prompting::NoCandidatesError& e) {
                pending_diagnostics_.push_back("call " + correlation + ": " + e.what());
                continue;
            }
            for (const std::string& diag : parsed.diagnostics) {
                pending_diagnostics_.push_back("call " + correlation + ": " + diag);
            }

            for (prompting::ParsedCandidate& pc : parsed.candidates) {
                Candidate child(ids_.next(), kind, std::move(pc.payload),
                                Provenance{t + 1, parent_ids, strategy.spec.label},
                                std::move(pc.description));
                if (!evaluate_candidate(child, t)) {
                    pending_diagnostics_.push_back("call " + correlation +
                                                   ": evaluation budget exhausted, child dropped");
                    continue;
                }
                strategy.last_reports.push_back({prompting::render_candidate(child),
                                                 parent_best_cost, child.cost()});
                offspring.push_back(std::move(child));
            }
        }
    }
    return offspring;
}

void Engine::reflect(int t) {
    std::vector<double> trajectory;
    trajectory.reserve(history_.size());
    for (const GenerationSummary& g : history_) {
        trajectory.push_back(g.best_so_far);
    }
    for (StrategyState& strategy : strategies_) {
        if (stats_.backend_calls >= config_.budget.max_backend_calls) {
            call_budget_hit_ = true;
            return;
        }
        prompting::ReflectivePromptSpec spec;
        spec.current_instruction = strategy.instruction;
        spec.short_term = strategy.last_reports;
        spec.long_term = trajectory;
        spec.directive = prompting::default_reflective_directive();
        const std::string prompt = prompting::render_reflective_prompt(spec);
        const std::string correlation = "r" + std::to_string(++correlation_seq_);

        llmio::CompletionRequest request;
        request.messages = {{llmio::MessageRole::User, prompt}};
        request.temperature = config_.reflective_backend.temperature;
        request.max_tokens = config_.reflective_backend.max_tokens;
        request.correlation_id = correlation;

        log_.append(RecordKind::Prompt, t,
                    {{"correlation_id", correlation},
                     {"role", "reflective"},
                     {"strategy", strategy.spec.label},
                     {"text", prompt}});
        ++stats_.backend_calls;

        std::string response;
        try {
            response = backends_.reflective->complete(request);
        } catch (const llmio::BackendError& e) {
            log_.append(RecordKind::Response, t,
                        {{"correlation_id", correlation},
                         {"error", e.what()},
                         {"error_kind", std::string(llmio::to_string(e.kind()))}});
            log_.append(RecordKind::Reflection, t,
                        {{"strategy", strategy.spec.label},
                         {"old_instruction", strategy.instruction},
                         {"new_instruction", strategy.instruction},
                         {"changed", false},
                         {"note", std::string("backend error: ") + e.what()}});
            continue;
        }
        log_.append(RecordKind::Response, t,
                    {{"correlation_id", correlation}, {"text", response}});

        try {
            std::string instruction = prompting::parse_instruction(response);
            log_.append(RecordKind::Reflection, t,
                        {{"strategy", strategy.spec.label},
                         {"old_instruction", strategy.instruction},
                         {"new_instruction", instruction},
                         {"changed", true}});
            strategy.instruction = std::move(instruction);
        } catch (const prompting::NoInstructionError& e) {
            log_.append(RecordKind::Reflection, t,
                        {{"strategy", strategy.spec.label},
                         {"old_instruction", strategy.instruction},
                         {"new_instruction", strategy.instruction},
                         {"changed", false},
                         {"note", e.what()}});
        }
    }
}

RunResult Engine::run() {
    validate_config(config_);
    if (config_.mode == Mode::SolutionSearch && !problem_.tsp) {
        throw ConfigError("solution search requires a TSP instance");
    }
    if (config_.mode == Mode::HeuristicSearch && !problem_.training) {
        throw ConfigError("heuristic search requires a training set");
    }
    if (!backends_.variation || !backends_.reflective) {
        throw ConfigError("both backend roles must be bound");
    }

    nlohmann::json meta;
    meta["mode"] = std::string(to_string(config_.mode));
    meta["seed"] = config_.seed;
    meta["population_size"] = config_.population_size;
    meta["generations"] = config_.generations;
    meta["problem_digest"] = problem_.digest;
    meta["prompt_format_version"] = prompting::kPromptFormatVersion;
    if (!meta_extra_.is_null()) {
        meta["extra"] = meta_extra_;
    }
    log_.append(RecordKind::Meta, 0, std::move(meta));

    Population pop = initialize(config_, problem_, rng_, ids_);
    std::string stop_reason = "completed";
    bool stopped_early = false;
    {
        std::vector<Candidate> evaluated;
        evaluated.reserve(pop.members.size());
        for (Candidate& c : pop.members) {
            if (evaluate_candidate(c, 1)) {
                evaluated.push_back(std::move(c));
            } else {
                pending_diagnostics_.push_back("evaluation budget exhausted during initialization");
                stop_reason = "evaluation_budget_exhausted";
                stopped_early = true;
            }
        }
        pop.members = std::move(evaluated);
    }
    log_generation(pop);

    int generations_run = 0;
    if (!stopped_early) {
        for (int t = 1; t <= config_.generations; ++t) {
            if (config_.target_cost && best_ && best_->cost() <= *config_.target_cost) {
                stop_reason = "target_cost_reached";
                break;
            }
            if (stats_.backend_calls >= config_.budget.max_backend_calls) {
                stop_reason = "call_budget_exhausted";
                break;
            }

            const auto groups = select_parents(pop, config_, rng_);
            std::vector<Candidate> offspring = variation_step(pop, groups, t);
            pop = survivor_select(pop, std::move(offspring), config_.population_size);
            refresh_population(pop, t + 1);
            log_generation(pop);
            generations_run = t;

            if (config_.reflection.enabled && t % config_.reflection.cadence == 0) {
                reflect(t);
            }
            if (call_budget_hit_) {
                stop_reason = "call_budget_exhausted";
                break;
            }
            if (stats_.evaluations >= config_.budget.max_evaluations) {
                stop_reason = "evaluation_budget_exhausted";
                break;
            }
        }
    }

    if (!best_) {
        throw std::runtime_error("run produced no evaluated candidate");
    }
    RunResult result{*best_, generations_run, stats_, stop_reason, history_};

    nlohmann::json body;
    body["best_cost"] = best_->cost();
    body["best_candidate"] = candidate_json(*best_);
    body["generations_run"] = generations_run;
    body["backend_calls"] = stats_.backend_calls;
    body["evaluations"] = stats_.evaluations;
    body["stop_reason"] = stop_reason;
    log_.append(RecordKind::Result, pop.generation, std::move(body));
    return result;
}

} // namespace evoforge::engine
