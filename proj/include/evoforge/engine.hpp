#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "evoforge/core.hpp"
#include "evoforge/fitness.hpp"
#include "evoforge/llmio.hpp"
#include "evoforge/problems.hpp"
#include "evoforge/prompting.hpp"

// The evolutionary loop: initialization, evaluation, tournament selection,
// LLM-backed variation, (mu+lambda) survivor selection, and the optional
// reflective rewrite of the variation task instruction. Fully deterministic
// under the run seed for scripted and synthetic backends.
namespace evoforge::engine {

struct ProblemContext {
    Mode mode = Mode::SolutionSearch;
    std::optional<problems::TspInstance> tsp;
    std::optional<problems::TrainingSet> training;
    std::string description; // prompt-facing problem statement
    std::uint64_t digest = 0;

    static ProblemContext solution(problems::TspInstance instance);
    static ProblemContext heuristic(problems::TrainingSet training_set);
};

struct BackendSet {
    std::shared_ptr<llmio::Backend> variation;
    std::shared_ptr<llmio::Backend> reflective;
};

// The one total order used by tournaments and survivor selection:
// cost asc, then (when both are infeasible) complexity asc, then
// generation_created asc, then id asc. Requires evaluated candidates.
bool candidate_less(const Candidate& a, const Candidate& b);

// Digest over (generation, member digests, member costs) in member order;
// this is what replay compares generation by generation.
std::uint64_t population_digest(const Population& pop);

class IdGen {
  public:
    std::uint64_t next() { return next_++; }

  private:
    std::uint64_t next_ = 1;
};

// Generation 1. SolutionSearch: the nearest-neighbor tour first, then N-1
// seeded-random permutations. HeuristicSearch: the seed expressions -index,
// cap - item, -(cap - item) first, then seeded-random depth<=3 expressions.
Population initialize(const RunConfig& config, const ProblemContext& problem, Rng& rng,
                      IdGen& ids);

// G groups of m member indices; every slot is a size-k tournament (uniform
// draws with replacement, winner by candidate_less). Group members are kept
// distinct where the population permits.
std::vector<std::vector<std::size_t>> select_parents(const Population& pop,
                                                     const RunConfig& config, Rng& rng);

// (mu+lambda) truncation: union sorted by candidate_less, top N. Elitist.
Population survivor_select(const Population& parents, std::vector<Candidate> offspring, int n);

// Caching evaluator for both modes. The per-candidate base objective (tour
// length / per-instance scores) is simulated once; adaptive penalties are
// recomputed per epoch on top of the cached base.
class Evaluator {
  public:
    Evaluator(const RunConfig& config, const ProblemContext& problem);

    // True when evaluating this candidate would run a fresh simulation
    // (i.e. it would consume evaluation budget).
    bool needs_simulation(const Candidate& candidate) const;

    FitnessValue evaluate(const Candidate& candidate, int t);

    std::uint64_t simulations() const { return simulations_; }
    const fitness::FitnessCache& cache() const { return cache_; }

  private:
    int effective_epoch(int t) const;

    const RunConfig& config_;
    const ProblemContext& problem_;
    fitness::FitnessCache cache_;
    struct HeuristicBase {
        FitnessValue raw; // fitness at lambda = 0 (base + per-instance scores)
        int complexity = 0;
    };
    std::map<std::uint64_t, HeuristicBase> base_cache_;
    std::uint64_t simulations_ = 0;
};

struct RunStats {
    std::uint64_t backend_calls = 0;
    std::uint64_t evaluations = 0;
};

struct GenerationSummary {
    int generation = 0;
    double best_in_population = 0.0;
    double best_so_far = 0.0;
    std::uint64_t digest = 0;
};

struct RunResult {
    Candidate best;
    int generations_run = 0;
    RunStats stats;
    std::string stop_reason;
    std::vector<GenerationSummary> history;
};

class Engine {
  public:
    Engine(RunConfig config, ProblemContext problem, BackendSet backends, RunLog& log);

    // Extra JSON merged into the Meta record (the CLI stores the resolved
    // config file here so replay is self-contained).
    void set_meta_extra(nlohmann::json extra) { meta_extra_ = std::move(extra); }

    RunResult run();

  private:
    struct StrategyState {
        StrategySpec spec;
        std::string instruction; // live task instruction (reflection rewrites it)
        std::vector<prompting::OffspringReport> last_reports;
    };

    bool evaluate_candidate(Candidate& candidate, int t);
    void refresh_population(Population& pop, int t);
    std::vector<Candidate> variation_step(const Population& pop,
                                          const std::vector<std::vector<std::size_t>>& groups,
                                          int t);
    void reflect(int t);
    void log_generation(const Population& pop);
    nlohmann::json candidate_json(const Candidate& candidate) const;
    void note_best(const Candidate& candidate);

    RunConfig config_;
    ProblemContext problem_;
    BackendSet backends_;
    RunLog& log_;
    nlohmann::json meta_extra_;

    Rng rng_;
    IdGen ids_;
    Evaluator evaluator_;
    std::vector<StrategyState> strategies_;
    std::optional<Candidate> best_;
    RunStats stats_;
    std::vector<GenerationSummary> history_;
    std::vector<std::string> pending_diagnostics_;
    std::uint64_t correlation_seq_ = 0;
    bool call_budget_hit_ = false;
};

} // namespace evoforge::engine
