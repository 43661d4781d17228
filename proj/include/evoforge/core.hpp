#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "evoforge/hdsl.hpp"
#include "evoforge/problems.hpp"

namespace evoforge {

enum class CandidateKind { Solution, Heuristic };

std::string_view to_string(CandidateKind kind);

constexpr double kInfeasibleCost = std::numeric_limits<double>::infinity();

// Lower cost is always better. The two demo problems are minimizations, so
// the whole artifact runs on cost; a maximization objective maps in by
// negation.
struct FitnessValue {
    double cost = kInfeasibleCost;
    std::map<std::string, double> components;
    bool feasible = false;

    static FitnessValue feasible_value(double cost, std::map<std::string, double> components);
    static FitnessValue infeasible_value(std::map<std::string, double> components = {});

    bool operator==(const FitnessValue&) const = default;
};

struct Provenance {
    int generation_created = 1;
    std::vector<std::uint64_t> parent_ids;
    std::string operator_label;
};

using Payload = std::variant<problems::TourPermutation, hdsl::ExprPtr>;

// One population member. description empty = code-centric, description only =
// hybrid, description + tags = augmented; the metadata is prompt-side only
// and never evaluated. Immutable apart from the write-once fitness slot.
class Candidate {
  public:
    Candidate(std::uint64_t id, CandidateKind kind, Payload payload, Provenance provenance,
              std::optional<std::string> description = {},
              std::vector<std::string> knowledge_tags = {});

    std::uint64_t id() const { return id_; }
    CandidateKind kind() const { return kind_; }
    const Payload& payload() const { return payload_; }
    const problems::TourPermutation& tour() const;
    const hdsl::ExprPtr& expr() const;
    const std::optional<std::string>& description() const { return description_; }
    const std::vector<std::string>& knowledge_tags() const { return knowledge_tags_; }
    const Provenance& provenance() const { return provenance_; }

    const std::optional<FitnessValue>& fitness() const { return fitness_; }
    bool evaluated() const { return fitness_.has_value(); }
    double cost() const;
    // The engine refreshes costs when the adaptive schedule moves; plain
    // re-assignment with an identical value is also fine.
    void set_fitness(FitnessValue value) { fitness_ = std::move(value); }

    // Heuristic: AST node count. Solution: 0. Feeds the infeasible tie-break.
    int complexity() const;

  private:
    std::uint64_t id_;
    CandidateKind kind_;
    Payload payload_;
    Provenance provenance_;
    std::optional<std::string> description_;
    std::vector<std::string> knowledge_tags_;
    std::optional<FitnessValue> fitness_;
};

// Canonical payload printer: tours as comma-separated indices, heuristics via
// the DSL canonical printer. The same text appears in prompts, candidate
// blocks, and serialized forms.
std::string payload_text(const Candidate& candidate);

// UTF-8, fields in fixed order kind|payload|description|tags, newline
// separators, empty optionals as empty strings. Ids and fitness are excluded:
// identity is payload-based.
std::string canonical_serialize(const Candidate& candidate);

std::uint64_t candidate_digest(const Candidate& candidate);

struct Population {
    int generation = 1;
    std::vector<Candidate> members;

    int size() const { return static_cast<int>(members.size()); }
};

// --- Run configuration --------------------------------------------------------

enum class Mode { SolutionSearch, HeuristicSearch };
enum class StrategyFamily { Exploration, Modification };

std::string_view to_string(Mode mode);
std::string_view to_string(StrategyFamily family);

struct StrategySpec {
    std::string label;
    StrategyFamily family = StrategyFamily::Exploration;
    std::string task_instruction; // mutable via reflection
    int examples_per_prompt = 5;
    int offspring_requested = 1;
};

struct SelectionConfig {
    int tournament_size = 2;      // k
    int groups_per_generation = 4; // G
    int group_size = 2;           // m
};

struct ReflectionConfig {
    bool enabled = false;
    int cadence = 5; // R generations
};

enum class AggregatorKind { Mean, WeightedSum };

struct Aggregator {
    AggregatorKind kind = AggregatorKind::Mean;
    std::vector<double> weights; // WeightedSum only; normalized before use
};

// lambda(t) = lambda_max * min(1, (t / ramp_generations)^exponent).
// lambda_max = 0 disables the schedule.
struct AdaptiveSchedule {
    double lambda_max = 0.0;
    int ramp_generations = 1;
    double exponent = 1.0;
    int size_budget = 25; // nodes
};

struct FitnessConfig {
    Aggregator aggregator;
    AdaptiveSchedule schedule;
};

enum class BackendRole { Variation, Reflective };
enum class BackendKind { Http, Scripted, Synthetic };

std::string_view to_string(BackendRole role);
std::string_view to_string(BackendKind kind);

struct BackendBinding {
    BackendRole role = BackendRole::Variation;
    BackendKind backend = BackendKind::Synthetic;
    // Http
    std::string base_url;
    std::string model;
    // Scripted
    std::string script_path;
    // Synthetic
    std::uint64_t seed = 0;
    double temperature = 1.0;
    int max_tokens = 1024;
};

struct BudgetConfig {
    std::uint64_t max_backend_calls = 1'000'000'000;
    std::uint64_t max_evaluations = 1'000'000'000;
};

struct RunConfig {
    Mode mode = Mode::SolutionSearch;
    int population_size = 8;  // N
    int generations = 10;     // T
    std::uint64_t seed = 1;
    SelectionConfig selection;
    std::vector<StrategySpec> variation;
    ReflectionConfig reflection;
    FitnessConfig fitness;
    BackendBinding variation_backend;
    BackendBinding reflective_backend;
    BudgetConfig budget;
    std::optional<double> target_cost;
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Throws ConfigError naming the first violated bound.
void validate_config(const RunConfig& config);

// --- Run log --------------------------------------------------------------------

enum class RecordKind { Meta, Generation, Prompt, Response, Reflection, Result };

std::string_view to_string(RecordKind kind);
std::optional<RecordKind> record_kind_from_string(std::string_view name);

struct RunLogRecord {
    std::uint64_t seq = 0; // strictly increasing, starts at 1
    RecordKind kind = RecordKind::Meta;
    int generation = 0;
    std::string time; // wall clock; excluded from all digests
    nlohmann::json body;
};

// Append-only record of a run. Prompt/Response pairing is checked on append:
// every Response must match the pending Prompt's correlation_id.
class RunLog {
  public:
    using Sink = std::function<void(const RunLogRecord&)>;

    void set_sink(Sink sink) { sink_ = std::move(sink); }

    const RunLogRecord& append(RecordKind kind, int generation, nlohmann::json body);

    const std::vector<RunLogRecord>& records() const { return records_; }

  private:
    std::vector<RunLogRecord> records_;
    std::optional<std::string> pending_correlation_;
    Sink sink_;
};

// Digest over (seq, kind, generation, body) of every record; time excluded.
std::uint64_t log_digest(const std::vector<RunLogRecord>& records);

} // namespace evoforge
