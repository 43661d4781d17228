#include "evoforge/core.hpp"

#include <chrono>
#include <cmath>

#include "evoforge/digest.hpp"

namespace evoforge {

std::string_view to_string(CandidateKind kind) {
    return kind == CandidateKind::Solution ? "solution" : "heuristic";
}

FitnessValue FitnessValue::feasible_value(double cost, std::map<std::string, double> components) {
    if (!std::isfinite(cost)) {
        throw std::invalid_argument("feasible fitness requires a finite cost");
    }
    FitnessValue v;
    v.cost = cost;
    v.components = std::move(components);
    v.feasible = true;
    return v;
}

FitnessValue FitnessValue::infeasible_value(std::map<std::string, double> components) {
    FitnessValue v;
    v.cost = kInfeasibleCost;
    v.components = std::move(components);
    v.feasible = false;
    return v;
}

Candidate::Candidate(std::uint64_t id, CandidateKind kind, Payload payload, Provenance provenance,
                     std::optional<std::string> description,
                     std::vector<std::string> knowledge_tags)
    : id_(id),
      kind_(kind),
      payload_(std::move(payload)),
      provenance_(std::move(provenance)),
      description_(std::move(description)),
      knowledge_tags_(std::move(knowledge_tags)) {
    const bool is_tour = std::holds_alternative<problems::TourPermutation>(payload_);
    if (is_tour != (kind_ == CandidateKind::Solution)) {
        throw std::invalid_argument("candidate kind does not match its payload type");
    }
    if (provenance_.generation_created < 1) {
        throw std::invalid_argument("generation_created must be >= 1");
    }
}

const problems::TourPermutation& Candidate::tour() const {
    return std::get<problems::TourPermutation>(payload_);
}

const hdsl::ExprPtr& Candidate::expr() const {
    return std::get<hdsl::ExprPtr>(payload_);
}

double Candidate::cost() const {
    if (!fitness_) {
        throw std::logic_error("candidate " + std::to_string(id_) + " is not evaluated");
    }
    return fitness_->cost;
}

int Candidate::complexity() const {
    return kind_ == CandidateKind::Heuristic ? hdsl::complexity(expr()) : 0;
}

std::string payload_text(const Candidate& candidate) {
    if (candidate.kind() == CandidateKind::Solution) {
        return problems::tour_text(candidate.tour());
    }
    return hdsl::print(candidate.expr());
}

std::string canonical_serialize(const Candidate& candidate) {
    std::string out(to_string(candidate.kind()));
    out += '\n';
    out += payload_text(candidate);
    out += '\n';
    out += candidate.description().value_or("");
    out += '\n';
    const auto& tags = candidate.knowledge_tags();
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += tags[i];
    }
    return out;
}

std::uint64_t candidate_digest(const Candidate& candidate) {
    return fnv1a64(canonical_serialize(candidate));
}

std::string_view to_string(Mode mode) {
    return mode == Mode::SolutionSearch ? "solution" : "heuristic";
}

std::string_view to_string(StrategyFamily family) {
    return family == StrategyFamily::Exploration ? "exploration" : "modification";
}

std::string_view to_string(BackendRole role) {
    return role == BackendRole::Variation ? "variation" : "reflective";
}

std::string_view to_string(BackendKind kind) {
    switch (kind) {
    case BackendKind::Http: return "http";
    case BackendKind::Scripted: return "scripted";
    default: return "synthetic";
    }
}

void validate_config(const RunConfig& config) {
    if (config.population_size < 2) {
        throw ConfigError("population_size must be >= 2, got " +
                          std::to_string(config.population_size));
    }
    if (config.generations < 1) {
        throw ConfigError("generations must be >= 1, got " + std::to_string(config.generations));
    }
    if (config.selection.tournament_size < 1) {
        throw ConfigError("selection.tournament_size must be >= 1, got " +
                          std::to_string(config.selection.tournament_size));
    }
    if (config.selection.groups_per_generation < 1) {
        throw ConfigError("selection.groups_per_generation must be >= 1, got " +
                          std::to_string(config.selection.groups_per_generation));
    }
    if (config.selection.group_size < 1) {
        throw ConfigError("selection.group_size must be >= 1, got " +
                          std::to_string(config.selection.group_size));
    }
    if (config.reflection.cadence < 1) {
        throw ConfigError("reflection.cadence must be >= 1, got " +
                          std::to_string(config.reflection.cadence));
    }
    if (config.variation.empty()) {
        throw ConfigError("at least one variation strategy is required");
    }
    for (const StrategySpec& s : config.variation) {
        if (s.label.empty()) {
            throw ConfigError("variation strategy label must be non-empty");
        }
        if (s.task_instruction.empty()) {
            throw ConfigError("strategy \"" + s.label + "\": task_instruction must be non-empty");
        }
        if (s.examples_per_prompt < 1) {
            throw ConfigError("strategy \"" + s.label + "\": examples_per_prompt must be >= 1");
        }
        if (s.offspring_requested < 1) {
            throw ConfigError("strategy \"" + s.label + "\": offspring_requested must be >= 1");
        }
    }
    if (config.fitness.schedule.lambda_max < 0.0) {
        throw ConfigError("fitness.adaptive.lambda_max must be >= 0");
    }
    if (config.fitness.schedule.ramp_generations < 1) {
        throw ConfigError("fitness.adaptive.ramp_generations must be >= 1");
    }
    if (config.fitness.schedule.exponent < 1.0) {
        throw ConfigError("fitness.adaptive.exponent must be >= 1");
    }
    if (config.fitness.schedule.size_budget < 1) {
        throw ConfigError("fitness.adaptive.size_budget must be >= 1");
    }
}

std::string_view to_string(RecordKind kind) {
    switch (kind) {
    case RecordKind::Meta: return "meta";
    case RecordKind::Generation: return "generation";
    case RecordKind::Prompt: return "prompt";
    case RecordKind::Response: return "response";
    case RecordKind::Reflection: return "reflection";
    case RecordKind::Result: return "result";
    }
    return "?";
}

std::optional<RecordKind> record_kind_from_string(std::string_view name) {
    for (RecordKind k : {RecordKind::Meta, RecordKind::Generation, RecordKind::Prompt,
                         RecordKind::Response, RecordKind::Reflection, RecordKind::Result}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

namespace {

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

const RunLogRecord& RunLog::append(RecordKind kind, int generation, nlohmann::json body) {
    if (kind == RecordKind::Prompt) {
        if (pending_correlation_) {
            throw std::logic_error("prompt logged while another prompt is awaiting its response");
        }
        pending_correlation_ = body.at("correlation_id").get<std::string>();
    } else if (kind == RecordKind::Response) {
        if (!pending_correlation_ ||
            *pending_correlation_ != body.at("correlation_id").get<std::string>()) {
            throw std::logic_error("response does not match the pending prompt correlation id");
        }
        pending_correlation_.reset();
    }
    RunLogRecord record;
    record.seq = records_.size() + 1;
    record.kind = kind;
    record.generation = generation;
    record.time = now_iso8601();
    record.body = std::move(body);
    records_.push_back(std::move(record));
    if (sink_) {
        sink_(records_.back());
    }
    return records_.back();
}

std::uint64_t log_digest(const std::vector<RunLogRecord>& records) {
    std::uint64_t h = fnv1a64("runlog");
    for (const RunLogRecord& r : records) {
        h = fnv1a64_u64(r.seq, h);
        h = fnv1a64(to_string(r.kind), h);
        h = fnv1a64_u64(static_cast<std::uint64_t>(r.generation), h);
        h = fnv1a64(r.body.dump(), h);
    }
    return h;
}

} // namespace evoforge
