#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>

#include "evoforge/core.hpp"
#include "evoforge/problems.hpp"

namespace evoforge::fitness {

class EmptyInputError : public std::runtime_error {
  public:
    EmptyInputError() : std::runtime_error("cannot aggregate an empty list") {}
};

class WeightMismatchError : public std::runtime_error {
  public:
    explicit WeightMismatchError(const std::string& what) : std::runtime_error(what) {}
};

// Mean or weighted sum. Weights are normalized to sum to 1.
double aggregate(std::span<const double> values, const Aggregator& agg);

// lambda(t) = lambda_max * min(1, (t / ramp)^p); non-decreasing, lambda(0) = 0.
double adaptive_weight(int t, const AdaptiveSchedule& schedule);

// Tour cost; invalid permutations become infeasible fitness, not exceptions.
FitnessValue eval_solution(const problems::TspInstance& inst, const Candidate& candidate);

// Per-instance excess ratios via bpp_pack, aggregated, plus the parsimony
// penalty lambda(t) * max(0, complexity - size_budget) / size_budget.
// Any DomainError makes the whole fitness infeasible, recording the failing
// instance index in the components.
FitnessValue eval_heuristic(const Candidate& candidate, const problems::TrainingSet& train,
                            const Aggregator& agg, int t, const AdaptiveSchedule& schedule);

struct CacheKey {
    std::uint64_t candidate_digest = 0;
    std::uint64_t problem_digest = 0;
    int schedule_epoch = 0;

    auto operator<=>(const CacheKey&) const = default;
};

// Digest-keyed fitness memo. Values for equal keys are always equal (evals
// are pure), so concurrent last-writer-wins puts are harmless.
class FitnessCache {
  public:
    std::optional<FitnessValue> get(const CacheKey& key) const;
    void put(const CacheKey& key, FitnessValue value);

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }

  private:
    mutable std::mutex mutex_;
    std::map<CacheKey, FitnessValue> entries_;
    mutable std::uint64_t hits_ = 0;
    mutable std::uint64_t misses_ = 0;
};

} // namespace evoforge::fitness
