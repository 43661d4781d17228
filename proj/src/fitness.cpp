#include "evoforge/fitness.hpp"

#include <cmath>

namespace evoforge::fitness {

double aggregate(std::span<const double> values, const Aggregator& agg) {
    if (values.empty()) {
        throw EmptyInputError();
    }
    if (agg.kind == AggregatorKind::Mean) {
        double sum = 0.0;
        for (double v : values) {
            sum += v;
        }
        return sum / static_cast<double>(values.size());
    }
    if (agg.weights.size() != values.size()) {
        throw WeightMismatchError("aggregator has " + std::to_string(agg.weights.size()) +
                                  " weights for " + std::to_string(values.size()) + " values");
    }
    double norm = 0.0;
    for (double w : agg.weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw WeightMismatchError("weights must be positive and finite");
        }
        norm += w;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += (agg.weights[i] / norm) * values[i];
    }
    return sum;
}

double adaptive_weight(int t, const AdaptiveSchedule& schedule) {
    if (t <= 0) {
        return 0.0;
    }
    const double ratio = static_cast<double>(t) / static_cast<double>(schedule.ramp_generations);
    return schedule.lambda_max * std::min(1.0, std::pow(ratio, schedule.exponent));
}

FitnessValue eval_solution(const problems::TspInstance& inst, const Candidate& candidate) {
    if (candidate.kind() != CandidateKind::Solution) {
        throw std::invalid_argument("eval_solution requires a Solution candidate");
    }
    if (auto err = problems::tsp_validate(candidate.tour().order, inst.size())) {
        return FitnessValue::infeasible_value({{"invalid_permutation", 1.0}});
    }
    const double length = problems::tsp_tour_length(inst, candidate.tour());
    return FitnessValue::feasible_value(length, {{"base", length}});
}

FitnessValue eval_heuristic(const Candidate& candidate, const problems::TrainingSet& train,
                            const Aggregator& agg, int t, const AdaptiveSchedule& schedule) {
    if (candidate.kind() != CandidateKind::Heuristic) {
        throw std::invalid_argument("eval_heuristic requires a Heuristic candidate");
    }
    std::vector<double> scores;
    scores.reserve(train.instances.size());
    std::map<std::string, double> components;
    for (std::size_t i = 0; i < train.instances.size(); ++i) {
        const problems::BppInstance& inst = train.instances[i];
        try {
            const problems::Packing packing = problems::bpp_pack(inst, candidate.expr());
            const double score =
                problems::excess_ratio(packing.bin_count(), problems::bpp_lower_bound(inst));
            scores.push_back(score);
            components["s" + std::to_string(i)] = score;
        } catch (const hdsl::DomainError&) {
            return FitnessValue::infeasible_value(
                {{"failed_instance", static_cast<double>(i)}});
        } catch (const hdsl::UnboundVariableError&) {
            return FitnessValue::infeasible_value(
                {{"failed_instance", static_cast<double>(i)}});
        }
    }

    Aggregator effective = agg;
    if (effective.kind == AggregatorKind::WeightedSum && effective.weights.empty()) {
        effective.weights = train.weights;
    }
    const double base = aggregate(scores, effective);

    const int complexity = hdsl::complexity(candidate.expr());
    const int over = std::max(0, complexity - schedule.size_budget);
    const double penalty = adaptive_weight(t, schedule) * static_cast<double>(over) /
                           static_cast<double>(schedule.size_budget);

    components["base"] = base;
    components["penalty"] = penalty;
    return FitnessValue::feasible_value(base + penalty, std::move(components));
}

std::optional<FitnessValue> FitnessCache::get(const CacheKey& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

void FitnessCache::put(const CacheKey& key, FitnessValue value) {
    std::lock_guard lock(mutex_);
    entries_.insert_or_assign(key, std::move(value));
}

} // namespace evoforge::fitness
