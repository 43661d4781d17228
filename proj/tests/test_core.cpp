#include <doctest.h>

#include <set>

#include "evoforge/core.hpp"
#include "evoforge/rng.hpp"

using namespace evoforge;

namespace {

Candidate tour_candidate(std::uint64_t id, std::vector<int> order,
                         std::optional<std::string> description = {},
                         std::vector<std::string> tags = {}) {
    return Candidate(id, CandidateKind::Solution, problems::TourPermutation{std::move(order)},
                     Provenance{1, {}, "test"}, std::move(description), std::move(tags));
}

Candidate expr_candidate(std::uint64_t id, const std::string& text,
                         std::optional<std::string> description = {},
                         std::vector<std::string> tags = {}) {
    return Candidate(id, CandidateKind::Heuristic, hdsl::parse(text), Provenance{1, {}, "test"},
                     std::move(description), std::move(tags));
}

} // namespace

TEST_CASE("canonical serialization is id-independent and payload-exact") {
    const Candidate a = tour_candidate(1, {0, 1, 2, 3});
    const Candidate b = tour_candidate(99, {0, 1, 2, 3});
    CHECK(canonical_serialize(a) == canonical_serialize(b));

    const Candidate expr = expr_candidate(1, "cap - item");
    const Candidate reparsed = expr_candidate(2, hdsl::print(expr.expr()));
    CHECK(canonical_serialize(expr) == canonical_serialize(reparsed));

    const Candidate with_desc = expr_candidate(3, "cap - item", "prefers tight bins");
    CHECK(canonical_serialize(expr) != canonical_serialize(with_desc));

    const Candidate with_tags = expr_candidate(4, "cap - item", "prefers tight bins",
                                               {"residual capacity", "greedy"});
    CHECK(canonical_serialize(with_desc) != canonical_serialize(with_tags));
}

TEST_CASE("canonical serialization byte format is pinned") {
    CHECK(canonical_serialize(tour_candidate(1, {0, 1, 2, 3})) == "solution\n0,1,2,3\n\n");
    CHECK(canonical_serialize(expr_candidate(2, "-index", "first fit", {"a", "b"})) ==
          "heuristic\n-index\nfirst fit\na,b");
}

TEST_CASE("the three representation forms serialize distinctly") {
    // code-centric, hybrid, augmented
    const Candidate code = expr_candidate(1, "-index");
    const Candidate hybrid = expr_candidate(2, "-index", "first fit");
    const Candidate augmented = expr_candidate(3, "-index", "first fit", {"packing"});
    std::set<std::string> forms = {canonical_serialize(code), canonical_serialize(hybrid),
                                   canonical_serialize(augmented)};
    CHECK(forms.size() == 3);
}

TEST_CASE("candidate digests") {
    const Candidate a = tour_candidate(1, {0, 1, 2, 3});
    CHECK(candidate_digest(a) == candidate_digest(a));
    CHECK(candidate_digest(a) == candidate_digest(tour_candidate(7, {0, 1, 2, 3})));
    CHECK(candidate_digest(a) != candidate_digest(tour_candidate(1, {0, 2, 1, 3})));
}

TEST_CASE("serialization is injective over a generated corpus") {
    Rng rng(11);
    std::vector<Candidate> corpus;
    std::vector<std::string> vars = {"cap", "item", "index", "n_bins"};
    for (std::uint64_t i = 0; i < 250; ++i) {
        corpus.push_back(expr_candidate(i, hdsl::print(hdsl::random_expr(rng, vars, 3))));
        std::vector<int> order = {0, 1, 2, 3, 4, 5};
        for (int k = 5; k > 0; --k) {
            const auto j = static_cast<std::size_t>(
                uniform_below(rng, static_cast<std::uint64_t>(k) + 1));
            std::swap(order[static_cast<std::size_t>(k)], order[j]);
        }
        corpus.push_back(tour_candidate(1000 + i, order));
    }
    // Brute-force pairwise: distinct payloads => distinct serializations.
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (std::size_t j = i + 1; j < corpus.size(); ++j) {
            const std::string si = canonical_serialize(corpus[i]);
            const std::string sj = canonical_serialize(corpus[j]);
            if (payload_text(corpus[i]) != payload_text(corpus[j])) {
                CHECK(si != sj);
            } else {
                CHECK(si == sj);
            }
        }
    }
}

TEST_CASE("kind and payload must agree at construction") {
    CHECK_THROWS_AS(Candidate(1, CandidateKind::Heuristic,
                              problems::TourPermutation{{0, 1, 2}}, Provenance{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(Candidate(1, CandidateKind::Solution, hdsl::parse("cap"), Provenance{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(tour_candidate(1, {0, 1, 2}).cost(), std::logic_error);
}

TEST_CASE("feasibility invariant on FitnessValue") {
    const FitnessValue bad = FitnessValue::infeasible_value();
    CHECK(!bad.feasible);
    CHECK(std::isinf(bad.cost));
    CHECK_THROWS_AS(FitnessValue::feasible_value(kInfeasibleCost, {}), std::invalid_argument);
}

TEST_CASE("config validation names the violated bound") {
    RunConfig config;
    config.variation.push_back({"e1", StrategyFamily::Exploration, "do it", 5, 1});
    CHECK_NOTHROW(validate_config(config));

    RunConfig small = config;
    small.population_size = 1;
    try {
        validate_config(small);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("population_size") != std::string::npos);
    }

    RunConfig no_instr = config;
    no_instr.variation[0].task_instruction.clear();
    CHECK_THROWS_AS(validate_config(no_instr), ConfigError);

    RunConfig bad_cadence = config;
    bad_cadence.reflection.cadence = 0;
    CHECK_THROWS_AS(validate_config(bad_cadence), ConfigError);
}

TEST_CASE("run log sequence and correlation rules") {
    RunLog log;
    log.append(RecordKind::Meta, 0, {{"seed", 1}});
    log.append(RecordKind::Prompt, 1, {{"correlation_id", "v1"}, {"text", "p"}});
    log.append(RecordKind::Response, 1, {{"correlation_id", "v1"}, {"text", "r"}});
    CHECK(log.records().size() == 3);
    for (std::size_t i = 0; i < log.records().size(); ++i) {
        CHECK(log.records()[i].seq == i + 1);
    }

    CHECK_THROWS_AS(log.append(RecordKind::Response, 1, {{"correlation_id", "v9"}}),
                    std::logic_error);
    log.append(RecordKind::Prompt, 1, {{"correlation_id", "v2"}, {"text", "p"}});
    CHECK_THROWS_AS(log.append(RecordKind::Response, 1, {{"correlation_id", "v1"}}),
                    std::logic_error);
}

TEST_CASE("log digest ignores timestamps") {
    RunLog a, b;
    a.append(RecordKind::Meta, 0, {{"seed", 5}});
    b.append(RecordKind::Meta, 0, {{"seed", 5}});
    auto ra = a.records();
    auto rb = b.records();
    rb[0].time = "1999-01-01T00:00:00Z";
    CHECK(log_digest(ra) == log_digest(rb));

    RunLog c;
    c.append(RecordKind::Meta, 0, {{"seed", 6}});
    CHECK(log_digest(a.records()) != log_digest(c.records()));
}
