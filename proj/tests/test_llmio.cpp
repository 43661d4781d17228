#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "stub_server.hpp"

#include "evoforge/llmio.hpp"
#include "evoforge/prompting.hpp"

using namespace evoforge;
using namespace evoforge::llmio;

namespace {

CompletionRequest request_for(const std::string& prompt, const std::string& correlation = "c1") {
    CompletionRequest req;
    req.messages = {{MessageRole::User, prompt}};
    req.correlation_id = correlation;
    return req;
}

std::string tsp_prompt() {
    prompting::VariationPromptSpec spec;
    spec.problem_description = "TSP on 4 cities.";
    spec.task_instruction = "Shorter tour please.";
    spec.examples = {{"0,2,1,3", 4.82843}, {"0,1,2,3", 4.0}};
    spec.output_contract = prompting::solution_output_contract(1, 4);
    return prompting::render_variation_prompt(spec);
}

std::string bpp_prompt() {
    prompting::VariationPromptSpec spec;
    spec.problem_description = "Online bin packing.";
    spec.task_instruction = "Better scorer please.";
    spec.examples = {{"-index", 0.2}, {"cap - item", 0.1}};
    spec.output_contract = prompting::heuristic_output_contract(1, hdsl::kDefaultMaxSize);
    return prompting::render_variation_prompt(spec);
}

std::string reflective_prompt() {
    prompting::ReflectivePromptSpec spec;
    spec.current_instruction = "Shorter tour please.";
    spec.short_term = {{"0,1,2,3", 4.8, 4.0}};
    spec.long_term = {5.0, 4.0};
    spec.directive = prompting::default_reflective_directive();
    return prompting::render_reflective_prompt(spec);
}

HttpOptions stub_options(int port) {
    HttpOptions opts;
    opts.base_url = "http://127.0.0.1:" + std::to_string(port);
    opts.model = "stub-model";
    opts.backoff_base_ms = 1; // keep retries fast in tests
    return opts;
}

} // namespace

TEST_CASE("scripted backend plays records in order and then exhausts") {
    ScriptedBackend backend({"first", "second"});
    CHECK(backend.complete(request_for("p")) == "first");
    CHECK(backend.complete(request_for("p")) == "second");
    try {
        backend.complete(request_for("p"));
        FAIL("expected ScriptExhausted");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::ScriptExhausted);
    }
}

TEST_CASE("scripted backend reads --- separated records from a file") {
    const auto path = std::filesystem::temp_directory_path() / "evoforge_tests" / "script.txt";
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path) << "line one\n---\nmulti\nline\n---\nlast\n";
    auto backend = ScriptedBackend::from_file(path);
    CHECK(backend->complete(request_for("p")) == "line one");
    CHECK(backend->complete(request_for("p")) == "multi\nline");
    CHECK(backend->complete(request_for("p")) == "last");
}

TEST_CASE("synthetic backend is a pure function of request and seed") {
    SyntheticBackend backend(42);
    const std::string prompt = tsp_prompt();
    CHECK(backend.complete(request_for(prompt, "x")) == backend.complete(request_for(prompt, "x")));
    // Different correlation ids give different mutations (usually).
    SyntheticBackend again(42);
    CHECK(backend.complete(request_for(prompt, "x")) == again.complete(request_for(prompt, "x")));
}

TEST_CASE("synthetic tours parse and stay permutations") {
    SyntheticBackend backend(7);
    for (int i = 0; i < 200; ++i) {
        const std::string response =
            backend.complete(request_for(tsp_prompt(), "c" + std::to_string(i)));
        auto parsed = prompting::parse_candidates(response, CandidateKind::Solution, 1, 4);
        REQUIRE(parsed.candidates.size() == 1);
    }
}

TEST_CASE("synthetic expressions parse and respect the size bound") {
    SyntheticBackend backend(7);
    for (int i = 0; i < 10000; ++i) {
        const std::string response =
            backend.complete(request_for(bpp_prompt(), "c" + std::to_string(i)));
        auto parsed = prompting::parse_candidates(response, CandidateKind::Heuristic, 1);
        REQUIRE(parsed.candidates.size() == 1);
        CHECK(hdsl::complexity(std::get<hdsl::ExprPtr>(parsed.candidates[0].payload)) <=
              hdsl::kDefaultMaxSize);
    }
}

TEST_CASE("synthetic backend honors the requested offspring count") {
    prompting::VariationPromptSpec spec;
    spec.problem_description = "TSP on 4 cities.";
    spec.task_instruction = "Shorter tour please.";
    spec.examples = {{"0,2,1,3", 4.82843}, {"0,1,2,3", 4.0}};
    spec.offspring_requested = 3;
    spec.output_contract = prompting::solution_output_contract(3, 4);
    SyntheticBackend backend(5);
    const std::string response =
        backend.complete(request_for(prompting::render_variation_prompt(spec)));
    auto parsed = prompting::parse_candidates(response, CandidateKind::Solution, 3, 4);
    CHECK(parsed.candidates.size() == 3);
}

TEST_CASE("synthetic reflective responses carry a suffixed instruction") {
    SyntheticBackend backend(9);
    const std::string response = backend.complete(request_for(reflective_prompt()));
    const std::string instruction = prompting::parse_instruction(response);
    CHECK(instruction.find("Shorter tour please.") == 0);
    CHECK(instruction.size() > std::string("Shorter tour please.").size());
}

TEST_CASE("synthetic backend rejects prompts without an examples section") {
    SyntheticBackend backend(1);
    try {
        backend.complete(request_for("free-form text"));
        FAIL("expected UnparseablePrompt");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::UnparseablePrompt);
    }
}

TEST_CASE("http backend returns the stub body verbatim") {
    setenv("EVOFORGE_API_KEY", "test-key", 1);
    testsupport::StubServer server({200});
    HttpBackend backend(stub_options(server.port()));
    CHECK(backend.complete(request_for("hello")) == "stub says hi");
    CHECK(server.hits() == 1);
}

TEST_CASE("http backend retries 429s and succeeds on the third attempt") {
    setenv("EVOFORGE_API_KEY", "test-key", 1);
    testsupport::StubServer server({429, 429, 200});
    HttpBackend backend(stub_options(server.port()));
    CHECK(backend.complete(request_for("hello")) == "stub says hi");
    CHECK(server.hits() == 3);
}

TEST_CASE("http backend surfaces Transport after exhausting attempts on 500s") {
    setenv("EVOFORGE_API_KEY", "test-key", 1);
    testsupport::StubServer server({500});
    HttpBackend backend(stub_options(server.port()));
    try {
        backend.complete(request_for("hello"));
        FAIL("expected Transport");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::Transport);
    }
    CHECK(server.hits() == 5);
}

TEST_CASE("missing API key is a config error before any network call") {
    unsetenv("EVOFORGE_API_KEY");
    HttpOptions opts;
    opts.base_url = "http://127.0.0.1:1"; // never contacted
    try {
        HttpBackend backend(opts);
        FAIL("expected Config error");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::Config);
    }
    setenv("EVOFORGE_API_KEY", "test-key", 1);
}

TEST_CASE("make_backend builds each kind") {
    BackendBinding synthetic;
    synthetic.backend = BackendKind::Synthetic;
    synthetic.seed = 3;
    CHECK(make_backend(synthetic)->name() == "synthetic");

    const auto path = std::filesystem::temp_directory_path() / "evoforge_tests" / "mk.txt";
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path) << "a\n";
    BackendBinding scripted;
    scripted.backend = BackendKind::Scripted;
    scripted.script_path = path.string();
    CHECK(make_backend(scripted)->name() == "scripted");
}
