#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evoforge/core.hpp"

// Prompt assembly and response extraction. Prompts follow one three-part
// pattern: problem description, task instruction, and example candidates with
// their costs; responses carry candidates in tag-delimited blocks so parsing
// is deterministic. The layout below is frozen and golden-file tested.
namespace evoforge::prompting {

inline constexpr int kPromptFormatVersion = 1;

struct ExampleEntry {
    std::string rendering;
    double cost = 0.0;
};

struct VariationPromptSpec {
    std::string problem_description;
    std::string task_instruction;
    std::vector<ExampleEntry> examples; // sorted worst-to-best by cost
    std::string output_contract;
    int offspring_requested = 1;
};

// Sections in fixed order: ## Problem, ## Examples (one line per candidate:
// rendering then cost= with 6 significant digits), ## Task, ## Output format.
// Byte-exact deterministic; throws std::invalid_argument if the example list
// is empty or not sorted worst-to-best.
std::string render_variation_prompt(const VariationPromptSpec& spec);

struct OffspringReport {
    std::string rendering;
    double parent_cost = 0.0;
    double offspring_cost = 0.0;
};

struct ReflectivePromptSpec {
    std::string current_instruction;
    std::vector<OffspringReport> short_term; // last generation's offspring
    std::vector<double> long_term;           // best-so-far cost per generation
    std::string directive;
};

std::string render_reflective_prompt(const ReflectivePromptSpec& spec);

class NoCandidatesError : public std::runtime_error {
  public:
    explicit NoCandidatesError(const std::string& what) : std::runtime_error(what) {}
};

class NoInstructionError : public std::runtime_error {
  public:
    explicit NoInstructionError(const std::string& what) : std::runtime_error(what) {}
};

struct ParsedCandidate {
    Payload payload;
    std::optional<std::string> description;
};

struct ParseCandidatesResult {
    std::vector<ParsedCandidate> candidates;
    std::vector<std::string> diagnostics; // skipped blocks, surplus notes
};

// Extracts every <candidate>...</candidate> block. Solution payloads are
// comma-separated indices validated as a permutation (against n_cities when
// given, else 0..len-1); heuristic payloads go through hdsl::parse. A
// <description> block immediately after a candidate attaches to it. Malformed
// blocks are skipped with a diagnostic; surplus beyond expected_n is kept and
// flagged. Throws NoCandidatesError only when zero blocks parse.
ParseCandidatesResult parse_candidates(std::string_view response, CandidateKind kind,
                                       int expected_n, std::optional<int> n_cities = {},
                                       int max_expr_size = hdsl::kDefaultMaxSize);

// Content of the first <instruction>...</instruction> block, trimmed.
// Throws NoInstructionError when absent or empty.
std::string parse_instruction(std::string_view response);

// Example-line rendering of a candidate: payload text, then the optional
// description and tags. Newlines are flattened so the line stays one line.
std::string render_candidate(const Candidate& candidate);

std::string solution_output_contract(int offspring_requested, int n_cities);
std::string heuristic_output_contract(int offspring_requested, int max_expr_size);
std::string default_task_instruction(StrategyFamily family);
std::string default_reflective_directive();

// 6-significant-digit cost formatting shared by prompt sections.
std::string cost_text(double cost);

} // namespace evoforge::prompting
