#include "evoforge/prompting.hpp"

#include <cmath>
#include <cstdio>

namespace evoforge::prompting {

std::string cost_text(double cost) {
    if (std::isinf(cost)) {
        return cost > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", cost);
    return buf;
}

std::string render_variation_prompt(const VariationPromptSpec& spec) {
    if (spec.examples.empty()) {
        throw std::invalid_argument("variation prompt needs at least one example");
    }
    for (std::size_t i = 1; i < spec.examples.size(); ++i) {
        if (spec.examples[i - 1].cost < spec.examples[i].cost) {
            throw std::invalid_argument("examples must be sorted worst-to-best by cost");
        }
    }
    std::string out;
    out += "## Problem\n";
    out += spec.problem_description;
    out += "\n\n## Examples\n";
    for (const ExampleEntry& e : spec.examples) {
        out += e.rendering;
        out += " cost=";
        out += cost_text(e.cost);
        out += '\n';
    }
    out += "\n## Task\n";
    out += spec.task_instruction;
    out += "\n\n## Output format\n";
    out += spec.output_contract;
    out += '\n';
    return out;
}

std::string render_reflective_prompt(const ReflectivePromptSpec& spec) {
    std::string out;
    out += "## Current instruction\n";
    out += spec.current_instruction;
    out += "\n\n## Recent offspring\n";
    if (spec.short_term.empty()) {
        out += "(none)\n";
    } else {
        for (const OffspringReport& r : spec.short_term) {
            out += r.rendering;
            out += " parent_cost=";
            out += cost_text(r.parent_cost);
            out += " cost=";
            out += cost_text(r.offspring_cost);
            out += " delta=";
            out += cost_text(r.offspring_cost - r.parent_cost);
            out += '\n';
        }
    }
    out += "\n## Best-so-far trajectory\n";
    for (std::size_t i = 0; i < spec.long_term.size(); ++i) {
        out += "gen " + std::to_string(i + 1) + ": best=" + cost_text(spec.long_term[i]) + "\n";
    }
    out += "\n## Directive\n";
    out += spec.directive;
    out += '\n';
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' ||
                          s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() &&
           (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

// Finds <tag>...</tag> starting at or after `from`; returns the inner text
// and advances `from` past the closing tag.
std::optional<std::string_view> next_block(std::string_view text, std::string_view tag,
                                           std::size_t& from) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const std::size_t start = text.find(open, from);
    if (start == std::string_view::npos) {
        return std::nullopt;
    }
    const std::size_t body = start + open.size();
    const std::size_t end = text.find(close, body);
    if (end == std::string_view::npos) {
        return std::nullopt;
    }
    from = end + close.size();
    return text.substr(body, end - body);
}

} // namespace

ParseCandidatesResult parse_candidates(std::string_view response, CandidateKind kind,
                                       int expected_n, std::optional<int> n_cities,
                                       int max_expr_size) {
    ParseCandidatesResult result;
    std::size_t pos = 0;
    int block_index = 0;
    while (true) {
        auto block = next_block(response, "candidate", pos);
        if (!block) {
            break;
        }
        ++block_index;
        const std::string_view body = trim(*block);

        // A description block directly after the candidate attaches to it.
        std::optional<std::string> description;
        {
            const std::string_view rest = response.substr(pos);
            const std::string_view gap = rest.substr(0, rest.find('<'));
            if (trim(gap).empty()) {
                std::size_t probe = pos;
                const std::string_view upcoming = trim(rest);
                if (upcoming.starts_with("<description>")) {
                    if (auto desc = next_block(response, "description", probe)) {
                        description = std::string(trim(*desc));
                        pos = probe;
                    }
                }
            }
        }

        if (kind == CandidateKind::Solution) {
            auto tour = problems::tour_from_text(body);
            if (!tour) {
                result.diagnostics.push_back("block " + std::to_string(block_index) +
                                             ": not a comma-separated index list");
                continue;
            }
            const int n = n_cities.value_or(static_cast<int>(tour->order.size()));
            if (auto err = problems::tsp_validate(tour->order, n)) {
                result.diagnostics.push_back("block " + std::to_string(block_index) + ": " + *err);
                continue;
            }
            result.candidates.push_back({Payload(std::move(*tour)), std::move(description)});
        } else {
            try {
                hdsl::ExprPtr expr = hdsl::parse(body, max_expr_size);
                result.candidates.push_back({Payload(std::move(expr)), std::move(description)});
            } catch (const hdsl::ParseError& e) {
                result.diagnostics.push_back("block " + std::to_string(block_index) + ": " +
                                             e.what());
            }
        }
    }
    if (result.candidates.empty()) {
        throw NoCandidatesError("no parseable <candidate> blocks in response");
    }
    if (static_cast<int>(result.candidates.size()) > expected_n) {
        result.diagnostics.push_back("surplus: got " + std::to_string(result.candidates.size()) +
                                     " candidates, expected " + std::to_string(expected_n));
    }
    return result;
}

std::string parse_instruction(std::string_view response) {
    std::size_t pos = 0;
    auto block = next_block(response, "instruction", pos);
    if (!block) {
        throw NoInstructionError("no <instruction> block in response");
    }
    const std::string_view body = trim(*block);
    if (body.empty()) {
        throw NoInstructionError("<instruction> block is empty");
    }
    return std::string(body);
}

namespace {

std::string flatten(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out;
}

} // namespace

std::string render_candidate(const Candidate& candidate) {
    std::string out = payload_text(candidate);
    if (candidate.description() && !candidate.description()->empty()) {
        out += " :: ";
        out += flatten(*candidate.description());
    }
    if (!candidate.knowledge_tags().empty()) {
        out += " :: tags[";
        for (std::size_t i = 0; i < candidate.knowledge_tags().size(); ++i) {
            if (i > 0) {
                out += ", ";
            }
            out += flatten(candidate.knowledge_tags()[i]);
        }
        out += ']';
    }
    return out;
}

std::string solution_output_contract(int offspring_requested, int n_cities) {
    return "Return exactly " + std::to_string(offspring_requested) +
           " candidate tour(s). Wrap each tour in <candidate></candidate> tags as "
           "comma-separated city indices, for example <candidate>0,2,1,3</candidate>. "
           "Each tour must be a permutation of 0.." +
           std::to_string(n_cities - 1) +
           ". You may add a <description></description> block right after a candidate.";
}

std::string heuristic_output_contract(int offspring_requested, int max_expr_size) {
    return "Return exactly " + std::to_string(offspring_requested) +
           " candidate expression(s). Wrap each expression in <candidate></candidate> tags. "
           "Expressions may use numbers, the variables cap, item, index, n_bins, the operators "
           "+ - * / and unary -, and the functions min, max, abs, log, exp, pow, if, lt, le, "
           "gt, ge, eq. At most " +
           std::to_string(max_expr_size) +
           " nodes. You may add a <description></description> block right after a candidate.";
}

std::string default_task_instruction(StrategyFamily family) {
    if (family == StrategyFamily::Exploration) {
        return "Study the examples and their costs, then propose a new candidate that differs "
               "from every example and is likely to achieve a lower cost than the best one.";
    }
    return "Make a small, targeted change to the best example to lower its cost further.";
}

std::string default_reflective_directive() {
    return "Analyze the recent offspring and the best-so-far trajectory. Rewrite the task "
           "instruction so that the next offspring are more likely to lower the cost. Respond "
           "with the revised instruction inside <instruction></instruction> tags.";
}

} // namespace evoforge::prompting
