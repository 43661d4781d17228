#include "evoforge/llmio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "evoforge/digest.hpp"
#include "evoforge/rng.hpp"

namespace evoforge::llmio {

std::string_view to_string(BackendErrorKind kind) {
    switch (kind) {
    case BackendErrorKind::Timeout: return "timeout";
    case BackendErrorKind::RateLimited: return "rate_limited";
    case BackendErrorKind::Transport: return "transport";
    case BackendErrorKind::ScriptExhausted: return "script_exhausted";
    case BackendErrorKind::Config: return "config";
    case BackendErrorKind::UnparseablePrompt: return "unparseable_prompt";
    }
    return "?";
}

BackendError::BackendError(BackendErrorKind kind, bool retriable, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what),
      kind_(kind),
      retriable_(retriable) {}

namespace {

const std::string& user_prompt(const CompletionRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == MessageRole::User) {
            return it->text;
        }
    }
    throw BackendError(BackendErrorKind::Config, false, "request has no user message");
}

} // namespace

// --- HTTP --------------------------------------------------------------------

HttpBackend::HttpBackend(HttpOptions options)
    : options_(std::move(options)), jitter_rng_(0x6a17c3d5b9e02f41ULL) {
    if (options_.base_url.empty()) {
        throw BackendError(BackendErrorKind::Config, false, "http backend needs a base_url");
    }
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw BackendError(BackendErrorKind::Config, false,
                           "missing API key: set " + options_.api_key_env);
    }
    api_key_ = key;
}

std::string HttpBackend::complete(const CompletionRequest& request) {
    nlohmann::json body;
    body["model"] = options_.model;
    nlohmann::json messages = nlohmann::json::array();
    for (const Message& m : request.messages) {
        messages.push_back({{"role", m.role == MessageRole::System ? "system" : "user"},
                            {"content", m.text}});
    }
    body["messages"] = messages;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    const std::string payload = body.dump();

    {
        std::unique_lock lock(mutex_);
        while (inflight_ >= options_.max_inflight) {
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
            lock.lock();
        }
        ++inflight_;
    }
    struct InflightGuard {
        HttpBackend* self;
        ~InflightGuard() {
            std::lock_guard lock(self->mutex_);
            --self->inflight_;
        }
    } guard{this};

    std::optional<BackendError> last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        if (attempt > 1) {
            // Full jitter: uniform over [0, base * 2^(attempt-2)].
            const double ceiling = static_cast<double>(options_.backoff_base_ms) *
                                   std::pow(2.0, attempt - 2);
            double sleep_ms;
            {
                std::lock_guard lock(mutex_);
                sleep_ms = uniform_real(jitter_rng_, 0.0, ceiling);
            }
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(sleep_ms)));
        }
        try {
            httplib::Client client(options_.base_url);
            client.set_connection_timeout(options_.timeout_seconds, 0);
            client.set_read_timeout(options_.timeout_seconds, 0);
            httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
            auto res = client.Post("/chat/completions", headers, payload, "application/json");
            if (!res) {
                throw BackendError(BackendErrorKind::Timeout, true,
                                   "no response: " + httplib::to_string(res.error()));
            }
            if (res->status == 429) {
                throw BackendError(BackendErrorKind::RateLimited, true, "HTTP 429");
            }
            if (res->status == 408) {
                throw BackendError(BackendErrorKind::Timeout, true, "HTTP 408");
            }
            if (res->status >= 500) {
                throw BackendError(BackendErrorKind::Transport, true,
                                   "HTTP " + std::to_string(res->status));
            }
            if (res->status != 200) {
                throw BackendError(BackendErrorKind::Transport, false,
                                   "HTTP " + std::to_string(res->status) + ": " + res->body);
            }
            try {
                const nlohmann::json j = nlohmann::json::parse(res->body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw BackendError(BackendErrorKind::Transport, false,
                                   std::string("malformed completion body: ") + e.what());
            }
        } catch (const BackendError& e) {
            if (!e.retriable()) {
                throw;
            }
            last_error = e;
        }
    }
    throw *last_error;
}

// --- Scripted ------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw BackendError(BackendErrorKind::Config, false, "cannot open script " + path.string());
    }
    std::vector<std::string> responses;
    std::string record;
    std::string line;
    bool any = false;
    const auto push = [&] {
        if (!record.empty() && record.back() == '\n') {
            record.pop_back();
        }
        responses.push_back(record);
        record.clear();
    };
    while (std::getline(in, line)) {
        any = true;
        if (line == "---") {
            push();
        } else {
            record += line;
            record += '\n';
        }
    }
    if (any) {
        push();
    }
    return std::make_shared<ScriptedBackend>(std::move(responses));
}

std::string ScriptedBackend::complete(const CompletionRequest&) {
    std::lock_guard lock(mutex_);
    if (next_ >= responses_.size()) {
        throw BackendError(BackendErrorKind::ScriptExhausted, false,
                           "script has only " + std::to_string(responses_.size()) + " records");
    }
    return responses_[next_++];
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return responses_.size() - next_;
}

// --- Synthetic -------------------------------------------------------------------

namespace {

// Section content: the lines after "## <header>" up to the next blank line
// that precedes another "## " header, or the end of the prompt.
std::optional<std::string_view> section(std::string_view text, std::string_view header) {
    const std::string needle = "## " + std::string(header) + "\n";
    std::size_t start = 0;
    if (text.substr(0, needle.size()) != needle) {
        const std::size_t at = text.find("\n" + needle);
        if (at == std::string_view::npos) {
            return std::nullopt;
        }
        start = at + 1;
    }
    start += needle.size();
    std::size_t end = text.find("\n\n## ", start);
    if (end == std::string_view::npos) {
        end = text.size();
        while (end > start && text[end - 1] == '\n') {
            --end;
        }
    }
    return text.substr(start, end - start);
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            if (start < text.size()) {
                lines.push_back(text.substr(start));
            }
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

// Example line layout: "<payload>[ :: extras] cost=<value>".
std::optional<std::string_view> payload_of_example_line(std::string_view line) {
    const std::size_t cost = line.rfind(" cost=");
    if (cost == std::string_view::npos) {
        return std::nullopt;
    }
    std::string_view head = line.substr(0, cost);
    const std::size_t extras = head.find(" :: ");
    if (extras != std::string_view::npos) {
        head = head.substr(0, extras);
    }
    return head;
}

int requested_count(std::string_view prompt) {
    const std::string_view marker = "Return exactly ";
    const std::size_t at = prompt.find(marker);
    if (at == std::string_view::npos) {
        return 1;
    }
    int value = 0;
    std::size_t i = at + marker.size();
    bool any = false;
    while (i < prompt.size() && prompt[i] >= '0' && prompt[i] <= '9') {
        value = value * 10 + (prompt[i] - '0');
        ++i;
        any = true;
    }
    return any && value > 0 ? value : 1;
}

std::string mutate_tour_text(problems::TourPermutation tour, Rng& rng) {
    const std::size_t n = tour.order.size();
    if (n >= 2 && coin_flip(rng)) {
        // 2-opt: reverse a non-trivial segment [i, j].
        const std::size_t i = pick_index(rng, n - 1);
        const std::size_t j = i + 1 + pick_index(rng, n - 1 - i);
        std::reverse(tour.order.begin() + static_cast<long>(i),
                     tour.order.begin() + static_cast<long>(j) + 1);
    } else if (n >= 2) {
        std::size_t i = pick_index(rng, n);
        std::size_t j = pick_index(rng, n - 1);
        if (j >= i) {
            ++j;
        }
        std::swap(tour.order[i], tour.order[j]);
    }
    return problems::tour_text(tour);
}

const char* kSuffixAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";

} // namespace

std::string SyntheticBackend::complete(const CompletionRequest& request) {
    const std::string& prompt = user_prompt(request);
    Rng rng(mix_seed(mix_seed(seed_, fnv1a64(prompt)), fnv1a64(request.correlation_id)));

    if (auto current = section(prompt, "Current instruction")) {
        std::string token;
        for (int i = 0; i < 4; ++i) {
            token += kSuffixAlphabet[pick_index(rng, 36)];
        }
        return "<instruction>" + std::string(*current) + " #" + token + "</instruction>";
    }

    auto examples = section(prompt, "Examples");
    if (!examples) {
        throw BackendError(BackendErrorKind::UnparseablePrompt, false,
                           "prompt has no ## Examples section");
    }
    const auto lines = split_lines(*examples);
    if (lines.empty()) {
        throw BackendError(BackendErrorKind::UnparseablePrompt, false,
                           "## Examples section is empty");
    }
    // Examples are sorted worst-to-best, so the last line is the best one.
    const auto payload = payload_of_example_line(lines.back());
    if (!payload) {
        throw BackendError(BackendErrorKind::UnparseablePrompt, false,
                           "cannot find a payload in the best example line");
    }

    const int count = requested_count(prompt);
    std::string out;
    if (auto tour = problems::tour_from_text(*payload)) {
        for (int i = 0; i < count; ++i) {
            if (i > 0) {
                out += '\n';
            }
            out += "<candidate>" + mutate_tour_text(*tour, rng) + "</candidate>";
        }
        return out;
    }
    try {
        const hdsl::ExprPtr expr = hdsl::parse(*payload);
        const auto vars = problems::bpp_variables();
        for (int i = 0; i < count; ++i) {
            if (i > 0) {
                out += '\n';
            }
            out += "<candidate>" + hdsl::print(hdsl::mutate(expr, rng, vars)) + "</candidate>";
        }
        return out;
    } catch (const hdsl::ParseError&) {
        throw BackendError(BackendErrorKind::UnparseablePrompt, false,
                           "best example payload is neither a tour nor an expression");
    }
}

std::shared_ptr<Backend> make_backend(const BackendBinding& binding) {
    switch (binding.backend) {
    case BackendKind::Http: {
        HttpOptions opts;
        opts.base_url = binding.base_url;
        opts.model = binding.model;
        return std::make_shared<HttpBackend>(std::move(opts));
    }
    case BackendKind::Scripted:
        return ScriptedBackend::from_file(binding.script_path);
    case BackendKind::Synthetic:
        return std::make_shared<SyntheticBackend>(binding.seed);
    }
    throw BackendError(BackendErrorKind::Config, false, "unknown backend kind");
}

} // namespace evoforge::llmio
