#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "evoforge/core.hpp"

// Backend seam for LLM completion. Three implementations: a live HTTP
// chat-completions client, a scripted playback backend, and a deterministic
// synthetic backend that mutates the best prompt example so the whole loop
// runs and is testable offline.
namespace evoforge::llmio {

enum class MessageRole { System, User };

struct Message {
    MessageRole role = MessageRole::User;
    std::string text;
};

struct CompletionRequest {
    std::vector<Message> messages; // at least one user message
    double temperature = 1.0;
    int max_tokens = 1024;
    std::string correlation_id;
};

enum class BackendErrorKind { Timeout, RateLimited, Transport, ScriptExhausted, Config,
                              UnparseablePrompt };

std::string_view to_string(BackendErrorKind kind);

class BackendError : public std::runtime_error {
  public:
    BackendError(BackendErrorKind kind, bool retriable, const std::string& what);
    BackendErrorKind kind() const { return kind_; }
    bool retriable() const { return retriable_; }

  private:
    BackendErrorKind kind_;
    bool retriable_;
};

class Backend {
  public:
    virtual ~Backend() = default;
    // Raw response text; callers log it verbatim before parsing anything.
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual std::string_view name() const = 0;
};

struct HttpOptions {
    std::string base_url;
    std::string model;
    std::string api_key_env = "EVOFORGE_API_KEY";
    int max_attempts = 5;
    int backoff_base_ms = 1000; // doubled per attempt, full jitter
    int max_inflight = 4;
    int timeout_seconds = 60;
};

// POST {"model","messages","temperature","max_tokens"} to
// <base_url>/chat/completions; reads the first choice's message content.
// Retries retriable failures (timeouts, 429, 5xx) with exponential backoff
// and full jitter; surfaces the last error once attempts are exhausted.
class HttpBackend : public Backend {
  public:
    explicit HttpBackend(HttpOptions options);
    std::string complete(const CompletionRequest& request) override;
    std::string_view name() const override { return "http"; }

  private:
    HttpOptions options_;
    std::string api_key_;
    Rng jitter_rng_;
    std::mutex mutex_; // guards jitter_rng_ and the in-flight counter
    int inflight_ = 0;
};

// Plays back a fixed list of responses in order; one response per call.
class ScriptedBackend : public Backend {
  public:
    explicit ScriptedBackend(std::vector<std::string> responses);
    // Script file format: records separated by a line containing only "---".
    static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

    std::string complete(const CompletionRequest& request) override;
    std::string_view name() const override { return "scripted"; }

    std::size_t remaining() const;

  private:
    mutable std::mutex mutex_;
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
};

// Deterministic pseudo-LLM: parses the prompt it is given and answers in the
// required output format. Variation prompts get a seeded mutation of the best
// example (2-opt segment reversal or pairwise swap for tours, hdsl::mutate for
// expressions); reflective prompts get the current instruction with a seeded
// suffix token. A pure function of (seed, prompt text, correlation id).
class SyntheticBackend : public Backend {
  public:
    explicit SyntheticBackend(std::uint64_t seed) : seed_(seed) {}
    std::string complete(const CompletionRequest& request) override;
    std::string_view name() const override { return "synthetic"; }

  private:
    std::uint64_t seed_;
};

std::shared_ptr<Backend> make_backend(const BackendBinding& binding);

} // namespace evoforge::llmio
