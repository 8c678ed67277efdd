#pragma once

// HTTP backends for the model-client interfaces. All requests are JSON POSTs
// with bearer auth, rate limited by a shared token bucket and retried on
// transport errors, 429 and 5xx responses.

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sunar/clients.hpp"
#include "sunar/prompts.hpp"

namespace sunar {

/// Token bucket. A rate of 0 disables limiting.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;

    explicit RateLimiter(double requests_per_second = 0.0, double burst = 1.0);
    /// Blocks until a token is available.
    void acquire();
    [[nodiscard]] double rate() const noexcept { return rate_; }

private:
    double rate_;
    double burst_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mutex_;
};

struct RetryPolicy {
    std::size_t max_retries = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
    /// Replaceable so tests do not wait.
    std::function<void(std::chrono::milliseconds)> sleep;

    [[nodiscard]] std::chrono::milliseconds backoff(std::size_t retry) const;  // retry is 0-based
};

struct HttpEndpoint {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string api_key;   // sent as "Authorization: Bearer ..." when non-empty
    std::string model;
    double timeout_seconds = 120.0;
    RetryPolicy retry;
    std::shared_ptr<RateLimiter> limiter;

    /// api_key from the environment variable when it is set.
    void key_from_env(const char* variable);
};

/// POSTs body as JSON to base_url + path and returns the parsed response.
/// Throws ClientError after the retries are spent, for non-retryable
/// statuses (with a body excerpt) and for malformed JSON.
nlohmann::json post_json(const HttpEndpoint& endpoint, std::string_view path, const nlohmann::json& body);

/// Chat completions: POST /v1/chat/completions.
class HttpLlm final : public LlmClient {
public:
    explicit HttpLlm(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::vector<std::string> complete(const ChatRequest& request) override;
    [[nodiscard]] nlohmann::json payload(const ChatRequest& request, std::size_t n) const;

private:
    HttpEndpoint endpoint_;
};

/// Entailment judge over either a chat endpoint with a yes/no prompt or a
/// scoring endpoint (POST /v1/entail -> {"entailment": p}, p >= threshold).
class HttpEntailment final : public EntailmentClient {
public:
    enum class Mode { chat, nli };

    HttpEntailment(HttpEndpoint endpoint, Mode mode, const PromptSet& prompts = PromptSet::builtin(),
                   double threshold = 0.5);
    bool entails(std::string_view premise, std::string_view hypothesis) override;

private:
    HttpEndpoint endpoint_;
    Mode mode_;
    std::string judge_template_;
    double threshold_;
    std::optional<HttpLlm> chat_;
};

HttpEntailment::Mode entailment_mode_from_string(std::string_view name);

/// Parses a yes/no judgment; anything else is a ClientError.
bool parse_yes_no(std::string_view text);

/// Cross-scorer: POST /v1/score {model, query, document} -> {"score": x}.
class HttpScorer final : public CrossScorer {
public:
    explicit HttpScorer(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    double score(std::string_view query, std::string_view doc_text) override;

private:
    HttpEndpoint endpoint_;
};

/// Embeddings: POST /v1/embeddings {model, input, dimensions}.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::vector<double> embed(std::string_view text, std::size_t dim) override;

private:
    HttpEndpoint endpoint_;
};

}  // namespace sunar
