#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sunar {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::size_t n = 1;
    double temperature = 0.0;
    std::size_t max_tokens = 1000;
    /// Stop sequences forwarded to HTTP backends. Not part of the fingerprint.
    std::vector<std::string> stop;
    std::optional<double> frequency_penalty;
    std::optional<double> presence_penalty;

    /// Throws ClientError unless n >= 1, temperature >= 0 and messages non-empty.
    void validate() const;

    static ChatRequest user(std::string prompt, std::size_t n = 1, double temperature = 0.0);
};

// Fingerprints are stable hashes of normalized inputs (see normalize_prompt):
// trailing whitespace and line-ending style do not change them.
std::string fingerprint(const ChatRequest& request);
std::string entailment_fingerprint(std::string_view premise, std::string_view hypothesis);
std::string score_fingerprint(std::string_view query, std::string_view doc_text);
std::string embed_fingerprint(std::string_view text, std::size_t dim);

/// Chat-completion language model. Implementations must be safe for concurrent calls.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::vector<std::string> complete(const ChatRequest& request) = 0;
};

/// Directed entailment judge: does the premise entail the hypothesis?
class EntailmentClient {
public:
    virtual ~EntailmentClient() = default;
    virtual bool entails(std::string_view premise, std::string_view hypothesis) = 0;
};

/// Query-document relevance model returning a raw (unbounded) score.
class CrossScorer {
public:
    virtual ~CrossScorer() = default;
    virtual double score(std::string_view query, std::string_view doc_text) = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view text, std::size_t dim) = 0;
};

/// Validates the request and that exactly request.n completions came back.
std::vector<std::string> llm_generate(LlmClient& client, const ChatRequest& request);

bool entail(EntailmentClient& client, std::string_view premise, std::string_view hypothesis);

/// Rejects an empty query and non-finite scores.
double cross_score(CrossScorer& client, std::string_view query, std::string_view doc_text);

/// Rejects dim == 0 and vectors of the wrong length.
std::vector<double> embed(Embedder& client, std::string_view text, std::size_t dim);

}  // namespace sunar
