#pragma once

// Deterministic, offline implementations of the model-client interfaces:
// fixture-replay clients (a miss is a hard error), simple rule-based mocks,
// and recorders that capture any client's traffic as a fixture.

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "sunar/clients.hpp"

namespace sunar {

class ScriptedLlm final : public LlmClient {
public:
    using Entries = std::map<std::string, std::vector<std::string>>;

    ScriptedLlm() = default;
    explicit ScriptedLlm(Entries entries) : entries_(std::move(entries)) {}

    /// JSONL of {"fingerprint": ..., "completions": [...]}.
    static ScriptedLlm from_file(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    void add(const ChatRequest& request, std::vector<std::string> completions);
    [[nodiscard]] const Entries& entries() const noexcept { return entries_; }

    std::vector<std::string> complete(const ChatRequest& request) override;

private:
    Entries entries_;
};

class ScriptedEntailment final : public EntailmentClient {
public:
    using Entries = std::map<std::string, bool>;

    ScriptedEntailment() = default;
    explicit ScriptedEntailment(Entries entries) : entries_(std::move(entries)) {}

    /// JSONL of {"fingerprint": ..., "verdict": bool}.
    static ScriptedEntailment from_file(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    void add(std::string_view premise, std::string_view hypothesis, bool verdict);
    /// Sets both directions.
    void add_symmetric(std::string_view a, std::string_view b, bool verdict);
    [[nodiscard]] const Entries& entries() const noexcept { return entries_; }

    bool entails(std::string_view premise, std::string_view hypothesis) override;

private:
    Entries entries_;
};

class ScriptedScorer final : public CrossScorer {
public:
    using Entries = std::map<std::string, double>;

    ScriptedScorer() = default;
    explicit ScriptedScorer(Entries entries) : entries_(std::move(entries)) {}

    /// JSONL of {"fingerprint": ..., "score": real}.
    static ScriptedScorer from_file(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    void add(std::string_view query, std::string_view doc_text, double score);
    [[nodiscard]] const Entries& entries() const noexcept { return entries_; }

    double score(std::string_view query, std::string_view doc_text) override;

private:
    Entries entries_;
};

class ScriptedEmbedder final : public Embedder {
public:
    using Entries = std::map<std::string, std::vector<double>>;

    ScriptedEmbedder() = default;
    explicit ScriptedEmbedder(Entries entries) : entries_(std::move(entries)) {}

    /// JSONL of {"fingerprint": ..., "vector": [...]}.
    static ScriptedEmbedder from_file(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    void add(std::string_view text, std::vector<double> vector);
    [[nodiscard]] const Entries& entries() const noexcept { return entries_; }

    std::vector<double> embed(std::string_view text, std::size_t dim) override;

private:
    Entries entries_;
};

/// Entailment holds iff the whitespace-trimmed strings are identical.
class ExactMatchEntailment final : public EntailmentClient {
public:
    bool entails(std::string_view premise, std::string_view hypothesis) override;
};

/// Adapts a probability-valued entailment model to a boolean judge:
/// probability >= threshold means entailment.
class ThresholdEntailment final : public EntailmentClient {
public:
    using ProbabilityFn = std::function<double(std::string_view premise, std::string_view hypothesis)>;

    explicit ThresholdEntailment(ProbabilityFn fn, double threshold = 0.5)
        : fn_(std::move(fn)), threshold_(threshold) {}

    bool entails(std::string_view premise, std::string_view hypothesis) override;

private:
    ProbabilityFn fn_;
    double threshold_;
};

/// score = number of distinct tokens shared by query and document.
class LexicalOverlapScorer final : public CrossScorer {
public:
    double score(std::string_view query, std::string_view doc_text) override;
};

/// Signed feature hashing of unigrams and bigrams. Deterministic across
/// platforms; texts without tokens map to the zero vector.
class HashEmbedder final : public Embedder {
public:
    std::vector<double> embed(std::string_view text, std::size_t dim) override;
};

// Recorders forward to an inner client and keep every exchange so it can be
// replayed later by the matching Scripted* client. Thread-safe.

class RecordingLlm final : public LlmClient {
public:
    explicit RecordingLlm(LlmClient& inner) : inner_(inner) {}
    std::vector<std::string> complete(const ChatRequest& request) override;
    [[nodiscard]] ScriptedLlm recorded() const;

private:
    LlmClient& inner_;
    mutable std::mutex mutex_;
    ScriptedLlm::Entries entries_;
};

class RecordingEntailment final : public EntailmentClient {
public:
    explicit RecordingEntailment(EntailmentClient& inner) : inner_(inner) {}
    bool entails(std::string_view premise, std::string_view hypothesis) override;
    [[nodiscard]] ScriptedEntailment recorded() const;

private:
    EntailmentClient& inner_;
    mutable std::mutex mutex_;
    ScriptedEntailment::Entries entries_;
};

class RecordingScorer final : public CrossScorer {
public:
    explicit RecordingScorer(CrossScorer& inner) : inner_(inner) {}
    double score(std::string_view query, std::string_view doc_text) override;
    [[nodiscard]] ScriptedScorer recorded() const;

private:
    CrossScorer& inner_;
    mutable std::mutex mutex_;
    ScriptedScorer::Entries entries_;
};

}  // namespace sunar
