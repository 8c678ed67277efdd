#pragma once

// Answer semantic uncertainty: sample several answers for a sub-question over
// a batch of evidence, group them into semantic sets with bidirectional
// entailment, and divide the batch scores by the number of sets.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sunar/clients.hpp"
#include "sunar/corpus.hpp"
#include "sunar/nar.hpp"
#include "sunar/prompts.hpp"
#include "sunar/ranked_list.hpp"

namespace sunar {

struct AnswerSamples {
    std::string sub_question;
    std::vector<std::string> answers;

    [[nodiscard]] std::size_t m() const noexcept { return answers.size(); }
};

struct SemanticClustering {
    /// Groups of 0-based answer indices; each group is ordered and its first
    /// member is the representative.
    std::vector<std::vector<std::size_t>> sets;

    [[nodiscard]] std::size_t s() const noexcept { return sets.size(); }
    /// True when the sets are non-empty, disjoint and cover 0..m-1.
    [[nodiscard]] bool is_partition_of(std::size_t m) const;

    bool operator==(const SemanticClustering&) const = default;
};

struct AsuConfig {
    std::size_t samples = 5;  // m
    double temperature = 0.7;
    std::size_t max_tokens = 1000;
};

/// One request for m completions over a prompt holding the evidence in the
/// given order. Empty completions are kept as "".
AnswerSamples sample_answers(LlmClient& llm, std::string_view sub_question, const std::vector<const Document*>& evidence,
                             std::size_t m, double temperature, const PromptSet& prompts = PromptSet::builtin(),
                             std::size_t max_tokens = 1000);

/// Greedy clustering in answer order: each (trimmed) answer joins the first set
/// whose representative it entails and is entailed by, else opens a new set.
/// Both directions are always queried. Identical trimmed strings are
/// equivalent without a client call.
SemanticClustering cluster_answers(EntailmentClient& nli, const AnswerSamples& samples);

/// Divides every score by s (s >= 1). Order within the batch is unchanged.
std::vector<ScoredDoc> rescore_batch(const std::vector<ScoredDoc>& batch, std::size_t s);

/// Feedback hook running sample -> cluster -> rescore on each batch. Evidence
/// is presented in descending score order. Clients must outlive the hook.
FeedbackHook asu_feedback_hook(LlmClient& llm, EntailmentClient& nli, AsuConfig config,
                               const PromptSet& prompts = PromptSet::builtin());

}  // namespace sunar
