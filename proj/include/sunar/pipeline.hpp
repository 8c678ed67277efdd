#pragma once

// Multi-hop question answering: self-ask decomposition, NAR retrieval per
// sub-question (optionally with answer-uncertainty feedback), evidence-grounded
// intermediate answers, and a final meta-reasoning pass over pooled evidence.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sunar/clients.hpp"
#include "sunar/corpus.hpp"
#include "sunar/graph.hpp"
#include "sunar/nar.hpp"
#include "sunar/prompts.hpp"
#include "sunar/ranked_list.hpp"
#include "sunar/term_index.hpp"
#include "sunar/uncertainty.hpp"

namespace sunar {

struct PipelineConfig {
    std::size_t l = 10;
    std::size_t max_hops = 6;
    NarConfig nar;
    bool asu_enabled = true;
    bool mer_enabled = true;
    AsuConfig asu;
    std::size_t first_stage_depth = 100;
    Bm25Params bm25;
    std::string dataset = "wqa";  // exemplar block: wqa or mqa
    std::size_t max_tokens = 1000;

    void validate() const;
};

/// Shared read-only state plus the model clients. Clients must be safe for
/// concurrent calls when questions run in parallel.
struct Engine {
    const Corpus& corpus;
    const TermIndex& index;
    const NeighborhoodGraph& graph;
    LlmClient& llm;
    EntailmentClient& nli;
    CrossScorer& scorer;
    const PromptSet& prompts = PromptSet::builtin();
};

struct DecompositionStep {
    std::size_t index = 0;  // 1-based hop
    std::string sub_question;
    RankedList evidence;  // top-l of ranked
    RankedList ranked;    // full R+
    NarTrace trace;
    std::string intermediate_answer;
};

struct ReasoningPath {
    std::string question;
    std::vector<DecompositionStep> steps;
    /// Decomposition text after the prompt header; replaying it against the
    /// same scripted clients reproduces the run.
    std::string transcript;
    std::string final_answer;
    std::optional<std::string> mer_answer;
    bool hop_cap_exceeded = false;
    bool mer_fallback = false;
    std::vector<std::string> warnings;

    /// mer_answer when present, else final_answer.
    [[nodiscard]] const std::string& answer() const;
};

struct FollowUp {
    std::string sub_question;
    bool operator==(const FollowUp&) const = default;
};
struct FinalAnswer {
    std::string answer;
    bool operator==(const FinalAnswer&) const = default;
};
using DecomposeOutcome = std::variant<FollowUp, FinalAnswer>;

/// Rendered instruction + exemplars + question, ending in the
/// "Are follow up questions needed here:" cue.
std::string decomposition_prompt(std::string_view question, const PromptSet& prompts, std::string_view dataset);

/// Parses one decomposition completion. Text from the first
/// "Intermediate Answer:" on is ignored. Throws Error
/// "unparseable decomposition output" (with the raw text) when neither a
/// "Follow up:" nor a "[Final Answer]:" line is found.
DecomposeOutcome parse_decomposition(std::string_view text);

/// One greedy completion of `prompt`, stopped at "Intermediate Answer:".
DecomposeOutcome decompose_step(LlmClient& llm, const std::string& prompt, std::size_t max_tokens = 1000);

/// Text after "[Final Answer]:" when present, else the whole completion;
/// newlines collapsed to spaces and trimmed.
std::string extract_answer(std::string_view completion);

/// Evidence-grounded answer to one sub-question. Throws before calling the
/// model when evidence is empty.
std::string answer_sub_question(LlmClient& llm, std::string_view sub_question,
                                const std::vector<const Document*>& evidence,
                                const PromptSet& prompts = PromptSet::builtin(), std::size_t max_tokens = 1000);

/// Every step's R+ merged, keeping the maximum score per doc_id, sorted and
/// cut to l entries.
RankedList evidence_union(const std::vector<DecompositionStep>& steps, std::size_t l);

/// "Follow up: ..." / "Intermediate Answer: ..." lines and the final answer.
std::string render_reasoning_path(const ReasoningPath& path);

struct MerOutcome {
    std::optional<std::string> answer;  // unset on fallback
    std::string raw;
    std::string warning;
};

/// Final meta-reasoning call. Never throws for client or parse failures;
/// those come back as an unset answer with a warning.
MerOutcome meta_reason(LlmClient& llm, std::string_view question, const ReasoningPath& path,
                       const std::vector<const Document*>& evidence, const PromptSet& prompts,
                       std::string_view dataset, std::size_t max_tokens = 1000);

ReasoningPath answer_question(std::string_view question, const Engine& engine, const PipelineConfig& config);

struct Question {
    std::string qid;
    std::string question;
    std::vector<std::string> answers;
};

/// JSONL {"qid", "question", "answer": string or list}; "answer" optional.
std::vector<Question> load_questions(const std::filesystem::path& path);

struct QuestionOutcome {
    std::string qid;
    std::optional<ReasoningPath> path;
    std::string error;  // set when path is empty

    [[nodiscard]] bool ok() const noexcept { return path.has_value(); }
};

/// Answers every question with `workers` threads. Output order follows the
/// input; a failing question records its error and the rest continue.
std::vector<QuestionOutcome> answer_questions(const std::vector<Question>& questions, const Engine& engine,
                                              const PipelineConfig& config, std::size_t workers = 1);

nlohmann::ordered_json to_json(const ScoredDoc& doc);
nlohmann::ordered_json to_json(const ReasoningPath& path, bool with_trace = false);

}  // namespace sunar
