#pragma once

// Synthetic corpora that plant the clustering hypothesis (hidden relevant
// documents reachable only through the neighborhood graph), the 12-document
// trace fixture, rule-based oracle clients, and named fixture suites that are
// recorded from the oracles and replayed by the scripted clients.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sunar/clients.hpp"
#include "sunar/config.hpp"
#include "sunar/corpus.hpp"
#include "sunar/embedding_store.hpp"
#include "sunar/eval.hpp"
#include "sunar/graph.hpp"
#include "sunar/pipeline.hpp"
#include "sunar/scripted.hpp"
#include "sunar/term_index.hpp"

namespace sunar::testkit {

/// Seeded generator with platform-independent real-valued draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // standard normal
    std::size_t index(std::size_t n);      // [0, n)
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

struct SyntheticSpec {
    std::size_t num_questions = 10;
    std::size_t relevant_per_question = 4;
    double surfaced_fraction = 0.5;
    std::size_t distractors_per_question = 20;
    std::uint64_t seed = 1;
    std::size_t vocab_size = 4000;
    std::size_t query_terms = 3;
    std::size_t dim = 64;
    double noise = 0.02;  // per-component noise around a question's center

    /// Throws ConfigError for an infeasible spec.
    void validate() const;
    [[nodiscard]] std::size_t surfaced_count() const;
};

struct SyntheticQuestion {
    std::string qid;
    std::string text;
    std::vector<std::string> surfaced;
    std::vector<std::string> hidden;
    std::vector<std::string> distractors;
};

struct SyntheticCorpus {
    Corpus corpus;
    Qrels qrels;
    std::vector<SyntheticQuestion> questions;
    EmbeddingStore embeddings;
    /// Logits for every (question text, document) pair: relevant near 2,
    /// distractor near -1, anything else near -4.
    ScriptedScorer scorer;
};

SyntheticCorpus generate_corpus(const SyntheticSpec& spec);

/// Recall@10 of NAR and of plain re-ranking over one synthetic corpus, both
/// with the same budget.
struct RecallComparison {
    double nar = 0.0;
    double baseline = 0.0;
};

struct RecallSetup {
    std::size_t graph_k = 10;
    std::size_t depth = 100;
    NarConfig nar{.batch_size = 10, .budget = 100, .neighbor_limit = 10};
    std::size_t cutoff = 10;
};

RecallComparison compare_recall(const SyntheticCorpus& data, const RecallSetup& setup = {});

/// 12 documents, a star graph around d01, first stage from BM25 over the
/// query, table-driven scorer; b=2, c=8.
struct TwelveDocFixture {
    Corpus corpus;
    std::string query;
    RankedList initial;
    NeighborhoodGraph graph;
    std::map<std::string, double> logits;  // doc_id -> raw scorer output
    ScriptedScorer scorer;
    NarConfig config;
};

TwelveDocFixture twelve_doc_fixture();

// ---- oracle clients -------------------------------------------------------

/// Facts the oracle language model consults.
struct OracleKnowledge {
    /// question -> sub-question templates; "{1}" is replaced by the first
    /// intermediate answer, "{2}" by the second, ...
    std::map<std::string, std::vector<std::string>> plans;
    /// question -> answer given without decomposition.
    std::map<std::string, std::string> direct_answers;
    /// (sub-question, doc title) -> candidate answers found in that document.
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> facts;
    /// (question, doc title) -> answer the meta-reasoner extracts.
    std::map<std::pair<std::string, std::string>, std::string> mer_facts;
    /// Samples used when no evidence holds an answer; distinct on purpose.
    std::vector<std::string> unsure = {"I am not sure", "It might be someone else", "The evidence does not say"};
};

/// Rule-based language model answering the decomposition, answer, sampling
/// and meta-reasoning prompts from OracleKnowledge.
class OracleLlm final : public LlmClient {
public:
    explicit OracleLlm(OracleKnowledge knowledge) : kb_(std::move(knowledge)) {}
    std::vector<std::string> complete(const ChatRequest& request) override;

private:
    OracleKnowledge kb_;
};

/// Entailment iff the normalized answers are equal.
class NormalizedEntailment final : public EntailmentClient {
public:
    bool entails(std::string_view premise, std::string_view hypothesis) override;
};

/// Logits by (query, doc_id); the document is recovered from its text.
class TableScorer final : public CrossScorer {
public:
    TableScorer(const Corpus& corpus, std::map<std::pair<std::string, std::string>, double> logits,
                double default_logit);
    double score(std::string_view query, std::string_view doc_text) override;

private:
    std::map<std::string, std::string> id_by_text_;
    std::map<std::pair<std::string, std::string>, double> logits_;
    double default_logit_;
};

// ---- fixture suites -------------------------------------------------------

struct FixtureSuite {
    std::string name;
    Corpus corpus;
    std::vector<Question> questions;
    Qrels qrels;  // keyed "<qid>.<hop>"
    std::optional<EmbeddingStore> embeddings;
    NeighborhoodGraph graph;
    Config config;  // relative paths inside the suite directory
    OracleKnowledge knowledge;
    std::map<std::pair<std::string, std::string>, double> logits;  // (query, doc_id)
    double default_logit = -3.0;
};

struct RecordedFixtures {
    ScriptedLlm llm;
    ScriptedEntailment nli;
    ScriptedScorer scorer;
    ScriptedEmbedder embedder;
};

std::vector<std::string> suite_names();
/// Throws ConfigError for an unknown name.
FixtureSuite build_suite(std::string_view name);
/// Runs every question under all four ASU/MER combinations (and, for
/// "asu-distractor", the feedback loop directly) through recording clients.
RecordedFixtures record_fixtures(const FixtureSuite& suite);
/// corpus.jsonl, questions.jsonl, qrels.txt, graph.txt, embeddings.txt (when
/// present), config.json and fixtures/{llm,nli,scorer,embedder}.jsonl.
void write_fixture_suite(const FixtureSuite& suite, const std::filesystem::path& dir);

/// A suite read back from disk with replaying clients.
struct LoadedSuite {
    Config config;
    Corpus corpus;
    TermIndex index;
    NeighborhoodGraph graph;
    std::vector<Question> questions;
    ScriptedLlm llm;
    ScriptedEntailment nli;
    ScriptedScorer scorer;

    [[nodiscard]] Engine engine();
};

LoadedSuite load_suite(const std::filesystem::path& dir);

/// The "asu-distractor" setting: first-stage list whose first batch is
/// off-topic and second batch holds the gold documents, equal raw scores.
struct AsuDistractorCase {
    std::string sub_question;
    RankedList initial;
    NarConfig config;
    std::vector<std::string> off_topic;
    std::vector<std::string> on_topic;
};

AsuDistractorCase asu_distractor_case(const Corpus& corpus);

}  // namespace sunar::testkit
