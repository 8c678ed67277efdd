#pragma once

// Neighborhood-aware re-ranking: budgeted batch scoring that alternates
// between the first-stage candidate pool (R) and a neighbor pool (N) grown
// from the graph adjacency of every scored batch, with an optional per-batch
// feedback hook that may rescore the batch before it is committed.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "sunar/clients.hpp"
#include "sunar/corpus.hpp"
#include "sunar/graph.hpp"
#include "sunar/ranked_list.hpp"

namespace sunar {

enum class Pool { R, N };

std::string_view to_string(Pool pool);
constexpr Pool other(Pool p) { return p == Pool::R ? Pool::N : Pool::R; }

struct NarConfig {
    std::size_t batch_size = 10;      // b
    std::size_t budget = 100;         // c
    std::size_t neighbor_limit = 10;  // neighbors looked up per scored document
    Pool start_pool = Pool::R;
    /// Concurrent scorer calls within one batch. Results do not depend on it.
    std::size_t scorer_threads = 1;

    /// Throws ConfigError unless 1 <= batch_size <= budget.
    void validate() const;
};

struct NarIteration {
    std::size_t index = 0;
    Pool scheduled = Pool::R;  // pool the alternation asked for
    Pool pool = Pool::R;       // pool the batch was drawn from (differs only on fallback)
    std::size_t candidate_pool_size = 0;  // |R| before drawing
    std::size_t neighbor_pool_size = 0;   // |N| before drawing
    std::vector<std::string> batch;       // scoring order
    std::vector<double> raw_scores;       // logistic-transformed scorer outputs
    std::optional<std::size_t> divisor;   // feedback divisor s, when feedback ran
    std::vector<double> final_scores;

    bool operator==(const NarIteration&) const = default;
};

nlohmann::ordered_json to_json(const NarIteration& iteration);

struct NarTrace {
    std::vector<NarIteration> iterations;

    /// Batch ids concatenated in scoring order.
    [[nodiscard]] std::vector<std::string> scored_ids() const;
    /// One JSON object per iteration, newline-terminated. `label` (e.g. a
    /// query id) is included in every record when non-empty.
    [[nodiscard]] std::string to_jsonl(std::string_view label = {}) const;

    bool operator==(const NarTrace&) const = default;
};

struct FeedbackResult {
    std::vector<ScoredDoc> batch;  // same ids, same order as the input batch
    std::size_t divisor = 1;
};

/// Called once per batch with the scored batch and the batch documents in the
/// same order. May rewrite scores; must not add, drop or reorder entries.
using FeedbackHook = std::function<FeedbackResult(std::string_view sub_question, const std::vector<ScoredDoc>& batch,
                                                  const std::vector<const Document*>& docs)>;

/// Numerically stable 1 / (1 + e^-x).
double logistic(double x);

/// One cross-scorer call per document, logistic-transformed, in input order.
std::vector<double> score_batch(CrossScorer& scorer, std::string_view sub_question,
                                const std::vector<const Document*>& batch, std::size_t threads = 1);

/// Priority queue of neighbor candidates keyed by doc_id. Priority is the
/// source document's final score, then graph similarity, then ascending
/// doc_id. A candidate offered twice keeps its higher priority.
class NeighborPool {
public:
    struct Entry {
        std::string doc_id;
        std::string source_doc;
        double source_score = 0.0;
        double similarity = 0.0;

        bool operator==(const Entry&) const = default;
    };

    /// Returns true when the pool changed.
    bool offer(Entry entry);
    void erase(const std::string& doc_id);
    [[nodiscard]] bool contains(const std::string& doc_id) const { return entries_.count(doc_id) != 0; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

    /// Removes and returns the n highest-priority entries.
    std::vector<Entry> take(std::size_t n);
    [[nodiscard]] std::vector<Entry> ordered() const;

private:
    using Key = std::tuple<double, double, std::string>;
    struct KeyOrder {
        bool operator()(const Key& a, const Key& b) const;
    };
    static Key key_of(const Entry& e) { return {e.source_score, e.similarity, e.doc_id}; }

    std::map<std::string, Entry> entries_;
    std::set<Key, KeyOrder> order_;
};

/// Offers the first neighbor_limit graph neighbors of every batch document to
/// the pool, skipping members of already_ranked. Documents absent from the
/// graph contribute nothing.
void promote_neighbors(const std::vector<ScoredDoc>& batch, const NeighborhoodGraph& graph,
                       std::size_t neighbor_limit, const std::unordered_set<std::string>& already_ranked,
                       NeighborPool& pool);

struct NarResult {
    RankedList ranked;  // R+, sorted by final score then doc_id
    NarTrace trace;
};

/// Runs the re-ranking loop until |R+| reaches the budget or both pools are
/// exhausted. An empty `feedback` gives the vanilla loop.
NarResult run_nar(std::string_view sub_question, const RankedList& initial, const NeighborhoodGraph& graph,
                  const Corpus& corpus, CrossScorer& scorer, const FeedbackHook& feedback, const NarConfig& config);

/// Plain re-ranking baseline: scores the top `budget` first-stage documents
/// and sorts them. No graph, no feedback.
RankedList rerank_first_stage(std::string_view sub_question, const RankedList& initial, const Corpus& corpus,
                              CrossScorer& scorer, std::size_t budget);

}  // namespace sunar
