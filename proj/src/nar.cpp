#include "sunar/nar.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include <nlohmann/json.hpp>

#include "sunar/errors.hpp"

namespace sunar {

std::string_view to_string(Pool pool) {
    return pool == Pool::R ? "R" : "N";
}

void NarConfig::validate() const {
    if (batch_size < 1) throw ConfigError("nar: batch size b must be >= 1");
    if (batch_size > budget) {
        throw ConfigError("nar: batch size b=" + std::to_string(batch_size) + " exceeds budget c=" +
                          std::to_string(budget));
    }
}

std::vector<std::string> NarTrace::scored_ids() const {
    std::vector<std::string> ids;
    for (const auto& it : iterations) ids.insert(ids.end(), it.batch.begin(), it.batch.end());
    return ids;
}

nlohmann::ordered_json to_json(const NarIteration& it) {
    nlohmann::ordered_json j;
    j["iteration"] = it.index;
    j["pool"] = to_string(it.pool);
    j["scheduled"] = to_string(it.scheduled);
    j["candidate_pool_size"] = it.candidate_pool_size;
    j["neighbor_pool_size"] = it.neighbor_pool_size;
    j["batch"] = it.batch;
    j["raw_scores"] = it.raw_scores;
    j["divisor"] = it.divisor ? nlohmann::ordered_json(*it.divisor) : nlohmann::ordered_json(nullptr);
    j["final_scores"] = it.final_scores;
    return j;
}

std::string NarTrace::to_jsonl(std::string_view label) const {
    std::string out;
    for (const auto& it : iterations) {
        nlohmann::ordered_json j;
        if (!label.empty()) j["query"] = label;
        j.update(to_json(it));
        out += j.dump();
        out += '\n';
    }
    return out;
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> score_batch(CrossScorer& scorer, std::string_view sub_question,
                                const std::vector<const Document*>& batch, std::size_t threads) {
    if (batch.empty()) throw Error("score_batch: empty batch");
    std::vector<double> scores(batch.size());
    auto score_one = [&](std::size_t i) { scores[i] = logistic(cross_score(scorer, sub_question, batch[i]->text)); };
    if (threads <= 1 || batch.size() == 1) {
        for (std::size_t i = 0; i < batch.size(); ++i) score_one(i);
        return scores;
    }
    std::vector<std::future<void>> pending;
    pending.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) pending.push_back(std::async(std::launch::async, score_one, i));
    for (auto& f : pending) f.get();
    return scores;
}

// --- NeighborPool ---

bool NeighborPool::KeyOrder::operator()(const Key& a, const Key& b) const {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
}

bool NeighborPool::offer(Entry entry) {
    auto it = entries_.find(entry.doc_id);
    if (it != entries_.end()) {
        const auto& cur = it->second;
        const bool higher = entry.source_score > cur.source_score ||
                            (entry.source_score == cur.source_score && entry.similarity > cur.similarity);
        if (!higher) return false;
        order_.erase(key_of(cur));
        it->second = std::move(entry);
        order_.insert(key_of(it->second));
        return true;
    }
    order_.insert(key_of(entry));
    auto id = entry.doc_id;
    entries_.emplace(std::move(id), std::move(entry));
    return true;
}

void NeighborPool::erase(const std::string& doc_id) {
    auto it = entries_.find(doc_id);
    if (it == entries_.end()) return;
    order_.erase(key_of(it->second));
    entries_.erase(it);
}

std::vector<NeighborPool::Entry> NeighborPool::take(std::size_t n) {
    std::vector<Entry> out;
    while (out.size() < n && !order_.empty()) {
        auto id = std::get<2>(*order_.begin());
        order_.erase(order_.begin());
        auto node = entries_.extract(id);
        out.push_back(std::move(node.mapped()));
    }
    return out;
}

std::vector<NeighborPool::Entry> NeighborPool::ordered() const {
    std::vector<Entry> out;
    out.reserve(order_.size());
    for (const auto& k : order_) out.push_back(entries_.at(std::get<2>(k)));
    return out;
}

void promote_neighbors(const std::vector<ScoredDoc>& batch, const NeighborhoodGraph& graph,
                       std::size_t neighbor_limit, const std::unordered_set<std::string>& already_ranked,
                       NeighborPool& pool) {
    if (neighbor_limit == 0) return;
    for (const auto& src : batch) {
        auto adj = graph.adjacency_or_empty(src.doc_id);
        const auto take = std::min(neighbor_limit, adj.size());
        for (std::size_t i = 0; i < take; ++i) {
            const auto& nb = adj[i];
            if (already_ranked.count(nb.doc_id) != 0) continue;
            pool.offer({nb.doc_id, src.doc_id, src.score, nb.similarity});
        }
    }
}

// --- the loop ---

namespace {

/// First-stage pool: initial order with removals.
class CandidatePool {
public:
    explicit CandidatePool(std::vector<std::string> ids) : ids_(std::move(ids)), alive_(ids_.begin(), ids_.end()) {}

    [[nodiscard]] std::size_t size() const noexcept { return alive_.size(); }
    [[nodiscard]] bool empty() const noexcept { return alive_.empty(); }
    void erase(const std::string& id) { alive_.erase(id); }

    std::vector<std::string> take(std::size_t n) {
        std::vector<std::string> out;
        while (out.size() < n && cursor_ < ids_.size()) {
            const auto& id = ids_[cursor_++];
            if (alive_.erase(id) != 0) out.push_back(id);
        }
        return out;
    }

private:
    std::vector<std::string> ids_;
    std::unordered_set<std::string> alive_;
    std::size_t cursor_ = 0;
};

}  // namespace

NarResult run_nar(std::string_view sub_question, const RankedList& initial, const NeighborhoodGraph& graph,
                  const Corpus& corpus, CrossScorer& scorer, const FeedbackHook& feedback, const NarConfig& config) {
    config.validate();
    if (initial.empty()) throw Error("empty first-stage retrieval");

    std::vector<std::string> initial_ids;
    {
        std::unordered_set<std::string> seen;
        for (const auto& e : initial.entries) {
            if (corpus.find(e.doc_id) == nullptr) {
                throw Error("first-stage document '" + e.doc_id + "' is not in the corpus");
            }
            if (seen.insert(e.doc_id).second) initial_ids.push_back(e.doc_id);
        }
    }

    CandidatePool candidates(std::move(initial_ids));
    NeighborPool neighbor_pool;
    std::vector<ScoredDoc> scored;
    std::unordered_set<std::string> ranked_ids;
    NarResult result;
    Pool scheduled = config.start_pool;

    while (scored.size() < config.budget) {
        Pool pool = scheduled;
        auto pool_size = [&](Pool p) { return p == Pool::R ? candidates.size() : neighbor_pool.size(); };
        if (pool_size(pool) == 0) pool = other(pool);
        if (pool_size(pool) == 0) break;

        NarIteration iter;
        iter.index = result.trace.iterations.size();
        iter.scheduled = scheduled;
        iter.pool = pool;
        iter.candidate_pool_size = candidates.size();
        iter.neighbor_pool_size = neighbor_pool.size();

        const std::size_t want = std::min(config.batch_size, config.budget - scored.size());
        std::vector<ScoredDoc> batch;
        if (pool == Pool::R) {
            for (auto& id : candidates.take(want)) {
                batch.push_back({std::move(id), 0.0, Origin::first_stage, std::nullopt, iter.index, std::nullopt});
            }
        } else {
            for (auto& e : neighbor_pool.take(want)) {
                batch.push_back({std::move(e.doc_id), 0.0, Origin::neighbor, std::move(e.source_doc), iter.index,
                                 std::nullopt});
            }
        }

        std::vector<const Document*> docs;
        docs.reserve(batch.size());
        for (const auto& d : batch) {
            const auto* doc = corpus.find(d.doc_id);
            if (doc == nullptr) {
                throw Error("iteration " + std::to_string(iter.index) + ": document '" + d.doc_id +
                            "' is not in the corpus");
            }
            docs.push_back(doc);
        }

        std::vector<double> raw;
        try {
            raw = score_batch(scorer, sub_question, docs, config.scorer_threads);
        } catch (const std::exception& e) {
            throw Error("scorer failed at iteration " + std::to_string(iter.index) + ": " + e.what());
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            batch[i].score = raw[i];
            batch[i].raw_score = raw[i];
        }

        if (feedback) {
            FeedbackResult fb;
            try {
                fb = feedback(sub_question, batch, docs);
            } catch (const std::exception& e) {
                throw Error("feedback failed at iteration " + std::to_string(iter.index) + ": " + e.what());
            }
            if (fb.divisor < 1) throw Error("feedback returned divisor 0");
            if (fb.batch.size() != batch.size()) throw Error("feedback changed the batch size");
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (fb.batch[i].doc_id != batch[i].doc_id) throw Error("feedback reordered the batch");
                batch[i].score = fb.batch[i].score;
            }
            iter.divisor = fb.divisor;
        }

        for (const auto& d : batch) {
            iter.batch.push_back(d.doc_id);
            iter.raw_scores.push_back(*d.raw_score);
            iter.final_scores.push_back(d.score);
            ranked_ids.insert(d.doc_id);
            candidates.erase(d.doc_id);
            neighbor_pool.erase(d.doc_id);
        }
        promote_neighbors(batch, graph, config.neighbor_limit, ranked_ids, neighbor_pool);
        scored.insert(scored.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
        result.trace.iterations.push_back(std::move(iter));
        scheduled = other(pool);
    }

    result.ranked.entries = std::move(scored);
    result.ranked.sort();
    return result;
}

RankedList rerank_first_stage(std::string_view sub_question, const RankedList& initial, const Corpus& corpus,
                              CrossScorer& scorer, std::size_t budget) {
    RankedList out;
    std::unordered_set<std::string> seen;
    std::vector<const Document*> docs;
    for (const auto& e : initial.entries) {
        if (docs.size() >= budget) break;
        if (!seen.insert(e.doc_id).second) continue;
        docs.push_back(&corpus.at(e.doc_id));
        out.entries.push_back({e.doc_id, 0.0, Origin::first_stage, std::nullopt, std::nullopt, std::nullopt});
    }
    if (docs.empty()) return out;
    auto scores = score_batch(scorer, sub_question, docs);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out.entries[i].score = scores[i];
        out.entries[i].raw_score = scores[i];
    }
    out.sort();
    return out;
}

}  // namespace sunar
