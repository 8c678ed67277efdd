#pragma once

// Random NAR instances shared by the unit and acceptance tests: a corpus, a
// first-stage list, a directed graph and a logit table, plus the same data in
// the reference implementation's plain form.

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "reference.hpp"
#include "sunar/clients.hpp"
#include "sunar/corpus.hpp"
#include "sunar/graph.hpp"
#include "sunar/nar.hpp"
#include "sunar/ranked_list.hpp"

namespace ref {

/// Looks a document up by its text ("text of <id>").
class LogitScorer final : public sunar::CrossScorer {
public:
    explicit LogitScorer(std::map<std::string, double> logits) : logits_(std::move(logits)) {}
    double score(std::string_view, std::string_view doc_text) override {
        const std::string text(doc_text);
        return logits_.at(text.substr(std::string("text of ").size()));
    }

private:
    std::map<std::string, double> logits_;
};

struct NarInstance {
    sunar::Corpus corpus;
    sunar::RankedList initial;
    sunar::NeighborhoodGraph graph;
    sunar::NarConfig config;
    NarInput reference;

    [[nodiscard]] std::size_t reachable() const {
        std::set<std::string> seen(reference.initial.begin(), reference.initial.end());
        std::vector<std::string> todo(seen.begin(), seen.end());
        while (!todo.empty()) {
            auto id = todo.back();
            todo.pop_back();
            auto it = reference.graph.find(id);
            if (it == reference.graph.end()) continue;
            for (std::size_t j = 0; j < std::min(reference.neighbor_limit, it->second.size()); ++j)
                if (seen.insert(it->second[j].first).second) todo.push_back(it->second[j].first);
        }
        return seen.size();
    }
};

inline NarInstance random_nar_instance(std::mt19937_64& rng) {
    auto pick = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng() % (hi - lo + 1)); };
    NarInstance inst;
    const std::size_t r_size = pick(5, 50);
    const std::size_t n = r_size + pick(0, 40);
    std::vector<std::string> ids;
    std::vector<sunar::Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "x%03zu", i);
        ids.push_back(id);
        docs.push_back({id, std::nullopt, std::string("text of ") + id});
    }
    inst.corpus = sunar::Corpus(docs);

    auto shuffled = ids;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    // logits on a coarse grid so ties are common
    for (const auto& id : ids) inst.reference.logits[id] = static_cast<double>(static_cast<int>(pick(0, 12)) - 6) / 2.0;
    for (std::size_t i = 0; i < r_size; ++i) {
        inst.reference.initial.push_back(shuffled[i]);
        inst.initial.entries.push_back({shuffled[i], static_cast<double>(r_size - i), sunar::Origin::first_stage,
                                        std::nullopt, std::nullopt, std::nullopt});
    }

    const std::size_t k = pick(1, 6);
    sunar::NeighborhoodGraph::Adjacency adj;
    for (const auto& id : ids) {
        std::vector<sunar::Neighbor> list;
        if (rng() % 5 != 0) {
            std::set<std::string> chosen;
            const std::size_t deg = pick(0, k);
            while (chosen.size() < deg) {
                const auto& other = ids[rng() % n];
                if (other != id) chosen.insert(other);
            }
            for (const auto& o : chosen) list.push_back({o, static_cast<double>(pick(0, 10)) / 10.0});
            std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
                if (a.similarity != b.similarity) return a.similarity > b.similarity;
                return a.doc_id < b.doc_id;
            });
        }
        std::vector<std::pair<std::string, double>> plain;
        for (const auto& nb : list) plain.emplace_back(nb.doc_id, nb.similarity);
        inst.reference.graph[id] = plain;
        adj.emplace_back(id, std::move(list));
    }
    inst.graph = sunar::NeighborhoodGraph::from_adjacency(k, std::move(adj));

    inst.config.batch_size = pick(1, 5);
    inst.config.budget = pick(inst.config.batch_size, 60);
    inst.config.neighbor_limit = pick(0, 6);
    inst.reference.b = inst.config.batch_size;
    inst.reference.c = inst.config.budget;
    inst.reference.neighbor_limit = inst.config.neighbor_limit;
    return inst;
}

inline constexpr double kScoreTolerance = 1e-12;

inline bool close(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > kScoreTolerance) return false;
    return true;
}

/// True when the library run and the reference agree on every batch and the
/// final order exactly, and on every score to within kScoreTolerance.
inline bool same_run(const sunar::NarResult& got, const NarOutput& want, std::string* why = nullptr) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    if (got.trace.iterations.size() != want.steps.size()) return fail("iteration count");
    for (std::size_t i = 0; i < want.steps.size(); ++i) {
        const auto& a = got.trace.iterations[i];
        const auto& b = want.steps[i];
        if (std::string(sunar::to_string(a.pool)) != std::string(1, b.pool)) return fail("pool at " + std::to_string(i));
        if (a.batch != b.batch) return fail("batch at " + std::to_string(i));
        if (!close(a.raw_scores, b.raw)) return fail("raw scores at " + std::to_string(i));
        if (!close(a.final_scores, b.final)) return fail("final scores at " + std::to_string(i));
    }
    if (got.ranked.size() != want.ranked.size()) return fail("R+ size");
    for (std::size_t i = 0; i < want.ranked.size(); ++i) {
        if (got.ranked.entries[i].doc_id != want.ranked[i].id) return fail("R+ order at " + std::to_string(i));
        if (std::abs(got.ranked.entries[i].score - want.ranked[i].score) > kScoreTolerance) return fail("R+ score at " + std::to_string(i));
    }
    return true;
}

}  // namespace ref
