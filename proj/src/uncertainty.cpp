#include "sunar/uncertainty.hpp"

#include <algorithm>
#include <numeric>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"

namespace sunar {

bool SemanticClustering::is_partition_of(std::size_t m) const {
    std::vector<int> seen(m, 0);
    for (const auto& set : sets) {
        if (set.empty()) return false;
        for (auto i : set) {
            if (i >= m || seen[i]++ != 0) return false;
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

AnswerSamples sample_answers(LlmClient& llm, std::string_view sub_question, const std::vector<const Document*>& evidence,
                             std::size_t m, double temperature, const PromptSet& prompts, std::size_t max_tokens) {
    if (m < 1) throw ConfigError("sample_answers: m must be >= 1");
    if (evidence.empty()) throw Error("sample_answers: empty evidence");
    auto prompt = render_template(prompts.asu_sample,
                                  {{"evidence", render_evidence(evidence)}, {"question", std::string(sub_question)}});
    auto request = ChatRequest::user(std::move(prompt), m, temperature);
    request.max_tokens = max_tokens;
    AnswerSamples out;
    out.sub_question = std::string(sub_question);
    out.answers = llm_generate(llm, request);
    return out;
}

SemanticClustering cluster_answers(EntailmentClient& nli, const AnswerSamples& samples) {
    if (samples.answers.empty()) throw Error("cluster_answers: no answers to cluster");
    SemanticClustering out;
    std::vector<std::string> trimmed;
    trimmed.reserve(samples.m());
    for (const auto& a : samples.answers) trimmed.push_back(trim(a));

    for (std::size_t i = 0; i < trimmed.size(); ++i) {
        bool placed = false;
        for (auto& set : out.sets) {
            const auto rep = set.front();
            bool same = false;
            if (trimmed[i] == trimmed[rep]) {
                same = true;
            } else if (!trimmed[i].empty() && !trimmed[rep].empty()) {
                try {
                    const bool forward = entail(nli, trimmed[rep], trimmed[i]);
                    const bool backward = entail(nli, trimmed[i], trimmed[rep]);
                    same = forward && backward;
                } catch (const std::exception& e) {
                    throw Error("entailment failed comparing answer " + std::to_string(i) + " with answer " +
                                std::to_string(rep) + ": " + e.what());
                }
            }
            if (same) {
                set.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) out.sets.push_back({i});
    }
    return out;
}

std::vector<ScoredDoc> rescore_batch(const std::vector<ScoredDoc>& batch, std::size_t s) {
    if (s == 0) throw Error("rescore_batch: divisor s must be >= 1");
    std::vector<ScoredDoc> out = batch;
    const auto d = static_cast<double>(s);
    for (auto& e : out) e.score /= d;
    return out;
}

FeedbackHook asu_feedback_hook(LlmClient& llm, EntailmentClient& nli, AsuConfig config, const PromptSet& prompts) {
    if (config.samples < 1) throw ConfigError("asu: m must be >= 1");
    return [&llm, &nli, config, &prompts](std::string_view sub_question, const std::vector<ScoredDoc>& batch,
                                          const std::vector<const Document*>& docs) -> FeedbackResult {
        std::vector<std::size_t> order(batch.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return ranks_before(batch[a], batch[b]); });
        std::vector<const Document*> evidence;
        evidence.reserve(order.size());
        for (auto i : order) evidence.push_back(docs[i]);

        AnswerSamples samples;
        try {
            samples = sample_answers(llm, sub_question, evidence, config.samples, config.temperature, prompts,
                                     config.max_tokens);
        } catch (const std::exception& e) {
            throw Error(std::string("asu sampling: ") + e.what());
        }
        SemanticClustering clusters;
        try {
            clusters = cluster_answers(nli, samples);
        } catch (const std::exception& e) {
            throw Error(std::string("asu clustering: ") + e.what());
        }
        FeedbackResult out;
        out.divisor = clusters.s();
        try {
            out.batch = rescore_batch(batch, out.divisor);
        } catch (const std::exception& e) {
            throw Error(std::string("asu rescoring: ") + e.what());
        }
        return out;
    };
}

}  // namespace sunar
