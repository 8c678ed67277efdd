#include "sunar/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <thread>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"

namespace sunar {

namespace {

constexpr std::string_view kFollowUp = "Follow up:";
constexpr std::string_view kFinal = "[Final Answer]:";
constexpr std::string_view kIntermediate = "Intermediate Answer:";

std::string rest_of_line(std::string_view text, std::size_t from) {
    auto end = text.find('\n', from);
    if (end == std::string_view::npos) end = text.size();
    return trim(text.substr(from, end - from));
}

std::string collapse_newlines(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\r') continue;
        out.push_back(c == '\n' ? ' ' : c);
    }
    std::string squeezed;
    for (char c : out) {
        if (c == ' ' && !squeezed.empty() && squeezed.back() == ' ') continue;
        squeezed.push_back(c);
    }
    return trim(squeezed);
}

std::vector<const Document*> documents_of(const RankedList& list, const Corpus& corpus) {
    std::vector<const Document*> docs;
    docs.reserve(list.size());
    for (const auto& e : list.entries) {
        const auto* d = corpus.find(e.doc_id);
        if (!d) throw Error("ranked document '" + e.doc_id + "' is not in the corpus");
        docs.push_back(d);
    }
    return docs;
}

}  // namespace

void PipelineConfig::validate() const {
    if (l < 1) throw ConfigError("l must be >= 1");
    if (max_hops < 1) throw ConfigError("max_hops must be >= 1");
    if (first_stage_depth < 1) throw ConfigError("first_stage_depth must be >= 1");
    if (asu.samples < 1) throw ConfigError("asu samples (m) must be >= 1");
    if (asu.temperature < 0.0) throw ConfigError("asu temperature must be >= 0");
    nar.validate();
    (void)PromptSet::builtin().exemplars(dataset);
}

const std::string& ReasoningPath::answer() const {
    return mer_answer ? *mer_answer : final_answer;
}

std::string decomposition_prompt(std::string_view question, const PromptSet& prompts, std::string_view dataset) {
    return render_template(prompts.decompose, {{"instruction", prompts.decompose_instruction},
                                               {"exemplars", prompts.exemplars(dataset)},
                                               {"question", std::string(question)}});
}

DecomposeOutcome parse_decomposition(std::string_view text) {
    auto visible = text.substr(0, std::min(text.size(), find_icase(text, kIntermediate)));
    const auto follow = find_icase(visible, kFollowUp);
    const auto final = find_icase(visible, kFinal);
    if (follow != std::string_view::npos && (final == std::string_view::npos || follow < final)) {
        auto sq = rest_of_line(visible, follow + kFollowUp.size());
        if (!sq.empty()) return FollowUp{std::move(sq)};
    } else if (final != std::string_view::npos) {
        auto answer = rest_of_line(visible, final + kFinal.size());
        if (!answer.empty()) return FinalAnswer{std::move(answer)};
    }
    throw Error("unparseable decomposition output: " + std::string(text));
}

DecomposeOutcome decompose_step(LlmClient& llm, const std::string& prompt, std::size_t max_tokens) {
    auto request = ChatRequest::user(prompt, 1, 0.0);
    request.max_tokens = max_tokens;
    request.stop = {std::string(kIntermediate), "Intermediate answer:"};
    return parse_decomposition(llm_generate(llm, request).front());
}

std::string extract_answer(std::string_view completion) {
    const auto pos = find_icase(completion, kFinal);
    if (pos != std::string_view::npos) completion = completion.substr(pos + kFinal.size());
    return collapse_newlines(completion);
}

std::string answer_sub_question(LlmClient& llm, std::string_view sub_question,
                                const std::vector<const Document*>& evidence, const PromptSet& prompts,
                                std::size_t max_tokens) {
    if (evidence.empty()) throw Error("no evidence for sub-question '" + std::string(sub_question) + "'");
    auto prompt = render_template(prompts.answer,
                                  {{"evidence", render_evidence(evidence)}, {"question", std::string(sub_question)}});
    auto request = ChatRequest::user(std::move(prompt), 1, 0.0);
    request.max_tokens = max_tokens;
    return extract_answer(llm_generate(llm, request).front());
}

RankedList evidence_union(const std::vector<DecompositionStep>& steps, std::size_t l) {
    std::map<std::string, ScoredDoc> best;
    for (const auto& step : steps) {
        for (const auto& e : step.ranked.entries) {
            auto [it, inserted] = best.try_emplace(e.doc_id, e);
            if (!inserted && e.score > it->second.score) it->second = e;
        }
    }
    RankedList out;
    out.entries.reserve(best.size());
    for (auto& [id, e] : best) out.entries.push_back(std::move(e));
    out.sort();
    return out.truncated(l);
}

std::string render_reasoning_path(const ReasoningPath& path) {
    std::string out;
    for (const auto& step : path.steps) {
        out += "Follow up: " + step.sub_question + "\n";
        out += "Intermediate Answer: " + step.intermediate_answer + "\n";
    }
    out += "[Final Answer]: " + path.final_answer;
    return out;
}

MerOutcome meta_reason(LlmClient& llm, std::string_view question, const ReasoningPath& path,
                       const std::vector<const Document*>& evidence, const PromptSet& prompts,
                       std::string_view dataset, std::size_t max_tokens) {
    MerOutcome out;
    try {
        auto prompt = render_template(prompts.mer, {{"exemplars", prompts.exemplars(dataset)},
                                                    {"reasoning_path", render_reasoning_path(path)},
                                                    {"evidence", render_evidence(evidence)},
                                                    {"question", std::string(question)}});
        auto request = ChatRequest::user(std::move(prompt), 1, 0.0);
        request.max_tokens = max_tokens;
        out.raw = llm_generate(llm, request).front();
    } catch (const std::exception& e) {
        out.warning = std::string("mer call failed, using sequential answer: ") + e.what();
        return out;
    }
    const auto pos = find_icase(out.raw, kFinal);
    if (pos == std::string::npos) {
        out.warning = "mer output has no [Final Answer]: marker, using sequential answer";
        return out;
    }
    auto answer = rest_of_line(out.raw, pos + kFinal.size());
    if (answer.empty()) {
        out.warning = "mer output has an empty final answer, using sequential answer";
        return out;
    }
    out.answer = std::move(answer);
    return out;
}

ReasoningPath answer_question(std::string_view question, const Engine& engine, const PipelineConfig& config) {
    config.validate();
    ReasoningPath path;
    path.question = std::string(question);
    const auto header = decomposition_prompt(question, engine.prompts, config.dataset);

    FeedbackHook feedback;
    if (config.asu_enabled) feedback = asu_feedback_hook(engine.llm, engine.nli, config.asu, engine.prompts);

    while (true) {
        auto outcome = decompose_step(engine.llm, header + path.transcript, config.max_tokens);
        if (auto* fin = std::get_if<FinalAnswer>(&outcome)) {
            path.final_answer = fin->answer;
            path.transcript += (path.steps.empty() ? " No.\n" : "") + std::string(kFinal) + " " + fin->answer + "\n";
            break;
        }
        if (path.steps.size() == config.max_hops) {
            path.hop_cap_exceeded = true;
            path.final_answer.clear();
            path.warnings.push_back("hop cap of " + std::to_string(config.max_hops) + " reached");
            break;
        }
        DecompositionStep step;
        step.index = path.steps.size() + 1;
        step.sub_question = std::get<FollowUp>(outcome).sub_question;

        const auto initial = sparse_retrieve(engine.index, step.sub_question, config.first_stage_depth, config.bm25);
        auto nar = run_nar(step.sub_question, initial, engine.graph, engine.corpus, engine.scorer, feedback,
                           config.nar);
        step.ranked = std::move(nar.ranked);
        step.trace = std::move(nar.trace);
        step.evidence = step.ranked.truncated(config.l);
        step.intermediate_answer = answer_sub_question(engine.llm, step.sub_question,
                                                       documents_of(step.evidence, engine.corpus), engine.prompts,
                                                       config.max_tokens);

        if (path.steps.empty()) path.transcript += " Yes.\n";
        path.transcript += std::string(kFollowUp) + " " + step.sub_question + "\n";
        path.transcript += std::string(kIntermediate) + " " + step.intermediate_answer + "\n";
        path.steps.push_back(std::move(step));
    }

    if (config.mer_enabled && !path.hop_cap_exceeded) {
        if (path.steps.empty()) {
            path.warnings.push_back("mer skipped: no retrieved evidence");
        } else {
            const auto pooled = evidence_union(path.steps, config.l);
            auto mer = meta_reason(engine.llm, question, path, documents_of(pooled, engine.corpus), engine.prompts,
                                   config.dataset, config.max_tokens);
            if (mer.answer) {
                path.mer_answer = std::move(mer.answer);
            } else {
                path.mer_fallback = true;
                path.warnings.push_back(std::move(mer.warning));
            }
        }
    }
    return path;
}

std::vector<Question> load_questions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open question file '" + path.string() + "'");
    std::vector<Question> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path.string(), line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("qid") || !j.contains("question") || !j["question"].is_string())
            throw FormatError(path.string(), line_no, "expected {\"qid\", \"question\", \"answer\"}");
        Question q;
        q.qid = j["qid"].is_string() ? j["qid"].get<std::string>() : j["qid"].dump();
        q.question = j["question"].get<std::string>();
        if (j.contains("answer")) {
            const auto& a = j["answer"];
            if (a.is_string()) {
                q.answers.push_back(a.get<std::string>());
            } else if (a.is_array()) {
                for (const auto& x : a) {
                    if (!x.is_string()) throw FormatError(path.string(), line_no, "answer list must hold strings");
                    q.answers.push_back(x.get<std::string>());
                }
            } else if (!a.is_null()) {
                throw FormatError(path.string(), line_no, "answer must be a string or a list of strings");
            }
        }
        if (q.qid.empty() || trim(q.question).empty())
            throw FormatError(path.string(), line_no, "empty qid or question");
        out.push_back(std::move(q));
    }
    return out;
}

std::vector<QuestionOutcome> answer_questions(const std::vector<Question>& questions, const Engine& engine,
                                              const PipelineConfig& config, std::size_t workers) {
    config.validate();
    std::vector<QuestionOutcome> out(questions.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < questions.size(); i = next++) {
            out[i].qid = questions[i].qid;
            try {
                out[i].path = answer_question(questions[i].question, engine, config);
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(questions.size(), 1));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return out;
}

nlohmann::ordered_json to_json(const ScoredDoc& doc) {
    nlohmann::ordered_json j;
    j["doc_id"] = doc.doc_id;
    j["score"] = doc.score;
    j["origin"] = to_string(doc.origin);
    if (doc.source_doc) j["source_doc"] = *doc.source_doc;
    if (doc.batch_index) j["batch"] = *doc.batch_index;
    if (doc.raw_score) j["raw_score"] = *doc.raw_score;
    return j;
}

nlohmann::ordered_json to_json(const ReasoningPath& path, bool with_trace) {
    nlohmann::ordered_json j;
    j["question"] = path.question;
    auto steps = nlohmann::ordered_json::array();
    for (const auto& s : path.steps) {
        nlohmann::ordered_json js;
        js["index"] = s.index;
        js["sub_question"] = s.sub_question;
        auto ev = nlohmann::ordered_json::array();
        for (const auto& e : s.evidence.entries) ev.push_back(to_json(e));
        js["evidence"] = std::move(ev);
        js["intermediate_answer"] = s.intermediate_answer;
        if (with_trace) {
            auto tr = nlohmann::ordered_json::array();
            for (const auto& it : s.trace.iterations) tr.push_back(to_json(it));
            js["trace"] = std::move(tr);
        }
        steps.push_back(std::move(js));
    }
    j["steps"] = std::move(steps);
    j["final_answer"] = path.final_answer;
    j["mer_answer"] = path.mer_answer ? nlohmann::ordered_json(*path.mer_answer) : nlohmann::ordered_json(nullptr);
    j["answer"] = path.answer();
    j["hop_cap_exceeded"] = path.hop_cap_exceeded;
    j["mer_fallback"] = path.mer_fallback;
    j["warnings"] = path.warnings;
    j["transcript"] = path.transcript;
    return j;
}

}  // namespace sunar
