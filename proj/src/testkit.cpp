#include "sunar/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"
#include "sunar/uncertainty.hpp"

namespace sunar::testkit {

// ---- rng ------------------------------------------------------------------

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw Error("Rng::index on an empty range");
    return static_cast<std::size_t>(engine_() % n);
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

std::string make_word(std::size_t i) {
    static constexpr char kCons[] = "bdfgklmnprstvz";
    static constexpr char kVow[] = "aeiou";
    constexpr std::size_t nc = sizeof(kCons) - 1, nv = sizeof(kVow) - 1, ns = nc * nv;
    std::string w;
    for (int s = 0; s < 3; ++s) {
        const auto syl = i % ns;
        i /= ns;
        w.push_back(kCons[syl / nv]);
        w.push_back(kVow[syl % nv]);
    }
    return w;
}

std::vector<double> unit(std::vector<double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<double> random_in(Rng& rng, std::size_t dim, std::size_t from, std::size_t to) {
    std::vector<double> v(dim, 0.0);
    for (std::size_t i = from; i < to; ++i) v[i] = rng.normal();
    return unit(std::move(v));
}

std::vector<std::string> sample_words(const std::vector<std::string>& pool, std::size_t n, Rng& rng) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(pool[rng.index(pool.size())]);
    return out;
}

std::string sentence(std::vector<std::string> words, Rng& rng) {
    shuffle(words, rng);
    return join(words, " ");
}

// Similarities as they come back from a graph file.
NeighborhoodGraph rounded(const NeighborhoodGraph& g) {
    NeighborhoodGraph::Adjacency adj;
    char buf[64];
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        std::vector<Neighbor> list;
        for (const auto& n : g.adjacency_at(i)) {
            std::snprintf(buf, sizeof buf, "%.6f", n.similarity);
            list.push_back({n.doc_id, std::strtod(buf, nullptr)});
        }
        adj.emplace_back(g.node(i), std::move(list));
    }
    return NeighborhoodGraph::from_adjacency(g.k(), std::move(adj), false);
}

}  // namespace

// ---- synthetic corpora ----------------------------------------------------

void SyntheticSpec::validate() const {
    if (num_questions < 1) throw ConfigError("synthetic spec: num_questions must be >= 1");
    if (relevant_per_question < 1) throw ConfigError("synthetic spec: relevant_per_question must be >= 1");
    if (!(surfaced_fraction > 0.0 && surfaced_fraction <= 1.0))
        throw ConfigError("synthetic spec: surfaced_fraction must be in (0, 1]");
    if (surfaced_fraction < 1.0 && relevant_per_question < 2)
        throw ConfigError("synthetic spec: hidden relevants need relevant_per_question >= 2");
    if (query_terms < 2) throw ConfigError("synthetic spec: query_terms must be >= 2");
    if (dim < 8) throw ConfigError("synthetic spec: dim must be >= 8");
    if (num_questions > dim / 2 * 4)
        throw ConfigError("synthetic spec: dim " + std::to_string(dim) + " too small for " +
                          std::to_string(num_questions) + " separable question clusters");
    const std::size_t needed = num_questions * (query_terms + 6) + 50;
    if (vocab_size < needed)
        throw ConfigError("synthetic spec: vocabulary of " + std::to_string(vocab_size) + " words is too small; need " +
                          std::to_string(needed));
    if (vocab_size > 14 * 5 * 14 * 5 * 14 * 5) throw ConfigError("synthetic spec: vocabulary too large");
    if (!(noise >= 0.0 && noise < 0.1)) throw ConfigError("synthetic spec: noise must be in [0, 0.1)");
}

std::size_t SyntheticSpec::surfaced_count() const {
    auto n = static_cast<std::size_t>(std::lround(static_cast<double>(relevant_per_question) * surfaced_fraction));
    n = std::clamp<std::size_t>(n, 1, relevant_per_question);
    if (surfaced_fraction < 1.0 && n == relevant_per_question) --n;
    return n;
}

SyntheticCorpus generate_corpus(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    std::vector<std::string> vocab(spec.vocab_size);
    for (std::size_t i = 0; i < spec.vocab_size; ++i) vocab[i] = make_word(i);
    shuffle(vocab, rng);
    std::size_t next_word = 0;
    auto take_words = [&](std::size_t n) {
        std::vector<std::string> out(vocab.begin() + static_cast<std::ptrdiff_t>(next_word),
                                     vocab.begin() + static_cast<std::ptrdiff_t>(next_word + n));
        next_word += n;
        return out;
    };
    constexpr std::size_t kTopicWords = 6;
    const auto filler = take_words(std::min<std::size_t>(200, spec.vocab_size - spec.num_questions *
                                                                                    (spec.query_terms + kTopicWords)));

    const std::size_t half = spec.dim / 2;
    const std::size_t surfaced = spec.surfaced_count();
    constexpr double kSiblingMin = 0.95, kDistractorMax = 0.2, kCenterMax = 0.5;
    constexpr int kTries = 1000;

    // Question centers live in the first half of the space, distractors in the second.
    std::vector<std::vector<double>> centers;
    for (std::size_t q = 0; q < spec.num_questions; ++q) {
        for (int t = 0;; ++t) {
            if (t == kTries) throw ConfigError("synthetic spec: cannot separate question clusters; raise dim");
            auto c = random_in(rng, spec.dim, 0, half);
            if (std::all_of(centers.begin(), centers.end(), [&](const auto& o) { return dot(c, o) <= kCenterMax; })) {
                centers.push_back(std::move(c));
                break;
            }
        }
    }

    struct Draft {
        Document doc;
        std::vector<double> vec;
        std::size_t question;
        int kind;  // 0 surfaced, 1 hidden, 2 distractor
    };
    std::vector<Draft> drafts;
    std::vector<std::vector<std::string>> query_words;

    for (std::size_t q = 0; q < spec.num_questions; ++q) {
        auto qwords = take_words(spec.query_terms);
        auto topic = take_words(kTopicWords);
        query_words.push_back(qwords);
        std::vector<std::vector<double>> rel_vecs;
        for (std::size_t r = 0; r < spec.relevant_per_question; ++r) {
            for (int t = 0;; ++t) {
                if (t == kTries) throw ConfigError("synthetic spec: noise too large for sibling similarity 0.95");
                std::vector<double> v = centers[q];
                for (double& x : v) x += spec.noise * rng.normal();
                v = unit(std::move(v));
                if (std::all_of(rel_vecs.begin(), rel_vecs.end(),
                                [&](const auto& o) { return dot(v, o) >= kSiblingMin; })) {
                    rel_vecs.push_back(std::move(v));
                    break;
                }
            }
            std::vector<std::string> words;
            const bool is_surfaced = r < surfaced;
            if (is_surfaced) words = qwords;
            auto t = sample_words(topic, 4, rng);
            words.insert(words.end(), t.begin(), t.end());
            auto f = sample_words(filler, 8, rng);
            words.insert(words.end(), f.begin(), f.end());
            drafts.push_back({{"", std::nullopt, sentence(std::move(words), rng)}, rel_vecs.back(), q,
                              is_surfaced ? 0 : 1});
        }
        for (std::size_t d = 0; d < spec.distractors_per_question; ++d) {
            const auto shared = 1 + rng.index(spec.query_terms - 1);
            auto qs = qwords;
            shuffle(qs, rng);
            qs.resize(shared);
            auto f = sample_words(filler, 10, rng);
            qs.insert(qs.end(), f.begin(), f.end());
            drafts.push_back({{"", std::nullopt, sentence(std::move(qs), rng)}, {}, q, 2});
        }
    }
    // Distractor vectors, checked against every relevant document.
    for (auto& d : drafts) {
        if (d.kind != 2) continue;
        for (int t = 0;; ++t) {
            if (t == kTries) throw ConfigError("synthetic spec: cannot keep distractors away from relevant documents");
            auto v = random_in(rng, spec.dim, half, spec.dim);
            const bool far = std::all_of(drafts.begin(), drafts.end(),
                                         [&](const Draft& o) { return o.kind == 2 || dot(v, o.vec) <= kDistractorMax; });
            if (far) {
                d.vec = std::move(v);
                break;
            }
        }
    }

    std::vector<std::size_t> order(drafts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    char id[32];
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::snprintf(id, sizeof id, "doc%05zu", i + 1);
        drafts[order[i]].doc.doc_id = id;
    }

    SyntheticCorpus out;
    out.embeddings = EmbeddingStore(spec.dim);
    std::vector<Document> docs;
    for (auto i : order) {
        docs.push_back(drafts[i].doc);
        out.embeddings.add(drafts[i].doc.doc_id, drafts[i].vec);
    }
    out.corpus = Corpus(std::move(docs));
    for (std::size_t q = 0; q < spec.num_questions; ++q) {
        SyntheticQuestion sq;
        sq.qid = "syn" + std::to_string(q + 1);
        sq.text = "what connects " + join(query_words[q], " ") + "?";
        out.questions.push_back(std::move(sq));
    }
    for (const auto& d : drafts) {
        auto& sq = out.questions[d.question];
        if (d.kind == 0) sq.surfaced.push_back(d.doc.doc_id);
        if (d.kind == 1) sq.hidden.push_back(d.doc.doc_id);
        if (d.kind == 2) sq.distractors.push_back(d.doc.doc_id);
        if (d.kind != 2) out.qrels.add(sq.qid, d.doc.doc_id, 1);
    }
    for (const auto& sq : out.questions) {
        std::set<std::string> rel(sq.surfaced.begin(), sq.surfaced.end());
        rel.insert(sq.hidden.begin(), sq.hidden.end());
        std::set<std::string> dis(sq.distractors.begin(), sq.distractors.end());
        for (const auto& doc : out.corpus.documents()) {
            double logit = -4.0;
            if (rel.count(doc.doc_id)) logit = 2.0;
            if (dis.count(doc.doc_id)) logit = -1.0;
            out.scorer.add(sq.text, doc.text, logit + rng.uniform(-0.3, 0.3));
        }
    }
    return out;
}

RecallComparison compare_recall(const SyntheticCorpus& data, const RecallSetup& setup) {
    const auto index = build_term_index(data.corpus);
    const auto graph = build_graph(data.embeddings, setup.graph_k).graph;
    ScriptedScorer scorer = data.scorer;
    Run nar_run, base_run;
    for (const auto& q : data.questions) {
        const auto initial = sparse_retrieve(index, q.text, setup.depth);
        nar_run.add(q.qid, run_nar(q.text, initial, graph, data.corpus, scorer, {}, setup.nar).ranked);
        base_run.add(q.qid, rerank_first_stage(q.text, initial, data.corpus, scorer, setup.nar.budget));
    }
    return {recall_at_k(nar_run, data.qrels, setup.cutoff).mean, recall_at_k(base_run, data.qrels, setup.cutoff).mean};
}

// ---- 12-document fixture --------------------------------------------------

TwelveDocFixture twelve_doc_fixture() {
    TwelveDocFixture f;
    f.query = "amber falcon lighthouse";
    f.corpus = Corpus({
        {"d01", "Keeper log", "amber falcon lighthouse keeper log entries"},
        {"d02", "Nest survey", "amber falcon nest survey notes"},
        {"d03", "Restoration", "falcon lighthouse restoration fund appeal"},
        {"d04", "Glassworks", "amber glass bottles from the old works"},
        {"d05", "Paint", "lighthouse paint colours chosen by committee"},
        {"d06", "Tide tables", "tide tables printed for march and april"},
        {"d07", "Ferry", "ferry timetable posted at the harbour office"},
        {"d08", "Cliff walk", "cliff walk route past the signal station"},
        {"d09", "Gulls", "gull colonies counted along the breakwater"},
        {"d10", "North cliff", "raptor sightings recorded on the north cliff ledge"},
        {"d11", "Fog horn", "fog horn tested every winter morning"},
        {"d12", "Lantern", "lantern lens polished with chamois leather"},
    });
    const auto index = build_term_index(f.corpus);
    f.initial = sparse_retrieve(index, f.query, 100);

    const std::vector<std::pair<std::string, double>> hub = {
        {"d08", 0.95}, {"d06", 0.90}, {"d10", 0.85}, {"d12", 0.80}, {"d09", 0.75}, {"d11", 0.70},
        {"d07", 0.65}, {"d02", 0.60}, {"d03", 0.55}, {"d04", 0.50}, {"d05", 0.45}};
    NeighborhoodGraph::Adjacency adj;
    std::vector<Neighbor> hub_list;
    for (const auto& [id, sim] : hub) hub_list.push_back({id, sim});
    adj.emplace_back("d01", hub_list);
    for (const auto& doc : f.corpus.documents()) {
        if (doc.doc_id == "d01") continue;
        const auto it = std::find_if(hub.begin(), hub.end(), [&](const auto& p) { return p.first == doc.doc_id; });
        adj.emplace_back(doc.doc_id, std::vector<Neighbor>{{"d01", it->second}});
    }
    f.graph = NeighborhoodGraph::from_adjacency(hub.size(), std::move(adj));

    f.logits = {{"d01", 1.5},  {"d02", 0.5}, {"d03", -0.5}, {"d04", -1.0}, {"d05", -2.0}, {"d06", 2.0},
                {"d07", 0.0},  {"d08", 1.0}, {"d09", -1.5}, {"d10", 3.0},  {"d11", 0.2},  {"d12", -0.3}};
    for (const auto& [id, logit] : f.logits) f.scorer.add(f.query, f.corpus.at(id).text, logit);
    f.config.batch_size = 2;
    f.config.budget = 8;
    f.config.neighbor_limit = 10;
    return f;
}

// ---- oracle clients -------------------------------------------------------

namespace {

constexpr std::string_view kCue = "Are follow up questions needed here:";
constexpr std::string_view kMerCue = "Existing reasoner path:";

std::string after_last(std::string_view text, std::string_view marker) {
    const auto pos = text.rfind(marker);
    if (pos == std::string_view::npos) return {};
    return trim(text.substr(pos + marker.size()));
}

std::vector<std::string> evidence_titles(std::string_view prompt) {
    std::vector<std::string> titles;
    std::size_t pos = 0;
    while ((pos = prompt.find("[Evidence ", pos)) != std::string_view::npos) {
        const auto colon = prompt.find("]: ", pos);
        if (colon == std::string_view::npos) break;
        const auto start = colon + 3;
        const auto end_line = prompt.find('\n', start);
        const auto sep = prompt.find(": ", start);
        if (sep != std::string_view::npos && (end_line == std::string_view::npos || sep < end_line)) {
            titles.emplace_back(prompt.substr(start, sep - start));
        } else {
            titles.emplace_back();
        }
        pos = start;
    }
    return titles;
}

std::string substitute(std::string tmpl, const std::vector<std::string>& answers) {
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const auto key = "{" + std::to_string(i + 1) + "}";
        for (auto p = tmpl.find(key); p != std::string::npos; p = tmpl.find(key, p + answers[i].size()))
            tmpl.replace(p, key.size(), answers[i]);
    }
    return tmpl;
}

}  // namespace

std::vector<std::string> OracleLlm::complete(const ChatRequest& request) {
    request.validate();
    const std::string& prompt = request.messages.back().content;

    if (prompt.find(kMerCue) != std::string::npos) {
        const auto question = after_last(prompt, "for the Question: ");
        for (const auto& title : evidence_titles(prompt)) {
            auto it = kb_.mer_facts.find({question, title});
            if (it != kb_.mer_facts.end())
                return {"[Answer]: The evidence about " + title + " settles it.\n[Final Answer]: " + it->second};
        }
        const auto begin = prompt.find(kMerCue) + kMerCue.size();
        const auto end = prompt.find("\nthe evidence:", begin);
        const auto path = std::string_view(prompt).substr(begin, end - begin);
        auto final = after_last(path, "[Final Answer]:");
        if (final.empty()) final = "Unknown";
        return {"[Answer]: The reasoning path holds.\n[Final Answer]: " + final};
    }

    if (const auto cue = prompt.rfind(kCue); cue != std::string::npos) {
        const auto qpos = prompt.rfind("Question: ", cue);
        const auto question = trim(std::string_view(prompt).substr(qpos + 10, cue - qpos - 10));
        const auto transcript = std::string_view(prompt).substr(cue + kCue.size());
        std::vector<std::string> answers;
        for (std::size_t p = 0; (p = transcript.find("Intermediate Answer:", p)) != std::string_view::npos;) {
            p += 20;
            const auto e = transcript.find('\n', p);
            answers.push_back(trim(transcript.substr(p, e == std::string_view::npos ? e : e - p)));
        }
        if (auto d = kb_.direct_answers.find(question); d != kb_.direct_answers.end())
            return {" No.\n[Final Answer]: " + d->second};
        auto plan = kb_.plans.find(question);
        if (plan == kb_.plans.end()) throw ClientError("oracle has no plan for question '" + question + "'");
        if (answers.size() < plan->second.size()) {
            const auto sub = substitute(plan->second[answers.size()], answers);
            return {std::string(answers.empty() ? " Yes.\n" : "") + "Follow up: " + sub + "\n"};
        }
        return {"[Final Answer]: " + answers.back()};
    }

    const auto sub_question = after_last(prompt, "for the Question: ");
    std::vector<std::string> candidates;
    for (const auto& title : evidence_titles(prompt)) {
        auto it = kb_.facts.find({sub_question, title});
        if (it == kb_.facts.end()) continue;
        for (const auto& c : it->second) {
            if (std::find(candidates.begin(), candidates.end(), c) == candidates.end()) candidates.push_back(c);
        }
        if (request.n == 1 && request.temperature == 0.0) break;
    }
    if (request.n == 1 && request.temperature == 0.0) {
        return {"[Final Answer]: " + (candidates.empty() ? std::string("Unknown") : candidates.front())};
    }
    const auto& pool = candidates.empty() ? kb_.unsure : candidates;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < request.n; ++i) out.push_back(pool[i % pool.size()]);
    return out;
}

bool NormalizedEntailment::entails(std::string_view premise, std::string_view hypothesis) {
    return normalize_answer(premise) == normalize_answer(hypothesis);
}

TableScorer::TableScorer(const Corpus& corpus, std::map<std::pair<std::string, std::string>, double> logits,
                         double default_logit)
    : logits_(std::move(logits)), default_logit_(default_logit) {
    for (const auto& d : corpus.documents()) id_by_text_.emplace(d.text, d.doc_id);
}

double TableScorer::score(std::string_view query, std::string_view doc_text) {
    auto id = id_by_text_.find(std::string(doc_text));
    if (id == id_by_text_.end()) throw ClientError("table scorer: unknown document text");
    auto it = logits_.find({std::string(query), id->second});
    return it == logits_.end() ? default_logit_ : it->second;
}

// ---- fixture suites -------------------------------------------------------

namespace {

struct DocSpec {
    const char* id;
    const char* title;
    const char* text;
};

Corpus corpus_of(const std::vector<DocSpec>& specs) {
    std::vector<Document> docs;
    for (const auto& s : specs) docs.push_back({s.id, std::string(s.title), s.text});
    return Corpus(std::move(docs));
}

EmbeddingStore hash_embeddings(const Corpus& corpus, std::size_t dim) {
    HashEmbedder embedder;
    return embed_corpus(corpus, embedder, dim);
}

void finish_graph(FixtureSuite& s, std::size_t k) {
    s.config.graph_k = k;
    s.config.embed_dim = s.embeddings->dim();
    s.graph = rounded(build_graph(*s.embeddings, k).graph);
}

FixtureSuite wqa_exemplars() {
    FixtureSuite s;
    s.name = "wqa-exemplars";
    s.corpus = corpus_of({
        {"w01", "George Washington",
         "George Washington was the first president of the United States. His mother was Mary Ball Washington."},
        {"w02", "Mary Ball Washington",
         "Mary Ball Washington was the mother of George Washington. Her father was Joseph Ball, a planter in "
         "Lancaster County, Virginia."},
        {"w03", "Augustine Washington", "Augustine Washington was a planter and the father of George Washington."},
        {"w04", "Washington Monument", "The Washington Monument is an obelisk on the National Mall."},
        {"w05", "Ball family", "The Ball family settled in Virginia in the seventeenth century."},
        {"w06", "Paris", "Paris is the capital and largest city of France."},
        {"w07", "Mount Vernon", "Mount Vernon was the plantation house of George Washington on the Potomac."},
        {"w08", "Lancaster County", "Lancaster County lies on the Northern Neck peninsula of Virginia."},
    });
    const std::string q1 = "Who was the maternal grandfather of George Washington?";
    const std::string sq1 = "Who was the mother of George Washington?";
    const std::string sq2 = "Who was the father of Mary Ball Washington?";
    s.questions = {{"wqa-1", q1, {"Joseph Ball"}}, {"wqa-2", "What is the capital of France?", {"Paris"}}};
    s.knowledge.plans[q1] = {sq1, "Who was the father of {1}?"};
    s.knowledge.direct_answers["What is the capital of France?"] = "Paris";
    s.knowledge.facts[{sq1, "George Washington"}] = {"Mary Ball Washington"};
    s.knowledge.facts[{sq1, "Mary Ball Washington"}] = {"Mary Ball Washington"};
    s.knowledge.facts[{sq2, "Mary Ball Washington"}] = {"Joseph Ball"};
    s.knowledge.mer_facts[{q1, "Mary Ball Washington"}] = "Joseph Ball";
    s.logits = {{{sq1, "w01"}, 2.0}, {{sq1, "w02"}, 1.5}, {{sq1, "w03"}, 0.5},
                {{sq2, "w02"}, 2.5}, {{sq2, "w05"}, 0.5}, {{sq2, "w08"}, 0.0}};
    s.qrels.add("wqa-1.1", "w01", 1);
    s.qrels.add("wqa-1.2", "w02", 1);
    s.embeddings = hash_embeddings(s.corpus, 64);
    finish_graph(s, 3);
    s.config.pipeline.nar.batch_size = 2;
    s.config.pipeline.nar.budget = 6;
    s.config.pipeline.dataset = "wqa";
    return s;
}

FixtureSuite qualitative_table7() {
    FixtureSuite s;
    s.name = "qualitative-table7";
    s.corpus = corpus_of({
        {"t01", "Good Will Hunting",
         "Damon and Ben Affleck wrote \"Good Will Hunting\" (1997), a screenplay about a young genius from South "
         "Boston."},
        {"t02", "Ben Affleck",
         "Benjamin Affleck-Boldt (born August 15, 1972) is an American actor. He later appeared in the independent "
         "coming-of-age comedy \"Dazed and Confused\" as Fred O'Bannion."},
        {"t03", "Salvatore brothers",
         "Damon begins working alongside his younger brother, Stefan Salvatore, to resist greater threats."},
        {"t04", "Damon Salvatore",
         "Damon Salvatore is a fictional character in The Vampire Diaries. He is portrayed by Ian Somerhalder in the "
         "television series."},
        {"t05", "Dazed and Confused (film)",
         "Dazed and Confused is a 1993 American coming-of-age comedy film written and directed by Richard Linklater."},
        {"t06", "Matt Damon", "Matthew Paige Damon is an American actor, film producer and screenwriter."},
        {"t07", "South Boston", "South Boston is a densely populated neighborhood of Boston, Massachusetts."},
        {"t08", "Richard Linklater", "Richard Linklater is an American filmmaker from Houston, Texas."},
    });
    const std::string q = "Who did the screenwriter for Good Will Hunting play in Dazed and Confused?";
    const std::string sq1 = "Who wrote the screenplay for Good Will Hunting?";
    const std::string sq2 = "Who did Matt Damon play in Dazed and Confused?";
    s.questions = {{"mqa-7", q, {"Fred O'Bannion"}}};
    s.knowledge.plans[q] = {sq1, "Who did {1} play in Dazed and Confused?"};
    s.knowledge.facts[{sq1, "Good Will Hunting"}] = {"Matt Damon"};
    s.knowledge.facts[{sq2, "Damon Salvatore"}] = {"Damon Salvatore"};
    s.knowledge.facts[{sq2, "Salvatore brothers"}] = {"Damon Salvatore"};
    s.knowledge.mer_facts[{q, "Ben Affleck"}] = "Fred O'Bannion";
    s.logits = {{{sq1, "t01"}, 3.0}, {{sq1, "t06"}, 1.0}, {{sq1, "t02"}, 0.5},
                {{sq2, "t04"}, 2.5}, {{sq2, "t03"}, 2.0}, {{sq2, "t06"}, 1.5},
                {{sq2, "t05"}, 1.0}, {{sq2, "t02"}, 0.8}};
    s.qrels.add("mqa-7.1", "t01", 1);
    s.qrels.add("mqa-7.2", "t02", 1);
    s.embeddings = hash_embeddings(s.corpus, 64);
    finish_graph(s, 3);
    s.config.pipeline.nar.batch_size = 2;
    s.config.pipeline.nar.budget = 8;
    s.config.pipeline.asu_enabled = false;
    s.config.pipeline.dataset = "mqa";
    return s;
}

const std::string kAsuSubQuestion = "Which river flows through the old mill town of Brackenford?";

FixtureSuite asu_distractor() {
    FixtureSuite s;
    s.name = "asu-distractor";
    s.corpus = corpus_of({
        {"a01", "Brackenford fair", "The Brackenford summer fair brings jugglers and a brass band to the old town."},
        {"a02", "Brackenford market", "Market day in the old mill town of Brackenford draws traders from the hills."},
        {"a03", "Brackenford mill", "The River Tessel turns the wheels of the old mill at Brackenford."},
        {"a04", "Tessel bridge", "The Tessel bridge carries the mill road over the river beside Brackenford."},
        {"a05", "Hill farms", "Sheep farms cover the hills above the valley."},
        {"a06", "Brass band", "The town brass band rehearses on Thursday evenings."},
    });
    s.questions = {{"asu-1", "Which river turns the mill wheels at Brackenford?", {"Tessel"}}};
    s.knowledge.plans["Which river turns the mill wheels at Brackenford?"] = {kAsuSubQuestion};
    s.knowledge.facts[{kAsuSubQuestion, "Brackenford mill"}] = {"River Tessel"};
    s.knowledge.facts[{kAsuSubQuestion, "Tessel bridge"}] = {"River Tessel"};
    for (const auto* id : {"a01", "a02", "a03", "a04"}) s.logits[{kAsuSubQuestion, id}] = 1.0;
    s.qrels.add("asu-1.1", "a03", 1);
    s.qrels.add("asu-1.1", "a04", 1);
    NeighborhoodGraph::Adjacency adj;
    for (const auto& d : s.corpus.documents()) adj.emplace_back(d.doc_id, std::vector<Neighbor>{});
    s.graph = NeighborhoodGraph::from_adjacency(1, std::move(adj));
    s.config.graph_k = 1;
    s.config.pipeline.nar.batch_size = 2;
    s.config.pipeline.nar.budget = 4;
    s.config.pipeline.dataset = "wqa";
    return s;
}

FixtureSuite nar_12doc() {
    FixtureSuite s;
    s.name = "nar-12doc";
    auto f = twelve_doc_fixture();
    s.corpus = f.corpus;
    s.graph = f.graph;
    s.config.graph_k = f.graph.k();
    const std::string q = "Where was the amber falcon seen near the lighthouse?";
    s.questions = {{"nar-1", q, {"north cliff"}}};
    s.knowledge.plans[q] = {f.query};
    s.knowledge.facts[{f.query, "North cliff"}] = {"the north cliff ledge"};
    for (const auto& [id, logit] : f.logits) s.logits[{f.query, id}] = logit;
    s.qrels.add("nar-1.1", "d10", 1);
    s.config.pipeline.nar = f.config;
    s.config.pipeline.dataset = "wqa";
    return s;
}

// Five two-hop questions, eight documents each. Each hop has a lexical bridge
// document, a gold document sharing no words with the sub-question but
// embedded next to the bridge, and a lexical distractor. The last question
// adds a high-scoring document naming three rival answers.
struct ChainSpec {
    const char* org;
    const char* founder;
    const char* city;
    const char* bridge1;
    const char* gold1;
    const char* distractor1;
    const char* bridge2;
    const char* gold2;
    const char* distractor2;
    const char* filler_a;
    const char* filler_b;
};

FixtureSuite e2e_2hop() {
    static const ChainSpec chains[] = {
        {"Velmora Records", "Anika Trelawny", "Ostrava",
         "Velmora Records is an independent label. Velmora Records released jazz and soul albums through the nineties.",
         "Anika Trelawny started the label in 1988 after years as a session bassist.",
         "The Velmora Records catalogue lists forty albums and several compilations.",
         "Anika Trelawny is a bassist and label owner. Anika Trelawny toured Europe widely.",
         "Ostrava is an industrial city in Moravia; the bassist spent her childhood here.",
         "The Trelawny family name appears in Cornish parish ledgers.",
         "Harbor lights flicker over the quiet bay at dusk.",
         "A recipe for barley soup calls for leeks and thyme."},
        {"Quillfeather Press", "Bastian Okonkwo", "Tampere",
         "Quillfeather Press is a small publisher. Quillfeather Press prints poetry and travel writing.",
         "Bastian Okonkwo opened the print shop in 1995 with a single hand press.",
         "Quillfeather Press paperbacks use recycled paper and soy inks.",
         "Bastian Okonkwo is a publisher and essayist. Bastian Okonkwo writes about typography.",
         "Tampere is a lakeside city in Finland; the essayist grew up here.",
         "Okonkwo is a common surname in southeastern Nigeria.",
         "Snow closed the mountain pass for three days.",
         "The chess club meets above the bakery on Fridays."},
        {"Harrowgate Motors", "Lucinda Farrow", "Valparaiso",
         "Harrowgate Motors builds electric vans. Harrowgate Motors sells vans across Europe.",
         "Lucinda Farrow set up the carmaker in 2009 after leaving an aerospace job.",
         "Harrowgate Motors recalled two hundred vans over a brake sensor.",
         "Lucinda Farrow is an engineer and executive. Lucinda Farrow sits on several boards.",
         "Valparaiso is a port city in Chile; the engineer spent her youth here.",
         "Farrow is an old English word for a litter of piglets.",
         "The orchard produced a record apple harvest.",
         "Migrating cranes rest on the marsh each October."},
        {"Brightwater Labs", "Emeric Dunmore", "Gdansk",
         "Brightwater Labs develops water filters. Brightwater Labs tests membranes for desalination.",
         "Emeric Dunmore launched the research company in 2014 with two chemists.",
         "Brightwater Labs published a report on river pollution.",
         "Emeric Dunmore is a chemist and investor. Emeric Dunmore lectures on membranes.",
         "Gdansk is a Baltic port in Poland; the chemist spent his boyhood here.",
         "Dunmore is a village in County Galway.",
         "The lighthouse keeper painted the railings green.",
         "Volunteers repaired the footbridge over the stream."},
        {"Copperline Studios", "Isolde Marchetti", "Trieste",
         "Copperline Studios is an animation house. Copperline Studios produced short films for television.",
         "Isolde Marchetti started the animation company in 2001 with three illustrators.",
         "Copperline Studios merchandise includes posters and mugs.",
         "Isolde Marchetti is an animator and producer. Isolde Marchetti teaches storyboarding.",
         "Trieste is an Adriatic port in Italy; the animator spent her girlhood here.",
         "Marchetti is a surname common in central Italy.",
         nullptr, nullptr},
    };
    FixtureSuite s;
    s.name = "e2e-2hop";
    std::vector<Document> docs;
    Rng rng(20240611);
    constexpr std::size_t kDim = 32;
    EmbeddingStore store(kDim);
    auto near = [&](const std::vector<double>& center) {
        std::vector<double> v = center;
        for (double& x : v) x += 0.05 * rng.normal();
        return unit(std::move(v));
    };
    auto random_vec = [&] { return random_in(rng, kDim, 0, kDim); };
    char id[16];
    std::size_t next_id = 1;
    auto add_doc = [&](const std::string& title, const std::string& text, const std::vector<double>& vec) {
        std::snprintf(id, sizeof id, "e%02zu", next_id++);
        docs.push_back({id, title, text});
        store.add(id, vec);
        return std::string(id);
    };

    for (std::size_t i = 0; i < std::size(chains); ++i) {
        const auto& c = chains[i];
        const bool trap = c.filler_a == nullptr;
        const std::string qid = "e2e-" + std::to_string(i + 1);
        const std::string question = std::string("Where was the founder of ") + c.org + " born?";
        const std::string sq1 = std::string("Who founded ") + c.org + "?";
        const std::string sq2 = std::string("Where was ") + c.founder + " born?";
        const auto hop1 = random_vec();
        const auto hop2 = random_vec();
        const auto b1 = add_doc(c.org, c.bridge1, near(hop1));
        const auto g1 = add_doc(c.founder + std::string(" (early career)"), c.gold1, near(hop1));
        const auto x1 = add_doc(c.org + std::string(" catalogue"), c.distractor1, random_vec());
        const auto b2 = add_doc(c.founder, c.bridge2, near(hop2));
        const auto g2 = add_doc(c.city, c.gold2, near(hop2));
        const auto x2 = add_doc(std::string(c.founder) + " (name)", c.distractor2, random_vec());
        s.questions.push_back({qid, question, {c.city}});
        s.knowledge.plans[question] = {sq1, "Where was {1} born?"};
        s.knowledge.facts[{sq1, c.founder + std::string(" (early career)")}] = {c.founder};
        s.knowledge.facts[{sq2, c.city}] = {c.city};
        s.knowledge.mer_facts[{question, c.city}] = c.city;
        s.logits[{sq1, b1}] = 1.0;
        s.logits[{sq1, g1}] = 2.5;
        s.logits[{sq1, x1}] = -1.0;
        s.logits[{sq2, b2}] = 1.0;
        s.logits[{sq2, g2}] = 2.5;
        s.logits[{sq2, x2}] = -1.0;
        s.qrels.add(qid + ".1", g1, 1);
        s.qrels.add(qid + ".2", g2, 1);
        if (!trap) {
            add_doc("Notes " + std::to_string(2 * i + 1), c.filler_a, random_vec());
            add_doc("Notes " + std::to_string(2 * i + 2), c.filler_b, random_vec());
            continue;
        }
        const std::string rival = "Renny Holcombe";
        const auto d1 = add_doc(c.org + std::string(" history"),
                                std::string("Accounts differ on who founded ") + c.org +
                                    ": some credit Renny Holcombe, others Pascal Ode or Marta Quill.",
                                near(hop1));
        const auto w = add_doc(rival, "Renny Holcombe was born in Dunedin and later moved abroad.", random_vec());
        const std::string wrong_sq2 = "Where was " + rival + " born?";
        s.knowledge.facts[{sq1, c.org + std::string(" history")}] = {rival, "Pascal Ode", "Marta Quill"};
        s.knowledge.facts[{wrong_sq2, rival}] = {"Dunedin"};
        s.logits[{sq1, d1}] = 3.0;
        s.logits[{wrong_sq2, w}] = 2.0;
    }
    s.corpus = Corpus(std::move(docs));
    s.embeddings = std::move(store);
    finish_graph(s, 5);
    s.config.pipeline.nar.batch_size = 2;
    s.config.pipeline.nar.budget = 8;
    s.config.pipeline.l = 10;
    s.config.pipeline.asu.samples = 5;
    s.config.pipeline.dataset = "wqa";
    return s;
}

void write_questions(const std::vector<Question>& questions, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& q : questions) {
        nlohmann::ordered_json j;
        j["qid"] = q.qid;
        j["question"] = q.question;
        j["answer"] = q.answers;
        out << j.dump() << '\n';
    }
}

}  // namespace

std::vector<std::string> suite_names() {
    return {"wqa-exemplars", "qualitative-table7", "asu-distractor", "e2e-2hop", "nar-12doc"};
}

FixtureSuite build_suite(std::string_view name) {
    if (name == "wqa-exemplars") return wqa_exemplars();
    if (name == "qualitative-table7") return qualitative_table7();
    if (name == "asu-distractor") return asu_distractor();
    if (name == "e2e-2hop") return e2e_2hop();
    if (name == "nar-12doc") return nar_12doc();
    throw ConfigError("unknown fixture suite '" + std::string(name) + "' (known: " + join(suite_names(), ", ") + ")");
}

AsuDistractorCase asu_distractor_case(const Corpus& corpus) {
    AsuDistractorCase c;
    c.sub_question = kAsuSubQuestion;
    c.off_topic = {"a01", "a02"};
    c.on_topic = {"a03", "a04"};
    double score = 4.0;
    for (const auto* id : {"a01", "a02", "a03", "a04"}) {
        (void)corpus.at(id);
        c.initial.entries.push_back({id, score, Origin::first_stage, std::nullopt, std::nullopt, std::nullopt});
        score -= 1.0;
    }
    c.config.batch_size = 2;
    c.config.budget = 4;
    return c;
}

RecordedFixtures record_fixtures(const FixtureSuite& suite) {
    OracleLlm oracle(suite.knowledge);
    NormalizedEntailment judge;
    TableScorer table(suite.corpus, suite.logits, suite.default_logit);
    RecordingLlm llm(oracle);
    RecordingEntailment nli(judge);
    RecordingScorer scorer(table);
    const auto index = build_term_index(suite.corpus);
    Engine engine{suite.corpus, index, suite.graph, llm, nli, scorer, PromptSet::builtin()};

    for (bool asu : {true, false}) {
        for (bool mer : {true, false}) {
            auto cfg = suite.config.pipeline;
            cfg.asu_enabled = asu;
            cfg.mer_enabled = mer;
            for (const auto& q : suite.questions) (void)answer_question(q.question, engine, cfg);
        }
    }
    if (suite.name == "asu-distractor") {
        const auto c = asu_distractor_case(suite.corpus);
        const auto hook = asu_feedback_hook(llm, nli, suite.config.pipeline.asu);
        for (const auto& h : {hook, FeedbackHook{}})
            (void)run_nar(c.sub_question, c.initial, suite.graph, suite.corpus, scorer, h, c.config);
    }

    RecordedFixtures out{llm.recorded(), nli.recorded(), scorer.recorded(), {}};
    HashEmbedder hash;
    for (const auto& d : suite.corpus.documents()) {
        if (suite.embeddings) {
            const auto v = suite.embeddings->vector(d.doc_id);
            out.embedder.add(d.text, std::vector<double>(v.begin(), v.end()));
        } else {
            out.embedder.add(d.text, hash.embed(d.text, suite.config.embed_dim));
        }
    }
    return out;
}

void write_fixture_suite(const FixtureSuite& suite, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "fixtures");
    write_corpus(suite.corpus, dir / "corpus.jsonl");
    write_questions(suite.questions, dir / "questions.jsonl");
    save_qrels(dir / "qrels.txt", suite.qrels);
    save_graph(suite.graph, dir / "graph.txt");
    if (suite.embeddings) save_embeddings(*suite.embeddings, dir / "embeddings.txt");
    save_config(suite.config, dir / "config.json");
    const auto rec = record_fixtures(suite);
    rec.llm.save(dir / "fixtures" / "llm.jsonl");
    rec.nli.save(dir / "fixtures" / "nli.jsonl");
    rec.scorer.save(dir / "fixtures" / "scorer.jsonl");
    rec.embedder.save(dir / "fixtures" / "embedder.jsonl");
}

Engine LoadedSuite::engine() {
    return Engine{corpus, index, graph, llm, nli, scorer, PromptSet::builtin()};
}

LoadedSuite load_suite(const std::filesystem::path& dir) {
    LoadedSuite s;
    s.config = load_config(dir / "config.json");
    s.corpus = ingest_corpus(s.config.paths.corpus);
    s.index = build_term_index(s.corpus);
    s.graph = load_graph(s.config.paths.graph);
    s.questions = load_questions(s.config.paths.questions);
    s.llm = ScriptedLlm::from_file(s.config.paths.fixtures / "llm.jsonl");
    s.nli = ScriptedEntailment::from_file(s.config.paths.fixtures / "nli.jsonl");
    s.scorer = ScriptedScorer::from_file(s.config.paths.fixtures / "scorer.jsonl");
    return s;
}

}  // namespace sunar::testkit
