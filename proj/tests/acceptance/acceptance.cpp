// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "metric_instances.hpp"
#include "nar_instances.hpp"
#include "reference.hpp"
#include "sunar/eval.hpp"
#include "sunar/nar.hpp"
#include "sunar/pipeline.hpp"
#include "sunar/scripted.hpp"
#include "sunar/testkit.hpp"
#include "sunar/uncertainty.hpp"

using namespace sunar;

namespace {

constexpr double kTolerance = 1e-12;

/// Collects the first few failure messages of a criterion.
struct Verdict {
    std::vector<std::string> failures;
    std::string summary;

    void expect(bool ok, const std::string& what) {
        if (!ok && failures.size() < 5) failures.push_back(what);
        if (!ok) ++failed;
    }
    [[nodiscard]] bool ok() const { return failed == 0; }
    std::size_t failed = 0;
};

int g_failed = 0;

void criterion(const std::string& id, const std::string& title, double limit_seconds,
               const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0 && secs >= limit_seconds) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "runtime %.2fs over the %.0fs limit", secs, limit_seconds);
        v.expect(false, buf);
    }
    const bool ok = v.ok();
    if (!ok) ++g_failed;
    char timing[64];
    if (limit_seconds > 0)
        std::snprintf(timing, sizeof timing, "%.3fs, limit %.0fs", secs, limit_seconds);
    else
        std::snprintf(timing, sizeof timing, "%.3fs", secs);
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ' ' << title << " (" << timing << ")";
    if (!v.summary.empty()) std::cout << " -- " << v.summary;
    std::cout << '\n';
    for (const auto& f : v.failures) std::cout << "       " << f << '\n';
    std::cout.flush();
}

// ---- shared runs ----------------------------------------------------------

ref::NarInput reference_of(const testkit::TwelveDocFixture& f) {
    ref::NarInput in;
    in.initial = f.initial.ids();
    for (std::size_t i = 0; i < f.graph.node_count(); ++i) {
        auto& list = in.graph[f.graph.node(i)];
        for (const auto& nb : f.graph.adjacency_at(i)) list.emplace_back(nb.doc_id, nb.similarity);
    }
    in.logits = f.logits;
    in.b = f.config.batch_size;
    in.c = f.config.budget;
    in.neighbor_limit = f.config.neighbor_limit;
    return in;
}

std::string fingerprint_of(const NarResult& r) {
    std::ostringstream out;
    out.precision(17);
    out << r.trace.to_jsonl();
    for (const auto& e : r.ranked.entries) out << e.doc_id << ' ' << e.score << '\n';
    return out.str();
}

NarResult twelve_doc_run(std::size_t scorer_threads) {
    const auto f = testkit::twelve_doc_fixture();
    auto scorer = f.scorer;
    auto config = f.config;
    config.scorer_threads = scorer_threads;
    return run_nar(f.query, f.initial, f.graph, f.corpus, scorer, {}, config);
}

constexpr std::size_t kRecallCorpora = 50;

/// Per corpus: NAR and baseline recall@10.
std::vector<testkit::RecallComparison> recall_runs(std::size_t scorer_threads) {
    std::vector<testkit::RecallComparison> out;
    for (std::uint64_t seed = 1; seed <= kRecallCorpora; ++seed) {
        testkit::SyntheticSpec spec;
        spec.seed = seed;
        spec.surfaced_fraction = 0.5;
        testkit::RecallSetup setup;
        setup.nar.scorer_threads = scorer_threads;
        out.push_back(testkit::compare_recall(testkit::generate_corpus(spec), setup));
    }
    return out;
}

struct SuiteRun {
    double cover_em = 0.0;
    std::string serialized;
    std::size_t failed = 0;
};

SuiteRun e2e_run(const std::filesystem::path& dir, bool feedback, std::size_t workers) {
    auto suite = testkit::load_suite(dir);
    auto config = suite.config.pipeline;
    config.asu_enabled = feedback;
    config.mer_enabled = feedback;
    const auto outcomes = answer_questions(suite.questions, suite.engine(), config, workers);
    SuiteRun run;
    std::vector<AnswerRecord> records;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        if (!o.ok()) {
            ++run.failed;
            run.serialized += o.qid + " error " + o.error + '\n';
            records.push_back({o.qid, "", suite.questions[i].answers});
            continue;
        }
        run.serialized += to_json(*o.path, true).dump() + '\n';
        records.push_back({o.qid, o.path->answer(), suite.questions[i].answers});
    }
    run.cover_em = cover_em_metric(records).mean;
    return run;
}

// ---- clients for the feedback checks ---------------------------------------

class FixedLlm final : public LlmClient {
public:
    explicit FixedLlm(std::vector<std::string> answers) : answers_(std::move(answers)) {}
    std::vector<std::string> complete(const ChatRequest& request) override {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < request.n; ++i) out.push_back(answers_[i % answers_.size()]);
        return out;
    }

private:
    std::vector<std::string> answers_;
};

/// Greedy clustering written from the definition, for comparison.
std::vector<std::vector<std::size_t>> reference_clusters(const std::vector<std::string>& answers,
                                                         const std::function<bool(const std::string&,
                                                                                  const std::string&)>& entails) {
    std::vector<std::vector<std::size_t>> sets;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        bool placed = false;
        for (auto& set : sets) {
            const auto& rep = answers[set.front()];
            if (rep == answers[i] || (entails(rep, answers[i]) && entails(answers[i], rep))) {
                set.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) sets.push_back({i});
    }
    return sets;
}

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

}  // namespace

int main() {
    std::cout << "sunar acceptance suite (score tolerance " << kTolerance << ")\n";

    criterion("AC1", "NAR trace equals the straight-line reference on the 12-doc fixture", 1.0, [](Verdict& v) {
        const auto f = testkit::twelve_doc_fixture();
        auto scorer = f.scorer;
        const auto got = run_nar(f.query, f.initial, f.graph, f.corpus, scorer, {}, f.config);
        std::string why;
        v.expect(ref::same_run(got, ref::nar(reference_of(f)), &why), "reference mismatch: " + why);
        v.expect(f.config.batch_size == 2 && f.config.budget == 8, "fixture is not b=2, c=8");
        std::string pools;
        for (const auto& it : got.trace.iterations) pools += std::string(to_string(it.pool));
        v.expect(got.ranked.size() == 8, "R+ size " + std::to_string(got.ranked.size()));
        v.summary = "pools " + pools + ", |R+|=" + std::to_string(got.ranked.size());
    });

    criterion("AC2", "pool alternation and budget over 200 random instances", 10.0, [](Verdict& v) {
        std::mt19937_64 rng(424242);
        std::size_t fallbacks = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const auto inst = ref::random_nar_instance(rng);
            ref::LogitScorer scorer(inst.reference.logits);
            const auto got = run_nar("q", inst.initial, inst.graph, inst.corpus, scorer, {}, inst.config);
            const std::string tag = "instance " + std::to_string(trial) + ": ";
            Pool expect = Pool::R;
            for (const auto& it : got.trace.iterations) {
                v.expect(it.scheduled == expect, tag + "schedule does not alternate");
                if (it.pool != it.scheduled) {
                    ++fallbacks;
                    const auto scheduled_size =
                        it.scheduled == Pool::R ? it.candidate_pool_size : it.neighbor_pool_size;
                    v.expect(scheduled_size == 0, tag + "fallback taken while the scheduled pool was non-empty");
                }
                expect = other(it.pool);
            }
            v.expect(got.ranked.size() == std::min(inst.config.budget, inst.reachable()),
                     tag + "|R+| != min(c, reachable)");
            v.expect(got.ranked.has_unique_ids(), tag + "duplicate doc ids");
            std::string why;
            v.expect(ref::same_run(got, ref::nar(inst.reference), &why), tag + "reference mismatch: " + why);
        }
        v.summary = "200 instances, " + std::to_string(fallbacks) + " empty-pool fallbacks exercised";
    });

    criterion("AC3", "NAR recall@10 gain over plain re-ranking on 50 synthetic corpora", 30.0, [](Verdict& v) {
        const auto runs = recall_runs(1);
        double nar = 0.0, base = 0.0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            nar += runs[i].nar;
            base += runs[i].baseline;
            v.expect(runs[i].nar >= runs[i].baseline, "corpus seed " + std::to_string(i + 1) + ": NAR below baseline");
        }
        nar /= static_cast<double>(runs.size());
        base /= static_cast<double>(runs.size());
        v.expect(nar - base >= 0.25, fmt("mean gain %.4f < 0.25", nar - base));
        v.summary = fmt("mean R@10 NAR %.4f vs baseline %.4f", nar, base) + fmt(", gain %+.4f", nar - base);
    });

    criterion("AC4", "answer-uncertainty rescoring semantics", 0.0, [](Verdict& v) {
        std::vector<Document> docs;
        for (int i = 0; i < 4; ++i) docs.push_back({"b" + std::to_string(i), std::nullopt, "doc " + std::to_string(i)});
        const Corpus corpus(docs);
        std::vector<const Document*> evidence;
        for (const auto& d : corpus.documents()) evidence.push_back(&d);
        std::vector<ScoredDoc> batch;
        const std::vector<double> scores = {0.91, 0.62, 0.33, 0.27};
        for (std::size_t i = 0; i < 4; ++i) batch.push_back({docs[i].doc_id, scores[i]});
        ExactMatchEntailment exact;
        const AsuConfig asu{5, 0.7, 1000};

        // (a)
        FixedLlm same({"Paris"});
        const auto a = asu_feedback_hook(same, exact, asu)("q", batch, evidence);
        v.expect(a.divisor == 1, "(a) s=" + std::to_string(a.divisor));
        for (std::size_t i = 0; i < 4; ++i) v.expect(a.batch[i].score == scores[i], "(a) score changed");

        // (b)
        FixedLlm distinct({"Paris", "London", "Rome", "Oslo", "Lima"});
        const auto b = asu_feedback_hook(distinct, exact, asu)("q", batch, evidence);
        v.expect(b.divisor == 5, "(b) s=" + std::to_string(b.divisor));
        for (std::size_t i = 0; i < 4; ++i)
            v.expect(std::abs(b.batch[i].score - scores[i] / 5.0) <= kTolerance, "(b) score not divided by m");

        // (c)
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<ScoredDoc> random_batch;
            const auto n = 1 + rng() % 12;
            for (std::size_t i = 0; i < n; ++i) random_batch.push_back({"r" + std::to_string(i), u(rng)});
            const auto s = 1 + rng() % 10;
            const auto out = rescore_batch(random_batch, s);
            auto argsort = [](const std::vector<ScoredDoc>& xs) {
                std::vector<std::size_t> idx(xs.size());
                std::iota(idx.begin(), idx.end(), 0);
                std::stable_sort(idx.begin(), idx.end(),
                                 [&](std::size_t i, std::size_t j) { return xs[i].score > xs[j].score; });
                return idx;
            };
            v.expect(argsort(out) == argsort(random_batch), "(c) order changed on batch " + std::to_string(trial));
        }

        // (d)
        const auto suite = testkit::build_suite("asu-distractor");
        const auto c = testkit::asu_distractor_case(suite.corpus);
        const auto rec = testkit::record_fixtures(suite);
        auto llm = rec.llm;
        auto nli = rec.nli;
        auto scorer = rec.scorer;
        const auto hook = asu_feedback_hook(llm, nli, suite.config.pipeline.asu);
        const auto got = run_nar(c.sub_question, c.initial, suite.graph, suite.corpus, scorer, hook, c.config);
        const auto& its = got.trace.iterations;
        v.expect(its.size() == 2 && its[0].divisor == std::optional<std::size_t>(3) &&
                     its[1].divisor == std::optional<std::size_t>(1),
                 "(d) expected divisors 3 then 1");
        v.expect(its.size() == 2 && its[0].raw_scores == its[1].raw_scores, "(d) raw scores differ");
        double worst_on = 1.0, best_off = 0.0;
        for (const auto& e : got.ranked.entries) {
            if (std::find(c.on_topic.begin(), c.on_topic.end(), e.doc_id) != c.on_topic.end())
                worst_on = std::min(worst_on, e.score);
            else
                best_off = std::max(best_off, e.score);
        }
        v.expect(worst_on > best_off, "(d) consistent batch not strictly ahead");
        v.summary = "(a) s=1 (b) s=5 (c) 100 batches (d) " + fmt("%.4f > %.4f", worst_on, best_off);
    });

    criterion("AC5", "semantic clustering partitions 500 random answer sets", 0.0, [](Verdict& v) {
        std::mt19937_64 rng(5150);
        for (int trial = 0; trial < 500; ++trial) {
            const std::size_t labels = 1 + rng() % 6;
            const std::size_t m = 1 + rng() % 10;
            ScriptedEntailment nli;
            std::map<std::pair<std::string, std::string>, bool> rel;
            for (std::size_t i = 0; i < labels; ++i)
                for (std::size_t j = i + 1; j < labels; ++j) {
                    const bool verdict = rng() % 2 == 0;
                    const auto a = "answer " + std::to_string(i), b = "answer " + std::to_string(j);
                    nli.add_symmetric(a, b, verdict);
                    rel[{a, b}] = rel[{b, a}] = verdict;
                }
            AnswerSamples samples{"q", {}};
            for (std::size_t i = 0; i < m; ++i) samples.answers.push_back("answer " + std::to_string(rng() % labels));
            const auto first = cluster_answers(nli, samples);
            const auto second = cluster_answers(nli, samples);
            const std::string tag = "set " + std::to_string(trial) + ": ";
            v.expect(first.is_partition_of(m), tag + "not a partition");
            v.expect(first.s() >= 1 && first.s() <= m, tag + "s out of range");
            v.expect(first == second, tag + "not deterministic");
            const auto want = reference_clusters(
                samples.answers, [&](const std::string& p, const std::string& h) { return rel.at({p, h}); });
            v.expect(first.sets == want, tag + "differs from the greedy reference");
        }
        v.summary = "500 sets, m in [1,10]";
    });

    criterion("AC6", "metrics equal brute-force oracles; cover-EM worked examples", 0.0, [](Verdict& v) {
        std::mt19937_64 rng(6006);
        for (int trial = 0; trial < 100; ++trial) {
            const auto mi = ref::random_metric_instance(rng);
            const std::string tag = "instance " + std::to_string(trial) + ": ";
            v.expect(recall_at_k(mi.run, mi.qrels, mi.k).per_query == ref::recall(mi.run_ids, mi.qrel_map, mi.k),
                     tag + "recall differs");
            v.expect(ndcg_at_k(mi.run, mi.qrels, mi.k).per_query == ref::ndcg(mi.run_ids, mi.qrel_map, mi.k),
                     tag + "ndcg differs");
        }
        v.expect(cover_em("Joseph Ball was her father", "Joseph Ball") == 1, "Joseph Ball example");
        v.expect(cover_em("joseph ball", "Joseph Ball") == 1, "case example");
        v.expect(cover_em("unknown", "Missoula, Montana") == 0, "Unknown example");
        v.summary = "100 instances exact, 3/3 cover-EM examples";
    });

    ref::TempDir suite_dir("acceptance-e2e");
    criterion("AC7", "end-to-end scripted 2-hop suite: full 1.0, no-asu/no-mer 0.8", 30.0, [&](Verdict& v) {
        const auto suite = testkit::build_suite("e2e-2hop");
        v.expect(suite.corpus.size() == 40 && suite.questions.size() == 5, "suite is not 5 questions / 40 docs");
        testkit::write_fixture_suite(suite, suite_dir.path());
        const auto full = e2e_run(suite_dir.path(), true, 1);
        const auto ablated = e2e_run(suite_dir.path(), false, 1);
        v.expect(full.failed == 0 && ablated.failed == 0, "some questions errored");
        v.expect(full.cover_em == 1.0, fmt("full cover-EM %.2f", full.cover_em));
        v.expect(std::abs(ablated.cover_em - 0.8) <= kTolerance, fmt("ablated cover-EM %.2f", ablated.cover_em));
        v.summary = fmt("cover-EM %.2f with ASU+MER, %.2f without", full.cover_em, ablated.cover_em);
    });

    criterion("AC8", "AC1/AC3/AC7 bit-identical across runs and worker counts 1 and 4", 0.0, [&](Verdict& v) {
        const auto a1 = fingerprint_of(twelve_doc_run(1));
        v.expect(a1 == fingerprint_of(twelve_doc_run(1)), "AC1 differs between runs");
        v.expect(a1 == fingerprint_of(twelve_doc_run(4)), "AC1 differs with 4 scorer threads");

        auto same = [](const std::vector<testkit::RecallComparison>& x, const std::vector<testkit::RecallComparison>& y) {
            if (x.size() != y.size()) return false;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (x[i].nar != y[i].nar || x[i].baseline != y[i].baseline) return false;
            return true;
        };
        const auto r1 = recall_runs(1);
        v.expect(same(r1, recall_runs(1)), "AC3 differs between runs");
        v.expect(same(r1, recall_runs(4)), "AC3 differs with 4 scorer threads");

        const auto e1 = e2e_run(suite_dir.path(), true, 1).serialized;
        v.expect(e1 == e2e_run(suite_dir.path(), true, 1).serialized, "AC7 differs between runs");
        v.expect(e1 == e2e_run(suite_dir.path(), true, 4).serialized, "AC7 differs with 4 workers");
        const auto n1 = e2e_run(suite_dir.path(), false, 1).serialized;
        v.expect(n1 == e2e_run(suite_dir.path(), false, 4).serialized, "AC7 ablation differs with 4 workers");
        v.summary = "traces, recall values and reasoning paths compared byte for byte";
    });

    std::cout << (g_failed == 0 ? "all 8 criteria passed" : std::to_string(g_failed) + " criteria failed") << '\n';
    return g_failed == 0 ? 0 : 1;
}
