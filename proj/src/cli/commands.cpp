#include "sunar/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>

#include "sunar/corpus.hpp"
#include "sunar/embedding_store.hpp"
#include "sunar/errors.hpp"
#include "sunar/eval.hpp"
#include "sunar/graph.hpp"
#include "sunar/http_clients.hpp"
#include "sunar/pipeline.hpp"
#include "sunar/scripted.hpp"
#include "sunar/term_index.hpp"
#include "sunar/testkit.hpp"

namespace sunar::cli {

namespace fs = std::filesystem;

namespace {

// Flags that override config keys. Unset flags leave the config alone.
struct Overrides {
    std::string config_path;
    std::optional<std::string> corpus, index, embeddings, graph, fixtures, output, questions, qrels, prompts;
    std::optional<std::size_t> b, c, neighbor_limit, l, max_hops, m, depth, k, dim, threads, workers, scorer_threads;
    std::optional<double> temperature;
    std::optional<std::string> dataset, mode;
    bool no_asu = false;
    bool no_mer = false;
};

void add_path_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (default: ./config.json when present)");
    cmd->add_option("--corpus", o.corpus, "corpus JSONL");
    cmd->add_option("--index", o.index, "term index file");
    cmd->add_option("--embeddings", o.embeddings, "embedding store file");
    cmd->add_option("--graph", o.graph, "neighborhood graph file");
    cmd->add_option("--fixtures", o.fixtures, "directory of scripted client fixtures");
    cmd->add_option("--mode", o.mode, "client mode: scripted or http (embed also takes hash)");
}

void add_pipeline_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--questions", o.questions, "questions JSONL");
    cmd->add_option("--qrels", o.qrels, "qrels for the per-hop run");
    cmd->add_option("--prompts", o.prompts, "directory overriding built-in prompt templates");
    cmd->add_option("--b", o.b, "NAR batch size");
    cmd->add_option("--c", o.c, "NAR re-ranking budget");
    cmd->add_option("--neighbor-limit", o.neighbor_limit, "graph neighbors looked up per scored document");
    cmd->add_option("--scorer-threads", o.scorer_threads, "concurrent scorer calls per batch");
    cmd->add_option("--depth", o.depth, "first-stage retrieval depth");
    cmd->add_option("--l", o.l, "evidence documents per answer");
    cmd->add_option("--max-hops", o.max_hops, "decomposition hop cap");
    cmd->add_option("--m", o.m, "answers sampled per batch for ASU");
    cmd->add_option("--temperature", o.temperature, "ASU sampling temperature");
    cmd->add_option("--dataset", o.dataset, "exemplar set: wqa or mqa");
    cmd->add_flag("--no-asu", o.no_asu, "disable answer-uncertainty feedback");
    cmd->add_flag("--no-mer", o.no_mer, "disable the final meta-reasoning pass");
}

template <class T, class U>
void set_if(const std::optional<T>& v, U& target) {
    if (v) target = *v;
}

Config resolve(const Overrides& o) {
    // ./config.json is picked up when no --config is given
    fs::path config_path = o.config_path;
    if (config_path.empty() && fs::exists("config.json")) config_path = "config.json";
    Config c = config_path.empty() ? config_from_json(nlohmann::json::object(), fs::current_path())
                                   : load_config(config_path);
    set_if(o.corpus, c.paths.corpus);
    set_if(o.index, c.paths.index);
    set_if(o.embeddings, c.paths.embeddings);
    set_if(o.graph, c.paths.graph);
    set_if(o.fixtures, c.paths.fixtures);
    set_if(o.output, c.paths.output);
    set_if(o.questions, c.paths.questions);
    set_if(o.qrels, c.paths.qrels);
    set_if(o.prompts, c.paths.prompts);
    set_if(o.b, c.pipeline.nar.batch_size);
    set_if(o.c, c.pipeline.nar.budget);
    set_if(o.neighbor_limit, c.pipeline.nar.neighbor_limit);
    set_if(o.scorer_threads, c.pipeline.nar.scorer_threads);
    set_if(o.depth, c.pipeline.first_stage_depth);
    set_if(o.l, c.pipeline.l);
    set_if(o.max_hops, c.pipeline.max_hops);
    set_if(o.m, c.pipeline.asu.samples);
    set_if(o.temperature, c.pipeline.asu.temperature);
    set_if(o.dataset, c.pipeline.dataset);
    set_if(o.k, c.graph_k);
    set_if(o.dim, c.embed_dim);
    set_if(o.threads, c.threads);
    set_if(o.workers, c.workers);
    set_if(o.mode, c.clients.mode);
    if (o.no_asu) c.pipeline.asu_enabled = false;
    if (o.no_mer) c.pipeline.mer_enabled = false;
    c.validate();
    return c;
}

void require_file(const fs::path& path, const std::string& what, const std::string& build_hint) {
    if (fs::exists(path)) return;
    std::string msg = what + " '" + path.string() + "' not found";
    if (!build_hint.empty()) msg += "; build it with `" + build_hint + "`";
    throw ConfigError(msg);
}

HttpEndpoint endpoint_of(const EndpointConfig& e, const char* name, const char* key_var) {
    if (e.base_url.empty()) throw ConfigError(std::string("clients.") + name + ".base_url is required in http mode");
    HttpEndpoint ep;
    ep.base_url = e.base_url;
    ep.model = e.model;
    ep.timeout_seconds = e.timeout_seconds;
    ep.key_from_env(key_var);
    if (e.rate_limit > 0.0) ep.limiter = std::make_shared<RateLimiter>(e.rate_limit);
    return ep;
}

// Shared state for run / ask / trace.
struct Workspace {
    Config config;
    Corpus corpus;
    TermIndex index;
    NeighborhoodGraph graph;
    PromptSet prompts;
    ClientSet clients;

    [[nodiscard]] Engine engine() const {
        return Engine{corpus, index, graph, *clients.llm, *clients.nli, *clients.scorer, prompts};
    }
};

std::unique_ptr<Workspace> open_workspace(const Config& config) {
    auto ws = std::make_unique<Workspace>();
    ws->config = config;
    require_file(config.paths.corpus, "corpus", "");
    require_file(config.paths.index, "term index", "sunar index --corpus <corpus.jsonl> --index <index.json>");
    require_file(config.paths.graph, "neighborhood graph",
                 "sunar graph --embeddings <embeddings.txt> --graph <graph.txt>");
    ws->corpus = ingest_corpus(config.paths.corpus);
    ws->index = load_term_index(config.paths.index);
    if (ws->index.doc_count() != ws->corpus.size())
        throw ConfigError("term index covers " + std::to_string(ws->index.doc_count()) + " documents but the corpus has " +
                          std::to_string(ws->corpus.size()) + "; rebuild it with `sunar index`");
    ws->graph = load_graph(config.paths.graph);
    ws->prompts = config.paths.prompts.empty() ? PromptSet::builtin() : PromptSet::load_dir(config.paths.prompts);
    ws->clients = make_clients(config);
    return ws;
}

nlohmann::ordered_json answer_record(const Question& q, const QuestionOutcome& o) {
    nlohmann::ordered_json j;
    j["qid"] = q.qid;
    j["gold"] = q.answers;
    if (o.ok()) {
        j["error"] = nullptr;
        const auto path = to_json(*o.path);
        for (const auto& [key, value] : path.items()) j[key] = value;
    } else {
        j["error"] = o.error;
        j["answer"] = "";
    }
    return j;
}

std::vector<AnswerRecord> load_answer_records(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open answers '" + path.string() + "'");
    std::vector<AnswerRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path.string(), n, std::string("invalid JSON: ") + e.what());
        }
        if (!j.contains("qid") || !j.contains("answer"))
            throw FormatError(path.string(), n, "expected {\"qid\", \"answer\", \"gold\"}");
        AnswerRecord r;
        r.qid = j["qid"].get<std::string>();
        r.prediction = j["answer"].is_string() ? j["answer"].get<std::string>() : "";
        if (j.contains("gold")) {
            if (j["gold"].is_string()) r.golds.push_back(j["gold"].get<std::string>());
            if (j["gold"].is_array())
                for (const auto& g : j["gold"]) r.golds.push_back(g.get<std::string>());
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

int cmd_index(const Overrides& o, std::ostream& out) {
    const auto c = resolve(o);
    require_file(c.paths.corpus, "corpus", "");
    const auto corpus = ingest_corpus(c.paths.corpus);
    const auto index = build_term_index(corpus);
    if (c.paths.index.has_parent_path()) fs::create_directories(c.paths.index.parent_path());
    save_term_index(index, c.paths.index);
    out << "indexed " << index.doc_count() << " documents, " << index.term_count() << " terms -> "
        << c.paths.index.string() << '\n';
    return ok;
}

int cmd_embed(Overrides o, std::ostream& out) {
    // "hash" is an embedder-only mode; the model clients stay as configured
    std::string mode;
    if (o.mode && *o.mode == "hash") {
        mode = "hash";
        o.mode.reset();
    }
    const auto c = resolve(o);
    require_file(c.paths.corpus, "corpus", "");
    const auto corpus = ingest_corpus(c.paths.corpus);
    auto embedder = make_embedder(c, mode.empty() ? c.clients.mode : mode);
    const auto store = embed_corpus(corpus, *embedder, c.embed_dim);
    if (c.paths.embeddings.has_parent_path()) fs::create_directories(c.paths.embeddings.parent_path());
    save_embeddings(store, c.paths.embeddings);
    out << "embedded " << store.size() << " documents (dim " << store.dim() << ") -> " << c.paths.embeddings.string()
        << '\n';
    return ok;
}

int cmd_graph(const Overrides& o, std::ostream& out, std::ostream& err) {
    const auto c = resolve(o);
    require_file(c.paths.embeddings, "embedding store", "sunar embed --corpus <corpus.jsonl> --embeddings <file>");
    const auto store = load_embeddings(c.paths.embeddings);
    const auto built = build_graph(store, c.graph_k, c.threads);
    for (const auto& id : built.report.zero_norm_docs)
        err << "warning: document '" << id << "' has a zero-norm embedding\n";
    if (c.paths.graph.has_parent_path()) fs::create_directories(c.paths.graph.parent_path());
    save_graph(built.graph, c.paths.graph);
    out << "graph over " << built.graph.node_count() << " documents, k=" << built.graph.k() << ", "
        << built.graph.edge_count() << " edges -> " << c.paths.graph.string() << '\n';
    return ok;
}

int cmd_retrieve(const Overrides& o, const std::string& query, const std::string& run_out, const std::string& tag,
                 std::ostream& out) {
    const auto c = resolve(o);
    require_file(c.paths.index, "term index", "sunar index --corpus <corpus.jsonl> --index <index.json>");
    const auto index = load_term_index(c.paths.index);
    Run run;
    if (!query.empty()) {
        run.add("q", sparse_retrieve(index, query, c.pipeline.first_stage_depth, c.pipeline.bm25));
    } else {
        require_file(c.paths.questions, "questions", "");
        for (const auto& q : load_questions(c.paths.questions))
            run.add(q.qid, sparse_retrieve(index, q.question, c.pipeline.first_stage_depth, c.pipeline.bm25));
    }
    if (run_out.empty()) {
        write_run(out, run, tag);
    } else {
        if (fs::path(run_out).has_parent_path()) fs::create_directories(fs::path(run_out).parent_path());
        write_run(run_out, run, tag);
    }
    return ok;
}

int cmd_run(const Overrides& o, const std::string& tag, std::ostream& out, std::ostream& err) {
    const auto c = resolve(o);
    auto ws = open_workspace(c);
    require_file(c.paths.questions, "questions", "");
    const auto questions = load_questions(c.paths.questions);
    const auto outcomes = answer_questions(questions, ws->engine(), c.pipeline, c.workers);

    fs::create_directories(c.paths.output);
    std::string answers, traces;
    Run run;
    std::vector<AnswerRecord> records;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        const auto& oc = outcomes[i];
        answers += answer_record(q, oc).dump() + "\n";
        if (!oc.ok()) {
            ++failed;
            err << "question " << q.qid << " failed: " << oc.error << '\n';
            records.push_back({q.qid, "", q.answers});
            continue;
        }
        records.push_back({q.qid, oc.path->answer(), q.answers});
        for (const auto& step : oc.path->steps) {
            const auto label = q.qid + "." + std::to_string(step.index);
            run.add(label, step.ranked);
            traces += step.trace.to_jsonl(label);
        }
    }
    write_text(c.paths.output / "answers.jsonl", answers);
    write_text(c.paths.output / "trace.jsonl", traces);
    write_run(c.paths.output / "run.trec", run, tag);

    Qrels qrels;
    std::vector<std::size_t> ks;
    if (fs::exists(c.paths.qrels)) {
        qrels = load_qrels(c.paths.qrels);
        ks = {1, 10};
    }
    auto report = evaluation_report(run, qrels, ks, records);
    report["questions"] = questions.size();
    report["failed"] = failed;
    report["config"] = to_json(c);
    write_text(c.paths.output / "report.json", report.dump(2) + "\n");
    out << "answered " << (questions.size() - failed) << "/" << questions.size() << " questions; cover-EM "
        << report["cover_em"]["mean"].get<double>() << " -> " << c.paths.output.string() << '\n';
    return failed == 0 ? ok : partial_failure;
}

int cmd_ask(const Overrides& o, const std::string& question, const std::string& trace_path, std::ostream& out,
            std::ostream& err) {
    const auto c = resolve(o);
    auto ws = open_workspace(c);
    ReasoningPath path;
    try {
        path = answer_question(question, ws->engine(), c.pipeline);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return partial_failure;
    }
    for (const auto& step : path.steps)
        out << "Follow up: " << step.sub_question << "\nIntermediate Answer: " << step.intermediate_answer << '\n';
    for (const auto& w : path.warnings) err << "warning: " << w << '\n';
    out << "Answer: " << path.answer() << '\n';
    if (!trace_path.empty()) {
        std::string traces;
        for (const auto& step : path.steps) traces += step.trace.to_jsonl("hop" + std::to_string(step.index));
        write_text(trace_path, traces);
    }
    return path.hop_cap_exceeded ? partial_failure : ok;
}

int cmd_trace(const Overrides& o, const std::string& query, std::ostream& out) {
    const auto c = resolve(o);
    auto ws = open_workspace(c);
    const auto initial = sparse_retrieve(ws->index, query, c.pipeline.first_stage_depth, c.pipeline.bm25);
    FeedbackHook hook;
    if (c.pipeline.asu_enabled) hook = asu_feedback_hook(*ws->clients.llm, *ws->clients.nli, c.pipeline.asu, ws->prompts);
    const auto result = run_nar(query, initial, ws->graph, ws->corpus, *ws->clients.scorer, hook, c.pipeline.nar);
    out << result.trace.to_jsonl();
    return ok;
}

int cmd_eval(const std::string& run_path, const std::string& qrels_path, std::vector<std::size_t> ks,
             const std::string& answers_path, const std::string& report_out, std::ostream& out, std::ostream& err) {
    if (ks.empty()) ks = {1, 10};
    Run run;
    Qrels qrels;
    if (!run_path.empty()) run = load_run(run_path);
    if (!qrels_path.empty()) qrels = load_qrels(qrels_path);
    if (run_path.empty() != qrels_path.empty()) throw ConfigError("eval needs both --run and --qrels, or neither");
    if (run_path.empty() && answers_path.empty()) throw ConfigError("eval needs --run/--qrels and/or --answers");
    std::optional<std::vector<AnswerRecord>> answers;
    if (!answers_path.empty()) answers = load_answer_records(answers_path);
    const auto report = evaluation_report(run, qrels, run_path.empty() ? std::vector<std::size_t>{} : ks, answers);
    for (const auto& w : report["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
    if (report_out.empty()) {
        out << report.dump(2) << '\n';
    } else {
        write_text(report_out, report.dump(2) + "\n");
    }
    return ok;
}

int cmd_fixtures(const std::vector<std::string>& suites, const std::string& dir, std::ostream& out) {
    auto names = suites;
    if (names.empty() || (names.size() == 1 && names[0] == "all")) names = testkit::suite_names();
    for (const auto& name : names) {
        const auto suite = testkit::build_suite(name);
        const auto target = fs::path(dir) / name;
        testkit::write_fixture_suite(suite, target);
        out << "wrote suite " << name << " -> " << target.string() << '\n';
    }
    return ok;
}

}  // namespace

ClientSet make_clients(const Config& config) {
    ClientSet set;
    if (config.clients.mode == "scripted") {
        const auto& dir = config.paths.fixtures;
        for (const char* f : {"llm.jsonl", "nli.jsonl", "scorer.jsonl"})
            require_file(dir / f, "fixture", "sunar fixtures --suite <name> --out <dir>");
        set.llm = std::make_unique<ScriptedLlm>(ScriptedLlm::from_file(dir / "llm.jsonl"));
        set.nli = std::make_unique<ScriptedEntailment>(ScriptedEntailment::from_file(dir / "nli.jsonl"));
        set.scorer = std::make_unique<ScriptedScorer>(ScriptedScorer::from_file(dir / "scorer.jsonl"));
        return set;
    }
    set.llm = std::make_unique<HttpLlm>(endpoint_of(config.clients.llm, "llm", "SUNAR_LLM_API_KEY"));
    auto nli_cfg = config.clients.nli;
    if (nli_cfg.base_url.empty()) nli_cfg.base_url = config.clients.llm.base_url;
    if (nli_cfg.model.empty()) nli_cfg.model = config.clients.llm.model;
    auto nli_ep = endpoint_of(nli_cfg, "nli", "SUNAR_NLI_API_KEY");
    if (nli_ep.api_key.empty()) nli_ep.key_from_env("SUNAR_LLM_API_KEY");
    set.nli = std::make_unique<HttpEntailment>(
        nli_ep, entailment_mode_from_string(nli_cfg.mode.empty() ? "chat" : nli_cfg.mode), PromptSet::builtin());
    set.scorer = std::make_unique<HttpScorer>(endpoint_of(config.clients.scorer, "scorer", "SUNAR_LLM_API_KEY"));
    return set;
}

std::unique_ptr<Embedder> make_embedder(const Config& config, const std::string& mode) {
    if (mode == "hash") return std::make_unique<HashEmbedder>();
    if (mode == "scripted") {
        const auto file = config.paths.fixtures / "embedder.jsonl";
        require_file(file, "fixture", "sunar fixtures --suite <name> --out <dir>");
        return std::make_unique<ScriptedEmbedder>(ScriptedEmbedder::from_file(file));
    }
    if (mode == "http")
        return std::make_unique<HttpEmbedder>(endpoint_of(config.clients.embedder, "embedder", "SUNAR_LLM_API_KEY"));
    throw ConfigError("unknown embedder mode '" + mode + "' (expected scripted, hash or http)");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Neighborhood-aware retrieval and multi-hop question answering", "sunar"};
    app.require_subcommand(1);
    Overrides o;

    auto* index = app.add_subcommand("index", "build the term index from a corpus");
    add_path_flags(index, o);

    auto* embed = app.add_subcommand("embed", "embed every corpus document");
    add_path_flags(embed, o);
    embed->add_option("--dim", o.dim, "embedding dimension");

    auto* graph = app.add_subcommand("graph", "build the k-nearest-neighbor graph");
    add_path_flags(graph, o);
    graph->add_option("--k", o.k, "neighbors per document (default 100)");
    graph->add_option("--threads", o.threads, "worker threads");

    std::string query, run_out, tag = "sunar";
    auto* retrieve = app.add_subcommand("retrieve", "first-stage lexical retrieval to a TREC run");
    add_path_flags(retrieve, o);
    retrieve->add_option("--query", query, "single query (qid 'q')");
    retrieve->add_option("--questions", o.questions, "questions JSONL");
    retrieve->add_option("--depth", o.depth, "documents per query");
    retrieve->add_option("--out", run_out, "run file (default: stdout)");
    retrieve->add_option("--tag", tag, "run tag");

    auto* run_cmd = app.add_subcommand("run", "answer every question in a file");
    add_path_flags(run_cmd, o);
    add_pipeline_flags(run_cmd, o);
    run_cmd->add_option("--output", o.output, "output directory");
    run_cmd->add_option("--workers", o.workers, "questions answered concurrently");
    run_cmd->add_option("--tag", tag, "run tag");

    std::string question, trace_path;
    auto* ask = app.add_subcommand("ask", "answer one question");
    add_path_flags(ask, o);
    add_pipeline_flags(ask, o);
    ask->add_option("question", question, "the question")->required();
    ask->add_option("--trace", trace_path, "write the per-hop NAR trace as JSONL");

    auto* trace = app.add_subcommand("trace", "print the NAR trace for one query as JSONL");
    add_path_flags(trace, o);
    add_pipeline_flags(trace, o);
    trace->add_option("--query", query, "query text")->required();

    std::string eval_run, eval_qrels, eval_answers, eval_out;
    std::vector<std::size_t> ks;
    auto* eval = app.add_subcommand("eval", "score a run file and/or answers");
    eval->add_option("--run", eval_run, "TREC run file");
    eval->add_option("--qrels", eval_qrels, "qrels file");
    eval->add_option("--k", ks, "metric cutoffs (repeatable, default 1 and 10)");
    eval->add_option("--answers", eval_answers, "answers JSONL from `run`");
    eval->add_option("--out", eval_out, "report file (default: stdout)");

    std::vector<std::string> suites;
    std::string suite_dir = "fixtures";
    auto* fixtures = app.add_subcommand("fixtures", "write scripted fixture suites");
    fixtures->add_option("--suite", suites, "suite name (repeatable, default all)");
    fixtures->add_option("--out", suite_dir, "target directory");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }

    try {
        if (index->parsed()) return cmd_index(o, out);
        if (embed->parsed()) return cmd_embed(o, out);
        if (graph->parsed()) return cmd_graph(o, out, err);
        if (retrieve->parsed()) return cmd_retrieve(o, query, run_out, tag, out);
        if (run_cmd->parsed()) return cmd_run(o, tag, out, err);
        if (ask->parsed()) return cmd_ask(o, question, trace_path, out, err);
        if (trace->parsed()) return cmd_trace(o, query, out);
        if (eval->parsed()) return cmd_eval(eval_run, eval_qrels, ks, eval_answers, eval_out, out, err);
        if (fixtures->parsed()) return cmd_fixtures(suites, suite_dir, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }
    return config_error;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace sunar::cli
