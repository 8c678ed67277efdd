#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "reference.hpp"
#include "sunar/cli.hpp"
#include "sunar/config.hpp"
#include "sunar/errors.hpp"

using namespace sunar;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result sunar_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

/// Writes a suite and builds its term index.
std::filesystem::path prepared_suite(const ref::TempDir& dir, const std::string& name) {
    const auto r = sunar_cli({"fixtures", "--suite", name, "--out", dir.path().string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto root = dir / name;
    const auto cfg = (root / "config.json").string();
    REQUIRE(sunar_cli({"index", "--config", cfg}).code == 0);
    return root;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::vector<json> out;
    std::istringstream in(ref::read_file(path));
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

}  // namespace

TEST_CASE("usage errors exit with 2 and help exits with 0") {
    CHECK(sunar_cli({}).code == 2);
    CHECK(sunar_cli({"frobnicate"}).code == 2);
    CHECK(sunar_cli({"run", "--b", "notanumber"}).code == 2);
    const auto help = sunar_cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("retrieve") != std::string::npos);
}

TEST_CASE("index rejects an empty corpus") {
    ref::TempDir dir("cli-empty");
    ref::write_file(dir / "corpus.jsonl", "");
    const auto r = sunar_cli({"index", "--corpus", (dir / "corpus.jsonl").string(), "--index",
                              (dir / "index.json").string()});
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(std::filesystem::exists(dir / "index.json"));
}

TEST_CASE("missing artifacts name the command that builds them") {
    ref::TempDir dir("cli-missing");
    const auto root = prepared_suite(dir, "nar-12doc");
    std::filesystem::remove(root / "graph.txt");
    const auto r = sunar_cli({"trace", "--config", (root / "config.json").string(), "--query", "amber falcon"});
    CHECK(r.code == 2);
    CHECK(r.err.find("sunar graph") != std::string::npos);
    std::filesystem::remove(root / "index.json");
    const auto r2 = sunar_cli({"trace", "--config", (root / "config.json").string(), "--query", "amber falcon"});
    CHECK(r2.code == 2);
    CHECK(r2.err.find("sunar index") != std::string::npos);
}

TEST_CASE("end-to-end run with and without feedback") {
    ref::TempDir dir("cli-e2e");
    const auto root = prepared_suite(dir, "e2e-2hop");
    const auto cfg = (root / "config.json").string();

    const auto full = sunar_cli({"run", "--config", cfg, "--output", (dir / "full").string()});
    CHECK(full.code == 0);
    const auto report = json::parse(ref::read_file(dir / "full/report.json"));
    CHECK(report["cover_em"]["mean"] == 1.0);
    CHECK(report.contains("recall@10"));
    CHECK(report.contains("ndcg@1"));
    CHECK(read_jsonl(dir / "full/answers.jsonl").size() == 5);
    CHECK(std::filesystem::exists(dir / "full/trace.jsonl"));
    CHECK(std::filesystem::exists(dir / "full/run.trec"));

    const auto ablated =
        sunar_cli({"run", "--config", cfg, "--no-asu", "--no-mer", "--output", (dir / "ablated").string()});
    CHECK(ablated.code == 0);
    const auto r2 = json::parse(ref::read_file(dir / "ablated/report.json"));
    CHECK(r2["cover_em"]["mean"].get<double>() == doctest::Approx(0.8).epsilon(1e-12));

    const auto again = sunar_cli({"run", "--config", cfg, "--workers", "4", "--output", (dir / "again").string()});
    CHECK(again.code == 0);
    CHECK(ref::read_file(dir / "again/answers.jsonl") == ref::read_file(dir / "full/answers.jsonl"));
    CHECK(ref::read_file(dir / "again/run.trec") == ref::read_file(dir / "full/run.trec"));
}

TEST_CASE("ask prints the hops and a trace alternating pools") {
    ref::TempDir dir("cli-ask");
    const auto root = prepared_suite(dir, "nar-12doc");
    const auto r = sunar_cli({"ask", "--config", (root / "config.json").string(), "--trace",
                              (dir / "trace.jsonl").string(),
                              "Where was the amber falcon seen near the lighthouse?"});
    CHECK(r.code == 0);
    CHECK(r.out.find("Follow up: ") != std::string::npos);
    CHECK(r.out.find("Answer: the north cliff ledge") != std::string::npos);
    const auto lines = read_jsonl(dir / "trace.jsonl");
    REQUIRE(lines.size() == 4);
    const std::vector<std::string> want = {"R", "N", "R", "N"};
    for (std::size_t i = 0; i < lines.size(); ++i) CHECK(lines[i]["pool"] == want[i]);
}

TEST_CASE("flags override the config file") {
    ref::TempDir dir("cli-flags");
    const auto root = prepared_suite(dir, "nar-12doc");
    const auto cfg = (root / "config.json").string();
    const auto base = sunar_cli({"trace", "--config", cfg, "--query", "amber falcon lighthouse"});
    REQUIRE(base.code == 0);
    CHECK(json::parse(base.out.substr(0, base.out.find('\n')))["batch"].size() == 2);
    CHECK(std::count(base.out.begin(), base.out.end(), '\n') == 4);
    const auto over = sunar_cli({"trace", "--config", cfg, "--query", "amber falcon lighthouse", "--c", "4"});
    REQUIRE(over.code == 0);
    CHECK(std::count(over.out.begin(), over.out.end(), '\n') == 2);
    CHECK(sunar_cli({"trace", "--config", cfg, "--query", "amber falcon lighthouse", "--c", "1"}).code == 2);
}

TEST_CASE("retrieve and eval") {
    ref::TempDir dir("cli-eval");
    const auto root = prepared_suite(dir, "e2e-2hop");
    const auto cfg = (root / "config.json").string();
    const auto r = sunar_cli({"retrieve", "--config", cfg, "--query", "river", "--depth", "3"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("q Q0 ", 0) == 0);

    ref::write_file(dir / "run.trec", "q1 Q0 a 1 2.0 t\nq1 Q0 b 2 1.0 t\n");
    ref::write_file(dir / "qrels.txt", "q1 0 b 1\n");
    const auto e = sunar_cli({"eval", "--run", (dir / "run.trec").string(), "--qrels", (dir / "qrels.txt").string(),
                              "--k", "1", "--k", "10", "--out", (dir / "report.json").string()});
    CHECK(e.code == 0);
    const auto report = json::parse(ref::read_file(dir / "report.json"));
    for (const auto* key : {"recall@1", "recall@10", "ndcg@1", "ndcg@10"}) CHECK(report.contains(key));
    CHECK(report["recall@10"]["mean"] == 1.0);
    CHECK(report["recall@1"]["mean"] == 0.0);
    ref::write_file(dir / "bad.trec", "q1 Q0 a\n");
    CHECK(sunar_cli({"eval", "--run", (dir / "bad.trec").string(), "--qrels", (dir / "qrels.txt").string()}).code ==
          2);
}

TEST_CASE("embedding and graph building are reproducible") {
    ref::TempDir dir("cli-embed");
    const auto root = prepared_suite(dir, "e2e-2hop");
    const auto cfg = (root / "config.json").string();
    for (const auto* out : {"e1.txt", "e2.txt"})
        REQUIRE(sunar_cli({"embed", "--config", cfg, "--mode", "scripted", "--embeddings", (dir / out).string()})
                    .code == 0);
    CHECK(ref::read_file(dir / "e1.txt") == ref::read_file(dir / "e2.txt"));
    REQUIRE(sunar_cli({"graph", "--config", cfg, "--embeddings", (dir / "e1.txt").string(), "--graph",
                       (dir / "g.txt").string(), "--threads", "2"})
                .code == 0);
    CHECK(ref::read_file(dir / "g.txt") == ref::read_file(root / "graph.txt"));
    REQUIRE(sunar_cli({"embed", "--config", cfg, "--mode", "hash", "--dim", "16", "--embeddings",
                       (dir / "h.txt").string()})
                .code == 0);
    CHECK(sunar_cli({"embed", "--config", cfg, "--mode", "bogus"}).code == 2);
}

TEST_CASE("config files are strict and round-trip") {
    ref::TempDir dir("cli-config");
    ref::write_file(dir / "c.json", R"({"nar": {"b": 3, "bogus": 1}})");
    CHECK_THROWS_WITH_AS(load_config(dir / "c.json"), doctest::Contains("bogus"), ConfigError);
    ref::write_file(dir / "c.json", R"({"paths": {"corpus": "data/corpus.jsonl"}, "nar": {"b": 3, "c": 30}})");
    const auto c = load_config(dir / "c.json");
    CHECK(c.paths.corpus == dir / "data/corpus.jsonl");
    CHECK(c.pipeline.nar.batch_size == 3);
    CHECK(c.pipeline.nar.budget == 30);
    save_config(c, dir / "saved.json");
    const auto back = load_config(dir / "saved.json");
    CHECK(to_json(back) == to_json(c));
    ref::write_file(dir / "bad.json", R"({"nar": {"b": 10, "c": 5}})");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
    ref::write_file(dir / "broken.json", "{");
    CHECK_THROWS_AS(load_config(dir / "broken.json"), Error);
    CHECK(sunar_cli({"run", "--config", (dir / "bad.json").string()}).code == 2);
}
