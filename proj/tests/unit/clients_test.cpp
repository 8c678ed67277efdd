#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "reference.hpp"
#include "sunar/errors.hpp"
#include "sunar/http_clients.hpp"
#include "sunar/scripted.hpp"

using namespace sunar;
using nlohmann::json;

namespace {

class NanScorer final : public CrossScorer {
public:
    double score(std::string_view, std::string_view) override { return std::numeric_limits<double>::quiet_NaN(); }
};

/// httplib server on an ephemeral port, running on its own thread.
class TestServer {
public:
    TestServer() = default;
    ~TestServer() { stop(); }

    httplib::Server& server() { return server_; }

    void start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

HttpEndpoint endpoint_for(const TestServer& s, std::vector<std::chrono::milliseconds>* sleeps = nullptr) {
    HttpEndpoint ep;
    ep.base_url = s.url();
    ep.model = "test-model";
    ep.api_key = "sk-test";
    ep.timeout_seconds = 5;
    ep.retry.sleep = [sleeps](std::chrono::milliseconds d) {
        if (sleeps) sleeps->push_back(d);
    };
    return ep;
}

void reply_json(httplib::Response& res, const json& j) { res.set_content(j.dump(), "application/json"); }

}  // namespace

// ---- scripted and mock clients ---------------------------------------------

TEST_CASE("fingerprints ignore trailing whitespace and line endings") {
    auto a = ChatRequest::user("line one\nline two\n");
    auto b = ChatRequest::user("line one  \r\nline two\r\n\r\n");
    CHECK(fingerprint(a) == fingerprint(b));
    auto c = ChatRequest::user("line one\nline two!");
    CHECK(fingerprint(a) != fingerprint(c));
    auto d = ChatRequest::user("line one\nline two\n", 2);
    CHECK(fingerprint(a) != fingerprint(d));
    CHECK(fingerprint(a).rfind("fp:", 0) == 0);
    CHECK(fingerprint(a).size() == 19);
    CHECK(entailment_fingerprint("a", "b") != entailment_fingerprint("b", "a"));
    CHECK(score_fingerprint("q", "doc \n") == score_fingerprint("q", "doc"));
    CHECK(embed_fingerprint("x", 2) != embed_fingerprint("x", 3));
}

TEST_CASE("scripted llm replay and count contract") {
    ScriptedLlm llm;
    const auto q2 = ChatRequest::user("Q", 2);
    llm.add(q2, {"A", "B"});
    CHECK(llm_generate(llm, q2) == std::vector<std::string>{"A", "B"});
    const auto q5 = ChatRequest::user("Q5", 5);
    llm.add(q5, {"1", "2", "3", "4", "5"});
    CHECK(llm_generate(llm, q5) == std::vector<std::string>{"1", "2", "3", "4", "5"});

    const auto miss = ChatRequest::user("never seen");
    try {
        (void)llm_generate(llm, miss);
        FAIL("expected a miss");
    } catch (const FixtureMissError& e) {
        CHECK(e.fingerprint() == fingerprint(miss));
        CHECK(std::string(e.what()).find(fingerprint(miss)) != std::string::npos);
    }
    auto bad = q2;
    bad.n = 0;
    CHECK_THROWS_AS(llm_generate(llm, bad), ClientError);
    bad = q2;
    bad.temperature = -1;
    CHECK_THROWS_AS(llm_generate(llm, bad), ClientError);
}

TEST_CASE("scripted fixtures round-trip through JSONL") {
    ref::TempDir dir("fx");
    ScriptedLlm llm;
    llm.add(ChatRequest::user("p", 2), {"x", "y"});
    ScriptedEntailment nli;
    nli.add("a", "b", true);
    ScriptedScorer sc;
    sc.add("q", "d", -1.25);
    ScriptedEmbedder em;
    em.add("t", {0.5, -0.25});
    llm.save(dir / "llm.jsonl");
    nli.save(dir / "nli.jsonl");
    sc.save(dir / "sc.jsonl");
    em.save(dir / "em.jsonl");
    CHECK(ScriptedLlm::from_file(dir / "llm.jsonl").entries() == llm.entries());
    CHECK(ScriptedEntailment::from_file(dir / "nli.jsonl").entries() == nli.entries());
    CHECK(ScriptedScorer::from_file(dir / "sc.jsonl").entries() == sc.entries());
    CHECK(ScriptedEmbedder::from_file(dir / "em.jsonl").entries() == em.entries());
    const auto line = ref::read_file(dir / "llm.jsonl");
    const auto rec = json::parse(line.substr(0, line.find('\n')));
    CHECK(rec.contains("fingerprint"));
    CHECK(rec["completions"] == json::array({"x", "y"}));
    ref::write_file(dir / "bad.jsonl", "{\"completions\":[]}\n");
    CHECK_THROWS_AS(ScriptedLlm::from_file(dir / "bad.jsonl"), FormatError);
    CHECK_THROWS_AS(ScriptedLlm::from_file(dir / "none.jsonl"), IoError);
}

TEST_CASE("entailment mocks") {
    ExactMatchEntailment exact;
    CHECK(entail(exact, "Paris", "Paris"));
    CHECK(entail(exact, " Paris ", "Paris"));
    CHECK_FALSE(entail(exact, "Paris", "London"));
    ScriptedEntailment nli;
    nli.add("Paris", "London", false);
    CHECK_FALSE(entail(nli, "Paris", "London"));
    CHECK_THROWS_AS(entail(nli, "London", "Paris"), FixtureMissError);
    ThresholdEntailment prob([](std::string_view, std::string_view h) { return h == "hi" ? 0.51 : 0.49; });
    CHECK(entail(prob, "x", "hi"));
    CHECK_FALSE(entail(prob, "x", "lo"));
    ThresholdEntailment edge([](std::string_view, std::string_view) { return 0.5; });
    CHECK(entail(edge, "x", "y"));
}

TEST_CASE("cross-scorer mocks") {
    ScriptedScorer table;
    table.add("q", "d1 text", 2.0);
    CHECK(cross_score(table, "q", "d1 text") == 2.0);
    LexicalOverlapScorer overlap;
    CHECK(cross_score(overlap, "red fox", "red hen") == 1.0);
    CHECK(cross_score(overlap, "red fox", "the red fox") == 2.0);
    NanScorer nan;
    CHECK_THROWS_WITH(cross_score(nan, "q", "d"), doctest::Contains("non-finite score"));
    CHECK_THROWS_AS(cross_score(overlap, "", "d"), ClientError);
}

TEST_CASE("hash embedder") {
    HashEmbedder h;
    CHECK(embed(h, "some text", 16) == embed(h, "some text", 16));
    CHECK(embed(h, "some text", 16).size() == 16);
    std::set<std::vector<double>> seen;
    for (int i = 0; i < 100; ++i) seen.insert(embed(h, "text number " + std::to_string(i), 1024));
    CHECK(seen.size() == 100);
    CHECK_THROWS_AS(embed(h, "x", 0), ConfigError);
    const auto z = embed(h, "!!!", 4);
    CHECK(z == std::vector<double>(4, 0.0));
}

TEST_CASE("recorders capture traffic that replays identically") {
    ScriptedLlm inner;
    inner.add(ChatRequest::user("p"), {"r"});
    RecordingLlm rec(inner);
    (void)llm_generate(rec, ChatRequest::user("p"));
    auto replay = rec.recorded();
    CHECK(llm_generate(replay, ChatRequest::user("p")) == std::vector<std::string>{"r"});

    LexicalOverlapScorer ov;
    RecordingScorer rs(ov);
    CHECK(rs.score("a b", "b c") == 1.0);
    auto rsr = rs.recorded();
    CHECK(rsr.score("a b", "b c") == 1.0);

    ExactMatchEntailment ex;
    RecordingEntailment re(ex);
    CHECK(re.entails("x", "x"));
    auto rer = re.recorded();
    CHECK(rer.entails("x", "x"));
}

TEST_CASE("chat roles") {
    CHECK(role_from_string("system") == Role::system);
    CHECK(to_string(Role::assistant) == "assistant");
    CHECK_THROWS_AS(role_from_string("tool"), ClientError);
}

// ---- HTTP backends ----------------------------------------------------------

TEST_CASE("chat completions request and response") {
    TestServer s;
    json seen;
    std::string auth;
    s.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        json choices = json::array();
        for (int i = 0; i < seen["n"].get<int>(); ++i)
            choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", "c" + std::to_string(i)}}}});
        reply_json(res, {{"choices", choices}});
    });
    s.start();
    HttpLlm llm(endpoint_for(s));
    auto req = ChatRequest::user("hello", 3, 0.7);
    req.stop = {"Intermediate Answer:"};
    req.frequency_penalty = 0.8;
    req.presence_penalty = 0.6;
    CHECK(llm_generate(llm, req) == std::vector<std::string>{"c0", "c1", "c2"});
    CHECK(seen["model"] == "test-model");
    CHECK(seen["n"] == 3);
    CHECK(seen["temperature"] == 0.7);
    CHECK(seen["max_tokens"] == 1000);
    CHECK(seen["messages"][0]["role"] == "user");
    CHECK(seen["messages"][0]["content"] == "hello");
    CHECK(seen["stop"] == json::array({"Intermediate Answer:"}));
    CHECK(seen["frequency_penalty"] == 0.8);
    CHECK(seen["presence_penalty"] == 0.6);
    CHECK(auth == "Bearer sk-test");
}

TEST_CASE("missing choices are requested again") {
    TestServer s;
    std::vector<int> ns;
    s.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ns.push_back(json::parse(req.body)["n"].get<int>());
        reply_json(res, {{"choices", json::array({{{"message", {{"content", "one"}}}}})}});
    });
    s.start();
    HttpLlm llm(endpoint_for(s));
    CHECK(llm_generate(llm, ChatRequest::user("x", 3, 1.0)) == std::vector<std::string>{"one", "one", "one"});
    CHECK(ns == std::vector<int>{3, 2, 1});
}

TEST_CASE("transient failures are retried with exponential backoff") {
    TestServer s;
    std::atomic<int> calls{0};
    s.server().Post("/v1/score", [&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = calls == 1 ? 503 : 429;
            res.set_content("busy", "text/plain");
            return;
        }
        reply_json(res, {{"score", 1.5}});
    });
    s.start();
    std::vector<std::chrono::milliseconds> sleeps;
    HttpScorer scorer(endpoint_for(s, &sleeps));
    CHECK(cross_score(scorer, "q", "d") == 1.5);
    CHECK(calls == 3);
    CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000),
                                                           std::chrono::milliseconds(2000)});
}

TEST_CASE("retries are bounded") {
    TestServer s;
    std::atomic<int> calls{0};
    s.server().Post("/v1/score", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
        res.set_content("internal trouble", "text/plain");
    });
    s.start();
    std::vector<std::chrono::milliseconds> sleeps;
    HttpScorer scorer(endpoint_for(s, &sleeps));
    CHECK_THROWS_WITH_AS(cross_score(scorer, "q", "d"), doctest::Contains("internal trouble"), ClientError);
    CHECK(calls == 4);
    CHECK(sleeps.size() == 3);
    CHECK(sleeps.back() == std::chrono::milliseconds(4000));
}

TEST_CASE("client errors surface the body without retrying") {
    TestServer s;
    std::atomic<int> calls{0};
    s.server().Post("/v1/score", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 400;
        res.set_content(std::string("bad request: ") + std::string(500, 'x'), "text/plain");
    });
    s.start();
    HttpScorer scorer(endpoint_for(s));
    try {
        (void)cross_score(scorer, "q", "d");
        FAIL("expected an error");
    } catch (const ClientError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("HTTP 400") != std::string::npos);
        CHECK(msg.find("bad request") != std::string::npos);
        CHECK(msg.size() < 400);
    }
    CHECK(calls == 1);
}

TEST_CASE("malformed JSON and transport errors") {
    TestServer s;
    s.server().Post("/v1/score", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{not json", "application/json");
    });
    s.start();
    HttpScorer scorer(endpoint_for(s));
    CHECK_THROWS_WITH_AS(cross_score(scorer, "q", "d"), doctest::Contains("malformed JSON"), ClientError);
    s.stop();

    std::vector<std::chrono::milliseconds> sleeps;
    auto ep = endpoint_for(s, &sleeps);
    ep.timeout_seconds = 1;
    HttpScorer down(ep);
    CHECK_THROWS_AS(cross_score(down, "q", "d"), ClientError);
    CHECK(sleeps.size() == 3);
}

TEST_CASE("nli endpoint thresholds the probability") {
    TestServer s;
    s.server().Post("/v1/entail", [&](const httplib::Request& req, httplib::Response& res) {
        const auto j = json::parse(req.body);
        reply_json(res, {{"entailment", j["hypothesis"] == "yes-ish" ? 0.51 : 0.2}});
    });
    s.start();
    HttpEntailment nli(endpoint_for(s), HttpEntailment::Mode::nli);
    CHECK(entail(nli, "p", "yes-ish"));
    CHECK_FALSE(entail(nli, "p", "other"));
}

TEST_CASE("chat entailment judge parses yes/no") {
    TestServer s;
    s.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const auto prompt = json::parse(req.body)["messages"][0]["content"].get<std::string>();
        const std::string answer = prompt.find("Paris") != std::string::npos && prompt.find("London") == std::string::npos
                                       ? "Yes."
                                       : "no";
        reply_json(res, {{"choices", json::array({{{"message", {{"content", answer}}}}})}});
    });
    s.start();
    HttpEntailment nli(endpoint_for(s), HttpEntailment::Mode::chat);
    CHECK(entail(nli, "Paris", "the capital Paris"));
    CHECK_FALSE(entail(nli, "Paris", "London"));
    CHECK(parse_yes_no(" YES, it does") == true);
    CHECK(parse_yes_no("No.") == false);
    CHECK_THROWS_AS(parse_yes_no("maybe"), ClientError);
    CHECK(entailment_mode_from_string("nli") == HttpEntailment::Mode::nli);
    CHECK_THROWS_AS(entailment_mode_from_string("other"), ConfigError);
}

TEST_CASE("embeddings endpoint") {
    TestServer s;
    json seen;
    s.server().Post("/prefix/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        reply_json(res, {{"data", json::array({{{"embedding", json::array({0.1, 0.2, 0.3})}}})}});
    });
    s.start();
    auto ep = endpoint_for(s);
    ep.base_url += "/prefix";
    HttpEmbedder emb(ep);
    CHECK(embed(emb, "text", 3) == std::vector<double>{0.1, 0.2, 0.3});
    CHECK(seen["input"] == "text");
    CHECK(seen["dimensions"] == 3);
    CHECK_THROWS_AS(embed(emb, "text", 4), ClientError);
}

TEST_CASE("rate limiter spaces requests") {
    RateLimiter unlimited(0.0);
    for (int i = 0; i < 1000; ++i) unlimited.acquire();
    RateLimiter limiter(50.0, 1.0);
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 6; ++i) limiter.acquire();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed >= std::chrono::milliseconds(90));
    CHECK_THROWS_AS(RateLimiter(-1.0), ConfigError);
}

TEST_CASE("endpoint configuration") {
    RetryPolicy p;
    CHECK(p.max_retries == 3);
    CHECK(p.backoff(0) == std::chrono::milliseconds(1000));
    CHECK(p.backoff(2) == std::chrono::milliseconds(4000));
    HttpEndpoint ep;
    ep.base_url = "ftp://x";
    HttpScorer bad(ep);
    CHECK_THROWS_AS(bad.score("q", "d"), ConfigError);
    ::setenv("SUNAR_TEST_KEY", "from-env", 1);
    ep.key_from_env("SUNAR_TEST_KEY");
    CHECK(ep.api_key == "from-env");
    ep.key_from_env("SUNAR_TEST_KEY_UNSET");
    CHECK(ep.api_key == "from-env");
}
