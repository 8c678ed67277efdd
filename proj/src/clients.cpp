#include "sunar/clients.hpp"

#include <cmath>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"

namespace sunar {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    throw ClientError("unknown chat role '" + std::string(name) + "'");
}

void ChatRequest::validate() const {
    if (n < 1) throw ClientError("chat request: n must be >= 1");
    if (!(temperature >= 0.0)) throw ClientError("chat request: temperature must be >= 0");
    if (messages.empty()) throw ClientError("chat request: no messages");
}

ChatRequest ChatRequest::user(std::string prompt, std::size_t n, double temperature) {
    ChatRequest r;
    r.messages.push_back({Role::user, std::move(prompt)});
    r.n = n;
    r.temperature = temperature;
    return r;
}

std::string fingerprint(const ChatRequest& request) {
    std::string key = "chat\n";
    for (const auto& m : request.messages) {
        key += to_string(m.role);
        key += ":\n";
        key += normalize_prompt(m.content);
        key += "\n\x1e\n";
    }
    key += "n=" + std::to_string(request.n);
    return fingerprint_of(key);
}

std::string entailment_fingerprint(std::string_view premise, std::string_view hypothesis) {
    return fingerprint_of("nli\n" + normalize_prompt(premise) + "\n\x1f\n" + normalize_prompt(hypothesis));
}

std::string score_fingerprint(std::string_view query, std::string_view doc_text) {
    return fingerprint_of("score\n" + normalize_prompt(query) + "\n\x1f\n" + normalize_prompt(doc_text));
}

std::string embed_fingerprint(std::string_view text, std::size_t dim) {
    return fingerprint_of("embed\n" + normalize_prompt(text) + "\ndim=" + std::to_string(dim));
}

std::vector<std::string> llm_generate(LlmClient& client, const ChatRequest& request) {
    request.validate();
    auto out = client.complete(request);
    if (out.size() != request.n) {
        throw ClientError("llm returned " + std::to_string(out.size()) + " completions, expected " +
                          std::to_string(request.n));
    }
    return out;
}

bool entail(EntailmentClient& client, std::string_view premise, std::string_view hypothesis) {
    return client.entails(premise, hypothesis);
}

double cross_score(CrossScorer& client, std::string_view query, std::string_view doc_text) {
    if (query.empty()) throw ClientError("cross_score: empty query");
    const double s = client.score(query, doc_text);
    if (!std::isfinite(s)) throw ClientError("cross_score: non-finite score");
    return s;
}

std::vector<double> embed(Embedder& client, std::string_view text, std::size_t dim) {
    if (dim == 0) throw ConfigError("embed: dim must be >= 1");
    auto v = client.embed(text, dim);
    if (v.size() != dim) {
        throw ClientError("embed: dimension mismatch (got " + std::to_string(v.size()) + ", expected " +
                          std::to_string(dim) + ")");
    }
    for (double x : v) {
        if (!std::isfinite(x)) throw ClientError("embed: non-finite component");
    }
    return v;
}

}  // namespace sunar
