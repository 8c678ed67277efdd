#include "sunar/http_clients.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"

namespace sunar {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing '/'
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base url '" + url + "' has no scheme");
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported url scheme '" + scheme + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

std::string excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool retryable(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

RateLimiter::RateLimiter(double requests_per_second, double burst)
    : rate_(requests_per_second), burst_(std::max(burst, 1.0)), tokens_(burst_), last_(Clock::now()) {
    if (requests_per_second < 0.0) throw ConfigError("rate limit must be >= 0");
}

void RateLimiter::acquire() {
    if (rate_ <= 0.0) return;
    std::unique_lock lock(mutex_);
    while (true) {
        const auto now = Clock::now();
        tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        lock.unlock();
        std::this_thread::sleep_for(wait);
        lock.lock();
    }
}

std::chrono::milliseconds RetryPolicy::backoff(std::size_t retry) const {
    const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, static_cast<double>(retry));
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

void HttpEndpoint::key_from_env(const char* variable) {
    if (const char* v = std::getenv(variable); v && *v) api_key = v;
}

nlohmann::json post_json(const HttpEndpoint& endpoint, std::string_view path, const nlohmann::json& body) {
    const auto url = split_url(endpoint.base_url);
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    const auto target = url.prefix + std::string(path);
    const auto payload = body.dump();

    std::string last_error;
    for (std::size_t attempt = 0;; ++attempt) {
        if (endpoint.limiter) endpoint.limiter->acquire();
        auto res = client.Post(target, headers, payload, "application/json");
        if (res) {
            if (res->status >= 200 && res->status < 300) {
                try {
                    return nlohmann::json::parse(res->body);
                } catch (const nlohmann::json::parse_error&) {
                    throw ClientError("malformed JSON from " + endpoint.base_url + target + ": " + excerpt(res->body));
                }
            }
            last_error = "HTTP " + std::to_string(res->status) + " from " + endpoint.base_url + target + ": " +
                         excerpt(res->body);
            if (!retryable(res->status)) throw ClientError(last_error);
        } else {
            last_error = "transport error calling " + endpoint.base_url + target + ": " + httplib::to_string(res.error());
        }
        if (attempt == endpoint.retry.max_retries) {
            throw ClientError(last_error + " (gave up after " + std::to_string(attempt) + " retries)");
        }
        const auto wait = endpoint.retry.backoff(attempt);
        if (endpoint.retry.sleep) {
            endpoint.retry.sleep(wait);
        } else {
            std::this_thread::sleep_for(wait);
        }
    }
}

nlohmann::json HttpLlm::payload(const ChatRequest& request, std::size_t n) const {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    nlohmann::json body = {{"model", endpoint_.model},
                           {"messages", std::move(messages)},
                           {"n", n},
                           {"temperature", request.temperature},
                           {"max_tokens", request.max_tokens}};
    if (!request.stop.empty()) body["stop"] = request.stop;
    if (request.frequency_penalty) body["frequency_penalty"] = *request.frequency_penalty;
    if (request.presence_penalty) body["presence_penalty"] = *request.presence_penalty;
    return body;
}

std::vector<std::string> HttpLlm::complete(const ChatRequest& request) {
    request.validate();
    std::vector<std::string> out;
    // Some servers cap n; ask again for whatever is missing.
    for (std::size_t round = 0; out.size() < request.n; ++round) {
        if (round == request.n) throw ClientError("chat endpoint returned too few choices");
        const auto res = post_json(endpoint_, "/v1/chat/completions", payload(request, request.n - out.size()));
        if (!res.contains("choices") || !res["choices"].is_array())
            throw ClientError("chat response has no choices array: " + excerpt(res.dump()));
        for (const auto& choice : res["choices"]) {
            if (out.size() == request.n) break;
            const auto* content = choice.contains("message") ? &choice["message"] : nullptr;
            if (content && content->contains("content") && (*content)["content"].is_string()) {
                out.push_back((*content)["content"].get<std::string>());
            } else if (choice.contains("text") && choice["text"].is_string()) {
                out.push_back(choice["text"].get<std::string>());
            } else {
                out.emplace_back();
            }
        }
    }
    return out;
}

HttpEntailment::HttpEntailment(HttpEndpoint endpoint, Mode mode, const PromptSet& prompts, double threshold)
    : endpoint_(std::move(endpoint)), mode_(mode), judge_template_(prompts.nli_judge), threshold_(threshold) {
    if (mode_ == Mode::chat) chat_.emplace(endpoint_);
}

HttpEntailment::Mode entailment_mode_from_string(std::string_view name) {
    if (name == "chat") return HttpEntailment::Mode::chat;
    if (name == "nli") return HttpEntailment::Mode::nli;
    throw ConfigError("unknown entailment mode '" + std::string(name) + "' (expected chat or nli)");
}

bool parse_yes_no(std::string_view text) {
    auto t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t.rfind("yes", 0) == 0) return true;
    if (t.rfind("no", 0) == 0) return false;
    throw ClientError("entailment judge gave neither yes nor no: " + excerpt(std::string(text)));
}

bool HttpEntailment::entails(std::string_view premise, std::string_view hypothesis) {
    if (mode_ == Mode::chat) {
        auto prompt = render_template(judge_template_,
                                      {{"premise", std::string(premise)}, {"hypothesis", std::string(hypothesis)}});
        auto request = ChatRequest::user(std::move(prompt), 1, 0.0);
        request.max_tokens = 5;
        return parse_yes_no(chat_->complete(request).front());
    }
    const auto res = post_json(endpoint_, "/v1/entail",
                               {{"model", endpoint_.model}, {"premise", premise}, {"hypothesis", hypothesis}});
    if (!res.contains("entailment") || !res["entailment"].is_number())
        throw ClientError("entailment response has no numeric 'entailment': " + excerpt(res.dump()));
    return res["entailment"].get<double>() >= threshold_;
}

double HttpScorer::score(std::string_view query, std::string_view doc_text) {
    const auto res =
        post_json(endpoint_, "/v1/score", {{"model", endpoint_.model}, {"query", query}, {"document", doc_text}});
    if (!res.contains("score") || !res["score"].is_number())
        throw ClientError("score response has no numeric 'score': " + excerpt(res.dump()));
    return res["score"].get<double>();
}

std::vector<double> HttpEmbedder::embed(std::string_view text, std::size_t dim) {
    const auto res = post_json(endpoint_, "/v1/embeddings",
                               {{"model", endpoint_.model}, {"input", text}, {"dimensions", dim}});
    if (!res.contains("data") || !res["data"].is_array() || res["data"].empty() ||
        !res["data"][0].contains("embedding") || !res["data"][0]["embedding"].is_array())
        throw ClientError("embedding response has no data[0].embedding: " + excerpt(res.dump()));
    std::vector<double> out;
    for (const auto& x : res["data"][0]["embedding"]) {
        if (!x.is_number()) throw ClientError("embedding holds a non-number");
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace sunar
