#include "sunar/config.hpp"

#include <fstream>
#include <set>

#include "sunar/errors.hpp"

namespace sunar {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, std::string_view section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config section '" + std::string(section) + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key)) throw ConfigError("unknown config key '" + std::string(section) + "." + key + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, std::string_view section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + std::string(section) + "." + key + "' has the wrong type");
    }
}

void read_count(const json& j, const char* key, std::size_t& out, std::string_view section) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("config key '" + std::string(section) + "." + key + "' must be a non-negative integer");
    out = v.get<std::size_t>();
}

void read_path(const json& j, const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    if (!j.contains(key)) {
        if (!out.empty() && out.is_relative()) out = base / out;
        return;
    }
    if (j.at(key).is_null()) {
        out.clear();
        return;
    }
    if (!j.at(key).is_string()) throw ConfigError(std::string("config key 'paths.") + key + "' must be a string");
    std::filesystem::path p = j.at(key).get<std::string>();
    out = p.is_relative() ? base / p : p;
}

void read_endpoint(const json& j, const char* key, EndpointConfig& out) {
    if (!j.contains(key)) return;
    const std::string section = std::string("clients.") + key;
    const auto& e = j.at(key);
    check_keys(e, section, {"base_url", "model", "rate_limit", "timeout_seconds", "mode"});
    read(e, "base_url", out.base_url, section);
    read(e, "model", out.model, section);
    read(e, "rate_limit", out.rate_limit, section);
    read(e, "timeout_seconds", out.timeout_seconds, section);
    read(e, "mode", out.mode, section);
}

json endpoint_json(const EndpointConfig& e) {
    json j = {{"base_url", e.base_url},
              {"model", e.model},
              {"rate_limit", e.rate_limit},
              {"timeout_seconds", e.timeout_seconds}};
    if (!e.mode.empty()) j["mode"] = e.mode;
    return j;
}

}  // namespace

void Config::validate() const {
    if (graph_k < 1) throw ConfigError("graph.k must be >= 1");
    if (embed_dim < 1) throw ConfigError("graph.dim must be >= 1");
    if (threads < 1) throw ConfigError("graph.threads must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (clients.mode != "scripted" && clients.mode != "http")
        throw ConfigError("clients.mode must be 'scripted' or 'http', got '" + clients.mode + "'");
    if (!clients.nli.mode.empty() && clients.nli.mode != "chat" && clients.nli.mode != "nli")
        throw ConfigError("clients.nli.mode must be 'chat' or 'nli'");
    pipeline.validate();
}

Config config_from_json(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j, "<root>", {"paths", "retrieval", "graph", "nar", "pipeline", "clients", "workers"});
    Config c;
    const json empty = json::object();
    const auto& paths = j.contains("paths") ? j.at("paths") : empty;
    check_keys(paths, "paths",
               {"corpus", "index", "embeddings", "graph", "fixtures", "output", "questions", "qrels", "prompts"});
    read_path(paths, "corpus", c.paths.corpus, base_dir);
    read_path(paths, "index", c.paths.index, base_dir);
    read_path(paths, "embeddings", c.paths.embeddings, base_dir);
    read_path(paths, "graph", c.paths.graph, base_dir);
    read_path(paths, "fixtures", c.paths.fixtures, base_dir);
    read_path(paths, "output", c.paths.output, base_dir);
    read_path(paths, "questions", c.paths.questions, base_dir);
    read_path(paths, "qrels", c.paths.qrels, base_dir);
    read_path(paths, "prompts", c.paths.prompts, base_dir);

    if (j.contains("retrieval")) {
        const auto& r = j.at("retrieval");
        check_keys(r, "retrieval", {"depth", "k1", "b"});
        read_count(r, "depth", c.pipeline.first_stage_depth, "retrieval");
        read(r, "k1", c.pipeline.bm25.k1, "retrieval");
        read(r, "b", c.pipeline.bm25.b, "retrieval");
    }
    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        check_keys(g, "graph", {"k", "dim", "threads"});
        read_count(g, "k", c.graph_k, "graph");
        read_count(g, "dim", c.embed_dim, "graph");
        read_count(g, "threads", c.threads, "graph");
    }
    if (j.contains("nar")) {
        const auto& n = j.at("nar");
        check_keys(n, "nar", {"b", "c", "neighbor_limit", "scorer_threads", "start_pool"});
        read_count(n, "b", c.pipeline.nar.batch_size, "nar");
        read_count(n, "c", c.pipeline.nar.budget, "nar");
        read_count(n, "neighbor_limit", c.pipeline.nar.neighbor_limit, "nar");
        read_count(n, "scorer_threads", c.pipeline.nar.scorer_threads, "nar");
        if (n.contains("start_pool")) {
            std::string p;
            read(n, "start_pool", p, "nar");
            if (p != "R" && p != "N") throw ConfigError("nar.start_pool must be 'R' or 'N'");
            c.pipeline.nar.start_pool = p == "R" ? Pool::R : Pool::N;
        }
    }
    if (j.contains("pipeline")) {
        const auto& p = j.at("pipeline");
        check_keys(p, "pipeline",
                   {"l", "max_hops", "asu_enabled", "mer_enabled", "m", "temperature", "dataset", "max_tokens"});
        read_count(p, "l", c.pipeline.l, "pipeline");
        read_count(p, "max_hops", c.pipeline.max_hops, "pipeline");
        read(p, "asu_enabled", c.pipeline.asu_enabled, "pipeline");
        read(p, "mer_enabled", c.pipeline.mer_enabled, "pipeline");
        read_count(p, "m", c.pipeline.asu.samples, "pipeline");
        read(p, "temperature", c.pipeline.asu.temperature, "pipeline");
        read(p, "dataset", c.pipeline.dataset, "pipeline");
        read_count(p, "max_tokens", c.pipeline.max_tokens, "pipeline");
        c.pipeline.asu.max_tokens = c.pipeline.max_tokens;
    }
    if (j.contains("clients")) {
        const auto& cl = j.at("clients");
        check_keys(cl, "clients", {"mode", "llm", "nli", "scorer", "embedder"});
        read(cl, "mode", c.clients.mode, "clients");
        read_endpoint(cl, "llm", c.clients.llm);
        read_endpoint(cl, "nli", c.clients.nli);
        read_endpoint(cl, "scorer", c.clients.scorer);
        read_endpoint(cl, "embedder", c.clients.embedder);
    }
    read_count(j, "workers", c.workers, "<root>");
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

nlohmann::ordered_json to_json(const Config& c) {
    nlohmann::ordered_json j;
    auto s = [](const std::filesystem::path& p) { return p.empty() ? json(nullptr) : json(p.generic_string()); };
    j["paths"] = {{"corpus", s(c.paths.corpus)},         {"index", s(c.paths.index)},
                  {"embeddings", s(c.paths.embeddings)}, {"graph", s(c.paths.graph)},
                  {"fixtures", s(c.paths.fixtures)},     {"output", s(c.paths.output)},
                  {"questions", s(c.paths.questions)},   {"qrels", s(c.paths.qrels)},
                  {"prompts", s(c.paths.prompts)}};
    j["retrieval"] = {{"depth", c.pipeline.first_stage_depth}, {"k1", c.pipeline.bm25.k1}, {"b", c.pipeline.bm25.b}};
    j["graph"] = {{"k", c.graph_k}, {"dim", c.embed_dim}, {"threads", c.threads}};
    j["nar"] = {{"b", c.pipeline.nar.batch_size},
                {"c", c.pipeline.nar.budget},
                {"neighbor_limit", c.pipeline.nar.neighbor_limit},
                {"scorer_threads", c.pipeline.nar.scorer_threads},
                {"start_pool", std::string(to_string(c.pipeline.nar.start_pool))}};
    j["pipeline"] = {{"l", c.pipeline.l},
                     {"max_hops", c.pipeline.max_hops},
                     {"asu_enabled", c.pipeline.asu_enabled},
                     {"mer_enabled", c.pipeline.mer_enabled},
                     {"m", c.pipeline.asu.samples},
                     {"temperature", c.pipeline.asu.temperature},
                     {"dataset", c.pipeline.dataset},
                     {"max_tokens", c.pipeline.max_tokens}};
    j["clients"] = {{"mode", c.clients.mode},
                    {"llm", endpoint_json(c.clients.llm)},
                    {"nli", endpoint_json(c.clients.nli)},
                    {"scorer", endpoint_json(c.clients.scorer)},
                    {"embedder", endpoint_json(c.clients.embedder)}};
    j["workers"] = c.workers;
    return j;
}

void save_config(const Config& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config '" + path.string() + "'");
    out << to_json(config).dump(2) << '\n';
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace sunar
