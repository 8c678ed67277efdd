#pragma once

// Run configuration shared by the command-line tool and the fixture suites.
// JSON with sections paths / retrieval / graph / nar / pipeline / clients;
// relative paths are resolved against the config file's directory.

#include <cstddef>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sunar/pipeline.hpp"

namespace sunar {

struct PathsConfig {
    std::filesystem::path corpus = "corpus.jsonl";
    std::filesystem::path index = "index.json";
    std::filesystem::path embeddings = "embeddings.txt";
    std::filesystem::path graph = "graph.txt";
    std::filesystem::path fixtures = "fixtures";
    std::filesystem::path output = "out";
    std::filesystem::path questions = "questions.jsonl";
    std::filesystem::path qrels = "qrels.txt";
    std::filesystem::path prompts;  // empty: built-in prompts
};

struct EndpointConfig {
    std::string base_url;
    std::string model;
    double rate_limit = 0.0;  // requests per second, 0 = unlimited
    double timeout_seconds = 120.0;
    std::string mode;  // entailment only: "chat" or "nli"
};

struct ClientsConfig {
    std::string mode = "scripted";  // scripted | http
    EndpointConfig llm;
    EndpointConfig nli;
    EndpointConfig scorer;
    EndpointConfig embedder;
};

struct Config {
    PathsConfig paths;
    std::size_t graph_k = 100;
    std::size_t embed_dim = 256;
    std::size_t threads = 1;  // graph construction
    std::size_t workers = 1;  // concurrent questions in `run`
    PipelineConfig pipeline;
    ClientsConfig clients;

    /// Throws ConfigError for out-of-range values.
    void validate() const;
};

/// Unknown keys are errors. Relative paths are joined to base_dir.
Config config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& path);
/// Paths are written as stored.
nlohmann::ordered_json to_json(const Config& config);
void save_config(const Config& config, const std::filesystem::path& path);

}  // namespace sunar
