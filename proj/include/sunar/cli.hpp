#pragma once

// The `sunar` command-line tool as a library so tests can drive it in-process.

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "sunar/clients.hpp"
#include "sunar/config.hpp"

namespace sunar::cli {

enum ExitCode : int { ok = 0, partial_failure = 1, config_error = 2 };

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct ClientSet {
    std::unique_ptr<LlmClient> llm;
    std::unique_ptr<EntailmentClient> nli;
    std::unique_ptr<CrossScorer> scorer;
};

/// Scripted mode replays <fixtures>/{llm,nli,scorer}.jsonl; http mode builds
/// network backends from the client endpoints and the API key variables.
ClientSet make_clients(const Config& config);
std::unique_ptr<Embedder> make_embedder(const Config& config, const std::string& mode);

}  // namespace sunar::cli
