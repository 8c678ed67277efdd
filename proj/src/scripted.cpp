#include "sunar/scripted.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"

namespace sunar {

using json = nlohmann::json;

namespace {

template <typename Fn>
void read_jsonl(const std::filesystem::path& path, Fn&& on_record) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open fixture file '" + path.string() + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto rec = json::parse(line);
            if (!rec.contains("fingerprint")) throw FormatError(path.string(), lineno, "missing 'fingerprint'");
            on_record(rec);
        } catch (const json::exception& e) {
            throw FormatError(path.string(), lineno, std::string("malformed fixture record: ") + e.what());
        }
    }
}

template <typename Map, typename Fn>
void write_jsonl(const std::filesystem::path& path, const Map& entries, Fn&& to_record) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write fixture file '" + path.string() + "'");
    for (const auto& [fp, value] : entries) out << to_record(fp, value).dump() << '\n';
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

template <typename Map>
const typename Map::mapped_type& lookup(const Map& entries, const std::string& fp) {
    auto it = entries.find(fp);
    if (it == entries.end()) throw FixtureMissError(fp);
    return it->second;
}

template <typename Map, typename Value>
void record(Map& entries, const std::string& fp, const Value& value) {
    auto [it, inserted] = entries.emplace(fp, value);
    if (!inserted && it->second != value) {
        throw ClientError("recorder saw two different responses for " + fp);
    }
}

}  // namespace

// --- ScriptedLlm ---

ScriptedLlm ScriptedLlm::from_file(const std::filesystem::path& path) {
    Entries entries;
    read_jsonl(path, [&](const json& rec) {
        entries[rec.at("fingerprint").get<std::string>()] = rec.at("completions").get<std::vector<std::string>>();
    });
    return ScriptedLlm(std::move(entries));
}

void ScriptedLlm::save(const std::filesystem::path& path) const {
    write_jsonl(path, entries_, [](const std::string& fp, const std::vector<std::string>& c) {
        return json{{"fingerprint", fp}, {"completions", c}};
    });
}

void ScriptedLlm::add(const ChatRequest& request, std::vector<std::string> completions) {
    entries_[fingerprint(request)] = std::move(completions);
}

std::vector<std::string> ScriptedLlm::complete(const ChatRequest& request) {
    const auto& c = lookup(entries_, fingerprint(request));
    if (c.size() != request.n) {
        throw ClientError("fixture for " + fingerprint(request) + " holds " + std::to_string(c.size()) +
                          " completions, request asked for " + std::to_string(request.n));
    }
    return c;
}

// --- ScriptedEntailment ---

ScriptedEntailment ScriptedEntailment::from_file(const std::filesystem::path& path) {
    Entries entries;
    read_jsonl(path, [&](const json& rec) {
        entries[rec.at("fingerprint").get<std::string>()] = rec.at("verdict").get<bool>();
    });
    return ScriptedEntailment(std::move(entries));
}

void ScriptedEntailment::save(const std::filesystem::path& path) const {
    write_jsonl(path, entries_, [](const std::string& fp, bool v) {
        return json{{"fingerprint", fp}, {"verdict", v}};
    });
}

void ScriptedEntailment::add(std::string_view premise, std::string_view hypothesis, bool verdict) {
    entries_[entailment_fingerprint(premise, hypothesis)] = verdict;
}

void ScriptedEntailment::add_symmetric(std::string_view a, std::string_view b, bool verdict) {
    add(a, b, verdict);
    add(b, a, verdict);
}

bool ScriptedEntailment::entails(std::string_view premise, std::string_view hypothesis) {
    return lookup(entries_, entailment_fingerprint(premise, hypothesis));
}

// --- ScriptedScorer ---

ScriptedScorer ScriptedScorer::from_file(const std::filesystem::path& path) {
    Entries entries;
    read_jsonl(path, [&](const json& rec) {
        entries[rec.at("fingerprint").get<std::string>()] = rec.at("score").get<double>();
    });
    return ScriptedScorer(std::move(entries));
}

void ScriptedScorer::save(const std::filesystem::path& path) const {
    write_jsonl(path, entries_, [](const std::string& fp, double s) {
        return json{{"fingerprint", fp}, {"score", s}};
    });
}

void ScriptedScorer::add(std::string_view query, std::string_view doc_text, double score) {
    entries_[score_fingerprint(query, doc_text)] = score;
}

double ScriptedScorer::score(std::string_view query, std::string_view doc_text) {
    return lookup(entries_, score_fingerprint(query, doc_text));
}

// --- ScriptedEmbedder ---

ScriptedEmbedder ScriptedEmbedder::from_file(const std::filesystem::path& path) {
    Entries entries;
    read_jsonl(path, [&](const json& rec) {
        entries[rec.at("fingerprint").get<std::string>()] = rec.at("vector").get<std::vector<double>>();
    });
    return ScriptedEmbedder(std::move(entries));
}

void ScriptedEmbedder::save(const std::filesystem::path& path) const {
    write_jsonl(path, entries_, [](const std::string& fp, const std::vector<double>& v) {
        return json{{"fingerprint", fp}, {"vector", v}};
    });
}

void ScriptedEmbedder::add(std::string_view text, std::vector<double> vector) {
    const auto dim = vector.size();
    entries_[embed_fingerprint(text, dim)] = std::move(vector);
}

std::vector<double> ScriptedEmbedder::embed(std::string_view text, std::size_t dim) {
    return lookup(entries_, embed_fingerprint(text, dim));
}

// --- rule-based mocks ---

bool ExactMatchEntailment::entails(std::string_view premise, std::string_view hypothesis) {
    return trim(premise) == trim(hypothesis);
}

bool ThresholdEntailment::entails(std::string_view premise, std::string_view hypothesis) {
    const double p = fn_(premise, hypothesis);
    if (!(p >= 0.0 && p <= 1.0)) throw ClientError("entailment probability out of [0,1]");
    return p >= threshold_;
}

double LexicalOverlapScorer::score(std::string_view query, std::string_view doc_text) {
    auto q = tokenize(query);
    auto d = tokenize(doc_text);
    std::set<std::string> qs(q.begin(), q.end());
    std::set<std::string> ds(d.begin(), d.end());
    std::vector<std::string> shared;
    std::set_intersection(qs.begin(), qs.end(), ds.begin(), ds.end(), std::back_inserter(shared));
    return static_cast<double>(shared.size());
}

std::vector<double> HashEmbedder::embed(std::string_view text, std::size_t dim) {
    if (dim == 0) throw ConfigError("hash embedder: dim must be >= 1");
    std::vector<double> v(dim, 0.0);
    auto add = [&](std::string_view feature) {
        const auto h = fnv1a64(feature);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        v[(h >> 1) % dim] += sign;
    };
    const auto tokens = tokenize(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add(tokens[i]);
        if (i + 1 < tokens.size()) add(tokens[i] + ' ' + tokens[i + 1]);
    }
    return v;
}

// --- recorders ---

std::vector<std::string> RecordingLlm::complete(const ChatRequest& request) {
    auto out = inner_.complete(request);
    std::lock_guard lock(mutex_);
    record(entries_, fingerprint(request), out);
    return out;
}

ScriptedLlm RecordingLlm::recorded() const {
    std::lock_guard lock(mutex_);
    return ScriptedLlm(entries_);
}

bool RecordingEntailment::entails(std::string_view premise, std::string_view hypothesis) {
    const bool v = inner_.entails(premise, hypothesis);
    std::lock_guard lock(mutex_);
    record(entries_, entailment_fingerprint(premise, hypothesis), v);
    return v;
}

ScriptedEntailment RecordingEntailment::recorded() const {
    std::lock_guard lock(mutex_);
    return ScriptedEntailment(entries_);
}

double RecordingScorer::score(std::string_view query, std::string_view doc_text) {
    const double s = inner_.score(query, doc_text);
    std::lock_guard lock(mutex_);
    record(entries_, score_fingerprint(query, doc_text), s);
    return s;
}

ScriptedScorer RecordingScorer::recorded() const {
    std::lock_guard lock(mutex_);
    return ScriptedScorer(entries_);
}

}  // namespace sunar
