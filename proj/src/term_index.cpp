#include "sunar/term_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"

namespace sunar {

namespace {

constexpr const char* kFormat = "sunar-term-index";
constexpr int kVersion = 1;

std::vector<std::string> unique_terms(std::string_view text) {
    auto tokens = tokenize(text);
    std::set<std::string> uniq(tokens.begin(), tokens.end());
    return {uniq.begin(), uniq.end()};
}

}  // namespace

std::size_t CollectionStats::df(const std::string& term) const {
    auto it = doc_freq.find(term);
    return it == doc_freq.end() ? 0 : it->second;
}

std::uint32_t TermIndex::doc_length(std::string_view doc_id) const {
    auto it = doc_pos_.find(std::string(doc_id));
    if (it == doc_pos_.end()) throw Error("unknown doc_id '" + std::string(doc_id) + "'");
    return doc_lengths_[it->second];
}

std::span<const Posting> TermIndex::postings(std::string_view term) const {
    auto it = postings_.find(std::string(term));
    if (it == postings_.end()) return {};
    return it->second;
}

CollectionStats TermIndex::stats(std::span<const std::string> terms) const {
    CollectionStats s;
    s.doc_count = doc_count();
    s.avg_doc_length = avg_doc_length_;
    if (terms.empty()) {
        for (const auto& [term, list] : postings_) s.doc_freq.emplace(term, list.size());
    } else {
        for (const auto& t : terms) s.doc_freq[t] = postings(t).size();
    }
    return s;
}

TermIndex build_term_index(const Corpus& corpus) {
    if (corpus.empty()) throw Error("empty corpus");
    TermIndex index;
    index.doc_ids_.reserve(corpus.size());
    index.doc_lengths_.reserve(corpus.size());
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& doc = corpus[i];
        auto tokens = tokenize(doc.text);
        index.doc_ids_.push_back(doc.doc_id);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        index.doc_pos_.emplace(doc.doc_id, static_cast<std::uint32_t>(i));
        total += tokens.size();

        std::sort(tokens.begin(), tokens.end());
        for (std::size_t j = 0; j < tokens.size();) {
            std::size_t e = j;
            while (e < tokens.size() && tokens[e] == tokens[j]) ++e;
            index.postings_[tokens[j]].push_back(
                {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(e - j)});
            j = e;
        }
    }
    index.avg_doc_length_ = static_cast<double>(total) / static_cast<double>(corpus.size());
    return index;
}

double bm25_term_score(std::uint32_t tf, std::uint32_t doc_len, std::size_t df,
                       const CollectionStats& stats, const Bm25Params& params) {
    const auto n = static_cast<double>(stats.doc_count);
    const auto dfd = static_cast<double>(df);
    const double idf = std::log(1.0 + (n - dfd + 0.5) / (dfd + 0.5));
    const double norm = stats.avg_doc_length > 0.0 ? static_cast<double>(doc_len) / stats.avg_doc_length : 0.0;
    const auto f = static_cast<double>(tf);
    return idf * f * (params.k1 + 1.0) / (f + params.k1 * (1.0 - params.b + params.b * norm));
}

RankedList sparse_retrieve(const TermIndex& index, std::string_view query_text, std::size_t k,
                           const Bm25Params& params) {
    auto terms = unique_terms(query_text);
    return sparse_retrieve(index, query_text, k, index.stats(terms), params);
}

RankedList sparse_retrieve(const TermIndex& index, std::string_view query_text, std::size_t k,
                           const CollectionStats& stats, const Bm25Params& params) {
    if (k == 0) throw Error("sparse_retrieve: k must be >= 1");
    RankedList out;
    auto terms = unique_terms(query_text);
    if (terms.empty()) return out;

    std::vector<double> acc(index.doc_count(), 0.0);
    std::vector<char> hit(index.doc_count(), 0);
    for (const auto& term : terms) {
        auto list = index.postings(term);
        if (list.empty()) continue;
        const std::size_t df = stats.df(term);
        for (const auto& p : list) {
            acc[p.doc] += bm25_term_score(p.tf, index.doc_lengths()[p.doc], df, stats, params);
            hit[p.doc] = 1;
        }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
        if (hit[i] == 0) continue;
        out.entries.push_back({index.doc_ids()[i], acc[i], Origin::first_stage, std::nullopt, std::nullopt,
                               std::nullopt});
    }
    const auto keep = std::min(k, out.entries.size());
    std::partial_sort(out.entries.begin(), out.entries.begin() + static_cast<std::ptrdiff_t>(keep),
                      out.entries.end(), ranks_before);
    out.entries.resize(keep);
    return out;
}

void save_term_index(const TermIndex& index, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["doc_count"] = index.doc_count();
    j["avg_doc_length"] = index.avg_doc_length();
    j["doc_ids"] = index.doc_ids();
    j["doc_lengths"] = index.doc_lengths();
    std::vector<std::string> terms;
    terms.reserve(index.term_count());
    for (const auto& [t, _] : index.all_postings()) terms.push_back(t);
    std::sort(terms.begin(), terms.end());
    auto& postings = j["postings"] = nlohmann::ordered_json::object();
    for (const auto& t : terms) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : index.postings(t)) arr.push_back({p.doc, p.tf});
        postings[t] = std::move(arr);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write index file '" + path.string() + "'");
    out << j.dump() << '\n';
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

TermIndex load_term_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open index file '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("index file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.value("format", "") != kFormat) {
            throw FormatError("'" + path.string() + "' is not a term index file");
        }
        if (j.at("version").get<int>() != kVersion) {
            throw FormatError("unsupported term index version " + j.at("version").dump());
        }
        TermIndex index;
        index.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
        index.doc_lengths_ = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
        index.avg_doc_length_ = j.at("avg_doc_length").get<double>();
        if (index.doc_ids_.size() != index.doc_lengths_.size() ||
            j.at("doc_count").get<std::size_t>() != index.doc_ids_.size()) {
            throw FormatError("term index '" + path.string() + "' is truncated or inconsistent");
        }
        for (std::size_t i = 0; i < index.doc_ids_.size(); ++i) {
            index.doc_pos_.emplace(index.doc_ids_[i], static_cast<std::uint32_t>(i));
        }
        for (const auto& [term, arr] : j.at("postings").items()) {
            auto& list = index.postings_[term];
            for (const auto& p : arr) {
                Posting post{p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()};
                if (post.doc >= index.doc_ids_.size() || post.tf == 0) {
                    throw FormatError("term index '" + path.string() + "' has an invalid posting for '" + term + "'");
                }
                list.push_back(post);
            }
        }
        return index;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("term index '" + path.string() + "' is malformed: " + e.what());
    }
}

}  // namespace sunar
