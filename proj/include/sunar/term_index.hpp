#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sunar/corpus.hpp"
#include "sunar/ranked_list.hpp"

namespace sunar {

struct Posting {
    std::uint32_t doc;  // position in TermIndex::doc_ids()
    std::uint32_t tf;   // >= 1

    bool operator==(const Posting&) const = default;
};

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

/// Collection statistics BM25 reads. Taken from an index by default; can be
/// frozen from another index to compare scores across corpora.
struct CollectionStats {
    std::size_t doc_count = 0;
    double avg_doc_length = 0.0;
    std::unordered_map<std::string, std::size_t> doc_freq;

    [[nodiscard]] std::size_t df(const std::string& term) const;
};

/// Lexical inverted index over a corpus. Immutable after build.
class TermIndex {
public:
    TermIndex() = default;

    [[nodiscard]] std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    [[nodiscard]] double avg_doc_length() const noexcept { return avg_doc_length_; }
    [[nodiscard]] const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    [[nodiscard]] const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
    [[nodiscard]] std::uint32_t doc_length(std::string_view doc_id) const;
    [[nodiscard]] std::size_t term_count() const noexcept { return postings_.size(); }

    /// Empty span for unknown terms.
    [[nodiscard]] std::span<const Posting> postings(std::string_view term) const;
    [[nodiscard]] const std::unordered_map<std::string, std::vector<Posting>>& all_postings() const noexcept {
        return postings_;
    }

    /// Stats restricted to the given terms (all terms when empty).
    [[nodiscard]] CollectionStats stats(std::span<const std::string> terms = {}) const;

    bool operator==(const TermIndex&) const = default;

    friend TermIndex build_term_index(const Corpus& corpus);
    friend TermIndex load_term_index(const std::filesystem::path& path);

private:
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> doc_pos_;
};

TermIndex build_term_index(const Corpus& corpus);

double bm25_term_score(std::uint32_t tf, std::uint32_t doc_len, std::size_t df,
                       const CollectionStats& stats, const Bm25Params& params = {});

/// BM25 first stage. At most k documents, strictly descending score with ties
/// by ascending doc_id. Only documents sharing a query term appear. An empty
/// query (after tokenization) yields an empty list.
RankedList sparse_retrieve(const TermIndex& index, std::string_view query_text, std::size_t k,
                           const Bm25Params& params = {});

/// As sparse_retrieve, scoring with externally supplied collection statistics.
RankedList sparse_retrieve(const TermIndex& index, std::string_view query_text, std::size_t k,
                           const CollectionStats& stats, const Bm25Params& params = {});

/// Structured file with a format/version header.
void save_term_index(const TermIndex& index, const std::filesystem::path& path);
TermIndex load_term_index(const std::filesystem::path& path);

}  // namespace sunar
