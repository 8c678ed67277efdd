#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sunar {

struct Document {
    std::string doc_id;
    std::optional<std::string> title;
    std::string text;

    bool operator==(const Document&) const = default;
};

/// Ordered, id-unique collection of documents. Immutable once built.
class Corpus {
public:
    Corpus() = default;

    /// Throws sunar::Error on an empty id, empty text, or a duplicate id.
    explicit Corpus(std::vector<Document> documents);

    [[nodiscard]] std::size_t size() const noexcept { return documents_.size(); }
    [[nodiscard]] bool empty() const noexcept { return documents_.empty(); }
    [[nodiscard]] std::span<const Document> documents() const noexcept { return documents_; }
    [[nodiscard]] const Document& operator[](std::size_t i) const { return documents_[i]; }

    [[nodiscard]] const Document* find(std::string_view doc_id) const;
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view doc_id) const;

    /// Same as find() but throws naming the id when it is absent.
    [[nodiscard]] const Document& at(std::string_view doc_id) const;

private:
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads a JSONL corpus: {"id": ..., "title": ... (optional), "contents": ...} per line.
/// Blank lines are skipped. Errors carry the 1-based line number.
Corpus ingest_corpus(const std::filesystem::path& path);

void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace sunar
