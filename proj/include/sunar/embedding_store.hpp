#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sunar/clients.hpp"
#include "sunar/corpus.hpp"

namespace sunar {

/// Dense vectors keyed by doc_id, all of one dimension, stored row-major in
/// insertion order.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    explicit EmbeddingStore(std::size_t dim);

    /// Throws on a duplicate id or a vector of the wrong length.
    void add(std::string doc_id, std::span<const double> vector);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] bool empty() const noexcept { return ids_.empty(); }
    [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const;
    [[nodiscard]] std::span<const double> vector(std::string_view doc_id) const;
    [[nodiscard]] bool contains(std::string_view doc_id) const;

    /// True when every corpus document has exactly one vector.
    [[nodiscard]] bool covers(const Corpus& corpus) const;

    bool operator==(const EmbeddingStore& other) const {
        return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
    }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<double> data_;
    std::unordered_map<std::string, std::size_t> pos_;
};

/// One embedder call per document, in corpus order.
EmbeddingStore embed_corpus(const Corpus& corpus, Embedder& embedder, std::size_t dim);

/// Text format: header "SUNAR-EMBED v1 dim=<d>", then "<doc_id>\t<x1> <x2> ..."
/// with round-trip exact (%.17g) components.
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore load_embeddings(const std::filesystem::path& path);

}  // namespace sunar
