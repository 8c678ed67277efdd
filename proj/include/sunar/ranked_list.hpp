#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sunar {

enum class Origin { first_stage, neighbor };

std::string_view to_string(Origin origin);

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
    Origin origin = Origin::first_stage;
    /// The scored batch document whose adjacency produced this entry (neighbors only).
    std::optional<std::string> source_doc;
    /// Iteration that scored this document, once scored.
    std::optional<std::size_t> batch_index;
    /// Transformed cross-scorer output before any feedback divisor; equals score
    /// when no feedback was applied.
    std::optional<double> raw_score;

    bool operator==(const ScoredDoc&) const = default;
};

/// Descending score, ties by ascending doc_id.
bool ranks_before(const ScoredDoc& a, const ScoredDoc& b);

/// An ordered list of scored documents with unique ids.
struct RankedList {
    std::vector<ScoredDoc> entries;

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries.empty(); }

    void sort();
    [[nodiscard]] bool is_sorted() const;
    [[nodiscard]] bool has_unique_ids() const;
    [[nodiscard]] RankedList truncated(std::size_t n) const;
    [[nodiscard]] std::vector<std::string> ids() const;
    [[nodiscard]] const ScoredDoc* find(std::string_view doc_id) const;

    bool operator==(const RankedList&) const = default;
};

}  // namespace sunar
