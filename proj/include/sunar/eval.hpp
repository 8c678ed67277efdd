#pragma once

// Answer and retrieval metrics plus the qrels / TREC run file formats.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sunar/ranked_list.hpp"

namespace sunar {

/// Lowercase, whitespace collapsed, leading/trailing punctuation stripped
/// from every token; tokens joined with single spaces.
std::string normalize_answer(std::string_view text);

/// 1 iff some gold, normalized and non-empty, is a substring of the
/// normalized prediction.
int cover_em(std::string_view prediction, const std::vector<std::string>& golds);
int cover_em(std::string_view prediction, std::string_view gold);

struct Qrels {
    std::map<std::string, std::map<std::string, int>> judgments;  // qid -> doc -> grade

    void add(const std::string& qid, const std::string& doc_id, int grade);
    [[nodiscard]] int grade(const std::string& qid, const std::string& doc_id) const;
    /// qids with at least one positive grade.
    [[nodiscard]] std::vector<std::string> evaluated_qids() const;
};

struct RunEntry {
    std::string doc_id;
    double score = 0.0;
    bool operator==(const RunEntry&) const = default;
};

struct Run {
    std::map<std::string, std::vector<RunEntry>> rankings;  // qid -> entries in rank order

    void add(const std::string& qid, const RankedList& list);
    [[nodiscard]] bool empty() const noexcept { return rankings.empty(); }
};

/// Whitespace-separated "qid 0 doc_id grade". Blank lines are skipped.
Qrels load_qrels(const std::filesystem::path& path);
void save_qrels(const std::filesystem::path& path, const Qrels& qrels);

/// "qid Q0 doc_id rank score tag"; entries are ordered by rank. Duplicate
/// docs within a qid or scores that increase with rank are format errors.
Run load_run(const std::filesystem::path& path);
/// Scores written with 6 decimals, ranks from 1.
void write_run(const std::filesystem::path& path, const Run& run, std::string_view tag);
void write_run(std::ostream& out, const Run& run, std::string_view tag);

struct MetricResult {
    std::map<std::string, double> per_query;
    double mean = 0.0;
    std::vector<std::string> warnings;
};

/// |relevant in top-k| / |relevant| for every judged qid with a positive
/// grade (a qid missing from the run scores 0). Run qids without judgments
/// are skipped with a warning.
MetricResult recall_at_k(const Run& run, const Qrels& qrels, std::size_t k);

/// DCG with gain (2^grade - 1) / log2(rank + 1) over the ideal DCG. qids with
/// zero ideal DCG are excluded.
MetricResult ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k);

struct AnswerRecord {
    std::string qid;
    std::string prediction;
    std::vector<std::string> golds;
};

/// {"cover_em": {"mean", "per_query"}} over the given records.
MetricResult cover_em_metric(const std::vector<AnswerRecord>& answers);

/// Report JSON: {"ndcg@k": {...}, "recall@k": {...}, "cover_em": {...},
/// "warnings": [...]}. Each metric holds "mean" and "per_query".
nlohmann::ordered_json evaluation_report(const Run& run, const Qrels& qrels, const std::vector<std::size_t>& ks,
                                         const std::optional<std::vector<AnswerRecord>>& answers = std::nullopt);

}  // namespace sunar
