#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sunar/embedding_store.hpp"

namespace sunar {

struct Neighbor {
    std::string doc_id;
    double similarity = 0.0;

    bool operator==(const Neighbor&) const = default;
};

/// Directed k-nearest-neighbor graph over documents. Each adjacency list is
/// ordered by descending similarity then ascending doc_id and never contains
/// the node itself. Immutable after construction; safe for concurrent lookup.
class NeighborhoodGraph {
public:
    using Adjacency = std::vector<std::pair<std::string, std::vector<Neighbor>>>;

    NeighborhoodGraph() = default;

    /// Validates ordering, self-edges, list length <= k, unique nodes, and that
    /// every neighbor is itself a node. With check_tie_order=false only the
    /// similarity order is checked (rounded similarities read from a file can
    /// tie where the originals did not).
    static NeighborhoodGraph from_adjacency(std::size_t k, Adjacency adjacency, bool check_tie_order = true);

    [[nodiscard]] std::size_t k() const noexcept { return k_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept;
    [[nodiscard]] const std::string& node(std::size_t i) const { return nodes_[i]; }
    [[nodiscard]] bool contains(std::string_view doc_id) const;

    /// Throws naming the id when it is not a node.
    [[nodiscard]] std::span<const Neighbor> adjacency(std::string_view doc_id) const;
    [[nodiscard]] std::span<const Neighbor> adjacency_at(std::size_t i) const { return lists_[i]; }
    /// Empty span for unknown ids.
    [[nodiscard]] std::span<const Neighbor> adjacency_or_empty(std::string_view doc_id) const;

    bool operator==(const NeighborhoodGraph& other) const {
        return k_ == other.k_ && nodes_ == other.nodes_ && lists_ == other.lists_;
    }

private:
    std::size_t k_ = 0;
    std::vector<std::string> nodes_;
    std::vector<std::vector<Neighbor>> lists_;
    std::unordered_map<std::string, std::size_t> pos_;
};

struct GraphBuildReport {
    /// Documents whose vector has zero norm; they have similarity 0 to everything.
    std::vector<std::string> zero_norm_docs;
};

struct GraphBuild {
    NeighborhoodGraph graph;
    GraphBuildReport report;
};

/// Cosine similarity clamped to [-1, 1]; 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Exact brute-force cosine KNN, self excluded. Node order follows the store.
/// The result does not depend on the thread count.
GraphBuild build_graph(const EmbeddingStore& store, std::size_t k, std::size_t threads = 1);

/// First min(limit, list length) entries of the node's adjacency list.
std::vector<Neighbor> neighbors(const NeighborhoodGraph& graph, std::string_view doc_id, std::size_t limit);

/// Header "SUNAR-GRAPH v1 k=<k>", then "<doc_id>\t<n1>:<sim1> <n2>:<sim2> ..."
/// per node, similarities with 6 decimals.
void save_graph(const NeighborhoodGraph& graph, const std::filesystem::path& path);
NeighborhoodGraph load_graph(const std::filesystem::path& path);

}  // namespace sunar
