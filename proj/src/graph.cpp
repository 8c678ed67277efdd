#include "sunar/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "sunar/errors.hpp"

namespace sunar {

namespace {

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.doc_id < b.doc_id;
}

double norm_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

bool has_whitespace(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

}  // namespace

NeighborhoodGraph NeighborhoodGraph::from_adjacency(std::size_t k, Adjacency adjacency, bool check_tie_order) {
    NeighborhoodGraph g;
    g.k_ = k;
    g.nodes_.reserve(adjacency.size());
    g.lists_.reserve(adjacency.size());
    for (auto& [id, list] : adjacency) {
        if (!g.pos_.emplace(id, g.nodes_.size()).second) throw Error("duplicate graph node '" + id + "'");
        g.nodes_.push_back(id);
        g.lists_.push_back(std::move(list));
    }
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
        const auto& id = g.nodes_[i];
        const auto& list = g.lists_[i];
        if (list.size() > k) throw Error("node '" + id + "' has more than k=" + std::to_string(k) + " neighbors");
        const bool ordered = check_tie_order
                                 ? std::is_sorted(list.begin(), list.end(), neighbor_before)
                                 : std::is_sorted(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) {
                                       return a.similarity > b.similarity;
                                   });
        if (!ordered) {
            throw Error("adjacency of '" + id + "' is not ordered by similarity then doc_id");
        }
        std::unordered_set<std::string_view> seen;
        for (const auto& n : list) {
            if (n.doc_id == id) throw Error("self-edge on '" + id + "'");
            if (!g.pos_.count(n.doc_id)) throw Error("neighbor '" + n.doc_id + "' of '" + id + "' is not a node");
            if (!seen.insert(n.doc_id).second) throw Error("repeated neighbor '" + n.doc_id + "' of '" + id + "'");
        }
    }
    return g;
}

std::size_t NeighborhoodGraph::edge_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : lists_) n += l.size();
    return n;
}

bool NeighborhoodGraph::contains(std::string_view doc_id) const {
    return pos_.count(std::string(doc_id)) != 0;
}

std::span<const Neighbor> NeighborhoodGraph::adjacency(std::string_view doc_id) const {
    auto it = pos_.find(std::string(doc_id));
    if (it == pos_.end()) throw Error("doc_id '" + std::string(doc_id) + "' is not in the neighborhood graph");
    return lists_[it->second];
}

std::span<const Neighbor> NeighborhoodGraph::adjacency_or_empty(std::string_view doc_id) const {
    auto it = pos_.find(std::string(doc_id));
    if (it == pos_.end()) return {};
    return lists_[it->second];
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const double na = norm_of(a);
    const double nb = norm_of(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

GraphBuild build_graph(const EmbeddingStore& store, std::size_t k, std::size_t threads) {
    if (store.empty()) throw Error("build_graph: empty embedding store");
    if (k == 0) throw Error("build_graph: k must be >= 1");
    const std::size_t n = store.size();
    const std::size_t keep = std::min(k, n - 1);

    std::vector<double> norms(n);
    GraphBuild out;
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = norm_of(store.row(i));
        if (norms[i] == 0.0) out.report.zero_norm_docs.push_back(store.ids()[i]);
    }

    std::vector<std::vector<Neighbor>> lists(n);
    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(n);
        for (std::size_t i = begin; i < end; ++i) {
            cand.clear();
            const auto a = store.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double sim = 0.0;
                if (norms[i] != 0.0 && norms[j] != 0.0) {
                    sim = std::clamp(dot(a, store.row(j)) / (norms[i] * norms[j]), -1.0, 1.0);
                }
                cand.emplace_back(sim, j);
            }
            auto before = [&](const auto& x, const auto& y) {
                if (x.first != y.first) return x.first > y.first;
                return store.ids()[x.second] < store.ids()[y.second];
            };
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), before);
            auto& list = lists[i];
            list.reserve(keep);
            for (std::size_t r = 0; r < keep; ++r) list.push_back({store.ids()[cand[r].second], cand[r].first});
        }
    };

    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(n, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
    }

    NeighborhoodGraph::Adjacency adjacency;
    adjacency.reserve(n);
    for (std::size_t i = 0; i < n; ++i) adjacency.emplace_back(store.ids()[i], std::move(lists[i]));
    out.graph = NeighborhoodGraph::from_adjacency(k, std::move(adjacency));
    return out;
}

std::vector<Neighbor> neighbors(const NeighborhoodGraph& graph, std::string_view doc_id, std::size_t limit) {
    auto list = graph.adjacency(doc_id);
    const auto take = std::min(limit, list.size());
    return {list.begin(), list.begin() + static_cast<std::ptrdiff_t>(take)};
}

void save_graph(const NeighborhoodGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write graph file '" + path.string() + "'");
    out << "SUNAR-GRAPH v1 k=" << graph.k() << '\n';
    char buf[64];
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        const auto& id = graph.node(i);
        if (id.empty() || has_whitespace(id)) throw Error("doc_id '" + id + "' cannot be written to a graph file");
        out << id << '\t';
        bool first = true;
        for (const auto& n : graph.adjacency_at(i)) {
            std::snprintf(buf, sizeof(buf), "%.6f", n.similarity);
            if (!first) out << ' ';
            out << n.doc_id << ':' << buf;
            first = false;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

NeighborhoodGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open graph file '" + path.string() + "'");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto source = path.string();
    if (content.empty()) throw FormatError(source, 1, "empty graph file");
    if (content.back() != '\n') throw FormatError(source, 0, "truncated graph file (no final newline)");

    std::istringstream lines(content);
    std::string line;
    std::getline(lines, line);
    constexpr std::string_view kHeader = "SUNAR-GRAPH v1 k=";
    if (line.rfind("SUNAR-GRAPH ", 0) == 0 && line.rfind(kHeader, 0) != 0) {
        throw FormatError(source, 1, "unsupported graph version in header '" + line + "'");
    }
    if (line.rfind(kHeader, 0) != 0) throw FormatError(source, 1, "bad graph header '" + line + "'");
    std::size_t k = 0;
    {
        auto tail = std::string_view(line).substr(kHeader.size());
        auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
        if (ec != std::errc() || p != tail.data() + tail.size() || k == 0) {
            throw FormatError(source, 1, "bad k in graph header");
        }
    }

    NeighborhoodGraph::Adjacency adjacency;
    std::size_t lineno = 1;
    while (std::getline(lines, line)) {
        ++lineno;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) throw FormatError(source, lineno, "expected '<doc_id>\\t<neighbors>'");
        std::vector<Neighbor> list;
        std::istringstream entries(line.substr(tab + 1));
        std::string entry;
        while (entries >> entry) {
            auto colon = entry.rfind(':');
            if (colon == std::string::npos || colon == 0) throw FormatError(source, lineno, "bad neighbor entry '" + entry + "'");
            auto num = std::string_view(entry).substr(colon + 1);
            auto dotp = num.find('.');
            if (dotp == std::string_view::npos || num.size() - dotp - 1 != 6) {
                throw FormatError(source, lineno, "truncated or malformed similarity in '" + entry + "'");
            }
            double sim = 0.0;
            try {
                std::size_t used = 0;
                sim = std::stod(std::string(num), &used);
                if (used != num.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw FormatError(source, lineno, "bad similarity in '" + entry + "'");
            }
            list.push_back({entry.substr(0, colon), sim});
        }
        adjacency.emplace_back(line.substr(0, tab), std::move(list));
    }
    try {
        return NeighborhoodGraph::from_adjacency(k, std::move(adjacency), false);
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError("graph file '" + source + "' is truncated or corrupt: " + e.what());
    }
}

}  // namespace sunar
