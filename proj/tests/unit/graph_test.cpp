#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "reference.hpp"
#include "sunar/errors.hpp"
#include "sunar/graph.hpp"

using namespace sunar;

namespace {

EmbeddingStore store_of(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    EmbeddingStore s(rows.front().second.size());
    for (const auto& [id, v] : rows) s.add(id, v);
    return s;
}

std::vector<std::pair<std::string, std::vector<double>>> random_rows(std::mt19937_64& rng, std::size_t n,
                                                                       std::size_t dim) {
    std::normal_distribution<double> g;
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (auto& x : v) x = g(rng);
        char id[16];
        std::snprintf(id, sizeof id, "n%04zu", i);
        rows.emplace_back(id, v);
    }
    return rows;
}

const std::vector<std::pair<std::string, std::vector<double>>> kThree = {
    {"d1", {1.0, 0.0}}, {"d2", {0.9, 0.1}}, {"d3", {0.0, 1.0}}};

}  // namespace

TEST_CASE("three-vector example, k=1") {
    const auto g = build_graph(store_of(kThree), 1).graph;
    REQUIRE(g.adjacency("d1").size() == 1);
    CHECK(g.adjacency("d1")[0].doc_id == "d2");
    CHECK(g.adjacency("d2")[0].doc_id == "d1");
    CHECK(g.adjacency("d3")[0].doc_id == "d2");
    const auto oracle = ref::knn(kThree, 1);
    CHECK(g.adjacency("d3")[0].similarity == doctest::Approx(oracle.at("d3")[0].score).epsilon(1e-12));

    const auto nb = neighbors(g, "d3", 1);
    REQUIRE(nb.size() == 1);
    CHECK(nb[0].doc_id == "d2");
    CHECK(neighbors(g, "d3", 0).empty());
    CHECK_THROWS_WITH(neighbors(g, "zz", 3), doctest::Contains("zz"));
}

TEST_CASE("k >= |V| gives |V|-1 neighbors") {
    std::mt19937_64 rng(1);
    const auto g = build_graph(store_of(random_rows(rng, 7, 4)), 100).graph;
    for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(g.adjacency_at(i).size() == 6);
    CHECK(g.edge_count() == 42);
}

TEST_CASE("build_graph equals brute-force cosine KNN") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rows = random_rows(rng, 3 + rng() % 40, 2 + rng() % 8);
        const std::size_t k = 1 + rng() % 12;
        const auto g = build_graph(store_of(rows), k).graph;
        const auto oracle = ref::knn(rows, k);
        for (const auto& [id, want] : oracle) {
            const auto got = g.adjacency(id);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < want.size(); ++i) {
                CHECK(got[i].doc_id == want[i].id);
                CHECK(got[i].similarity == doctest::Approx(want[i].score).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("adjacency lists are ordered, self-free and k-bounded") {
    std::mt19937_64 rng(3);
    const auto g = build_graph(store_of(random_rows(rng, 60, 5)), 8).graph;
    CHECK(g.edge_count() == 8 * 60);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const auto adj = g.adjacency_at(i);
        CHECK(adj.size() == 8);
        for (std::size_t j = 0; j < adj.size(); ++j) {
            CHECK(adj[j].doc_id != g.node(i));
            CHECK(adj[j].similarity >= -1.0);
            CHECK(adj[j].similarity <= 1.0);
            if (j > 0) {
                const bool ordered = adj[j - 1].similarity > adj[j].similarity ||
                                     (adj[j - 1].similarity == adj[j].similarity && adj[j - 1].doc_id < adj[j].doc_id);
                CHECK(ordered);
            }
        }
    }
}

TEST_CASE("similarity is symmetric") {
    std::mt19937_64 rng(4);
    const auto g = build_graph(store_of(random_rows(rng, 30, 6)), 29).graph;
    for (std::size_t i = 0; i < g.node_count(); ++i)
        for (const auto& nb : g.adjacency_at(i))
            for (const auto& back : g.adjacency(nb.doc_id))
                if (back.doc_id == g.node(i)) CHECK(std::abs(back.similarity - nb.similarity) < 1e-9);
}

TEST_CASE("neighbor order is invariant under positive scaling") {
    std::mt19937_64 rng(5);
    auto rows = random_rows(rng, 40, 6);
    const auto g1 = build_graph(store_of(rows), 6).graph;
    for (auto& [id, v] : rows)
        for (auto& x : v) x *= 37.5;
    const auto g2 = build_graph(store_of(rows), 6).graph;
    for (std::size_t i = 0; i < g1.node_count(); ++i) {
        const auto a = g1.adjacency_at(i);
        const auto b = g2.adjacency_at(i);
        REQUIRE(a.size() == b.size());
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j].doc_id == b[j].doc_id);
    }
}

TEST_CASE("build is deterministic across runs and thread counts") {
    std::mt19937_64 rng(6);
    const auto store = store_of(random_rows(rng, 120, 8));
    const auto one = build_graph(store, 10, 1).graph;
    CHECK(build_graph(store, 10, 1).graph == one);
    CHECK(build_graph(store, 10, 4).graph == one);
    CHECK(build_graph(store, 10, 7).graph == one);
}

TEST_CASE("zero-norm vectors are reported and have similarity 0") {
    const auto store = store_of({{"a", {1.0, 0.0}}, {"z", {0.0, 0.0}}, {"b", {-1.0, 0.0}}});
    const auto built = build_graph(store, 2);
    CHECK(built.report.zero_norm_docs == std::vector<std::string>{"z"});
    for (const auto& nb : built.graph.adjacency("z")) CHECK(nb.similarity == 0.0);
    CHECK(built.graph.adjacency("a")[0].doc_id == "z");  // 0 beats -1
}

TEST_CASE("build_graph preconditions") {
    CHECK_THROWS_AS(build_graph(EmbeddingStore(2), 1), Error);
    CHECK_THROWS_AS(build_graph(store_of(kThree), 0), Error);
}

TEST_CASE("graph save/load round trip") {
    ref::TempDir dir("graph");
    SUBCASE("three nodes") {
        const auto g = build_graph(store_of(kThree), 2).graph;
        save_graph(g, dir / "g.txt");
        const auto back = load_graph(dir / "g.txt");
        CHECK(back.k() == 2);
        CHECK(back.node_count() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto a = g.adjacency_at(i);
            const auto b = back.adjacency(g.node(i));
            REQUIRE(a.size() == b.size());
            for (std::size_t j = 0; j < a.size(); ++j) {
                CHECK(a[j].doc_id == b[j].doc_id);
                CHECK(std::abs(a[j].similarity - b[j].similarity) <= 5e-7);
            }
        }
        const auto text = ref::read_file(dir / "g.txt");
        CHECK(text.rfind("SUNAR-GRAPH v1 k=2\n", 0) == 0);
    }
    SUBCASE("1000 nodes keep k*|V| edges") {
        std::mt19937_64 rng(8);
        const auto g = build_graph(store_of(random_rows(rng, 1000, 4)), 5, 2).graph;
        save_graph(g, dir / "big.txt");
        const auto back = load_graph(dir / "big.txt");
        CHECK(back.edge_count() == 5000);
        CHECK(back.node_count() == 1000);
    }
    SUBCASE("corrupt or truncated files") {
        ref::write_file(dir / "h.txt", "SUNAR-GRAPH v2 k=1\na\tb:0.5\nb\ta:0.5\n");
        CHECK_THROWS_AS(load_graph(dir / "h.txt"), Error);
        ref::write_file(dir / "x.txt", "garbage\n");
        CHECK_THROWS_AS(load_graph(dir / "x.txt"), Error);
        ref::write_file(dir / "t.txt", "SUNAR-GRAPH v1 k=1\na\tb:0.5\n");
        CHECK_THROWS_AS(load_graph(dir / "t.txt"), Error);  // b is referenced but missing
        ref::write_file(dir / "s.txt", "SUNAR-GRAPH v1 k=1\na\ta:1.000000\n");
        CHECK_THROWS_AS(load_graph(dir / "s.txt"), Error);  // self edge
        ref::write_file(dir / "e.txt", "");
        CHECK_THROWS_AS(load_graph(dir / "e.txt"), Error);
    }
}

TEST_CASE("from_adjacency validation") {
    using A = NeighborhoodGraph::Adjacency;
    CHECK_NOTHROW(NeighborhoodGraph::from_adjacency(2, A{{"a", {{"b", 0.9}}}, {"b", {{"a", 0.9}}}}));
    CHECK_THROWS_AS(NeighborhoodGraph::from_adjacency(1, A{{"a", {{"b", 0.9}, {"c", 0.8}}}, {"b", {}}, {"c", {}}}),
                    Error);
    CHECK_THROWS_AS(NeighborhoodGraph::from_adjacency(2, A{{"a", {{"b", 0.1}, {"c", 0.8}}}, {"b", {}}, {"c", {}}}),
                    Error);
    CHECK_THROWS_AS(NeighborhoodGraph::from_adjacency(2, A{{"a", {}}, {"a", {}}}), Error);
    const auto g = NeighborhoodGraph::from_adjacency(2, A{{"a", {}}, {"b", {}}});
    CHECK(g.adjacency_or_empty("nope").empty());
}
