#include <doctest.h>
#include <omp.h>

#include "dksh/reference.hpp"
#include "dksh/walker.hpp"
#include "test_util.hpp"

#include <fstream>
#include <random>
#include <sstream>

using namespace dksh;
using dksh::test::path_graph;

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

WalkSet random_walkset(int n, int num_walks, int len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    WalkSet ws;
    ws.num_nodes = n;
    ws.walk_length = len;
    for (int w = 0; w < num_walks; ++w) {
        std::vector<int> walk(static_cast<std::size_t>(len));
        for (int s = 0; s < len; ++s) walk[static_cast<std::size_t>(s)] = static_cast<int>(bounded(rng, n));
        ws.walks.push_back(std::move(walk));
    }
    return ws;
}

}  // namespace

TEST_SUITE("walker") {
    TEST_CASE("walk count and length contract") {
        const Graph g = path_graph(3);
        WalkConfig cfg;
        cfg.window_size = 2;
        cfg.walk_length = 4;
        cfg.walks_per_node = 2;
        cfg.seed = 5;
        const WalkSet ws = generate_walks(g, cfg);
        REQUIRE(ws.walks.size() == 6);
        for (const auto& w : ws.walks) CHECK(w.size() == 4);
    }

    TEST_CASE("every consecutive pair is an edge") {
        const Graph g = path_graph(7);
        WalkConfig cfg;
        cfg.window_size = 3;
        cfg.walk_length = 12;
        cfg.walks_per_node = 3;
        cfg.seed = 9;
        const WalkSet ws = generate_walks(g, cfg);
        for (const auto& w : ws.walks) {
            for (std::size_t s = 0; s + 1 < w.size(); ++s) {
                const auto& adj = g.adjacency[static_cast<std::size_t>(w[s])];
                CHECK(std::binary_search(adj.begin(), adj.end(), w[s + 1]));
            }
        }
        // each pass starts one walk at every node
        std::vector<int> starts;
        for (std::size_t k = 0; k < 7; ++k) starts.push_back(ws.walks[k][0]);
        std::sort(starts.begin(), starts.end());
        CHECK(starts == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
    }

    TEST_CASE("same seed gives a byte-identical walk file, any thread count") {
        const Graph g = path_graph(9);
        WalkConfig cfg;
        cfg.window_size = 2;
        cfg.walk_length = 6;
        cfg.walks_per_node = 4;
        cfg.seed = 1234;

        const int saved = omp_get_max_threads();
        omp_set_num_threads(1);
        const WalkSet a = generate_walks(g, cfg);
        omp_set_num_threads(saved > 1 ? saved : 2);
        const WalkSet b = generate_walks(g, cfg);
        omp_set_num_threads(saved);
        CHECK(a.walks == b.walks);

        const auto pa = dksh::test::tmp_path("walks_a.txt");
        const auto pb = dksh::test::tmp_path("walks_b.txt");
        save_walks(a, pa);
        save_walks(b, pb);
        CHECK(file_bytes(pa) == file_bytes(pb));

        const WalkSet c = load_walks(pa);
        CHECK(c.walks == a.walks);
    }

    TEST_CASE("hand-applied window weights") {
        WalkConfig cfg;
        cfg.window_size = 2;
        cfg.walk_length = 3;
        cfg.walks_per_node = 1;

        WalkSet ws;
        ws.num_nodes = 3;
        ws.walk_length = 3;
        ws.walks = {{0, 1, 2}};  // a, b, c
        const Matrix P = build_structure_matrix(ws, cfg, 3);
        CHECK(P(0, 1) == 1.0);   // dis 1: (2+1-1)/2
        CHECK(P(0, 2) == 0.5);   // dis 2: (2+1-2)/2
        CHECK(P(1, 0) == 1.0);
        CHECK(P(1, 2) == 1.0);
        CHECK(P(2, 0) == 0.5);
        CHECK(P(2, 1) == 1.0);
        CHECK(P.diagonal().isZero(0.0));
    }

    TEST_CASE("two-node walk, p=1") {
        WalkConfig cfg;
        cfg.window_size = 1;
        cfg.walk_length = 2;
        WalkSet ws;
        ws.num_nodes = 2;
        ws.walk_length = 2;
        ws.walks = {{0, 1}};
        const Matrix P = build_structure_matrix(ws, cfg, 2);
        CHECK(P(0, 1) == 1.0);
        CHECK(P(1, 0) == 1.0);
        CHECK(P(0, 0) == 0.0);
    }

    TEST_CASE("nodes never within the window stay zero") {
        WalkConfig cfg;
        cfg.window_size = 1;
        cfg.walk_length = 3;
        WalkSet ws;
        ws.num_nodes = 3;
        ws.walk_length = 3;
        ws.walks = {{0, 1, 2}};
        const Matrix P = build_structure_matrix(ws, cfg, 3);
        CHECK(P(0, 2) == 0.0);
        CHECK(P(2, 0) == 0.0);
    }

    TEST_CASE("literal self-pair mode weights the diagonal") {
        WalkConfig cfg;
        cfg.window_size = 2;
        cfg.walk_length = 3;
        cfg.include_self_pairs = true;
        WalkSet ws;
        ws.num_nodes = 3;
        ws.walk_length = 3;
        ws.walks = {{0, 1, 2}};
        const Matrix P = build_structure_matrix(ws, cfg, 3);
        CHECK(P(0, 0) == doctest::Approx(1.5));  // (p+1)/p once
        CHECK(P(1, 1) == doctest::Approx(1.5));
    }

    TEST_CASE("optimized accumulation equals the naive double loop exactly") {
        std::mt19937_64 rng(77);
        for (int trial = 0; trial < 40; ++trial) {
            const int n = 2 + static_cast<int>(bounded(rng, 49));
            const int p = 1 + static_cast<int>(bounded(rng, 5));
            const int len = p + 2 + static_cast<int>(bounded(rng, 20));
            const int walks = 1 + static_cast<int>(bounded(rng, 30));
            WalkConfig cfg;
            cfg.window_size = p;
            cfg.walk_length = len;
            cfg.include_self_pairs = (trial % 5 == 0);
            const WalkSet ws = random_walkset(n, walks, len, rng());
            const Matrix a = build_structure_matrix(ws, cfg, n);
            const Matrix b = ref::structure_matrix_naive(ws, cfg, n);
            CHECK(a == b);  // bit-exact
        }
    }

    TEST_CASE("adding a walk never decreases an entry; weights bounded") {
        WalkConfig cfg;
        cfg.window_size = 3;
        cfg.walk_length = 8;
        WalkSet ws = random_walkset(12, 6, 8, 5);
        const Matrix before = build_structure_matrix(ws, cfg, 12);
        ws.walks.push_back(random_walkset(12, 1, 8, 6).walks[0]);
        const Matrix after = build_structure_matrix(ws, cfg, 12);
        CHECK(((after - before).array() >= -0.0).all());

        // single walk over distinct nodes: max entry is the dis=1 weight 1.0,
        // smallest positive entry is 1/p
        WalkSet one;
        one.num_nodes = 8;
        one.walk_length = 8;
        one.walks = {{0, 1, 2, 3, 4, 5, 6, 7}};
        const Matrix P = build_structure_matrix(one, cfg, 8);
        CHECK(P.maxCoeff() == 1.0);
        double min_pos = 1e9;
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                if (P(i, j) > 0.0) min_pos = std::min(min_pos, P(i, j));
        CHECK(min_pos == doctest::Approx(1.0 / cfg.window_size));
    }

    TEST_CASE("walk index out of range") {
        WalkConfig cfg;
        cfg.window_size = 1;
        cfg.walk_length = 2;
        WalkSet ws;
        ws.walks = {{0, 5}};
        CHECK_THROWS_WITH_AS(build_structure_matrix(ws, cfg, 3), doctest::Contains("out of range"),
                             std::runtime_error);
    }

    TEST_CASE("config validation") {
        WalkConfig cfg;
        cfg.window_size = 5;
        cfg.walk_length = 5;
        CHECK_THROWS_AS(cfg.validate(), std::runtime_error);  // p must be < l
        cfg.walk_length = 6;
        CHECK_NOTHROW(cfg.validate());
        cfg.walks_per_node = 0;
        CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
    }

    TEST_CASE("structure matrix binary round trip and csv export") {
        WalkConfig cfg;
        cfg.window_size = 2;
        cfg.walk_length = 5;
        const WalkSet ws = random_walkset(6, 4, 5, 3);
        const Matrix P = build_structure_matrix(ws, cfg, 6);
        const auto pb = dksh::test::tmp_path("P.bin");
        save_structure_matrix(P, pb);
        const Matrix Q = load_structure_matrix(pb);
        CHECK(P == Q);
        CHECK_NOTHROW(export_structure_matrix_csv(P, dksh::test::tmp_path("P.csv")));
    }
}
