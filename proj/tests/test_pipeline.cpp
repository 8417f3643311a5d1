#include <doctest.h>

#include "dksh/pipeline.hpp"
#include "test_util.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dksh;

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// small planted-partition dataset on disk + a fast configuration
ExperimentConfig small_sbm_config(const std::string& tag, std::uint64_t seed = 17) {
    auto [g, labels] = dksh::test::sbm_graph(90, 3, 0.30, 0.02, seed);
    std::string edges, lab;
    for (int i = 0; i < g.num_nodes; ++i)
        for (int j : g.adjacency[static_cast<std::size_t>(i)])
            if (i < j) edges += std::to_string(i) + " " + std::to_string(j) + "\n";
    for (int i = 0; i < g.num_nodes; ++i)
        lab += std::to_string(i) + " c" +
               std::to_string(labels.node_class[static_cast<std::size_t>(i)]) + "\n";

    ExperimentConfig cfg;
    cfg.edges_path = dksh::test::write_file(tag + ".edges", edges);
    cfg.labels_path = dksh::test::write_file(tag + ".labels", lab);
    cfg.out_dir = dksh::test::tmp_path(tag + "_out");
    std::filesystem::remove_all(cfg.out_dir);
    cfg.walk.window_size = 4;
    cfg.walk.walk_length = 20;
    cfg.walk.walks_per_node = 4;
    cfg.num_layers = 2;
    cfg.kernels_per_layer = 4;
    cfg.landmarks = 30;
    cfg.code_bits = 12;
    cfg.trainer.max_outer_iters = 2;
    cfg.ratios = {0.5};
    cfg.seeds = {1};
    return cfg;
}

}  // namespace

TEST_SUITE("pipeline") {
    TEST_CASE("config file parsing and overrides") {
        const std::string cfg_text =
            "# experiment\n"
            "edges = data/x.edges\n"
            "labels = data/x.labels\n"
            "out = out/x\n"
            "window_size = 8\n"
            "ratios = 0.1, 0.5 ,0.9\n"
            "seeds = 1,2\n"
            "lambda = 1e-3\n"
            "median_rbf = false\n";
        const auto p = dksh::test::write_file("cfg.txt", cfg_text);
        ExperimentConfig cfg = load_config(p);
        CHECK(cfg.edges_path == "data/x.edges");
        CHECK(cfg.walk.window_size == 8);
        CHECK(cfg.ratios == std::vector<double>{0.1, 0.5, 0.9});
        CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
        CHECK(cfg.lambda == 1e-3);
        CHECK(cfg.median_rbf == false);

        apply_config_line(cfg, "code_bits", "16");
        CHECK(cfg.code_bits == 16);
        CHECK_THROWS_WITH_AS(apply_config_line(cfg, "no_such_key", "1"),
                             doctest::Contains("unknown key"), std::runtime_error);

        const auto bad = dksh::test::write_file("cfg_bad.txt", "edges data/x\n");
        CHECK_THROWS_AS(load_config(bad), std::runtime_error);
    }

    TEST_CASE("validation catches inconsistent settings") {
        ExperimentConfig cfg;
        cfg.edges_path = "e";
        cfg.labels_path = "l";
        cfg.code_bits = 300;
        cfg.landmarks = 256;
        CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("code_bits"), std::runtime_error);
        cfg.code_bits = 16;
        cfg.ratios = {1.2};
        CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
    }

    TEST_CASE("l2 row normalization") {
        Matrix P(2, 2);
        P << 3, 4, 0, 0;
        const Matrix Q = l2_normalize_rows(P);
        CHECK(Q(0, 0) == doctest::Approx(0.6));
        CHECK(Q(0, 1) == doctest::Approx(0.8));
        CHECK(Q(1, 0) == 0.0);  // zero rows pass through
    }

    TEST_CASE("planted partitions are classified well end to end") {
        ExperimentConfig cfg = small_sbm_config("sbm_e2e");
        const ResultTable table = run_pipeline(cfg);
        REQUIRE(table.rows.size() == 1);
        REQUIRE(table.rows[0].status == "ok");
        // easy 3-block SBM: structure alone separates the classes
        CHECK(table.rows[0].accuracy >= 0.8);
        CHECK(std::filesystem::exists(cfg.out_dir + "/results.csv"));
    }

    TEST_CASE("row and aggregate counts follow the grid") {
        ExperimentConfig cfg = small_sbm_config("sbm_grid");
        cfg.trainer.max_outer_iters = 0;
        cfg.seeds = {1, 2, 3};
        const ResultTable table = run_pipeline(cfg);
        CHECK(table.rows.size() == 3);
        REQUIRE(table.aggregates.size() == 1);
        CHECK(table.aggregates[0].count == 3);
        const std::string csv = table.to_csv();
        CHECK(csv.find("aggregate") != std::string::npos);
    }

    TEST_CASE("repeated runs produce byte-identical results") {
        ExperimentConfig cfg = small_sbm_config("sbm_det");
        cfg.trainer.max_outer_iters = 1;
        run_pipeline(cfg);
        const std::string first = file_bytes(cfg.out_dir + "/results.csv");

        // cached rerun
        run_pipeline(cfg);
        CHECK(file_bytes(cfg.out_dir + "/results.csv") == first);

        // fresh rerun without any cache
        ExperimentConfig fresh = cfg;
        fresh.out_dir = dksh::test::tmp_path("sbm_det_fresh");
        std::filesystem::remove_all(fresh.out_dir);
        fresh.use_cache = false;
        run_pipeline(fresh);
        CHECK(file_bytes(fresh.out_dir + "/results.csv") == first);
    }

    TEST_CASE("cache checking mode validates cached artifacts") {
        ExperimentConfig cfg = small_sbm_config("sbm_cachechk");
        cfg.trainer.max_outer_iters = 0;
        run_pipeline(cfg);
        setenv("DKSH_CACHE_CHECK", "1", 1);
        const ResultTable table = run_pipeline(cfg);
        unsetenv("DKSH_CACHE_CHECK");
        REQUIRE(table.rows.size() == 1);
        CHECK(table.rows[0].status == "ok");
    }

    TEST_CASE("failed cells are recorded, not fatal") {
        ExperimentConfig cfg = small_sbm_config("sbm_fail");
        cfg.trainer.max_outer_iters = 0;
        cfg.ratios = {0.5, 0.999};  // second ratio yields an empty test set
        const ResultTable table = run_pipeline(cfg);
        REQUIRE(table.rows.size() == 2);
        CHECK(table.rows[0].status == "ok");
        CHECK(table.rows[1].status != "ok");
        CHECK(table.to_csv().find("error:") != std::string::npos);
    }

    TEST_CASE("sweep over the code length") {
        ExperimentConfig cfg = small_sbm_config("sbm_sweep");
        cfg.trainer.max_outer_iters = 0;
        cfg.ratios = {0.9};
        const ResultTable table = run_sweep(cfg, "M", {4, 8});
        CHECK(table.rows.size() == 2);
        CHECK(std::filesystem::exists(cfg.out_dir + "/sweep_M.csv"));
        const std::string csv = file_bytes(cfg.out_dir + "/sweep_M.csv");
        CHECK(csv.find("M,4") != std::string::npos);
        CHECK(csv.find("M,8") != std::string::npos);
        CHECK_THROWS_WITH_AS(run_sweep(cfg, "q", {1}), doctest::Contains("unknown parameter"),
                             std::runtime_error);
    }
}
