#pragma once

#include "dksh/common.hpp"
#include "dksh/graph.hpp"
#include "dksh/mkl_trainer.hpp"
#include "dksh/walker.hpp"

#include <string>
#include <vector>

namespace dksh {

struct ExperimentConfig {
    std::string edges_path;
    std::string labels_path;
    std::string out_dir = "out";

    WalkConfig walk;  // walk.seed is ignored; per-cell seeds are derived

    int num_layers = 3;
    int kernels_per_layer = 4;
    TrainerConfig trainer;

    int landmarks = 256;   // R
    int code_bits = 128;   // M
    double lambda = 1e-4;
    double linear_svm_c = 1.0;

    std::vector<double> ratios = {0.9};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    bool stratified = false;
    bool dkl_normalize_rows = true;      // l2-normalize P rows before the DKL stages
    bool rescale_hidden = true;
    bool median_rbf = true;
    bool include_self_pairs = false;
    bool similarity_all_labeled = false; // reproduction mode: test labels leak into S
    bool hash_pick_largest = false;
    bool use_cache = true;

    void validate() const;
};

ExperimentConfig load_config(const std::string& path);
// parse a single `key = value` assignment (file lines and CLI overrides)
void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct ResultRow {
    double ratio = 0.0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    std::string status;  // "ok" or the error message
};

struct Aggregate {
    double ratio = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<Aggregate> aggregates;

    void compute_aggregates();
    std::string to_csv() const;
    std::string to_pretty() const;
};

// Full experiment: for every (ratio, seed) cell run
// walks -> structure matrix -> similarity -> DKL training -> hashing ->
// linear SVM -> accuracy, with stage outputs cached on disk under
// out_dir/cache keyed by content hashes. Writes out_dir/results.csv.
ResultTable run_pipeline(const ExperimentConfig& cfg);

// One cell of the experiment grid (shares the same cache).
double run_cell(const ExperimentConfig& cfg, const Graph& g, const LabelMap& labels, double ratio,
                std::uint64_t seed);

// parameter in {R, M, p, l, gamma}: one pipeline run per value at ratio 0.9,
// emits out_dir/sweep_<parameter>.csv
ResultTable run_sweep(const ExperimentConfig& cfg, const std::string& parameter,
                      const std::vector<double>& values);

Matrix l2_normalize_rows(const Matrix& P);

std::uint64_t labels_content_hash(const LabelMap& labels);

}  // namespace dksh
