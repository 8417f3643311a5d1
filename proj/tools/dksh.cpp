// dksh — deep kernel supervised hashing for node classification.
// Subcommands cover the individual pipeline stages plus the orchestrated
// experiment (`evaluate`) and parameter sweeps (`sweep`).

#include <CLI11.hpp>

#include "dksh/deep_kernel.hpp"
#include "dksh/graph.hpp"
#include "dksh/kernel_hasher.hpp"
#include "dksh/mkl_trainer.hpp"
#include "dksh/pipeline.hpp"
#include "dksh/similarity.hpp"
#include "dksh/svm.hpp"
#include "dksh/walker.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace dksh;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out;
    double ratio = -1.0;
    long long seed = -1;
    int window_size = -1, walk_length = -1, walks_per_node = -1;
    int landmarks = -1, code_bits = -1;
    double lambda = -1.0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "configuration file (key = value lines)");
    cmd->add_option("--out", o.out, "output directory override");
    cmd->add_option("--ratio", o.ratio, "labeled training ratio in (0,1)");
    cmd->add_option("--seed", o.seed, "experiment seed");
    cmd->add_option("--window-size", o.window_size, "walk window size p");
    cmd->add_option("--walk-length", o.walk_length, "walk length l");
    cmd->add_option("--walks-per-node", o.walks_per_node, "walks per node gamma");
    cmd->add_option("--landmarks", o.landmarks, "landmark count R");
    cmd->add_option("--code-bits", o.code_bits, "hash code length M");
    cmd->add_option("--lambda", o.lambda, "hashing regularization");
}

ExperimentConfig make_config(const CommonOpts& o) {
    ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = load_config(o.config_path);
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.window_size > 0) cfg.walk.window_size = o.window_size;
    if (o.walk_length > 0) cfg.walk.walk_length = o.walk_length;
    if (o.walks_per_node > 0) cfg.walk.walks_per_node = o.walks_per_node;
    if (o.landmarks > 0) cfg.landmarks = o.landmarks;
    if (o.code_bits > 0) cfg.code_bits = o.code_bits;
    if (o.lambda >= 0.0) cfg.lambda = o.lambda;
    if (o.ratio > 0.0) cfg.ratios = {o.ratio};
    if (o.seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(o.seed)};
    return cfg;
}

double cell_ratio(const ExperimentConfig& cfg) { return cfg.ratios.front(); }
std::uint64_t cell_seed(const ExperimentConfig& cfg) { return cfg.seeds.front(); }

WalkConfig cell_walk_config(const ExperimentConfig& cfg) {
    WalkConfig w = cfg.walk;
    w.seed = mix_seed(cell_seed(cfg), fnv1a("walk"));
    return w;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep kernel supervised hashing pipeline"};
    app.require_subcommand(1);

    CommonOpts o;

    auto* c_walk = app.add_subcommand("walk", "generate random walks");
    auto* c_structure = app.add_subcommand("structure", "accumulate the structure matrix");
    auto* c_similarity = app.add_subcommand("similarity", "build the supervision matrix");
    auto* c_train = app.add_subcommand("dkl-train", "train the deep kernel mixing weights");
    auto* c_hash = app.add_subcommand("hash", "solve the hashing eigenproblem and emit codes");
    auto* c_classify = app.add_subcommand("classify", "train/apply the linear classifier on codes");
    auto* c_evaluate = app.add_subcommand("evaluate", "run the full experiment grid");
    auto* c_sweep = app.add_subcommand("sweep", "sensitivity sweep over one parameter");

    for (auto* c : {c_walk, c_structure, c_similarity, c_train, c_hash, c_classify, c_evaluate, c_sweep})
        add_common(c, o);

    std::string sweep_param;
    std::string sweep_values;
    c_sweep->add_option("--parameter", sweep_param, "one of R, M, p, l, gamma")->required();
    c_sweep->add_option("--values", sweep_values, "comma-separated values")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = make_config(o);

        if (c_evaluate->parsed()) {
            const ResultTable table = run_pipeline(cfg);
            std::cout << table.to_pretty();
            std::cout << "results written to " << cfg.out_dir << "/results.csv\n";
            return 0;
        }
        if (c_sweep->parsed()) {
            std::vector<double> values;
            std::stringstream ss(sweep_values);
            std::string item;
            while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
            const ResultTable table = run_sweep(cfg, sweep_param, values);
            std::cout << table.to_pretty();
            std::cout << "sweep written to " << cfg.out_dir << "/sweep_" << sweep_param << ".csv\n";
            return 0;
        }

        cfg.validate();
        std::filesystem::create_directories(cfg.out_dir);
        const Graph g = load_graph(cfg.edges_path);
        const LabelMap labels = load_labels(cfg.labels_path, g);
        save_remap_csv(g, cfg.out_dir + "/remap.csv");

        const std::string walks_path = cfg.out_dir + "/walks.txt";
        const std::string p_path = cfg.out_dir + "/P.bin";
        const std::string s_path = cfg.out_dir + "/S.csv";
        const std::string net_path = cfg.out_dir + "/net.txt";
        const std::string codes_path = cfg.out_dir + "/codes.txt";

        if (c_walk->parsed()) {
            const WalkSet ws = generate_walks(g, cell_walk_config(cfg));
            save_walks(ws, walks_path);
            std::cout << "wrote " << ws.walks.size() << " walks to " << walks_path << "\n";
            return 0;
        }
        if (c_structure->parsed()) {
            const WalkSet ws = load_walks(walks_path);
            const Matrix P = build_structure_matrix(ws, cell_walk_config(cfg), g.num_nodes);
            save_structure_matrix(P, p_path);
            std::cout << "wrote " << g.num_nodes << "x" << g.num_nodes << " structure matrix to "
                      << p_path << "\n";
            return 0;
        }

        const Split split = make_split(labels, cell_ratio(cfg), cell_seed(cfg), cfg.stratified);

        if (c_similarity->parsed()) {
            const Matrix P = load_structure_matrix(p_path);
            const SimilarityMatrix sim = compute_similarity(P, labels, split, cfg.similarity_all_labeled);
            save_similarity_csv(sim, s_path);
            std::cout << "wrote " << sim.supervised_pairs << " supervised pairs to " << s_path << "\n";
            return 0;
        }
        if (c_train->parsed()) {
            const Matrix P = load_structure_matrix(p_path);
            const Matrix p_feat = cfg.dkl_normalize_rows ? l2_normalize_rows(P) : P;
            DeepKernelNet net0 = DeepKernelNet::standard(cfg.num_layers, cfg.kernels_per_layer);
            net0.rescale_hidden = cfg.rescale_hidden;
            net0.median_rbf = cfg.median_rbf;
            std::vector<TrainLogRow> log;
            const DeepKernelNet net = train(p_feat, net0, labels, split, cfg.trainer, &log);
            save_net(net, net_path);
            save_train_log_csv(log, cfg.out_dir + "/train_log.csv");
            std::cout << "trained deep kernel written to " << net_path << "\n";
            return 0;
        }
        if (c_hash->parsed()) {
            const Matrix P = load_structure_matrix(p_path);
            const Matrix p_feat = cfg.dkl_normalize_rows ? l2_normalize_rows(P) : P;
            const DeepKernelNet net = load_net(net_path);
            const SimilarityMatrix sim = load_similarity_csv(s_path, g.num_nodes);
            const int R = std::min(cfg.landmarks, g.num_nodes);
            const std::vector<int> landmarks =
                select_landmarks(g.num_nodes, R, mix_seed(cell_seed(cfg), fnv1a("landmarks")));
            const Matrix k_rn = forward_slice(p_feat, net, landmarks);
            Matrix k_rr(R, R);
            for (int a = 0; a < R; ++a)
                for (int b = 0; b < R; ++b)
                    k_rr(a, b) = k_rn(a, landmarks[static_cast<std::size_t>(b)]);
            HashModel model = solve_hashing(k_rn, k_rr, sim, std::min(cfg.code_bits, R), cfg.lambda,
                                            cfg.hash_pick_largest);
            model.landmarks = landmarks;
            save_hash_model(model, cfg.out_dir + "/hash_model.bin");
            save_codes(encode(k_rn, model), codes_path);
            std::cout << "wrote " << model.code_bits << "-bit codes to " << codes_path << "\n";
            return 0;
        }
        if (c_classify->parsed()) {
            const Eigen::MatrixXi codes = load_codes(codes_path);
            const auto ntr = static_cast<Eigen::Index>(split.train_nodes.size());
            const auto nte = static_cast<Eigen::Index>(split.test_nodes.size());
            Matrix x_train(ntr, codes.cols()), x_test(nte, codes.cols());
            std::vector<int> y_train, y_test;
            for (Eigen::Index i = 0; i < ntr; ++i) {
                const int v = split.train_nodes[static_cast<std::size_t>(i)];
                x_train.row(i) = codes.row(v).cast<double>();
                y_train.push_back(labels.node_class[static_cast<std::size_t>(v)]);
            }
            for (Eigen::Index i = 0; i < nte; ++i) {
                const int v = split.test_nodes[static_cast<std::size_t>(i)];
                x_test.row(i) = codes.row(v).cast<double>();
                y_test.push_back(labels.node_class[static_cast<std::size_t>(v)]);
            }
            const LinearSvmModel lin =
                train_linear_svm(x_train, y_train, labels.num_classes, cfg.linear_svm_c);
            save_linear_svm(lin, cfg.out_dir + "/linear_svm.txt");
            const std::vector<int> pred = predict(lin, x_test);
            std::ofstream pf(cfg.out_dir + "/predictions.csv");
            pf << "node,predicted,actual\n";
            for (std::size_t i = 0; i < pred.size(); ++i)
                pf << split.test_nodes[i] << "," << labels.class_tokens[static_cast<std::size_t>(pred[i])]
                   << "," << labels.class_tokens[static_cast<std::size_t>(y_test[i])] << "\n";
            std::cout << strf("accuracy %.4f on %zu test nodes\n", accuracy(pred, y_test), pred.size());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
