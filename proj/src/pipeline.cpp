#include "dksh/pipeline.hpp"

#include "dksh/deep_kernel.hpp"
#include "dksh/kernel_hasher.hpp"
#include "dksh/similarity.hpp"
#include "dksh/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dksh {

void ExperimentConfig::validate() const {
    if (edges_path.empty()) fail("config: edges path missing");
    if (labels_path.empty()) fail("config: labels path missing");
    if (ratios.empty()) fail("config: ratios must be nonempty");
    for (double r : ratios)
        if (!(r > 0.0 && r < 1.0)) fail("config: every ratio must lie in (0,1)");
    if (seeds.empty()) fail("config: seeds must be nonempty");
    if (num_layers < 1 || kernels_per_layer < 1) fail("config: bad DKL architecture");
    if (landmarks < 1) fail("config: landmarks must be >= 1");
    if (code_bits < 1) fail("config: code_bits must be >= 1");
    if (code_bits > landmarks) fail("config: code_bits must not exceed landmarks");
    if (!(lambda >= 0.0)) fail("config: lambda must be >= 0");
    if (!(linear_svm_c > 0.0)) fail("config: linear_svm_c must be > 0");
    walk.validate();
    trainer.validate();
}

namespace {

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    fail("config: bad boolean '" + v + "'");
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, F conv) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(conv(item));
    }
    return out;
}

}  // namespace

void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "edges") cfg.edges_path = v;
    else if (key == "labels") cfg.labels_path = v;
    else if (key == "out") cfg.out_dir = v;
    else if (key == "window_size") cfg.walk.window_size = std::stoi(v);
    else if (key == "walk_length") cfg.walk.walk_length = std::stoi(v);
    else if (key == "walks_per_node") cfg.walk.walks_per_node = std::stoi(v);
    else if (key == "layers") cfg.num_layers = std::stoi(v);
    else if (key == "kernels_per_layer") cfg.kernels_per_layer = std::stoi(v);
    else if (key == "landmarks") cfg.landmarks = std::stoi(v);
    else if (key == "code_bits") cfg.code_bits = std::stoi(v);
    else if (key == "lambda") cfg.lambda = std::stod(v);
    else if (key == "linear_svm_c") cfg.linear_svm_c = std::stod(v);
    else if (key == "svm_c") cfg.trainer.svm_c = std::stod(v);
    else if (key == "svm_tol") cfg.trainer.svm_tol = std::stod(v);
    else if (key == "max_outer_iters") cfg.trainer.max_outer_iters = std::stoi(v);
    else if (key == "step_size") cfg.trainer.step_size = std::stod(v);
    else if (key == "sigma") cfg.trainer.sigma = std::stod(v);
    else if (key == "convergence_tol") cfg.trainer.convergence_tol = std::stod(v);
    else if (key == "ratios") cfg.ratios = parse_list<double>(v, [](const std::string& s) { return std::stod(s); });
    else if (key == "seeds") cfg.seeds = parse_list<std::uint64_t>(v, [](const std::string& s) { return std::stoull(s); });
    else if (key == "stratified") cfg.stratified = parse_bool(v);
    else if (key == "dkl_normalize_rows") cfg.dkl_normalize_rows = parse_bool(v);
    else if (key == "rescale_hidden") cfg.rescale_hidden = parse_bool(v);
    else if (key == "median_rbf") cfg.median_rbf = parse_bool(v);
    else if (key == "include_self_pairs") cfg.include_self_pairs = parse_bool(v);
    else if (key == "similarity_all_labeled") cfg.similarity_all_labeled = parse_bool(v);
    else if (key == "hash_pick_largest") cfg.hash_pick_largest = parse_bool(v);
    else if (key == "cache") cfg.use_cache = parse_bool(v);
    else fail("config: unknown key '" + key + "'");
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("load_config: cannot open '" + path + "'");
    ExperimentConfig cfg;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(strf("load_config: line %lld is not `key = value`", static_cast<long long>(line_no)));
        apply_config_line(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

void ResultTable::compute_aggregates() {
    aggregates.clear();
    std::vector<double> seen;
    for (const auto& r : rows) {
        if (std::find(seen.begin(), seen.end(), r.ratio) != seen.end()) continue;
        seen.push_back(r.ratio);
        double sum = 0.0, sum2 = 0.0;
        int count = 0;
        for (const auto& q : rows) {
            if (q.ratio != r.ratio || q.status != "ok") continue;
            sum += q.accuracy;
            sum2 += q.accuracy * q.accuracy;
            ++count;
        }
        Aggregate a;
        a.ratio = r.ratio;
        a.count = count;
        a.mean = count ? sum / count : 0.0;
        a.stddev = count ? std::sqrt(std::max(0.0, sum2 / count - a.mean * a.mean)) : 0.0;
        aggregates.push_back(a);
    }
}

std::string ResultTable::to_csv() const {
    std::string out = "ratio,seed,accuracy,status\n";
    for (const auto& r : rows) {
        if (r.status == "ok")
            out += strf("%.6g,%llu,%.6f,ok\n", r.ratio, static_cast<unsigned long long>(r.seed),
                        r.accuracy);
        else
            out += strf("%.6g,%llu,,error: %s\n", r.ratio, static_cast<unsigned long long>(r.seed),
                        r.status.c_str());
    }
    for (const auto& a : aggregates)
        out += strf("%.6g,aggregate,%.6f,mean over %d seed(s) (std %.6f)\n", a.ratio, a.mean, a.count,
                    a.stddev);
    return out;
}

std::string ResultTable::to_pretty() const {
    std::string out = strf("%-8s %-8s %-10s %s\n", "ratio", "seed", "accuracy", "status");
    for (const auto& r : rows)
        out += strf("%-8.3g %-8llu %-10.4f %s\n", r.ratio, static_cast<unsigned long long>(r.seed),
                    r.accuracy, r.status.c_str());
    for (const auto& a : aggregates)
        out += strf("%-8.3g %-8s %-10.4f mean +/- %.4f over %d seed(s)\n", a.ratio, "mean", a.mean,
                    a.stddev, a.count);
    return out;
}

Matrix l2_normalize_rows(const Matrix& P) {
    Matrix Q = P;
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        const double n = Q.row(i).norm();
        if (n > 0.0) Q.row(i) /= n;
    }
    return Q;
}

std::uint64_t labels_content_hash(const LabelMap& labels) {
    std::uint64_t h = fnv1a("labels");
    h = fnv1a(labels.node_class.data(), labels.node_class.size() * sizeof(int), h);
    for (const auto& t : labels.class_tokens) h = fnv1a(t, h);
    return h;
}

namespace {

struct StageCache {
    std::string dir;
    bool enabled = true;
    bool check = false;  // DKSH_CACHE_CHECK: verify cached artifacts against recomputation

    std::string path(const std::string& stem, std::uint64_t key, const char* ext) const {
        return dir + "/" + stem + "_" + hex16(key) + ext;
    }
    bool usable(const std::string& p) const { return enabled && std::filesystem::exists(p); }
};

std::string walk_descriptor(const WalkConfig& w) {
    return strf("p=%d;l=%d;gamma=%d;self=%d;seed=%llu", w.window_size, w.walk_length,
                w.walks_per_node, w.include_self_pairs ? 1 : 0,
                static_cast<unsigned long long>(w.seed));
}

std::uint64_t matrix_hash(const Matrix& m) {
    std::uint64_t h = fnv1a("matrix");
    const auto r = m.rows(), c = m.cols();
    h = fnv1a(&r, sizeof(r), h);
    h = fnv1a(&c, sizeof(c), h);
    h = fnv1a(m.data(), static_cast<std::size_t>(r * c) * sizeof(double), h);
    return h;
}

}  // namespace

double run_cell(const ExperimentConfig& cfg, const Graph& g, const LabelMap& labels, double ratio,
                std::uint64_t seed) {
    const std::uint64_t graph_h = graph_content_hash(g);
    const std::uint64_t labels_h = labels_content_hash(labels);

    StageCache cache;
    cache.dir = cfg.out_dir + "/cache";
    cache.enabled = cfg.use_cache;
    cache.check = std::getenv("DKSH_CACHE_CHECK") != nullptr;
    if (cache.enabled) std::filesystem::create_directories(cache.dir);

    const Split split = make_split(labels, ratio, seed, cfg.stratified);

    // --- walks ---------------------------------------------------------
    WalkConfig wcfg = cfg.walk;
    wcfg.seed = mix_seed(seed, fnv1a("walk"));
    const std::uint64_t walks_key = fnv1a(strf("walks|g=%s|%s", hex16(graph_h).c_str(),
                                               walk_descriptor(wcfg).c_str()));
    const std::string walks_path = cache.path("walks", walks_key, ".txt");
    WalkSet walks;
    if (cache.usable(walks_path)) {
        walks = load_walks(walks_path);
        if (cache.check) {
            const WalkSet fresh = generate_walks(g, wcfg);
            if (fresh.walks != walks.walks) fail("cache check: walks mismatch");
        }
    } else {
        walks = generate_walks(g, wcfg);
        if (cache.enabled) save_walks(walks, walks_path);
    }

    // --- structure matrix ------------------------------------------------
    const std::uint64_t p_key = fnv1a(strf("structure|w=%s", hex16(walks_key).c_str()));
    const std::string p_path = cache.path("P", p_key, ".bin");
    Matrix P;
    if (cache.usable(p_path)) {
        P = load_structure_matrix(p_path);
        if (cache.check) {
            const Matrix fresh = build_structure_matrix(walks, wcfg, g.num_nodes);
            if (matrix_hash(fresh) != matrix_hash(P)) fail("cache check: structure matrix mismatch");
        }
    } else {
        P = build_structure_matrix(walks, wcfg, g.num_nodes);
        if (cache.enabled) save_structure_matrix(P, p_path);
    }

    // --- similarity ------------------------------------------------------
    const std::uint64_t s_key =
        fnv1a(strf("similarity|P=%s|labels=%s|ratio=%.10g|seed=%llu|strat=%d|all=%d",
                   hex16(p_key).c_str(), hex16(labels_h).c_str(), ratio,
                   static_cast<unsigned long long>(seed), cfg.stratified ? 1 : 0,
                   cfg.similarity_all_labeled ? 1 : 0));
    const std::string s_path = cache.path("S", s_key, ".csv");
    SimilarityMatrix sim;
    if (cache.usable(s_path)) {
        sim = load_similarity_csv(s_path, g.num_nodes);
        if (cache.check) {
            const SimilarityMatrix fresh =
                compute_similarity(P, labels, split, cfg.similarity_all_labeled);
            if ((Matrix(fresh.S) - Matrix(sim.S)).cwiseAbs().maxCoeff() != 0.0)
                fail("cache check: similarity mismatch");
        }
    } else {
        sim = compute_similarity(P, labels, split, cfg.similarity_all_labeled);
        if (cache.enabled) save_similarity_csv(sim, s_path);
    }

    // --- deep kernel training --------------------------------------------
    const Matrix p_feat = cfg.dkl_normalize_rows ? l2_normalize_rows(P) : P;
    DeepKernelNet net0 = DeepKernelNet::standard(cfg.num_layers, cfg.kernels_per_layer);
    net0.rescale_hidden = cfg.rescale_hidden;
    net0.median_rbf = cfg.median_rbf;

    const std::uint64_t net_key = fnv1a(strf(
        "net|P=%s|labels=%s|ratio=%.10g|seed=%llu|strat=%d|norm=%d|arch=%s|"
        "iters=%d|step=%.10g|sigma=%.10g|tol=%.10g|svmc=%.10g|svmtol=%.10g",
        hex16(p_key).c_str(), hex16(labels_h).c_str(), ratio, static_cast<unsigned long long>(seed),
        cfg.stratified ? 1 : 0, cfg.dkl_normalize_rows ? 1 : 0, net_descriptor(net0).c_str(),
        cfg.trainer.max_outer_iters, cfg.trainer.step_size, cfg.trainer.sigma,
        cfg.trainer.convergence_tol, cfg.trainer.svm_c, cfg.trainer.svm_tol));
    const std::string net_path = cache.path("net", net_key, ".txt");
    DeepKernelNet net;
    if (cache.usable(net_path)) {
        net = load_net(net_path);
    } else {
        std::vector<TrainLogRow> log;
        net = train(p_feat, net0, labels, split, cfg.trainer, &log);
        if (cache.enabled) {
            save_net(net, net_path);
            save_train_log_csv(log, cache.path("train_log", net_key, ".csv"));
        }
    }

    // --- hashing -----------------------------------------------------------
    const int R = std::min(cfg.landmarks, g.num_nodes);
    if (R < cfg.landmarks)
        log_warn(strf("run_cell: landmarks reduced to the node count (%d)", R));
    const std::uint64_t hash_key = fnv1a(strf(
        "hash|net=%s|S=%s|R=%d|M=%d|lambda=%.10g|seed=%llu|pick=%d", hex16(net_key).c_str(),
        hex16(s_key).c_str(), R, cfg.code_bits, cfg.lambda, static_cast<unsigned long long>(seed),
        cfg.hash_pick_largest ? 1 : 0));
    const std::string codes_path = cache.path("codes", hash_key, ".txt");
    Eigen::MatrixXi codes;
    if (cache.usable(codes_path)) {
        codes = load_codes(codes_path);
    } else {
        const std::vector<int> landmarks =
            select_landmarks(g.num_nodes, R, mix_seed(seed, fnv1a("landmarks")));
        const Matrix k_rn = forward_slice(p_feat, net, landmarks);
        Matrix k_rr(R, R);
        for (int a = 0; a < R; ++a)
            for (int b = 0; b < R; ++b) k_rr(a, b) = k_rn(a, landmarks[static_cast<std::size_t>(b)]);
        const int M = std::min(cfg.code_bits, R);
        HashModel model = solve_hashing(k_rn, k_rr, sim, M, cfg.lambda, cfg.hash_pick_largest);
        model.landmarks = landmarks;
        codes = encode(k_rn, model);
        if (cache.enabled) {
            save_hash_model(model, cache.path("hash_model", hash_key, ".bin"));
            save_codes(codes, codes_path);
        }
    }

    // --- classification ---------------------------------------------------
    const auto ntr = static_cast<Eigen::Index>(split.train_nodes.size());
    const auto nte = static_cast<Eigen::Index>(split.test_nodes.size());
    Matrix x_train(ntr, codes.cols()), x_test(nte, codes.cols());
    std::vector<int> y_train(split.train_nodes.size()), y_test(split.test_nodes.size());
    for (Eigen::Index i = 0; i < ntr; ++i) {
        x_train.row(i) = codes.row(split.train_nodes[static_cast<std::size_t>(i)]).cast<double>();
        y_train[static_cast<std::size_t>(i)] =
            labels.node_class[static_cast<std::size_t>(split.train_nodes[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index i = 0; i < nte; ++i) {
        x_test.row(i) = codes.row(split.test_nodes[static_cast<std::size_t>(i)]).cast<double>();
        y_test[static_cast<std::size_t>(i)] =
            labels.node_class[static_cast<std::size_t>(split.test_nodes[static_cast<std::size_t>(i)])];
    }
    const LinearSvmModel lin = train_linear_svm(x_train, y_train, labels.num_classes, cfg.linear_svm_c);
    return accuracy(predict(lin, x_test), y_test);
}

ResultTable run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    const Graph g = load_graph(cfg.edges_path);
    const LabelMap labels = load_labels(cfg.labels_path, g);
    save_remap_csv(g, cfg.out_dir + "/remap.csv");

    ResultTable table;
    for (double ratio : cfg.ratios) {
        for (std::uint64_t seed : cfg.seeds) {
            ResultRow row;
            row.ratio = ratio;
            row.seed = seed;
            try {
                row.accuracy = run_cell(cfg, g, labels, ratio, seed);
                row.status = "ok";
            } catch (const std::exception& e) {
                row.status = e.what();
            }
            table.rows.push_back(row);
        }
    }
    table.compute_aggregates();

    std::ofstream out(cfg.out_dir + "/results.csv");
    if (!out) fail("run_pipeline: cannot write results.csv under '" + cfg.out_dir + "'");
    out << table.to_csv();
    return table;
}

ResultTable run_sweep(const ExperimentConfig& cfg, const std::string& parameter,
                      const std::vector<double>& values) {
    if (values.empty()) fail("run_sweep: no values");
    ResultTable merged;
    std::string csv = "parameter,value,seed,accuracy,status\n";
    for (double value : values) {
        ExperimentConfig c = cfg;
        c.ratios = {0.9};
        if (parameter == "R") c.landmarks = static_cast<int>(value);
        else if (parameter == "M") c.code_bits = static_cast<int>(value);
        else if (parameter == "p") c.walk.window_size = static_cast<int>(value);
        else if (parameter == "l") c.walk.walk_length = static_cast<int>(value);
        else if (parameter == "gamma") c.walk.walks_per_node = static_cast<int>(value);
        else fail("run_sweep: unknown parameter '" + parameter + "' (expected R, M, p, l or gamma)");
        c.code_bits = std::min(c.code_bits, c.landmarks);

        const ResultTable t = run_pipeline(c);
        for (const auto& r : t.rows) {
            if (r.status == "ok")
                csv += strf("%s,%.6g,%llu,%.6f,ok\n", parameter.c_str(), value,
                            static_cast<unsigned long long>(r.seed), r.accuracy);
            else
                csv += strf("%s,%.6g,%llu,,error: %s\n", parameter.c_str(), value,
                            static_cast<unsigned long long>(r.seed), r.status.c_str());
            ResultRow row = r;
            row.ratio = value;  // sweep tables key rows by the swept value
            merged.rows.push_back(row);
        }
    }
    merged.compute_aggregates();
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/sweep_" + parameter + ".csv");
    if (!out) fail("run_sweep: cannot write sweep csv");
    out << csv;
    return merged;
}

}  // namespace dksh
