#include <doctest.h>

#include "dksh/reference.hpp"
#include "dksh/similarity.hpp"
#include "test_util.hpp"

using namespace dksh;

namespace {

LabelMap two_class_labels(int n) {
    LabelMap lm;
    lm.num_classes = 2;
    lm.node_class.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) lm.node_class[static_cast<std::size_t>(i)] = i % 2;
    lm.class_tokens = {"a", "b"};
    return lm;
}

Split full_train_split(const LabelMap& lm) {
    Split sp;
    sp.ratio = 0.99;
    for (int i = 0; i < static_cast<int>(lm.node_class.size()); ++i) sp.train_nodes.push_back(i);
    return sp;
}

}  // namespace

TEST_SUITE("similarity") {
    TEST_CASE("identical rows with the same label give S = 1") {
        Matrix P(4, 3);
        P << 1, 2, 3, 1, 2, 3, 0, 0, 1, 5, 5, 5;
        LabelMap lm = two_class_labels(4);
        lm.node_class = {0, 0, 1, 1};
        const auto sm = compute_similarity(P, lm, full_train_split(lm));
        CHECK(Matrix(sm.S)(0, 1) == 1.0);
        CHECK(Matrix(sm.S)(0, 0) == 1.0);  // diagonal of labeled train nodes
    }

    TEST_CASE("cross-class and out-of-pool pairs are exactly zero") {
        const Matrix P = dksh::test::random_features(10, 6, 3);
        const LabelMap lm = two_class_labels(10);
        Split sp;
        sp.train_nodes = {0, 1, 2, 3, 4, 5};
        sp.test_nodes = {6, 7, 8, 9};
        const auto sm = compute_similarity(P, lm, sp);
        const Matrix S(sm.S);
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 10; ++j) {
                if (lm.node_class[static_cast<std::size_t>(i)] !=
                    lm.node_class[static_cast<std::size_t>(j)])
                    CHECK(S(i, j) == 0.0);
                if (i > 5 || j > 5) CHECK(S(i, j) == 0.0);
            }
        }
        // widened pool brings labeled test nodes in
        const auto sm2 = compute_similarity(P, lm, sp, true);
        CHECK(Matrix(sm2.S)(6, 8) > 0.0);
        CHECK(sm2.supervised_pairs > sm.supervised_pairs);
    }

    TEST_CASE("the globally farthest same-class pair lands on exp(-1)") {
        Matrix P = Matrix::Zero(3, 2);
        P << 0, 0, 10, 0, 1, 0;  // pair (0,1) attains the max distance
        LabelMap lm = two_class_labels(3);
        lm.node_class = {0, 0, 1};
        const auto sm = compute_similarity(P, lm, full_train_split(lm));
        CHECK(Matrix(sm.S)(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    }

    TEST_CASE("symmetry is exact and entries lie in [0,1]") {
        const Matrix P = dksh::test::random_features(20, 8, 11, 3.0);
        LabelMap lm = two_class_labels(20);
        const auto sm = compute_similarity(P, lm, full_train_split(lm));
        const Matrix S(sm.S);
        CHECK(S == S.transpose().eval());
        CHECK(S.minCoeff() >= 0.0);
        CHECK(S.maxCoeff() <= 1.0);
        CHECK(sm.supervised_pairs == (S.array() != 0.0).count());
    }

    TEST_CASE("matches the direct double-loop evaluation within 1e-12") {
        std::mt19937_64 rng(19);
        for (int trial = 0; trial < 8; ++trial) {
            const int n = 5 + static_cast<int>(bounded(rng, 45));
            const Matrix P = dksh::test::random_features(n, 4 + trial, rng(), 2.0);
            LabelMap lm;
            lm.num_classes = 3;
            lm.class_tokens = {"a", "b", "c"};
            lm.node_class.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                lm.node_class[static_cast<std::size_t>(i)] = static_cast<int>(bounded(rng, 4)) - 1;
            Split sp;
            for (int i = 0; i < n; ++i)
                if (lm.node_class[static_cast<std::size_t>(i)] >= 0 && bounded(rng, 4) != 0)
                    sp.train_nodes.push_back(i);
            if (sp.train_nodes.empty()) continue;
            const auto sm = compute_similarity(P, lm, sp);
            const Matrix direct = ref::similarity_naive(P, lm, sp);
            CHECK((Matrix(sm.S) - direct).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }

    TEST_CASE("degenerate structure matrix is an error") {
        const Matrix P = Matrix::Ones(5, 3);
        const LabelMap lm = two_class_labels(5);
        CHECK_THROWS_WITH_AS(compute_similarity(P, lm, full_train_split(lm)),
                             doctest::Contains("degenerate"), std::runtime_error);
    }

    TEST_CASE("triplet csv round trip") {
        const Matrix P = dksh::test::random_features(12, 5, 23);
        const LabelMap lm = two_class_labels(12);
        const auto sm = compute_similarity(P, lm, full_train_split(lm));
        const auto path = dksh::test::tmp_path("S.csv");
        save_similarity_csv(sm, path);
        const auto sm2 = load_similarity_csv(path, 12);
        CHECK((Matrix(sm.S) - Matrix(sm2.S)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(sm2.supervised_pairs == sm.supervised_pairs);
    }
}
