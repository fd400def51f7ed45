#include <cmath>
#include <sstream>

#include "cclhmm/baselines.hpp"
#include "cclhmm/errors.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cclhmm;

namespace {

ObservationDataset single_sequence(int m, int b, Sequence seq) {
    ObservationDataset data;
    data.num_vars = m;
    data.cardinality = b;
    data.sequences.push_back(std::move(seq));
    return data;
}

}  // namespace

TEST_CASE("bigram tally on a four-step chain") {
    std::istringstream in("1 2\n0\n0\n1\n1\n");
    auto data = parse_dataset(in, "test");
    auto model = fit_independent_chains(data, 0.0);
    CHECK(model.initial[0][0] == doctest::Approx(1.0));
    // Hand tally: 0->0 once, 0->1 once, 1->1 once.
    CHECK(model.transition[0](0, 0) == doctest::Approx(0.5));
    CHECK(model.transition[0](0, 1) == doctest::Approx(0.5));
    CHECK(model.transition[0](1, 0) == doctest::Approx(0.0));
    CHECK(model.transition[0](1, 1) == doctest::Approx(1.0));
}

TEST_CASE("constant data concentrates the visited row") {
    std::istringstream in("1 2\n0\n0\n0\n");
    auto data = parse_dataset(in, "test");
    auto model = fit_independent_chains(data, 0.0);
    CHECK(model.transition[0](0, 0) == doctest::Approx(1.0));
    CHECK(model.transition[0](0, 1) == doctest::Approx(0.0));
}

TEST_CASE("huge smoothing drives every row toward uniform") {
    std::istringstream in("1 2\n0\n0\n0\n");
    auto data = parse_dataset(in, "test");
    auto model = fit_independent_chains(data, 1e9);
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c)
            CHECK(model.transition[0](a, c) == doctest::Approx(0.5).epsilon(1e-6));
    model.validate();
}

TEST_CASE("iid data leaves cross links uninformative") {
    Rng rng(1001);
    Sequence train(400, 3), test(400, 3);
    auto fill = [&](Sequence& seq) {
        for (int t = 0; t < seq.length; ++t) {
            // Within-slice dependence, no temporal dependence.
            std::int32_t base = rng.uniform() < 0.5 ? 0 : 1;
            seq.at(t, 0) = base;
            seq.at(t, 1) = rng.uniform() < 0.8 ? base : 1 - base;
            seq.at(t, 2) = rng.uniform() < 0.8 ? base : 1 - base;
        }
    };
    fill(train);
    fill(test);
    auto train_data = single_sequence(3, 2, std::move(train));
    auto test_data = single_sequence(3, 2, std::move(test));

    auto cclf = fit_cclf(train_data, 0.1);
    for (size_t e = 0; e < cclf.transition.cross_edges.size(); ++e)
        CHECK(mutual_information(cclf.transition.cross_joint[e]) < 0.02);

    // A static tree on pooled slices should explain held-out data equally well.
    auto tree = fit_chow_liu(accumulate_stats(train_data, uniform_weights(train_data), false), 0.1);
    double tree_ll = 0.0;
    for (int t = 0; t < test_data.sequences[0].length; ++t)
        tree_ll += log_prob_tree(tree, std::span<const std::int32_t>(test_data.sequences[0].row(t), 3));
    auto cclf_ll = cclf_log_likelihood(cclf, test_data);
    CHECK(std::abs(cclf_ll.total / cclf_ll.events - tree_ll / cclf_ll.events) < 0.01);
}

TEST_CASE("one-variable chain forest equals the independent chain") {
    Rng rng(1002);
    Sequence seq(200, 1);
    seq.at(0, 0) = 0;
    for (int t = 1; t < 200; ++t)
        seq.at(t, 0) = rng.uniform() < 0.8 ? seq.at(t - 1, 0) : 1 - seq.at(t - 1, 0);
    auto data = single_sequence(1, 2, std::move(seq));

    for (double alpha : {0.0, 0.1, 1.0}) {
        CAPTURE(alpha);
        auto chains = fit_independent_chains(data, alpha);
        auto cclf = fit_cclf(data, alpha);
        auto ll_chains = chains_log_likelihood(chains, data);
        auto ll_cclf = cclf_log_likelihood(cclf, data);
        REQUIRE(ll_chains.events == ll_cclf.events);
        CHECK(ll_chains.per_event() == doctest::Approx(ll_cclf.per_event()).epsilon(1e-12));
        CHECK(std::abs(ll_chains.total - ll_cclf.total) < 1e-9 * std::abs(ll_chains.total) + 1e-9);
    }
}

TEST_CASE("persistent variables pick themselves as cross parents") {
    Rng rng(1003);
    const int m = 3;
    Sequence seq(600, m);
    for (int j = 0; j < m; ++j) seq.at(0, j) = std::int32_t(rng.uniform() * 2);
    for (int t = 1; t < 600; ++t)
        for (int j = 0; j < m; ++j)
            seq.at(t, j) = rng.uniform() < 0.9 ? seq.at(t - 1, j) : 1 - seq.at(t - 1, j);
    auto data = single_sequence(m, 2, std::move(seq));
    auto model = fit_cclf(data, 0.1);
    for (const CrossEdge& c : model.transition.cross_edges) CHECK(c.y == c.x);
}

TEST_CASE("length-one evaluation uses only the initial tree") {
    Rng rng(1004);
    Sequence train(100, 2);
    for (int t = 0; t < 100; ++t)
        for (int j = 0; j < 2; ++j) train.at(t, j) = std::int32_t(rng.uniform() * 2);
    auto data = single_sequence(2, 2, std::move(train));
    auto model = fit_cclf(data, 0.1);

    Sequence one(1, 2);
    one.at(0, 0) = 0;
    one.at(0, 1) = 1;
    auto single = single_sequence(2, 2, std::move(one));
    auto ll = cclf_log_likelihood(model, single);
    std::int32_t row[2] = {0, 1};
    CHECK(ll.total ==
          doctest::Approx(log_prob_tree(model.initial, std::span<const std::int32_t>(row, 2))));
    CHECK(ll.events == 2);
}

TEST_CASE("sequence probabilities sum to one over all short sequences") {
    Rng rng(1005);
    Sequence train(150, 2);
    for (int t = 0; t < 150; ++t)
        for (int j = 0; j < 2; ++j) train.at(t, j) = std::int32_t(rng.uniform() * 2);
    auto data = single_sequence(2, 2, std::move(train));
    auto model = fit_cclf(data, 0.1);

    // All 2^(2*3) sequences of shape T=3, M=2.
    double total = 0.0;
    for (int code = 0; code < 64; ++code) {
        Sequence seq(3, 2);
        int c = code;
        for (int t = 0; t < 3; ++t)
            for (int j = 0; j < 2; ++j) {
                seq.at(t, j) = c & 1;
                c >>= 1;
            }
        auto probe = single_sequence(2, 2, std::move(seq));
        total += std::exp(cclf_log_likelihood(model, probe).total);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("deterministic tables force the sampled path") {
    IndependentChainsModel model;
    model.num_vars = 1;
    model.cardinality = 2;
    model.initial = {{1.0, 0.0}};
    Mat tr(2, 2);
    tr(0, 1) = 1.0;
    tr(1, 0) = 1.0;
    model.transition = {tr};
    Rng rng(2);
    auto seq = chains_sample(model, 5, rng);
    CHECK(seq.at(0, 0) == 0);
    CHECK(seq.at(1, 0) == 1);
    CHECK(seq.at(2, 0) == 0);
    CHECK(seq.at(3, 0) == 1);
    CHECK(seq.at(4, 0) == 0);
}

TEST_CASE("chains model equals a forest with self-parents and no within edges") {
    Rng rng(1006);
    Sequence train(300, 2);
    for (int j = 0; j < 2; ++j) train.at(0, j) = std::int32_t(rng.uniform() * 2);
    for (int t = 1; t < 300; ++t)
        for (int j = 0; j < 2; ++j)
            train.at(t, j) = rng.uniform() < 0.75 ? train.at(t - 1, j) : std::int32_t(rng.uniform() * 2);
    auto data = single_sequence(2, 2, std::move(train));
    auto chains = fit_independent_chains(data, 0.1);

    // Hand-assemble the equivalent chain forest: edgeless initial tree with
    // the chains' initial marginals, self-parent cross joints built from the
    // chains' transition rows.
    ChainForestModel forest;
    forest.initial.num_vars = 2;
    forest.initial.cardinality = 2;
    forest.initial.node_marginal = chains.initial;
    forest.transition.num_x = 2;
    forest.transition.num_y = 2;
    forest.transition.cardinality = 2;
    for (int j = 0; j < 2; ++j) {
        Mat joint(2, 2);
        for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 2; ++c) joint(a, c) = chains.initial[j][a] * chains.transition[j](a, c);
        forest.transition.cross_edges.push_back({j, j});
        forest.transition.cross_y_marginal.push_back(joint.row_sums());
        forest.transition.node_marginal.push_back(joint.col_sums());
        forest.transition.cross_joint.push_back(std::move(joint));
    }

    auto ll_chains = chains_log_likelihood(chains, data);
    auto ll_forest = cclf_log_likelihood(forest, data);
    REQUIRE(ll_chains.events == ll_forest.events);
    CHECK(ll_chains.per_event() == doctest::Approx(ll_forest.per_event()).epsilon(1e-12));
}

TEST_CASE("imputation recovers masked cells better than chance on sticky chains") {
    Rng rng(1007);
    Sequence seq(300, 2);
    for (int j = 0; j < 2; ++j) seq.at(0, j) = 0;
    for (int t = 1; t < 300; ++t)
        for (int j = 0; j < 2; ++j)
            seq.at(t, j) = rng.uniform() < 0.95 ? seq.at(t - 1, j) : 1 - seq.at(t - 1, j);
    auto data = single_sequence(2, 2, std::move(seq));
    auto model = fit_independent_chains(data, 0.1);

    auto masked = data;
    std::vector<std::int32_t> truth;
    for (int t = 10; t < 290; t += 10) {
        truth.push_back(masked.sequences[0].at(t, 0));
        masked.sequences[0].at(t, 0) = kMissing;
    }
    auto cells = impute_chains(model, masked);
    REQUIRE(cells.size() == truth.size());
    int correct = 0;
    for (size_t i = 0; i < cells.size(); ++i) {
        CHECK(vec_sum(cells[i].posterior) == doctest::Approx(1.0));
        if (cells[i].prediction == truth[i]) ++correct;
    }
    CHECK(correct >= int(0.8 * truth.size()));
}

TEST_CASE("cclf imputation returns posteriors for exactly the missing cells") {
    Rng rng(1008);
    Sequence seq(60, 3);
    for (int t = 0; t < 60; ++t)
        for (int j = 0; j < 3; ++j) seq.at(t, j) = std::int32_t(rng.uniform() * 2);
    auto data = single_sequence(3, 2, std::move(seq));
    auto model = fit_cclf(data, 0.1);

    auto masked = data;
    masked.sequences[0].at(0, 1) = kMissing;   // initial slice
    masked.sequences[0].at(20, 2) = kMissing;  // interior slice
    masked.sequences[0].at(21, 0) = kMissing;  // with a missing previous parent
    auto cells = impute_cclf(model, masked);
    REQUIRE(cells.size() == 3);
    for (const auto& cell : cells) CHECK(vec_sum(cell.posterior) == doctest::Approx(1.0));
}

TEST_CASE("all-length-one data cannot fit a chain forest") {
    std::istringstream in("2 2\n0 1\n\n1 0\n");
    auto data = parse_dataset(in, "test");
    CHECK_THROWS_AS(fit_cclf(data, 0.1), DataError);
}
