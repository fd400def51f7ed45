#include <cmath>

#include "cclhmm/conditional_forest.hpp"
#include "cclhmm/errors.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cclhmm;

namespace {

// Joint over (y, x) where x copies y with probability `stick`.
Vec coupled_pair_joint(double stick = 0.9) {
    Vec joint(4);
    joint[0 * 2 + 0] = 0.5 * stick;
    joint[0 * 2 + 1] = 0.5 * (1 - stick);
    joint[1 * 2 + 0] = 0.5 * (1 - stick);
    joint[1 * 2 + 1] = 0.5 * stick;
    return joint;
}

double structure_mi_sum(const ConditionalForestDistribution& forest, const Vec& joint, int my,
                        int mx, int b) {
    double total = 0.0;
    for (const Edge& e : forest.within_edges)
        total += oracles::mi_direct(oracles::pair_marginal(joint, my + mx, b, my + e.u, my + e.v));
    for (const CrossEdge& c : forest.cross_edges)
        total += oracles::mi_direct(oracles::pair_marginal(joint, my + mx, b, c.y, my + c.x));
    return total;
}

}  // namespace

TEST_CASE("single dependent pair links y to x") {
    Vec joint = coupled_pair_joint();
    auto stats = oracles::stats_from_conditional_joint(joint, 1, 1, 2);
    auto forest = fit_conditional_chow_liu(stats, 0.0);
    CHECK(forest.within_edges.empty());
    REQUIRE(forest.cross_edges.size() == 1);
    CHECK(forest.cross_edges[0].y == 0);
    CHECK(forest.cross_edges[0].x == 0);
    forest.validate();
}

TEST_CASE("independent y leaves the conditional equal to the unconditional tree") {
    // P(y, x) = P(y) P(x) with a dependent pair of x-variables.
    Rng rng(15);
    Vec py{0.4, 0.6};
    Vec px(4);
    px[0 * 2 + 0] = 0.35;
    px[0 * 2 + 1] = 0.15;
    px[1 * 2 + 0] = 0.05;
    px[1 * 2 + 1] = 0.45;
    Vec joint(8);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 4; ++x) joint[y * 4 + x] = py[y] * px[x];

    auto forest = fit_conditional_chow_liu(oracles::stats_from_conditional_joint(joint, 1, 2, 2), 0.0);
    auto tree = fit_chow_liu(oracles::stats_from_joint(px, 2, 2), 0.0);

    std::int32_t x[2];
    std::int32_t y[1];
    for (int yy = 0; yy < 2; ++yy) {
        y[0] = yy;
        for (int xi = 0; xi < 4; ++xi) {
            oracles::decode(xi, 2, 2, x);
            CHECK(log_prob_conditional(forest, std::span<const std::int32_t>(x, 2),
                                       std::span<const std::int32_t>(y, 1)) ==
                  doctest::Approx(log_prob_tree(tree, std::span<const std::int32_t>(x, 2)))
                      .epsilon(1e-9));
        }
    }
}

TEST_CASE("learned structure attains the enumerated maximum mutual-information sum") {
    Rng rng(321);
    const int my = 2, mx = 3, b = 2;
    for (int trial = 0; trial < 20; ++trial) {
        Vec joint = oracles::random_joint(my + mx, b, rng);
        auto stats = oracles::stats_from_conditional_joint(joint, my, mx, b);
        auto forest = fit_conditional_chow_liu(stats, 0.0);
        forest.validate();

        CHECK(int(forest.within_edges.size() + forest.cross_edges.size()) == mx);
        CHECK(forest.component_count() >= 1);
        CHECK(forest.component_count() <= std::min(my, mx));

        Mat within_mi(mx, mx, 0.0), cross_mi(my, mx, 0.0);
        for (int u = 0; u < mx; ++u)
            for (int v = u + 1; v < mx; ++v)
                within_mi(u, v) = within_mi(v, u) =
                    oracles::mi_direct(oracles::pair_marginal(joint, my + mx, b, my + u, my + v));
        for (int u = 0; u < my; ++u)
            for (int v = 0; v < mx; ++v)
                cross_mi(u, v) =
                    oracles::mi_direct(oracles::pair_marginal(joint, my + mx, b, u, my + v));

        const double learned = structure_mi_sum(forest, joint, my, mx, b);
        const double best = oracles::best_conditional_mi_sum(mx, my, within_mi, cross_mi);
        CHECK(learned == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("conditional density normalizes for every conditioning vector") {
    Rng rng(55);
    const int my = 2, mx = 3, b = 2;
    Vec joint = oracles::random_joint(my + mx, b, rng);
    auto forest = fit_conditional_chow_liu(oracles::stats_from_conditional_joint(joint, my, mx, b),
                                           0.05);
    std::int32_t y[2], x[3];
    for (int yi = 0; yi < 4; ++yi) {
        oracles::decode(yi, my, b, y);
        double total = 0.0;
        for (int xi = 0; xi < 8; ++xi) {
            oracles::decode(xi, mx, b, x);
            total += std::exp(log_prob_conditional(forest, std::span<const std::int32_t>(x, 3),
                                                   std::span<const std::int32_t>(y, 2)));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("two-variable example with one cross edge matches hand arithmetic") {
    Vec joint = coupled_pair_joint(0.8);
    auto forest = fit_conditional_chow_liu(oracles::stats_from_conditional_joint(joint, 1, 1, 2), 0.0);
    REQUIRE(forest.cross_edges.size() == 1);
    std::int32_t x[1] = {1}, y[1] = {0};
    double expected = std::log(forest.node_marginal[0][1]) +
                      std::log(forest.cross_joint[0](0, 1)) -
                      std::log(forest.cross_y_marginal[0][0]) -
                      std::log(forest.node_marginal[0][1]);
    CHECK(log_prob_conditional(forest, std::span<const std::int32_t>(x, 1),
                               std::span<const std::int32_t>(y, 1)) ==
          doctest::Approx(expected).epsilon(1e-12));
    // Which is just the conditional row of the joint.
    CHECK(std::exp(expected) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("forest without cross edges reduces to the within tree") {
    Rng rng(70);
    Vec px = oracles::random_joint(3, 2, rng);
    auto tree = fit_chow_liu(oracles::stats_from_joint(px, 3, 2), 0.0);

    ConditionalForestDistribution forest;
    forest.num_x = 3;
    forest.num_y = 1;
    forest.cardinality = 2;
    forest.within_edges = tree.edges;
    forest.within_joint = tree.edge_joint;
    forest.node_marginal = tree.node_marginal;

    std::int32_t y[1] = {0}, x[3];
    for (int xi = 0; xi < 8; ++xi) {
        oracles::decode(xi, 3, 2, x);
        CHECK(log_prob_conditional(forest, std::span<const std::int32_t>(x, 3),
                                   std::span<const std::int32_t>(y, 1)) ==
              doctest::Approx(log_prob_tree(tree, std::span<const std::int32_t>(x, 3))));
    }
}

TEST_CASE("conditional sampling matches the conditional distribution") {
    Rng rng(91);
    const int my = 1, mx = 2, b = 2;
    Vec joint = oracles::random_joint(my + mx, b, rng);
    auto forest =
        fit_conditional_chow_liu(oracles::stats_from_conditional_joint(joint, my, mx, b), 0.0);

    std::int32_t y[1] = {1};
    const int n = 100000;
    Vec tally(4, 0.0);
    for (int i = 0; i < n; ++i) {
        auto x = sample_conditional(forest, std::span<const std::int32_t>(y, 1), rng);
        tally[x[0] * 2 + x[1]] += 1.0 / n;
    }
    std::int32_t x[2];
    for (int xi = 0; xi < 4; ++xi) {
        oracles::decode(xi, 2, 2, x);
        double model = std::exp(log_prob_conditional(forest, std::span<const std::int32_t>(x, 2),
                                                     std::span<const std::int32_t>(y, 1)));
        CHECK(std::abs(tally[xi] - model) < 0.01);
    }
}

TEST_CASE("zero-dependence cross edges leave x independent of y") {
    // Exact independence: the fitted cross factors are identity, so samples
    // conditioned on different y agree in distribution.
    Vec py{0.5, 0.5};
    Vec px{0.7, 0.3};
    Vec joint(4);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) joint[y * 2 + x] = py[y] * px[x];
    auto forest = fit_conditional_chow_liu(oracles::stats_from_conditional_joint(joint, 1, 1, 2), 0.0);
    std::int32_t x[1], y[1];
    for (int yy = 0; yy < 2; ++yy) {
        y[0] = yy;
        x[0] = 0;
        CHECK(std::exp(log_prob_conditional(forest, std::span<const std::int32_t>(x, 1),
                                            std::span<const std::int32_t>(y, 1))) ==
              doctest::Approx(0.7).epsilon(1e-9));
    }
}

TEST_CASE("conditional posteriors agree with enumeration, including missing parents") {
    Rng rng(181);
    const int m = 3, b = 2;  // slice-to-slice shape: num_y == num_x
    Vec joint = oracles::random_joint(2 * m, b, rng);
    auto forest =
        fit_conditional_chow_liu(oracles::stats_from_conditional_joint(joint, m, m, b), 0.05);
    forest.validate();

    SUBCASE("full x evidence reproduces the conditional log-probability") {
        std::int32_t x[3] = {1, 0, 1}, y[3] = {0, 1, 1};
        auto post = conditional_posterior_marginals(forest, std::span<const std::int32_t>(x, 3),
                                                    std::span<const std::int32_t>(y, 3));
        CHECK(post.log_evidence ==
              doctest::Approx(log_prob_conditional(forest, std::span<const std::int32_t>(x, 3),
                                                   std::span<const std::int32_t>(y, 3)))
                  .epsilon(1e-9));
    }

    SUBCASE("partial evidence matches brute force over completions") {
        std::int32_t x[3] = {kMissing, 0, kMissing}, y[3] = {0, 1, 0};
        auto post = conditional_posterior_marginals(forest, std::span<const std::int32_t>(x, 3),
                                                    std::span<const std::int32_t>(y, 3));
        double z = 0.0;
        std::vector<Vec> exact(3, Vec(2, 0.0));
        std::int32_t cfg[3];
        for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 2; ++c) {
                cfg[0] = a;
                cfg[1] = 0;
                cfg[2] = c;
                double p = std::exp(log_prob_conditional(forest,
                                                         std::span<const std::int32_t>(cfg, 3),
                                                         std::span<const std::int32_t>(y, 3)));
                z += p;
                for (int v = 0; v < 3; ++v) exact[v][cfg[v]] += p;
            }
        CHECK(post.log_evidence == doctest::Approx(std::log(z)).epsilon(1e-9));
        for (int v = 0; v < 3; ++v)
            for (int bb = 0; bb < 2; ++bb)
                CHECK(post.marginals[v][bb] == doctest::Approx(exact[v][bb] / z).epsilon(1e-9));
    }

    SUBCASE("missing parents mix the cross factor under the node marginal") {
        std::int32_t x[3] = {kMissing, kMissing, kMissing};
        std::int32_t y[3] = {kMissing, kMissing, kMissing};
        auto post = conditional_posterior_marginals(forest, std::span<const std::int32_t>(x, 3),
                                                    std::span<const std::int32_t>(y, 3));
        // With everything missing the result is a proper distribution per node.
        for (int v = 0; v < 3; ++v) CHECK(vec_sum(post.marginals[v]) == doctest::Approx(1.0));
    }
}

TEST_CASE("within part is itself a normalized tree distribution") {
    Rng rng(222);
    Vec joint = oracles::random_joint(4, 2, rng);  // 2 y-vars, 2 x-vars
    auto forest =
        fit_conditional_chow_liu(oracles::stats_from_conditional_joint(joint, 2, 2, 2), 0.1);
    auto tree = within_tree(forest);
    tree.validate();
    double total = 0.0;
    std::int32_t cfg[2];
    for (int i = 0; i < 4; ++i) {
        oracles::decode(i, 2, 2, cfg);
        total += std::exp(log_prob_tree(tree, std::span<const std::int32_t>(cfg, 2)));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("conditional KL decomposition identity") {
    // Direct conditional KL equals sum_v H[x^v] - H[x|y] - sum of edge MI
    // when the tables are set from the exact distribution.
    Rng rng(271);
    const int my = 2, mx = 3, b = 2;
    for (int trial = 0; trial < 5; ++trial) {
        Vec joint = oracles::random_joint(my + mx, b, rng);
        auto forest =
            fit_conditional_chow_liu(oracles::stats_from_conditional_joint(joint, my, mx, b), 0.0);

        const double direct = conditional_kl_exact(joint, forest);

        double marginal_entropy = 0.0;
        for (int v = 0; v < mx; ++v)
            marginal_entropy += oracles::entropy(oracles::unary_marginal(joint, my + mx, b, my + v));
        // H[x|y] = H[y,x] - H[y].
        Vec py(1 << my, 0.0);
        for (int yi = 0; yi < (1 << my); ++yi)
            for (int xi = 0; xi < (1 << mx); ++xi) py[yi] += joint[yi * (1 << mx) + xi];
        const double cond_entropy = oracles::entropy(joint) - oracles::entropy(py);
        const double mi_sum = structure_mi_sum(forest, joint, my, mx, b);

        CHECK(direct ==
              doctest::Approx(marginal_entropy - cond_entropy - mi_sum).epsilon(1e-9));
    }
}
