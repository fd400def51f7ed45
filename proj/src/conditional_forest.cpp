#include "cclhmm/conditional_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cclhmm/errors.hpp"
#include "ipf_internal.hpp"

namespace cclhmm {

namespace {

constexpr double kNormTol = 1e-9;

std::vector<int> component_labels(int num_nodes, const std::vector<Edge>& edges) {
    std::vector<int> label(num_nodes);
    std::iota(label.begin(), label.end(), 0);
    bool changed = true;  // tiny graphs; label propagation is plenty
    while (changed) {
        changed = false;
        for (const Edge& e : edges) {
            int a = std::min(label[e.u], label[e.v]);
            if (label[e.u] != a || label[e.v] != a) {
                label[e.u] = label[e.v] = a;
                changed = true;
            }
        }
    }
    return label;
}

}  // namespace

int ConditionalForestDistribution::cross_edge_for(int x_node) const {
    for (size_t e = 0; e < cross_edges.size(); ++e)
        if (cross_edges[e].x == x_node) return int(e);
    return -1;
}

int ConditionalForestDistribution::component_count() const {
    // Components of the graph on x-nodes plus the y-nodes, with all cross
    // edges included.
    std::vector<Edge> all = within_edges;
    for (const CrossEdge& c : cross_edges) all.push_back({c.x, num_x + c.y});
    std::vector<int> label = component_labels(num_x + num_y, all);
    std::vector<int> seen;
    for (int v = 0; v < num_x; ++v) {  // count components containing an x-node
        int root = label[v];
        if (std::find(seen.begin(), seen.end(), root) == seen.end()) seen.push_back(root);
    }
    return int(seen.size());
}

void ConditionalForestDistribution::validate() const {
    if (num_x < 1 || num_y < 1 || cardinality < 2)
        throw DataError("conditional forest: bad dimensions");
    if (within_joint.size() != within_edges.size() ||
        cross_joint.size() != cross_edges.size() ||
        cross_y_marginal.size() != cross_edges.size() ||
        int(node_marginal.size()) != num_x)
        throw DataError("conditional forest: table counts do not match structure");

    // Acyclic after collapsing every y-node into one virtual node.
    {
        std::vector<Edge> collapsed = within_edges;
        for (const CrossEdge& c : cross_edges) collapsed.push_back({c.x, num_x});
        std::vector<int> label(num_x + 1);
        std::iota(label.begin(), label.end(), 0);
        int merges = 0;
        std::vector<int> parent(num_x + 1);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        for (const Edge& e : collapsed) {
            int ra = find(e.u), rb = find(e.v);
            if (ra == rb) throw DataError("conditional forest: collapsed graph has a cycle");
            parent[rb] = ra;
            ++merges;
        }
        (void)merges;
    }

    for (const CrossEdge& c : cross_edges)
        if (c.y < 0 || c.y >= num_y || c.x < 0 || c.x >= num_x)
            throw DataError("conditional forest: cross edge out of range");
    for (size_t a = 0; a < cross_edges.size(); ++a)
        for (size_t b = a + 1; b < cross_edges.size(); ++b)
            if (cross_edges[a].x == cross_edges[b].x)
                throw DataError("conditional forest: x-node with two y-parents");

    for (int v = 0; v < num_x; ++v) {
        if (std::abs(vec_sum(node_marginal[v]) - 1.0) > kNormTol)
            throw DataError("conditional forest: node marginal not normalized");
        for (double p : node_marginal[v])
            if (p < 0.0) throw DataError("conditional forest: negative probability");
    }
    for (size_t e = 0; e < within_edges.size(); ++e) {
        const Mat& j = within_joint[e];
        if (std::abs(j.sum() - 1.0) > kNormTol)
            throw DataError("conditional forest: within joint not normalized");
        for (double p : j.data)
            if (p < 0.0) throw DataError("conditional forest: negative probability");
        Vec rows = j.row_sums(), cols = j.col_sums();
        for (int b = 0; b < cardinality; ++b)
            if (std::abs(rows[b] - node_marginal[within_edges[e].u][b]) > kNormTol ||
                std::abs(cols[b] - node_marginal[within_edges[e].v][b]) > kNormTol)
                throw DataError("conditional forest: within joint inconsistent with marginals");
    }
    for (size_t e = 0; e < cross_edges.size(); ++e) {
        const Mat& j = cross_joint[e];
        if (std::abs(j.sum() - 1.0) > kNormTol)
            throw DataError("conditional forest: cross joint not normalized");
        for (double p : j.data)
            if (p < 0.0) throw DataError("conditional forest: negative probability");
        Vec cols = j.col_sums();
        for (int b = 0; b < cardinality; ++b)
            if (std::abs(cols[b] - node_marginal[cross_edges[e].x][b]) > kNormTol)
                throw DataError("conditional forest: cross joint inconsistent with child marginal");
        Vec rows = j.row_sums();
        for (int b = 0; b < cardinality; ++b)
            if (std::abs(rows[b] - cross_y_marginal[e][b]) > kNormTol)
                throw DataError("conditional forest: stale cached y-marginal");
    }
}

ConditionalForestDistribution fit_conditional_chow_liu(const WeightedPairStats& stats,
                                                       double smoothing) {
    const int mx = stats.num_x;
    const int my = stats.num_y;
    const int b = stats.cardinality;
    if (my < 1) throw DataError("fit_conditional_chow_liu: stats carry no cross tables");

    ProbabilityTables probs = stats_to_probabilities(stats, smoothing);

    // Step 1: within-slice mutual informations.
    Mat within_mi(mx, mx, 0.0);
    for (int u = 0; u < mx; ++u)
        for (int v = u + 1; v < mx; ++v) {
            double w = mutual_information(probs.pair[probs.pair_index(u, v)]);
            within_mi(u, v) = within_mi(v, u) = w;
        }

    // Step 2: best y-parent per x-node, ties to the smallest y index.
    std::vector<int> best_parent(mx, 0);
    Vec best_mi(mx, 0.0);
    for (int v = 0; v < mx; ++v) {
        double best = -1.0;
        int arg = 0;
        for (int u = 0; u < my; ++u) {
            double w = mutual_information(probs.cross[probs.cross_index(u, v)]);
            if (w > best) {
                best = w;
                arg = u;
            }
        }
        best_parent[v] = arg;
        best_mi[v] = best;
    }

    // Step 3: spanning tree over the x-nodes plus a virtual node (index mx)
    // that stands in for each node's chosen parent.
    Mat weights(mx + 1, mx + 1, 0.0);
    for (int u = 0; u < mx; ++u)
        for (int v = u + 1; v < mx; ++v) weights(u, v) = weights(v, u) = within_mi(u, v);
    for (int v = 0; v < mx; ++v) weights(v, mx) = weights(mx, v) = best_mi[v];
    std::vector<Edge> augmented = maximum_spanning_tree(mx + 1, weights);

    ConditionalForestDistribution forest;
    forest.num_x = mx;
    forest.num_y = my;
    forest.cardinality = b;
    for (const Edge& e : augmented) {
        if (e.v == mx)
            forest.cross_edges.push_back({best_parent[e.u], e.u});
        else
            forest.within_edges.push_back(e);
    }
    std::sort(forest.cross_edges.begin(), forest.cross_edges.end(),
              [](const CrossEdge& a, const CrossEdge& b) { return a.x < b.x; });

    // Step 4: tables. Cross joints are stored as smoothed; the anchored
    // child's marginal is defined as the cross joint's column marginal so
    // the two never disagree. Remaining marginals come from the unary
    // tables, and within joints are projected onto them.
    forest.node_marginal = probs.unary;
    forest.cross_joint.reserve(forest.cross_edges.size());
    forest.cross_y_marginal.reserve(forest.cross_edges.size());
    for (const CrossEdge& c : forest.cross_edges) {
        Mat joint = probs.cross[probs.cross_index(c.y, c.x)];
        forest.node_marginal[c.x] = joint.col_sums();
        forest.cross_y_marginal.push_back(joint.row_sums());
        forest.cross_joint.push_back(std::move(joint));
    }
    forest.within_joint.reserve(forest.within_edges.size());
    for (const Edge& e : forest.within_edges) {
        Mat joint = probs.pair[probs.pair_index(e.u, e.v)];
        detail::ipf_project(joint, forest.node_marginal[e.u], forest.node_marginal[e.v]);
        forest.within_joint.push_back(std::move(joint));
    }
    return forest;
}

double log_prob_conditional(const ConditionalForestDistribution& forest,
                            std::span<const std::int32_t> x,
                            std::span<const std::int32_t> y) {
    if (int(x.size()) != forest.num_x || int(y.size()) != forest.num_y)
        throw DataError("log_prob_conditional: width mismatch");
    double lp = 0.0;
    for (int v = 0; v < forest.num_x; ++v) {
        if (x[v] == kMissing)
            throw std::invalid_argument(
                "log_prob_conditional: missing cell; use conditional_posterior_marginals");
        lp += std::log(forest.node_marginal[v][x[v]]);
    }
    for (size_t e = 0; e < forest.within_edges.size(); ++e) {
        const Edge& edge = forest.within_edges[e];
        lp += std::log(forest.within_joint[e](x[edge.u], x[edge.v]));
        lp -= std::log(forest.node_marginal[edge.u][x[edge.u]]);
        lp -= std::log(forest.node_marginal[edge.v][x[edge.v]]);
    }
    for (size_t e = 0; e < forest.cross_edges.size(); ++e) {
        const CrossEdge& edge = forest.cross_edges[e];
        if (y[edge.y] == kMissing)
            throw std::invalid_argument("log_prob_conditional: missing conditioning value");
        lp += std::log(forest.cross_joint[e](y[edge.y], x[edge.x]));
        lp -= std::log(forest.cross_y_marginal[e][y[edge.y]]);
        lp -= std::log(forest.node_marginal[edge.x][x[edge.x]]);
    }
    return lp;
}

std::vector<std::int32_t> sample_conditional(const ConditionalForestDistribution& forest,
                                             std::span<const std::int32_t> y, Rng& rng) {
    const int mx = forest.num_x;
    const int b = forest.cardinality;
    std::vector<std::vector<std::pair<int, int>>> adj(mx);
    for (size_t e = 0; e < forest.within_edges.size(); ++e) {
        adj[forest.within_edges[e].u].push_back({forest.within_edges[e].v, int(e)});
        adj[forest.within_edges[e].v].push_back({forest.within_edges[e].u, int(e)});
    }

    std::vector<std::int32_t> x(mx, kMissing);
    auto descend = [&](int root) {
        std::vector<int> stack{root};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (auto [w, e] : adj[v]) {
                if (x[w] != kMissing) continue;
                const Mat& joint = forest.within_joint[e];
                Vec cond(b);
                if (forest.within_edges[e].u == v)
                    for (int c = 0; c < b; ++c) cond[c] = joint(x[v], c);
                else
                    for (int c = 0; c < b; ++c) cond[c] = joint(c, x[v]);
                x[w] = rng.categorical(cond);
                stack.push_back(w);
            }
        }
    };

    // Anchored components start from their cross-conditioned child.
    for (size_t e = 0; e < forest.cross_edges.size(); ++e) {
        const CrossEdge& c = forest.cross_edges[e];
        if (y[c.y] == kMissing)
            throw std::invalid_argument("sample_conditional: missing conditioning value");
        Vec cond(b);
        for (int cc = 0; cc < b; ++cc) cond[cc] = forest.cross_joint[e](y[c.y], cc);
        x[c.x] = rng.categorical(cond);
        descend(c.x);
    }
    // Hand-built forests may have unanchored components.
    for (int v = 0; v < mx; ++v) {
        if (x[v] != kMissing) continue;
        x[v] = rng.categorical(forest.node_marginal[v]);
        descend(v);
    }
    return x;
}

PosteriorMarginals conditional_posterior_marginals(const ConditionalForestDistribution& forest,
                                                   std::span<const std::int32_t> x_evidence,
                                                   std::span<const std::int32_t> y) {
    if (int(x_evidence.size()) != forest.num_x || int(y.size()) != forest.num_y)
        throw DataError("conditional_posterior_marginals: width mismatch");
    const int b = forest.cardinality;

    FactorForest graph;
    graph.num_nodes = forest.num_x;
    graph.cardinality = b;
    graph.edges = forest.within_edges;
    graph.node_potential.resize(forest.num_x);
    for (int v = 0; v < forest.num_x; ++v) graph.node_potential[v] = forest.node_marginal[v];

    // Cross factors attach to the child as local evidence.
    for (size_t e = 0; e < forest.cross_edges.size(); ++e) {
        const CrossEdge& c = forest.cross_edges[e];
        Vec& pot = graph.node_potential[c.x];
        const Mat& joint = forest.cross_joint[e];
        if (y[c.y] != kMissing) {
            const double ym = forest.cross_y_marginal[e][y[c.y]];
            for (int cc = 0; cc < b; ++cc)
                pot[cc] *= joint(y[c.y], cc) / (ym * forest.node_marginal[c.x][cc]);
        } else {
            // Unobserved parent: average the factor under the forest's own
            // marginal for that variable (slice-to-slice approximation).
            if (forest.num_y != forest.num_x)
                throw std::invalid_argument(
                    "conditional_posterior_marginals: missing y requires num_y == num_x");
            const Vec& q = forest.node_marginal[c.y];
            for (int cc = 0; cc < b; ++cc) {
                double f = 0.0;
                for (int yy = 0; yy < b; ++yy)
                    f += q[yy] * joint(yy, cc) / forest.cross_y_marginal[e][yy];
                pot[cc] *= f / forest.node_marginal[c.x][cc];
            }
        }
    }

    for (int v = 0; v < forest.num_x; ++v) {
        if (x_evidence[v] == kMissing) continue;
        for (int cc = 0; cc < b; ++cc)
            if (cc != x_evidence[v]) graph.node_potential[v][cc] = 0.0;
    }

    graph.edge_potential.reserve(forest.within_edges.size());
    for (size_t e = 0; e < forest.within_edges.size(); ++e) {
        const Edge& edge = forest.within_edges[e];
        Mat pot = forest.within_joint[e];
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c)
                pot(r, c) /= forest.node_marginal[edge.u][r] * forest.node_marginal[edge.v][c];
        graph.edge_potential.push_back(std::move(pot));
    }

    BpResult bp = run_sum_product(graph);
    return {std::move(bp.marginals), bp.log_partition};
}

TreeDistribution within_tree(const ConditionalForestDistribution& forest) {
    TreeDistribution tree;
    tree.num_vars = forest.num_x;
    tree.cardinality = forest.cardinality;
    tree.edges = forest.within_edges;
    tree.node_marginal = forest.node_marginal;
    tree.edge_joint = forest.within_joint;
    return tree;
}

double conditional_kl_exact(const Vec& joint, const ConditionalForestDistribution& forest) {
    const int total_vars = forest.num_y + forest.num_x;
    const long long size = enumerated_size(total_vars, forest.cardinality, 1LL << 20);
    if (static_cast<long long>(joint.size()) != size)
        throw DataError("conditional_kl_exact: joint table size mismatch");

    const long long x_size = enumerated_size(forest.num_x, forest.cardinality, 1LL << 20);
    std::vector<std::int32_t> config(total_vars);
    double kl = 0.0;
    for (long long yi = 0; yi < size / x_size; ++yi) {
        double py = 0.0;
        for (long long xi = 0; xi < x_size; ++xi) py += joint[yi * x_size + xi];
        if (py <= 0.0) continue;
        decode_config(yi * x_size, total_vars, forest.cardinality, config.data());
        std::span<const std::int32_t> y(config.data(), forest.num_y);
        for (long long xi = 0; xi < x_size; ++xi) {
            const double pxy = joint[yi * x_size + xi];
            if (pxy <= 0.0) continue;
            decode_config(xi, forest.num_x, forest.cardinality, config.data() + forest.num_y);
            std::span<const std::int32_t> x(config.data() + forest.num_y, forest.num_x);
            const double px_given_y = pxy / py;
            kl += pxy * (std::log(px_given_y) - log_prob_conditional(forest, x, y));
        }
    }
    return kl;
}

}  // namespace cclhmm
