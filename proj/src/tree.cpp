#include "cclhmm/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cclhmm/errors.hpp"
#include "ipf_internal.hpp"

namespace cclhmm {

namespace {

constexpr double kNormTol = 1e-9;

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

}  // namespace

void TreeDistribution::validate() const {
    if (num_vars < 1 || cardinality < 2) throw DataError("tree: bad dimensions");
    if (int(node_marginal.size()) != num_vars || edge_joint.size() != edges.size())
        throw DataError("tree: table counts do not match structure");
    if (int(edges.size()) > num_vars - 1) throw DataError("tree: too many edges");

    UnionFind uf(num_vars);
    for (const Edge& e : edges) {
        if (e.u < 0 || e.v >= num_vars || e.u >= e.v)
            throw DataError("tree: edge not canonical");
        if (!uf.unite(e.u, e.v)) throw DataError("tree: edge set contains a cycle");
    }

    for (int v = 0; v < num_vars; ++v) {
        if (std::abs(vec_sum(node_marginal[v]) - 1.0) > kNormTol)
            throw DataError("tree: node marginal " + std::to_string(v) + " not normalized");
        for (double p : node_marginal[v])
            if (p < 0.0) throw DataError("tree: negative probability");
    }
    for (size_t e = 0; e < edges.size(); ++e) {
        const Mat& j = edge_joint[e];
        if (std::abs(j.sum() - 1.0) > kNormTol)
            throw DataError("tree: edge joint not normalized");
        for (double p : j.data)
            if (p < 0.0) throw DataError("tree: negative probability");
        Vec rows = j.row_sums(), cols = j.col_sums();
        for (int b = 0; b < cardinality; ++b) {
            if (std::abs(rows[b] - node_marginal[edges[e].u][b]) > kNormTol ||
                std::abs(cols[b] - node_marginal[edges[e].v][b]) > kNormTol)
                throw DataError("tree: edge joint inconsistent with node marginals");
        }
    }
}

double mutual_information(const Mat& joint) {
    const double total = joint.sum();
    if (std::abs(total - 1.0) > kNormTol)
        throw std::invalid_argument("mutual_information: table does not sum to 1");
    Vec rows = joint.row_sums(), cols = joint.col_sums();
    double mi = 0.0;
    for (int r = 0; r < joint.rows; ++r)
        for (int c = 0; c < joint.cols; ++c) {
            const double p = joint(r, c);
            if (p <= 0.0) continue;  // 0 log 0 = 0
            mi += p * std::log(p / (rows[r] * cols[c]));
        }
    return mi;
}

std::vector<Edge> maximum_spanning_tree(int num_nodes, const Mat& weights) {
    if (num_nodes < 1) throw DataError("maximum_spanning_tree: need at least one node");
    struct Candidate {
        double w;
        int u, v;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(size_t(num_nodes) * (num_nodes - 1) / 2);
    for (int u = 0; u < num_nodes; ++u)
        for (int v = u + 1; v < num_nodes; ++v) candidates.push_back({weights(u, v), u, v});
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.w != b.w) return a.w > b.w;
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });

    std::vector<Edge> tree;
    tree.reserve(num_nodes - 1);
    UnionFind uf(num_nodes);
    for (const Candidate& c : candidates) {
        if (int(tree.size()) == num_nodes - 1) break;
        if (uf.unite(c.u, c.v)) tree.push_back({c.u, c.v});
    }
    std::sort(tree.begin(), tree.end(),
              [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
    return tree;
}

TreeDistribution fit_chow_liu(const WeightedPairStats& stats, double smoothing,
                              double prune_below) {
    const int m = stats.num_x;
    const int b = stats.cardinality;
    ProbabilityTables probs = stats_to_probabilities(stats, smoothing);

    Mat mi(m, m, 0.0);
    for (int u = 0; u < m; ++u)
        for (int v = u + 1; v < m; ++v) {
            double w = mutual_information(probs.pair[probs.pair_index(u, v)]);
            mi(u, v) = mi(v, u) = w;
        }

    std::vector<Edge> edges = maximum_spanning_tree(m, mi);
    if (prune_below > 0.0) {
        std::erase_if(edges, [&](const Edge& e) { return mi(e.u, e.v) < prune_below; });
    }

    TreeDistribution tree;
    tree.num_vars = m;
    tree.cardinality = b;
    tree.edges = std::move(edges);
    tree.node_marginal = probs.unary;
    tree.edge_joint.reserve(tree.edges.size());
    for (const Edge& e : tree.edges) {
        Mat joint = probs.pair[probs.pair_index(e.u, e.v)];
        detail::ipf_project(joint, tree.node_marginal[e.u], tree.node_marginal[e.v]);
        tree.edge_joint.push_back(std::move(joint));
    }
    return tree;
}

double log_prob_tree(const TreeDistribution& tree, std::span<const std::int32_t> x) {
    if (int(x.size()) != tree.num_vars)
        throw DataError("log_prob_tree: observation width mismatch");
    double lp = 0.0;
    for (int v = 0; v < tree.num_vars; ++v) {
        if (x[v] == kMissing)
            throw std::invalid_argument(
                "log_prob_tree: missing cell; use tree_posterior_marginals");
        lp += std::log(tree.node_marginal[v][x[v]]);
    }
    for (size_t e = 0; e < tree.edges.size(); ++e) {
        const Edge& edge = tree.edges[e];
        lp += std::log(tree.edge_joint[e](x[edge.u], x[edge.v]));
        lp -= std::log(tree.node_marginal[edge.u][x[edge.u]]);
        lp -= std::log(tree.node_marginal[edge.v][x[edge.v]]);
    }
    return lp;
}

std::vector<std::int32_t> sample_tree(const TreeDistribution& tree, Rng& rng) {
    const int m = tree.num_vars;
    const int b = tree.cardinality;
    std::vector<std::vector<std::pair<int, int>>> adj(m);  // (neighbor, edge index)
    for (size_t e = 0; e < tree.edges.size(); ++e) {
        adj[tree.edges[e].u].push_back({tree.edges[e].v, int(e)});
        adj[tree.edges[e].v].push_back({tree.edges[e].u, int(e)});
    }

    std::vector<std::int32_t> x(m, kMissing);
    std::vector<int> stack;
    for (int root = 0; root < m; ++root) {
        if (x[root] != kMissing) continue;
        x[root] = rng.categorical(tree.node_marginal[root]);
        stack.push_back(root);
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (auto [w, e] : adj[v]) {
                if (x[w] != kMissing) continue;
                const Mat& joint = tree.edge_joint[e];
                Vec cond(b);
                if (tree.edges[e].u == v) {
                    for (int c = 0; c < b; ++c) cond[c] = joint(x[v], c);
                } else {
                    for (int c = 0; c < b; ++c) cond[c] = joint(c, x[v]);
                }
                x[w] = rng.categorical(cond);
                stack.push_back(w);
            }
        }
    }
    return x;
}

PosteriorMarginals tree_posterior_marginals(const TreeDistribution& tree,
                                            std::span<const std::int32_t> evidence) {
    if (int(evidence.size()) != tree.num_vars)
        throw DataError("tree_posterior_marginals: evidence width mismatch");
    const int b = tree.cardinality;

    FactorForest graph;
    graph.num_nodes = tree.num_vars;
    graph.cardinality = b;
    graph.edges = tree.edges;
    graph.node_potential.resize(tree.num_vars);
    for (int v = 0; v < tree.num_vars; ++v) {
        Vec pot = tree.node_marginal[v];
        if (evidence[v] != kMissing) {
            for (int c = 0; c < b; ++c)
                if (c != evidence[v]) pot[c] = 0.0;
        }
        graph.node_potential[v] = std::move(pot);
    }
    graph.edge_potential.reserve(tree.edges.size());
    for (size_t e = 0; e < tree.edges.size(); ++e) {
        const Edge& edge = tree.edges[e];
        Mat pot = tree.edge_joint[e];
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c)
                pot(r, c) /= tree.node_marginal[edge.u][r] * tree.node_marginal[edge.v][c];
        graph.edge_potential.push_back(std::move(pot));
    }

    BpResult bp = run_sum_product(graph);
    return {std::move(bp.marginals), bp.log_partition};
}

long long enumerated_size(int num_vars, int cardinality, long long guard) {
    long long size = 1;
    for (int i = 0; i < num_vars; ++i) {
        size *= cardinality;
        if (size > guard)
            throw DataError("enumeration guard exceeded: B^M > " + std::to_string(guard));
    }
    return size;
}

void decode_config(long long index, int num_vars, int cardinality, std::int32_t* out) {
    for (int j = num_vars - 1; j >= 0; --j) {
        out[j] = std::int32_t(index % cardinality);
        index /= cardinality;
    }
}

double kl_divergence_exact(const Vec& joint, const TreeDistribution& tree) {
    const long long size = enumerated_size(tree.num_vars, tree.cardinality, 1LL << 20);
    if (static_cast<long long>(joint.size()) != size)
        throw DataError("kl_divergence_exact: joint table size mismatch");
    std::vector<std::int32_t> x(tree.num_vars);
    double kl = 0.0;
    for (long long i = 0; i < size; ++i) {
        const double p = joint[i];
        if (p <= 0.0) continue;
        decode_config(i, tree.num_vars, tree.cardinality, x.data());
        kl += p * (std::log(p) - log_prob_tree(tree, x));
    }
    return kl;
}

}  // namespace cclhmm
