// Brute-force reference implementations used as independent oracles in the
// test suites. Everything here is deliberately naive: direct tallies,
// exhaustive enumeration, and explicit sums, kept separate from the
// library's own algorithmic paths.
#ifndef CCLHMM_TEST_ORACLES_HPP
#define CCLHMM_TEST_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "cclhmm/conditional_forest.hpp"
#include "cclhmm/dataset.hpp"
#include "cclhmm/rng.hpp"
#include "cclhmm/table.hpp"
#include "cclhmm/tree.hpp"

namespace oracles {

using cclhmm::CrossEdge;
using cclhmm::Edge;
using cclhmm::Mat;
using cclhmm::Vec;

inline long long pow_ll(int base, int exp) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

inline void decode(long long index, int num_vars, int b, std::int32_t* out) {
    for (int j = num_vars - 1; j >= 0; --j) {
        out[j] = std::int32_t(index % b);
        index /= b;
    }
}

// Random strictly positive joint over B^M configurations.
inline Vec random_joint(int num_vars, int b, cclhmm::Rng& rng) {
    Vec p(pow_ll(b, num_vars));
    double total = 0.0;
    for (double& x : p) {
        x = 0.05 + rng.uniform();
        total += x;
    }
    for (double& x : p) x /= total;
    return p;
}

inline Vec unary_marginal(const Vec& joint, int num_vars, int b, int var) {
    Vec m(b, 0.0);
    std::vector<std::int32_t> cfg(num_vars);
    for (long long i = 0; i < (long long)joint.size(); ++i) {
        decode(i, num_vars, b, cfg.data());
        m[cfg[var]] += joint[i];
    }
    return m;
}

inline Mat pair_marginal(const Vec& joint, int num_vars, int b, int u, int v) {
    Mat m(b, b, 0.0);
    std::vector<std::int32_t> cfg(num_vars);
    for (long long i = 0; i < (long long)joint.size(); ++i) {
        decode(i, num_vars, b, cfg.data());
        m(cfg[u], cfg[v]) += joint[i];
    }
    return m;
}

inline double entropy(const Vec& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

// Direct evaluation of the mutual-information sum, cell by cell.
inline double mi_direct(const Mat& joint) {
    Vec rows = joint.row_sums(), cols = joint.col_sums();
    double mi = 0.0;
    for (int r = 0; r < joint.rows; ++r)
        for (int c = 0; c < joint.cols; ++c) {
            double p = joint(r, c);
            if (p > 0.0) mi += p * std::log(p / (rows[r] * cols[c]));
        }
    return mi;
}

// Tree distribution with a fixed structure whose tables are the exact
// marginals of `joint`. Independent of the fitting code.
inline cclhmm::TreeDistribution tree_on_structure(const Vec& joint, int num_vars, int b,
                                                  const std::vector<Edge>& edges) {
    cclhmm::TreeDistribution t;
    t.num_vars = num_vars;
    t.cardinality = b;
    t.edges = edges;
    for (int v = 0; v < num_vars; ++v)
        t.node_marginal.push_back(unary_marginal(joint, num_vars, b, v));
    for (const Edge& e : edges)
        t.edge_joint.push_back(pair_marginal(joint, num_vars, b, e.u, e.v));
    return t;
}

// KL(P, T) where T is given by a log-density callback; direct sum.
inline double kl_direct(const Vec& joint, int num_vars, int b,
                        const std::function<double(const std::int32_t*)>& log_t) {
    std::vector<std::int32_t> cfg(num_vars);
    double kl = 0.0;
    for (long long i = 0; i < (long long)joint.size(); ++i) {
        if (joint[i] <= 0.0) continue;
        decode(i, num_vars, b, cfg.data());
        kl += joint[i] * (std::log(joint[i]) - log_t(cfg.data()));
    }
    return kl;
}

// All labeled spanning trees on n nodes, by decoding every Prufer sequence.
inline std::vector<std::vector<Edge>> all_spanning_trees(int n) {
    std::vector<std::vector<Edge>> trees;
    if (n == 1) {
        trees.push_back({});
        return trees;
    }
    if (n == 2) {
        trees.push_back({{0, 1}});
        return trees;
    }
    const long long count = pow_ll(n, n - 2);
    std::vector<int> seq(n - 2);
    for (long long code = 0; code < count; ++code) {
        long long c = code;
        for (int i = 0; i < n - 2; ++i) {
            seq[i] = int(c % n);
            c /= n;
        }
        std::vector<int> degree(n, 1);
        for (int s : seq) ++degree[s];
        std::vector<Edge> edges;
        std::vector<bool> used(n, false);
        for (int s : seq) {
            int leaf = -1;
            for (int j = 0; j < n; ++j)
                if (degree[j] == 1 && !used[j]) {
                    leaf = j;
                    break;
                }
            used[leaf] = true;
            edges.push_back({std::min(leaf, s), std::max(leaf, s)});
            --degree[s];
        }
        int a = -1, bnode = -1;
        for (int j = 0; j < n; ++j)
            if (!used[j] && degree[j] == 1) (a < 0 ? a : bnode) = j;
        edges.push_back({std::min(a, bnode), std::max(a, bnode)});
        trees.push_back(std::move(edges));
    }
    return trees;
}

// Enumerates every admissible conditional structure: an acyclic within-edge
// subset over the x-nodes plus at most one cross edge per x-component.
// Returns the maximum of (sum of within MI + sum of cross MI).
inline double best_conditional_mi_sum(int mx, int my, const Mat& within_mi,
                                      const Mat& cross_mi) {
    std::vector<Edge> all_pairs;
    for (int u = 0; u < mx; ++u)
        for (int v = u + 1; v < mx; ++v) all_pairs.push_back({u, v});

    double best = -1e300;
    for (unsigned mask = 0; mask < (1u << all_pairs.size()); ++mask) {
        // Check acyclicity and find components.
        std::vector<int> parent(mx);
        std::iota(parent.begin(), parent.end(), 0);
        std::function<int(int)> find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        bool acyclic = true;
        double within_sum = 0.0;
        for (size_t i = 0; i < all_pairs.size(); ++i) {
            if (!(mask & (1u << i))) continue;
            int ra = find(all_pairs[i].u), rb = find(all_pairs[i].v);
            if (ra == rb) {
                acyclic = false;
                break;
            }
            parent[rb] = ra;
            within_sum += within_mi(all_pairs[i].u, all_pairs[i].v);
        }
        if (!acyclic) continue;

        // For each component, the best single cross attachment (or none).
        std::vector<double> comp_best(mx, 0.0);
        for (int v = 0; v < mx; ++v) {
            double b = 0.0;
            for (int u = 0; u < my; ++u) b = std::max(b, cross_mi(u, v));
            int root = find(v);
            comp_best[root] = std::max(comp_best[root], b);
        }
        double total = within_sum;
        for (int v = 0; v < mx; ++v)
            if (find(v) == v) total += comp_best[v];
        best = std::max(best, total);
    }
    return best;
}

// Stats built directly from an exact joint over (y, x): every table is a
// plain tally of the corresponding marginal probabilities.
inline cclhmm::WeightedPairStats stats_from_conditional_joint(const Vec& joint, int my, int mx,
                                                              int b) {
    auto stats = cclhmm::WeightedPairStats::zeros(mx, b, true, my);
    const int total_vars = my + mx;
    std::vector<std::int32_t> cfg(total_vars);
    for (long long i = 0; i < (long long)joint.size(); ++i) {
        const double p = joint[i];
        decode(i, total_vars, b, cfg.data());
        const std::int32_t* y = cfg.data();
        const std::int32_t* x = cfg.data() + my;
        for (int v = 0; v < mx; ++v) {
            stats.unary[v][x[v]] += p;
            stats.unary_total[v] += p;
        }
        for (int u = 0; u < mx; ++u)
            for (int v = u + 1; v < mx; ++v) {
                int idx = stats.pair_index(u, v);
                stats.pair_cells(idx)[x[u] * b + x[v]] += p;
                stats.pair_total[idx] += p;
            }
        for (int u = 0; u < my; ++u)
            for (int v = 0; v < mx; ++v) {
                int idx = stats.cross_index(u, v);
                stats.cross_cells(idx)[y[u] * b + x[v]] += p;
                stats.cross_total[idx] += p;
            }
    }
    return stats;
}

// Stats for an unconditional joint, same idea.
inline cclhmm::WeightedPairStats stats_from_joint(const Vec& joint, int m, int b) {
    auto stats = cclhmm::WeightedPairStats::zeros(m, b, false);
    std::vector<std::int32_t> cfg(m);
    for (long long i = 0; i < (long long)joint.size(); ++i) {
        const double p = joint[i];
        decode(i, m, b, cfg.data());
        for (int v = 0; v < m; ++v) {
            stats.unary[v][cfg[v]] += p;
            stats.unary_total[v] += p;
        }
        for (int u = 0; u < m; ++u)
            for (int v = u + 1; v < m; ++v) {
                int idx = stats.pair_index(u, v);
                stats.pair_cells(idx)[cfg[u] * b + cfg[v]] += p;
                stats.pair_total[idx] += p;
            }
    }
    return stats;
}

}  // namespace oracles

#endif
