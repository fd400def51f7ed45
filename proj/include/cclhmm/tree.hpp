#ifndef CCLHMM_TREE_HPP
#define CCLHMM_TREE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cclhmm/belief_propagation.hpp"
#include "cclhmm/rng.hpp"
#include "cclhmm/stats.hpp"
#include "cclhmm/table.hpp"

namespace cclhmm {

// Tree-structured distribution over M categorical variables: an acyclic
// edge set plus node marginals and pairwise edge joints. The density is
// the product of the node marginals times the dependence ratio of every
// edge, so edge joints must marginalize to the incident node marginals
// for the whole thing to normalize.
struct TreeDistribution {
    int num_vars = 0;
    int cardinality = 0;
    std::vector<Edge> edges;        // canonical u < v, sorted
    std::vector<Vec> node_marginal; // num_vars x B
    std::vector<Mat> edge_joint;    // aligned with edges

    void validate() const;  // throws DataError on structural violations
};

// I(u, v) in nats from a joint table that sums to 1 (checked to 1e-9).
double mutual_information(const Mat& joint);

// Kruskal with candidates ordered by (-weight, u, v); ties therefore
// resolve to the lexicographically smallest edge, which keeps learned
// structures reproducible. Returns num_nodes - 1 canonical edges.
std::vector<Edge> maximum_spanning_tree(int num_nodes, const Mat& weights);

// Chow-Liu fit: pairwise mutual informations from the smoothed tables,
// a maximum-weight spanning tree on them, tables from the same smoothed
// statistics. Edges with mutual information below prune_below are dropped
// afterwards (disabled when negative).
TreeDistribution fit_chow_liu(const WeightedPairStats& stats, double smoothing,
                              double prune_below = -1.0);

double log_prob_tree(const TreeDistribution& tree, std::span<const std::int32_t> x);

std::vector<std::int32_t> sample_tree(const TreeDistribution& tree, Rng& rng);

struct PosteriorMarginals {
    std::vector<Vec> marginals;  // per node; point masses at observed nodes
    double log_evidence = 0.0;
};

// Exact conditionals on the tree given a partial assignment
// (kMissing marks unobserved entries).
PosteriorMarginals tree_posterior_marginals(const TreeDistribution& tree,
                                            std::span<const std::int32_t> evidence);

// Exact KL(P, T) by enumeration; joint is a length-B^M table with
// variable 0 as the most significant digit. Guarded to B^M <= 2^20.
double kl_divergence_exact(const Vec& joint, const TreeDistribution& tree);

// Enumeration helpers shared by the exact-KL routines and tests.
long long enumerated_size(int num_vars, int cardinality, long long guard);
void decode_config(long long index, int num_vars, int cardinality, std::int32_t* out);

}  // namespace cclhmm

#endif
