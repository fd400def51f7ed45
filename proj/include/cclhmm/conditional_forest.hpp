#ifndef CCLHMM_CONDITIONAL_FOREST_HPP
#define CCLHMM_CONDITIONAL_FOREST_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cclhmm/rng.hpp"
#include "cclhmm/stats.hpp"
#include "cclhmm/table.hpp"
#include "cclhmm/tree.hpp"

namespace cclhmm {

struct CrossEdge {
    int y = 0;  // conditioning-side parent
    int x = 0;  // modeled-side child
};

// Forest-structured conditional distribution T(x | y): a forest over the
// x-nodes plus at most one y-parent per x-node, with no path passing
// through more than one y-node. Learned structures anchor every x-side
// component with exactly one cross edge.
struct ConditionalForestDistribution {
    int num_x = 0;
    int num_y = 0;
    int cardinality = 0;

    std::vector<Edge> within_edges;  // canonical u < v, over x-nodes
    std::vector<Mat> within_joint;

    std::vector<CrossEdge> cross_edges;  // sorted by x-child
    std::vector<Mat> cross_joint;        // rows: y value, cols: x value
    std::vector<Vec> cross_y_marginal;   // cached row sums, aligned with cross_edges

    std::vector<Vec> node_marginal;  // x-nodes

    void validate() const;
    int cross_edge_for(int x_node) const;  // index into cross_edges or -1
    int component_count() const;           // components of the full forest
};

// Conditional Chow-Liu: best y-parent per x-node by cross mutual
// information (ties to the smallest y index), then a spanning tree over
// the x-nodes plus one virtual node standing in for the chosen parents;
// edges to the virtual node become the cross edges.
ConditionalForestDistribution fit_conditional_chow_liu(const WeightedPairStats& stats,
                                                       double smoothing);

double log_prob_conditional(const ConditionalForestDistribution& forest,
                            std::span<const std::int32_t> x,
                            std::span<const std::int32_t> y);

std::vector<std::int32_t> sample_conditional(const ConditionalForestDistribution& forest,
                                             std::span<const std::int32_t> y, Rng& rng);

// Posterior marginals of the x-nodes given partial x-evidence and y.
// Entries of y may be kMissing when num_y == num_x (slice-to-slice use);
// such parents are averaged out under the forest's own node marginal
// for that variable, which is an approximation.
PosteriorMarginals conditional_posterior_marginals(const ConditionalForestDistribution& forest,
                                                   std::span<const std::int32_t> x_evidence,
                                                   std::span<const std::int32_t> y);

// The within-slice part (E_x plus node marginals) as a standalone
// normalized distribution over the x-nodes.
TreeDistribution within_tree(const ConditionalForestDistribution& forest);

// Exact conditional KL by enumeration: sum_y P(y) KL(P(.|y), T(.|y)).
// joint is a length-B^(num_y+num_x) table over (y, x) with y variables
// in the most significant positions.
double conditional_kl_exact(const Vec& joint, const ConditionalForestDistribution& forest);

}  // namespace cclhmm

#endif
