#ifndef CCLHMM_BELIEF_PROPAGATION_HPP
#define CCLHMM_BELIEF_PROPAGATION_HPP

#include <vector>

#include "cclhmm/table.hpp"

namespace cclhmm {

struct Edge {
    int u = 0;
    int v = 0;
};

// A pairwise factor graph whose edge set forms a forest. Potentials are
// plain nonnegative tables; evidence is folded into the node potentials
// by the caller.
struct FactorForest {
    int num_nodes = 0;
    int cardinality = 0;
    std::vector<Edge> edges;
    std::vector<Mat> edge_potential;  // aligned with edges; (u value, v value)
    std::vector<Vec> node_potential;  // num_nodes x B
};

struct BpResult {
    std::vector<Vec> marginals;  // normalized per-node beliefs
    double log_partition = 0.0;  // log of the sum over all joint configurations
};

// Exact sum-product on the forest. Messages are normalized as they go and
// the normalizers accumulated, so the result is stable for long chains.
// Throws NumericalError if some component has zero total mass.
BpResult run_sum_product(const FactorForest& graph);

}  // namespace cclhmm

#endif
