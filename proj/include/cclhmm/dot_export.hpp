#ifndef CCLHMM_DOT_EXPORT_HPP
#define CCLHMM_DOT_EXPORT_HPP

#include <string>
#include <vector>

#include "cclhmm/conditional_forest.hpp"
#include "cclhmm/tree.hpp"

namespace cclhmm {

// Graphviz rendering of a learned structure: node labels carry the
// variable id and the marginal probability of the highest value, and the
// circle size scales with it; edge styling is binned by mutual
// information (< 0.05 dotted, < 0.2 dashed, otherwise bold).
std::string tree_to_dot(const TreeDistribution& tree, const std::vector<std::string>& labels,
                        const std::string& graph_name);

// Cross parents appear as boxed "(t-1)" nodes with directed edges into
// their children; within-slice edges are undirected.
std::string forest_to_dot(const ConditionalForestDistribution& forest,
                          const std::vector<std::string>& labels, const std::string& graph_name);

std::vector<std::string> default_labels(int num_vars);

}  // namespace cclhmm

#endif
