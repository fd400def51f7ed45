#include "cclhmm/dot_export.hpp"

#include <cstdio>
#include <sstream>

#include "cclhmm/errors.hpp"

namespace cclhmm {

namespace {

std::string format_prob(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", p);
    return buf;
}

std::string edge_style(double mi) {
    if (mi < 0.05) return "dotted";
    if (mi < 0.2) return "dashed";
    return "bold";
}

}  // namespace

std::vector<std::string> default_labels(int num_vars) {
    std::vector<std::string> labels;
    labels.reserve(num_vars);
    for (int v = 0; v < num_vars; ++v) labels.push_back("v" + std::to_string(v));
    return labels;
}

std::string tree_to_dot(const TreeDistribution& tree, const std::vector<std::string>& labels,
                        const std::string& graph_name) {
    if (int(labels.size()) != tree.num_vars) throw DataError("tree_to_dot: label count mismatch");
    std::ostringstream out;
    out << "graph " << graph_name << " {\n";
    out << "  node [shape=circle, fixedsize=true];\n";
    const int top = tree.cardinality - 1;
    for (int v = 0; v < tree.num_vars; ++v) {
        const double p = tree.node_marginal[v][top];
        out << "  n" << v << " [label=\"" << labels[v] << "\\n" << format_prob(p)
            << "\", width=" << format_prob(0.4 + 0.8 * p) << "];\n";
    }
    for (size_t e = 0; e < tree.edges.size(); ++e) {
        const double mi = mutual_information(tree.edge_joint[e]);
        out << "  n" << tree.edges[e].u << " -- n" << tree.edges[e].v << " [style="
            << edge_style(mi) << "];\n";
    }
    out << "}\n";
    return out.str();
}

std::string forest_to_dot(const ConditionalForestDistribution& forest,
                          const std::vector<std::string>& labels,
                          const std::string& graph_name) {
    if (int(labels.size()) != forest.num_x)
        throw DataError("forest_to_dot: label count mismatch");
    std::ostringstream out;
    out << "digraph " << graph_name << " {\n";
    out << "  node [shape=circle, fixedsize=true];\n";
    const int top = forest.cardinality - 1;
    for (int v = 0; v < forest.num_x; ++v) {
        const double p = forest.node_marginal[v][top];
        out << "  n" << v << " [label=\"" << labels[v] << "\\n" << format_prob(p)
            << "\", width=" << format_prob(0.4 + 0.8 * p) << "];\n";
    }
    std::vector<bool> parent_emitted(forest.num_y, false);
    for (const CrossEdge& c : forest.cross_edges) {
        if (parent_emitted[c.y]) continue;
        parent_emitted[c.y] = true;
        const std::string label =
            (c.y < int(labels.size()) ? labels[c.y] : "y" + std::to_string(c.y));
        out << "  p" << c.y << " [label=\"" << label << "(t-1)\", shape=box, fixedsize=false];\n";
    }
    for (size_t e = 0; e < forest.within_edges.size(); ++e) {
        const double mi = mutual_information(forest.within_joint[e]);
        out << "  n" << forest.within_edges[e].u << " -> n" << forest.within_edges[e].v
            << " [dir=none, style=" << edge_style(mi) << "];\n";
    }
    for (size_t e = 0; e < forest.cross_edges.size(); ++e) {
        const double mi = mutual_information(forest.cross_joint[e]);
        out << "  p" << forest.cross_edges[e].y << " -> n" << forest.cross_edges[e].x
            << " [style=" << edge_style(mi) << "];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace cclhmm
