#include "cclhmm/belief_propagation.hpp"

#include <cmath>

#include "cclhmm/errors.hpp"

namespace cclhmm {

namespace {

struct Adjacency {
    // For every node, the incident edges as (neighbor, edge index).
    std::vector<std::vector<std::pair<int, int>>> at;

    explicit Adjacency(const FactorForest& g) : at(g.num_nodes) {
        for (size_t e = 0; e < g.edges.size(); ++e) {
            at[g.edges[e].u].push_back({g.edges[e].v, int(e)});
            at[g.edges[e].v].push_back({g.edges[e].u, int(e)});
        }
    }
};

// Message across edge e from `from` toward the other endpoint:
// out(x_to) = sum_{x_from} potential(x_from, x_to) * in(x_from),
// with the potential transposed as needed.
Vec pass_message(const FactorForest& g, int e, int from, const Vec& in) {
    const Mat& pot = g.edge_potential[e];
    const int b = g.cardinality;
    Vec out(b, 0.0);
    if (g.edges[e].u == from) {
        for (int a = 0; a < b; ++a) {
            const double w = in[a];
            if (w == 0.0) continue;
            for (int c = 0; c < b; ++c) out[c] += pot(a, c) * w;
        }
    } else {
        for (int a = 0; a < b; ++a) {
            const double w = in[a];
            if (w == 0.0) continue;
            for (int c = 0; c < b; ++c) out[c] += pot(c, a) * w;
        }
    }
    return out;
}

}  // namespace

BpResult run_sum_product(const FactorForest& g) {
    const int n = g.num_nodes;
    const int b = g.cardinality;
    Adjacency adj(g);

    BpResult result;
    result.marginals.assign(n, Vec());
    result.log_partition = 0.0;

    // msg_in[v] collects normalized messages arriving at v, keyed by the
    // neighbor they came from.
    std::vector<std::vector<std::pair<int, Vec>>> msg_in(n);

    std::vector<int> visited(n, 0);
    std::vector<int> order;        // BFS order of the current component
    std::vector<int> parent_of(n, -1);
    std::vector<int> parent_edge(n, -1);

    for (int root = 0; root < n; ++root) {
        if (visited[root]) continue;

        // BFS to lay out the component.
        order.clear();
        order.push_back(root);
        visited[root] = 1;
        parent_of[root] = -1;
        parent_edge[root] = -1;
        for (size_t i = 0; i < order.size(); ++i) {
            int v = order[i];
            for (auto [w, e] : adj.at[v]) {
                if (visited[w]) continue;
                visited[w] = 1;
                parent_of[w] = v;
                parent_edge[w] = e;
                order.push_back(w);
            }
        }

        double log_z = 0.0;

        // Upward pass: leaves toward the root.
        for (size_t i = order.size(); i-- > 1;) {
            int v = order[i];
            Vec belief = g.node_potential[v];
            for (auto& [from, msg] : msg_in[v])
                for (int c = 0; c < b; ++c) belief[c] *= msg[c];
            Vec msg = pass_message(g, parent_edge[v], v, belief);
            double norm = normalize(msg);
            if (norm <= 0.0)
                throw NumericalError("sum-product: zero-mass message (contradictory evidence)");
            log_z += std::log(norm);
            msg_in[parent_of[v]].push_back({v, std::move(msg)});
        }

        // Root belief gives the component's partition function.
        {
            Vec belief = g.node_potential[root];
            for (auto& [from, msg] : msg_in[root])
                for (int c = 0; c < b; ++c) belief[c] *= msg[c];
            double z = vec_sum(belief);
            if (z <= 0.0)
                throw NumericalError("sum-product: zero partition function");
            log_z += std::log(z);
            for (double& x : belief) x /= z;
            result.marginals[root] = std::move(belief);
        }

        // Downward pass: root toward the leaves. The message to a child
        // excludes what the child sent up.
        for (size_t i = 1; i < order.size(); ++i) {
            int v = order[i];
            int p = parent_of[v];
            Vec pre = g.node_potential[p];
            for (auto& [from, msg] : msg_in[p]) {
                if (from == v) continue;
                for (int c = 0; c < b; ++c) pre[c] *= msg[c];
            }
            Vec down = pass_message(g, parent_edge[v], p, pre);
            normalize(down);

            Vec belief = g.node_potential[v];
            for (auto& [from, msg] : msg_in[v])
                for (int c = 0; c < b; ++c) belief[c] *= msg[c];
            for (int c = 0; c < b; ++c) belief[c] *= down[c];
            if (normalize(belief) <= 0.0)
                throw NumericalError("sum-product: zero-mass belief");
            result.marginals[v] = std::move(belief);
            msg_in[v].push_back({p, std::move(down)});
        }

        result.log_partition += log_z;
    }

    return result;
}

}  // namespace cclhmm
