#ifndef CCLHMM_STATS_HPP
#define CCLHMM_STATS_HPP

#include <vector>

#include "cclhmm/dataset.hpp"
#include "cclhmm/table.hpp"

namespace cclhmm {

// Which slices contribute to the unary and within-slice pair tables.
// Cross tables, when requested, always come from (t-1, t) slice pairs
// with the weight taken at time t.
enum class TimeRange {
    All,         // every slice
    FirstOnly,   // t = 1 only (initial-slice statistics)
    FromSecond,  // t >= 2 only
};

// Per-(sequence, time) nonnegative weights, aligned with a dataset.
using SliceWeights = std::vector<Vec>;

SliceWeights uniform_weights(const ObservationDataset& data, double w = 1.0);

// Weighted sufficient statistics for all structure learning: unary counts,
// within-slice pair counts (u < v), and optionally cross-slice pair counts
// (variable u at t-1, variable v at t). Cells or pairs with a missing
// member are skipped, so every table carries its own included weight.
// The pairwise tables live in one contiguous buffer of B*B blocks; the
// accumulation loops walk them in index order.
struct WeightedPairStats {
    int num_x = 0;        // within-slice variables
    int num_y = 0;        // cross-table row variables; 0 when absent
    int cardinality = 0;  // B

    std::vector<Vec> unary;  // num_x tables of length B
    Vec unary_total;

    Vec pair;  // num_x*(num_x-1)/2 blocks of B*B counts, pairs u < v
    Vec pair_total;

    Vec cross;  // num_y*num_x blocks of B*B counts
    Vec cross_total;

    static WeightedPairStats zeros(int num_x, int cardinality, bool with_cross,
                                   int num_y = -1);

    bool has_cross() const { return num_y > 0; }
    int num_pairs() const { return num_x * (num_x - 1) / 2; }

    int pair_index(int u, int v) const {  // requires u < v
        return u * num_x - u * (u + 1) / 2 + (v - u - 1);
    }
    int cross_index(int u, int v) const { return u * num_x + v; }

    double* pair_cells(int index) {
        return pair.data() + size_t(index) * cardinality * cardinality;
    }
    const double* pair_cells(int index) const {
        return pair.data() + size_t(index) * cardinality * cardinality;
    }
    double* cross_cells(int index) {
        return cross.data() + size_t(index) * cardinality * cardinality;
    }
    const double* cross_cells(int index) const {
        return cross.data() + size_t(index) * cardinality * cardinality;
    }

    // Elementwise merge; shapes must match.
    void add(const WeightedPairStats& other);
};

WeightedPairStats accumulate_stats(const ObservationDataset& data,
                                   const SliceWeights& weights,
                                   bool include_cross,
                                   TimeRange range = TimeRange::All);

// Normalized probability tables derived from counts with additive
// pseudo-count smoothing.
struct ProbabilityTables {
    int num_x = 0;
    int num_y = 0;
    int cardinality = 0;
    std::vector<Vec> unary;  // P(x^v), cells (c + a) / (N + a*B)
    std::vector<Mat> pair;   // P(x^u, x^v), cells (c + a) / (N + a*B^2)
    std::vector<Mat> cross;  // P(y^u, x^v), same smoothing as pair

    int pair_index(int u, int v) const {
        return u * num_x - u * (u + 1) / 2 + (v - u - 1);
    }
    int cross_index(int u, int v) const { return u * num_x + v; }
};

ProbabilityTables stats_to_probabilities(const WeightedPairStats& stats, double smoothing);

}  // namespace cclhmm

#endif
