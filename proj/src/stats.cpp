#include "cclhmm/stats.hpp"

#include <string>

#include "cclhmm/errors.hpp"

namespace cclhmm {

SliceWeights uniform_weights(const ObservationDataset& data, double w) {
    SliceWeights weights;
    weights.reserve(data.sequences.size());
    for (const auto& s : data.sequences) weights.emplace_back(s.length, w);
    return weights;
}

WeightedPairStats WeightedPairStats::zeros(int num_x, int cardinality, bool with_cross,
                                           int num_y) {
    WeightedPairStats s;
    s.num_x = num_x;
    s.num_y = with_cross ? (num_y < 0 ? num_x : num_y) : 0;
    s.cardinality = cardinality;
    const size_t cells = size_t(cardinality) * cardinality;
    s.unary.assign(num_x, Vec(cardinality, 0.0));
    s.unary_total.assign(num_x, 0.0);
    s.pair.assign(size_t(num_x) * (num_x - 1) / 2 * cells, 0.0);
    s.pair_total.assign(size_t(num_x) * (num_x - 1) / 2, 0.0);
    if (s.num_y > 0) {
        s.cross.assign(size_t(s.num_y) * num_x * cells, 0.0);
        s.cross_total.assign(size_t(s.num_y) * num_x, 0.0);
    }
    return s;
}

void WeightedPairStats::add(const WeightedPairStats& other) {
    if (num_x != other.num_x || num_y != other.num_y || cardinality != other.cardinality)
        throw DataError("stats merge: shape mismatch");
    for (int v = 0; v < num_x; ++v) {
        unary_total[v] += other.unary_total[v];
        for (int b = 0; b < cardinality; ++b) unary[v][b] += other.unary[v][b];
    }
    for (size_t p = 0; p < pair_total.size(); ++p) pair_total[p] += other.pair_total[p];
    for (size_t c = 0; c < pair.size(); ++c) pair[c] += other.pair[c];
    for (size_t p = 0; p < cross_total.size(); ++p) cross_total[p] += other.cross_total[p];
    for (size_t c = 0; c < cross.size(); ++c) cross[c] += other.cross[c];
}

WeightedPairStats accumulate_stats(const ObservationDataset& data, const SliceWeights& weights,
                                   bool include_cross, TimeRange range) {
    const int m = data.num_vars;
    const int b = data.cardinality;
    if (int(weights.size()) != data.num_sequences())
        throw DataError("accumulate_stats: weights shape mismatch");

    WeightedPairStats stats = WeightedPairStats::zeros(m, b, include_cross);

    for (int n = 0; n < data.num_sequences(); ++n) {
        const Sequence& seq = data.sequences[n];
        const Vec& w = weights[n];
        if (int(w.size()) != seq.length)
            throw DataError("accumulate_stats: weights shape mismatch at sequence " +
                            std::to_string(n));
        for (double x : w)
            if (x < 0.0) throw DataError("accumulate_stats: negative weight");

        const int t_begin = (range == TimeRange::FromSecond) ? 1 : 0;
        const int t_end = (range == TimeRange::FirstOnly) ? std::min(1, seq.length) : seq.length;

        const size_t cells = size_t(b) * b;
        for (int t = t_begin; t < t_end; ++t) {
            const double wt = w[t];
            if (wt == 0.0) continue;
            const std::int32_t* row = seq.row(t);

            // Unary and within-slice pairs. The pair loop walks the flat
            // table buffer in canonical (u < v) order, one block per pair.
            int p = 0;
            for (int u = 0; u < m; ++u) {
                const std::int32_t vu = row[u];
                if (vu == kMissing) {
                    p += m - u - 1;
                    continue;
                }
                stats.unary[u][vu] += wt;
                stats.unary_total[u] += wt;
                double* block = stats.pair.data() + size_t(p) * cells;
                for (int v = u + 1; v < m; ++v, ++p, block += cells) {
                    const std::int32_t vv = row[v];
                    if (vv == kMissing) continue;
                    block[size_t(vu) * b + vv] += wt;
                    stats.pair_total[p] += wt;
                }
            }

            if (include_cross && t >= 1) {
                const std::int32_t* prev = seq.row(t - 1);
                int q = 0;
                for (int u = 0; u < m; ++u) {
                    const std::int32_t yu = prev[u];
                    if (yu == kMissing) {
                        q += m;
                        continue;
                    }
                    const size_t base = size_t(yu) * b;
                    double* block = stats.cross.data() + size_t(q) * cells;
                    for (int v = 0; v < m; ++v, ++q, block += cells) {
                        const std::int32_t xv = row[v];
                        if (xv == kMissing) continue;
                        block[base + xv] += wt;
                        stats.cross_total[q] += wt;
                    }
                }
            }
        }
    }
    return stats;
}

namespace {

Vec smooth_table(const double* counts, size_t size, double total, double alpha, int cells,
                 const char* what) {
    const double denom = total + alpha * cells;
    if (denom <= 0.0)
        throw NumericalError(std::string("degenerate ") + what +
                             " table: zero total with zero smoothing");
    Vec out(size);
    for (size_t i = 0; i < size; ++i) out[i] = (counts[i] + alpha) / denom;
    return out;
}

}  // namespace

ProbabilityTables stats_to_probabilities(const WeightedPairStats& stats, double smoothing) {
    if (smoothing < 0.0) throw DataError("smoothing must be nonnegative");
    const int b = stats.cardinality;

    ProbabilityTables tables;
    tables.num_x = stats.num_x;
    tables.num_y = stats.num_y;
    tables.cardinality = b;

    tables.unary.reserve(stats.unary.size());
    for (size_t v = 0; v < stats.unary.size(); ++v)
        tables.unary.push_back(smooth_table(stats.unary[v].data(), stats.unary[v].size(),
                                            stats.unary_total[v], smoothing, b, "unary"));

    tables.pair.reserve(stats.pair_total.size());
    for (size_t p = 0; p < stats.pair_total.size(); ++p) {
        Mat joint(b, b);
        joint.data = smooth_table(stats.pair_cells(int(p)), size_t(b) * b, stats.pair_total[p],
                                  smoothing, b * b, "pair");
        tables.pair.push_back(std::move(joint));
    }

    tables.cross.reserve(stats.cross_total.size());
    for (size_t p = 0; p < stats.cross_total.size(); ++p) {
        Mat joint(b, b);
        joint.data = smooth_table(stats.cross_cells(int(p)), size_t(b) * b, stats.cross_total[p],
                                  smoothing, b * b, "cross");
        tables.cross.push_back(std::move(joint));
    }

    return tables;
}

}  // namespace cclhmm
