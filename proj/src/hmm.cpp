#include "cclhmm/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cclhmm/errors.hpp"
#include "cclhmm/parallel.hpp"

namespace cclhmm {

namespace {

constexpr double kNormTol = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int argmax_lowest(const Vec& v) {
    int best = 0;
    for (int i = 1; i < int(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

bool slice_complete(std::span<const std::int32_t> slice) {
    for (std::int32_t v : slice)
        if (v == kMissing) return false;
    return true;
}

// Precomputed log tables for fast complete-slice emission scoring.
// Partial slices fall back to message passing on the state's structure.
class HmmScorer {
public:
    explicit HmmScorer(const HmmModel& model) : model_(model) {
        const int b = model.cardinality;
        states_.resize(model.num_states);
        for (int i = 0; i < model.num_states; ++i) {
            StateTables& st = states_[i];
            if (model.family == EmissionFamily::CI) {
                const auto& ci = std::get<CiEmission>(model.emissions[i]);
                st.log_node = log_tables(ci.tables);
                continue;
            }
            if (model.family == EmissionFamily::CL) {
                const auto& tree = std::get<TreeDistribution>(model.emissions[i]);
                st.log_node = log_tables(tree.node_marginal);
                for (size_t e = 0; e < tree.edges.size(); ++e)
                    st.edges.push_back(ratio_entry(tree.edges[e].u, tree.edges[e].v,
                                                   tree.edge_joint[e],
                                                   tree.node_marginal[tree.edges[e].u],
                                                   tree.node_marginal[tree.edges[e].v], b));
                continue;
            }
            const auto& forest = std::get<ConditionalForestDistribution>(model.emissions[i]);
            st.log_node = log_tables(forest.node_marginal);
            for (size_t e = 0; e < forest.within_edges.size(); ++e)
                st.edges.push_back(ratio_entry(forest.within_edges[e].u, forest.within_edges[e].v,
                                               forest.within_joint[e],
                                               forest.node_marginal[forest.within_edges[e].u],
                                               forest.node_marginal[forest.within_edges[e].v], b));
            for (size_t e = 0; e < forest.cross_edges.size(); ++e)
                st.cross.push_back(ratio_entry(forest.cross_edges[e].y, forest.cross_edges[e].x,
                                               forest.cross_joint[e], forest.cross_y_marginal[e],
                                               forest.node_marginal[forest.cross_edges[e].x], b));
        }
    }

    const HmmModel& model() const { return model_; }

    double log_emission(int state, std::span<const std::int32_t> slice,
                        const std::int32_t* prev) const {
        const bool complete = slice_complete(slice);
        const bool prev_complete =
            prev == nullptr ||
            slice_complete(std::span<const std::int32_t>(prev, model_.num_vars));
        if (complete && prev_complete) return score_complete(state, slice, prev);
        return score_partial(state, slice, prev);
    }

private:
    struct RatioEntry {
        int a = 0, b = 0;
        Vec log_ratio;  // flattened B x B: log joint - log marg_a - log marg_b
    };
    struct StateTables {
        std::vector<Vec> log_node;
        std::vector<RatioEntry> edges;
        std::vector<RatioEntry> cross;
    };

    static std::vector<Vec> log_tables(const std::vector<Vec>& tables) {
        std::vector<Vec> out(tables.size());
        for (size_t i = 0; i < tables.size(); ++i) {
            out[i].resize(tables[i].size());
            for (size_t c = 0; c < tables[i].size(); ++c)
                out[i][c] = tables[i][c] > 0.0 ? std::log(tables[i][c]) : kNegInf;
        }
        return out;
    }

    static RatioEntry ratio_entry(int a, int b, const Mat& joint, const Vec& marg_a,
                                  const Vec& marg_b, int card) {
        RatioEntry entry;
        entry.a = a;
        entry.b = b;
        entry.log_ratio.resize(size_t(card) * card);
        for (int r = 0; r < card; ++r)
            for (int c = 0; c < card; ++c) {
                const double j = joint(r, c);
                entry.log_ratio[size_t(r) * card + c] =
                    (j > 0.0 && marg_a[r] > 0.0 && marg_b[c] > 0.0)
                        ? std::log(j) - std::log(marg_a[r]) - std::log(marg_b[c])
                        : kNegInf;
            }
        return entry;
    }

    double score_complete(int state, std::span<const std::int32_t> slice,
                          const std::int32_t* prev) const {
        const StateTables& st = states_[state];
        const int b = model_.cardinality;
        double lp = 0.0;
        for (int j = 0; j < model_.num_vars; ++j) lp += st.log_node[j][slice[j]];
        for (const RatioEntry& e : st.edges)
            lp += e.log_ratio[size_t(slice[e.a]) * b + slice[e.b]];
        if (prev != nullptr)
            for (const RatioEntry& e : st.cross)
                lp += e.log_ratio[size_t(prev[e.a]) * b + slice[e.b]];
        return lp;
    }

    double score_partial(int state, std::span<const std::int32_t> slice,
                         const std::int32_t* prev) const {
        if (model_.family == EmissionFamily::CI) {
            const auto& ci = std::get<CiEmission>(model_.emissions[state]);
            double lp = 0.0;
            for (int j = 0; j < model_.num_vars; ++j) {
                if (slice[j] == kMissing) continue;
                const double p = ci.tables[j][slice[j]];
                lp += p > 0.0 ? std::log(p) : kNegInf;
            }
            return lp;
        }
        if (model_.family == EmissionFamily::CL) {
            const auto& tree = std::get<TreeDistribution>(model_.emissions[state]);
            return tree_posterior_marginals(tree, slice).log_evidence;
        }
        const auto& forest = std::get<ConditionalForestDistribution>(model_.emissions[state]);
        if (prev == nullptr)
            return tree_posterior_marginals(within_tree(forest), slice).log_evidence;
        return conditional_posterior_marginals(
                   forest, slice, std::span<const std::int32_t>(prev, model_.num_vars))
            .log_evidence;
    }

    const HmmModel& model_;
    std::vector<StateTables> states_;
};

PosteriorSummary forward_backward_scored(const HmmScorer& scorer, const Sequence& seq) {
    const HmmModel& model = scorer.model();
    const int k = model.num_states;
    const int t_len = seq.length;
    if (t_len < 1) throw DataError("forward_backward: empty sequence");

    // Emission weights, shifted per slice so the largest is exp(0).
    std::vector<Vec> emit(t_len, Vec(k));
    Vec shift(t_len);
    for (int t = 0; t < t_len; ++t) {
        std::span<const std::int32_t> slice(seq.row(t), seq.num_vars);
        const std::int32_t* prev =
            (model.family == EmissionFamily::CCL && t > 0) ? seq.row(t - 1) : nullptr;
        double mx = kNegInf;
        for (int i = 0; i < k; ++i) {
            emit[t][i] = scorer.log_emission(i, slice, prev);
            mx = std::max(mx, emit[t][i]);
        }
        if (mx == kNegInf)
            throw NumericalError("forward_backward: zero emission probability at t=" +
                                 std::to_string(t + 1));
        shift[t] = mx;
        for (int i = 0; i < k; ++i) emit[t][i] = std::exp(emit[t][i] - mx);
    }

    PosteriorSummary post;
    post.gamma.assign(t_len, Vec(k, 0.0));
    post.log_scale.assign(t_len, 0.0);

    // Scaled forward pass.
    std::vector<Vec> fwd(t_len, Vec(k, 0.0));
    Vec scale(t_len, 0.0);
    for (int i = 0; i < k; ++i) fwd[0][i] = model.initial[i] * emit[0][i];
    scale[0] = normalize(fwd[0]);
    for (int t = 1; t < t_len; ++t) {
        for (int j = 0; j < k; ++j) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += fwd[t - 1][i] * model.transition(i, j);
            fwd[t][j] = acc * emit[t][j];
        }
        scale[t] = normalize(fwd[t]);
    }
    post.log_likelihood = 0.0;
    for (int t = 0; t < t_len; ++t) {
        if (scale[t] <= 0.0)
            throw NumericalError("forward_backward: numerical degeneracy at t=" +
                                 std::to_string(t + 1));
        post.log_scale[t] = std::log(scale[t]) + shift[t];
        post.log_likelihood += post.log_scale[t];
    }

    // Scaled backward pass sharing the forward normalizers.
    std::vector<Vec> bwd(t_len, Vec(k, 1.0));
    for (int t = t_len - 2; t >= 0; --t)
        for (int i = 0; i < k; ++i) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j)
                acc += model.transition(i, j) * emit[t + 1][j] * bwd[t + 1][j];
            bwd[t][i] = acc / scale[t + 1];
        }

    for (int t = 0; t < t_len; ++t) {
        for (int i = 0; i < k; ++i) post.gamma[t][i] = fwd[t][i] * bwd[t][i];
        normalize(post.gamma[t]);
    }

    post.xi.reserve(t_len - 1);
    for (int t = 1; t < t_len; ++t) {
        Mat x(k, k);
        double total = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const double value =
                    fwd[t - 1][i] * model.transition(i, j) * emit[t][j] * bwd[t][j];
                x(i, j) = value;
                total += value;
            }
        if (total > 0.0)
            for (double& value : x.data) value /= total;
        post.xi.push_back(std::move(x));
    }
    return post;
}

// Weighted statistics for every state in one pass over the data. For CCL
// emissions the unary and pair tables start at the second slice, like the
// cross tables, so every table describes the same weighted distribution
// and the structure update is the exact maximizer of the transition part
// of the expected log-likelihood.
std::vector<WeightedPairStats> accumulate_stats_per_state(
    const ObservationDataset& data, const std::vector<std::vector<Vec>>& gamma, int k,
    bool include_cross) {
    const int m = data.num_vars;
    const int b = data.cardinality;
    std::vector<WeightedPairStats> stats(
        k, WeightedPairStats::zeros(m, b, include_cross));

    const size_t cells = size_t(b) * b;
    for (int n = 0; n < data.num_sequences(); ++n) {
        const Sequence& seq = data.sequences[n];
        const int t_begin = include_cross ? 1 : 0;
        for (int t = t_begin; t < seq.length; ++t) {
            const double* w = gamma[n][t].data();
            const std::int32_t* row = seq.row(t);

            int p = 0;
            for (int u = 0; u < m; ++u) {
                const std::int32_t vu = row[u];
                if (vu == kMissing) {
                    p += m - u - 1;
                    continue;
                }
                for (int i = 0; i < k; ++i) {
                    stats[i].unary[u][vu] += w[i];
                    stats[i].unary_total[u] += w[i];
                }
                for (int v = u + 1; v < m; ++v, ++p) {
                    const std::int32_t vv = row[v];
                    if (vv == kMissing) continue;
                    const size_t cell = size_t(p) * cells + size_t(vu) * b + vv;
                    for (int i = 0; i < k; ++i) {
                        stats[i].pair[cell] += w[i];
                        stats[i].pair_total[p] += w[i];
                    }
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
                    for (int v = 0; v < m; ++v, ++q) {
                        const std::int32_t xv = row[v];
                        if (xv == kMissing) continue;
                        const size_t cell = size_t(q) * cells + base + xv;
                        for (int i = 0; i < k; ++i) {
                            stats[i].cross[cell] += w[i];
                            stats[i].cross_total[q] += w[i];
                        }
                    }
                }
            }
        }
    }
    return stats;
}

Emission fit_emission(EmissionFamily family, const WeightedPairStats& stats, double smoothing) {
    if (family == EmissionFamily::CI) {
        CiEmission ci;
        ci.tables.resize(stats.num_x);
        const int b = stats.cardinality;
        for (int j = 0; j < stats.num_x; ++j) {
            ci.tables[j].resize(b);
            const double denom = stats.unary_total[j] + smoothing * b;
            if (denom <= 0.0) {
                std::fill(ci.tables[j].begin(), ci.tables[j].end(), 1.0 / b);
            } else {
                for (int c = 0; c < b; ++c)
                    ci.tables[j][c] = (stats.unary[j][c] + smoothing) / denom;
            }
        }
        return ci;
    }
    if (family == EmissionFamily::CL) return fit_chow_liu(stats, smoothing);
    return fit_conditional_chow_liu(stats, smoothing);
}

struct SingleEmRun {
    HmmModel model;
    Vec trace;
};

HmmModel initialize_model(const ObservationDataset& data, const EmConfig& config, Rng& rng) {
    const int k = config.num_states;
    HmmModel model;
    model.num_states = k;
    model.num_vars = data.num_vars;
    model.cardinality = data.cardinality;
    model.family = config.family;

    model.initial.assign(k, 1.0 / k);
    model.transition = Mat(k, k);
    for (int i = 0; i < k; ++i) {
        Vec row(k);
        for (int j = 0; j < k; ++j) row[j] = 1.0 + 0.1 * rng.uniform();
        normalize(row);
        for (int j = 0; j < k; ++j) model.transition(i, j) = row[j];
    }

    // Emissions from a random soft assignment of slices to states.
    std::vector<std::vector<Vec>> weights(data.num_sequences());
    for (int n = 0; n < data.num_sequences(); ++n) {
        weights[n].assign(data.sequences[n].length, Vec(k));
        for (int t = 0; t < data.sequences[n].length; ++t) {
            for (int i = 0; i < k; ++i) weights[n][t][i] = rng.uniform();
            if (normalize(weights[n][t]) <= 0.0)
                std::fill(weights[n][t].begin(), weights[n][t].end(), 1.0 / k);
        }
    }
    auto stats = accumulate_stats_per_state(data, weights, k,
                                            config.family == EmissionFamily::CCL);
    model.emissions.reserve(k);
    for (int i = 0; i < k; ++i)
        model.emissions.push_back(fit_emission(config.family, stats[i], config.smoothing));
    return model;
}

SingleEmRun run_em_once(const ObservationDataset& data, const EmConfig& config,
                        std::uint64_t seed) {
    Rng rng(seed);
    HmmModel model = initialize_model(data, config, rng);
    const int k = config.num_states;
    const int num_seq = data.num_sequences();

    SingleEmRun run;
    HmmModel previous_model;
    double prev_ll = 0.0;
    bool have_prev = false;

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        HmmScorer scorer(model);
        std::vector<PosteriorSummary> posts(num_seq);
        double ll = 0.0;
        for (int n = 0; n < num_seq; ++n) {
            posts[n] = forward_backward_scored(scorer, data.sequences[n]);
            ll += posts[n].log_likelihood;
        }

        if (have_prev && ll < prev_ll) {
            // The structure update is a surrogate maximizer for the first
            // slice of CCL emissions, so a step can occasionally score
            // worse; reject it and keep the best model seen.
            run.model = std::move(previous_model);
            return run;
        }
        run.trace.push_back(ll);

        if (have_prev) {
            const double improvement = (ll - prev_ll) / std::max(std::abs(prev_ll), 1e-300);
            if (improvement < config.tolerance) {
                run.model = std::move(model);
                return run;
            }
        }
        prev_ll = ll;
        have_prev = true;
        previous_model = model;

        // M-step: transition structure from the accumulated posteriors,
        // emissions re-fitted (structure included) from weighted counts.
        Vec initial(k, 0.0);
        Mat transition(k, k, 0.0);
        std::vector<std::vector<Vec>> gamma(num_seq);
        for (int n = 0; n < num_seq; ++n) {
            for (int i = 0; i < k; ++i) initial[i] += posts[n].gamma[0][i];
            for (const Mat& x : posts[n].xi)
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j) transition(i, j) += x(i, j);
            gamma[n] = std::move(posts[n].gamma);
        }
        for (int i = 0; i < k; ++i) initial[i] /= num_seq;
        model.initial = initial;
        for (int i = 0; i < k; ++i) {
            double row_total = 0.0;
            for (int j = 0; j < k; ++j) row_total += transition(i, j);
            if (row_total <= 0.0) {
                for (int j = 0; j < k; ++j) model.transition(i, j) = 1.0 / k;
            } else {
                for (int j = 0; j < k; ++j) model.transition(i, j) = transition(i, j) / row_total;
            }
        }

        auto stats = accumulate_stats_per_state(data, gamma, k,
                                                config.family == EmissionFamily::CCL);
        for (int i = 0; i < k; ++i)
            model.emissions[i] = fit_emission(config.family, stats[i], config.smoothing);
    }

    // Ran out of iterations with a fresh M-step pending evaluation; score
    // the returned model so the recorded likelihood matches it exactly.
    HmmScorer scorer(model);
    double ll = 0.0;
    for (int n = 0; n < num_seq; ++n)
        ll += forward_backward_scored(scorer, data.sequences[n]).log_likelihood;
    if (have_prev && ll < prev_ll) {
        run.model = std::move(previous_model);
        return run;
    }
    run.trace.push_back(ll);
    run.model = std::move(model);
    return run;
}

// Canonical sequence order, so that fitting is invariant to how the
// sequences were arranged in the file.
ObservationDataset canonical_copy(const ObservationDataset& data) {
    std::vector<int> order(data.num_sequences());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Sequence& sa = data.sequences[a];
        const Sequence& sb = data.sequences[b];
        if (sa.length != sb.length) return sa.length < sb.length;
        return sa.values < sb.values;
    });
    ObservationDataset out;
    out.num_vars = data.num_vars;
    out.cardinality = data.cardinality;
    out.sequences.reserve(data.num_sequences());
    for (int idx : order) out.sequences.push_back(data.sequences[idx]);
    return out;
}

}  // namespace

void HmmModel::validate() const {
    if (num_states < 1) throw DataError("hmm: num_states must be >= 1");
    if (num_vars < 1 || cardinality < 2) throw DataError("hmm: bad dimensions");
    if (int(initial.size()) != num_states || transition.rows != num_states ||
        transition.cols != num_states || int(emissions.size()) != num_states)
        throw DataError("hmm: parameter shapes do not match num_states");
    if (std::abs(vec_sum(initial) - 1.0) > kNormTol)
        throw DataError("hmm: initial vector not normalized");
    Vec rows = transition.row_sums();
    for (double r : rows)
        if (std::abs(r - 1.0) > kNormTol) throw DataError("hmm: transition row not normalized");
    for (double p : initial)
        if (p < 0.0) throw DataError("hmm: negative probability");
    for (double p : transition.data)
        if (p < 0.0) throw DataError("hmm: negative probability");
    for (const Emission& e : emissions) {
        const bool ok = (family == EmissionFamily::CI && std::holds_alternative<CiEmission>(e)) ||
                        (family == EmissionFamily::CL &&
                         std::holds_alternative<TreeDistribution>(e)) ||
                        (family == EmissionFamily::CCL &&
                         std::holds_alternative<ConditionalForestDistribution>(e));
        if (!ok) throw DataError("hmm: emission variant does not match family tag");
    }
}

double emission_log_prob(const HmmModel& model, int state, std::span<const std::int32_t> slice,
                         const std::int32_t* prev) {
    if (state < 0 || state >= model.num_states) throw DataError("emission_log_prob: bad state");
    if (int(slice.size()) != model.num_vars)
        throw DataError("emission_log_prob: slice width mismatch");
    HmmScorer scorer(model);
    return scorer.log_emission(state, slice, prev);
}

PosteriorSummary forward_backward(const HmmModel& model, const Sequence& seq) {
    HmmScorer scorer(model);
    return forward_backward_scored(scorer, seq);
}

EmResult em_fit(const ObservationDataset& data, const EmConfig& config, int threads) {
    if (config.num_states < 1) throw DataError("em_fit: num_states must be >= 1");
    if (config.max_iterations < 1 || config.restarts < 1 || config.tolerance <= 0.0)
        throw DataError("em_fit: bad configuration");
    data.validate();
    if (config.family == EmissionFamily::CCL) {
        bool any_transition = false;
        for (const Sequence& seq : data.sequences)
            if (seq.length >= 2) any_transition = true;
        if (!any_transition) throw DataError("em_fit: CCL emissions need a length-2 sequence");
    }

    const ObservationDataset canonical = canonical_copy(data);
    if (threads <= 0) threads = thread_budget();

    std::vector<SingleEmRun> runs(config.restarts);
    parallel_for_index(config.restarts, threads, [&](int r) {
        runs[r] = run_em_once(canonical, config, config.seed + std::uint64_t(r));
    });

    int best = 0;
    for (int r = 1; r < config.restarts; ++r)
        if (runs[r].trace.back() > runs[best].trace.back()) best = r;

    EmResult result;
    result.model = std::move(runs[best].model);
    result.trace = std::move(runs[best].trace);
    result.iterations = int(result.trace.size());
    result.best_restart = best;
    result.final_log_likelihood = result.trace.back();
    return result;
}

LogLikelihood hmm_log_likelihood(const HmmModel& model, const ObservationDataset& data) {
    if (data.num_vars != model.num_vars || data.cardinality != model.cardinality)
        throw DataError("hmm_log_likelihood: model/data dimension mismatch");
    HmmScorer scorer(model);
    LogLikelihood ll;
    for (const Sequence& seq : data.sequences) {
        ll.total += forward_backward_scored(scorer, seq).log_likelihood;
        for (std::int32_t v : seq.values)
            if (v != kMissing) ++ll.events;
    }
    return ll;
}

ObservationDataset hmm_sample(const HmmModel& model, const std::vector<int>& lengths, Rng& rng) {
    model.validate();
    ObservationDataset data;
    data.num_vars = model.num_vars;
    data.cardinality = model.cardinality;

    // Within parts double as the first-slice distribution for CCL.
    std::vector<TreeDistribution> first_slice;
    if (model.family == EmissionFamily::CCL)
        for (const Emission& e : model.emissions)
            first_slice.push_back(within_tree(std::get<ConditionalForestDistribution>(e)));

    for (int length : lengths) {
        if (length < 1) throw DataError("hmm_sample: lengths must be positive");
        Sequence seq(length, model.num_vars);
        int state = rng.categorical(model.initial);
        for (int t = 0; t < length; ++t) {
            if (t > 0) {
                Vec row(model.num_states);
                for (int j = 0; j < model.num_states; ++j) row[j] = model.transition(state, j);
                state = rng.categorical(row);
            }
            std::vector<std::int32_t> slice;
            switch (model.family) {
                case EmissionFamily::CI: {
                    const auto& ci = std::get<CiEmission>(model.emissions[state]);
                    slice.resize(model.num_vars);
                    for (int j = 0; j < model.num_vars; ++j)
                        slice[j] = rng.categorical(ci.tables[j]);
                    break;
                }
                case EmissionFamily::CL:
                    slice = sample_tree(std::get<TreeDistribution>(model.emissions[state]), rng);
                    break;
                case EmissionFamily::CCL:
                    if (t == 0) {
                        slice = sample_tree(first_slice[state], rng);
                    } else {
                        slice = sample_conditional(
                            std::get<ConditionalForestDistribution>(model.emissions[state]),
                            std::span<const std::int32_t>(seq.row(t - 1), model.num_vars), rng);
                    }
                    break;
            }
            for (int j = 0; j < model.num_vars; ++j) seq.at(t, j) = slice[j];
        }
        data.sequences.push_back(std::move(seq));
    }
    return data;
}

std::vector<int> posterior_decode(const HmmModel& model, const Sequence& seq) {
    PosteriorSummary post = forward_backward(model, seq);
    std::vector<int> states(seq.length);
    for (int t = 0; t < seq.length; ++t) states[t] = argmax_lowest(post.gamma[t]);
    return states;
}

std::vector<int> viterbi(const HmmModel& model, const Sequence& seq) {
    const int k = model.num_states;
    const int t_len = seq.length;
    if (t_len < 1) throw DataError("viterbi: empty sequence");
    HmmScorer scorer(model);

    std::vector<Vec> delta(t_len, Vec(k, kNegInf));
    std::vector<std::vector<int>> back(t_len, std::vector<int>(k, 0));
    for (int t = 0; t < t_len; ++t) {
        std::span<const std::int32_t> slice(seq.row(t), seq.num_vars);
        const std::int32_t* prev =
            (model.family == EmissionFamily::CCL && t > 0) ? seq.row(t - 1) : nullptr;
        for (int j = 0; j < k; ++j) {
            const double emit = scorer.log_emission(j, slice, prev);
            if (t == 0) {
                delta[0][j] = (model.initial[j] > 0.0 ? std::log(model.initial[j]) : kNegInf) + emit;
                continue;
            }
            double best = kNegInf;
            int arg = 0;
            for (int i = 0; i < k; ++i) {
                const double gij = model.transition(i, j);
                const double cand = delta[t - 1][i] + (gij > 0.0 ? std::log(gij) : kNegInf);
                if (cand > best) {
                    best = cand;
                    arg = i;
                }
            }
            delta[t][j] = best + emit;
            back[t][j] = arg;
        }
    }

    std::vector<int> path(t_len);
    path[t_len - 1] = argmax_lowest(delta[t_len - 1]);
    for (int t = t_len - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
    return path;
}

std::vector<CellPosterior> impute(const HmmModel& model, const ObservationDataset& data) {
    if (data.num_vars != model.num_vars || data.cardinality != model.cardinality)
        throw DataError("impute: model/data dimension mismatch");
    const int k = model.num_states;
    const int b = model.cardinality;
    HmmScorer scorer(model);

    std::vector<TreeDistribution> first_slice;
    if (model.family == EmissionFamily::CCL)
        for (const Emission& e : model.emissions)
            first_slice.push_back(within_tree(std::get<ConditionalForestDistribution>(e)));

    std::vector<CellPosterior> out;
    for (int n = 0; n < data.num_sequences(); ++n) {
        const Sequence& seq = data.sequences[n];
        bool any_missing = false;
        for (std::int32_t v : seq.values)
            if (v == kMissing) any_missing = true;
        if (!any_missing) continue;

        PosteriorSummary post = forward_backward_scored(scorer, seq);
        for (int t = 0; t < seq.length; ++t) {
            std::span<const std::int32_t> slice(seq.row(t), seq.num_vars);
            if (slice_complete(slice)) continue;

            // Per-state conditional marginals of the slice's missing cells.
            std::vector<std::vector<Vec>> state_marginals(k);
            for (int i = 0; i < k; ++i) {
                switch (model.family) {
                    case EmissionFamily::CI: {
                        const auto& ci = std::get<CiEmission>(model.emissions[i]);
                        state_marginals[i] = ci.tables;
                        break;
                    }
                    case EmissionFamily::CL:
                        state_marginals[i] =
                            tree_posterior_marginals(
                                std::get<TreeDistribution>(model.emissions[i]), slice)
                                .marginals;
                        break;
                    case EmissionFamily::CCL:
                        if (t == 0) {
                            state_marginals[i] =
                                tree_posterior_marginals(first_slice[i], slice).marginals;
                        } else {
                            state_marginals[i] =
                                conditional_posterior_marginals(
                                    std::get<ConditionalForestDistribution>(model.emissions[i]),
                                    slice,
                                    std::span<const std::int32_t>(seq.row(t - 1), model.num_vars))
                                    .marginals;
                        }
                        break;
                }
            }
            for (int j = 0; j < model.num_vars; ++j) {
                if (slice[j] != kMissing) continue;
                Vec posterior(b, 0.0);
                for (int i = 0; i < k; ++i)
                    for (int c = 0; c < b; ++c)
                        posterior[c] += post.gamma[t][i] * state_marginals[i][j][c];
                normalize(posterior);
                out.push_back({n, t, j, posterior, std::int32_t(argmax_lowest(posterior))});
            }
        }
    }
    return out;
}

}  // namespace cclhmm
