#include "cclhmm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cclhmm/errors.hpp"

namespace cclhmm {

namespace {

constexpr double kNormTol = 1e-9;

int argmax_lowest(const Vec& v) {
    int best = 0;
    for (int i = 1; i < int(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace

void IndependentChainsModel::validate() const {
    if (num_vars < 1 || cardinality < 2) throw DataError("chains: bad dimensions");
    if (int(initial.size()) != num_vars || int(transition.size()) != num_vars)
        throw DataError("chains: table counts do not match num_vars");
    for (int j = 0; j < num_vars; ++j) {
        if (std::abs(vec_sum(initial[j]) - 1.0) > kNormTol)
            throw DataError("chains: initial distribution not normalized");
        Vec rows = transition[j].row_sums();
        for (double r : rows)
            if (std::abs(r - 1.0) > kNormTol)
                throw DataError("chains: transition row not normalized");
        for (double p : initial[j])
            if (p < 0.0) throw DataError("chains: negative probability");
        for (double p : transition[j].data)
            if (p < 0.0) throw DataError("chains: negative probability");
    }
}

IndependentChainsModel fit_independent_chains(const ObservationDataset& data, double smoothing) {
    const int m = data.num_vars;
    const int b = data.cardinality;

    IndependentChainsModel model;
    model.num_vars = m;
    model.cardinality = b;
    model.initial.assign(m, Vec(b, 0.0));
    model.transition.assign(m, Mat(b, b, 0.0));

    std::vector<double> initial_total(m, 0.0);
    std::vector<double> transition_total(m, 0.0);
    for (const Sequence& seq : data.sequences) {
        if (seq.length >= 1) {
            for (int j = 0; j < m; ++j) {
                std::int32_t v = seq.at(0, j);
                if (v == kMissing) continue;
                model.initial[j][v] += 1.0;
                initial_total[j] += 1.0;
            }
        }
        for (int t = 1; t < seq.length; ++t)
            for (int j = 0; j < m; ++j) {
                std::int32_t prev = seq.at(t - 1, j), cur = seq.at(t, j);
                if (prev == kMissing || cur == kMissing) continue;
                model.transition[j](prev, cur) += 1.0;
                transition_total[j] += 1.0;
            }
    }

    for (int j = 0; j < m; ++j) {
        const double denom = initial_total[j] + smoothing * b;
        if (denom <= 0.0)
            throw NumericalError("chains: variable " + std::to_string(j) +
                                 " has no initial observations and no smoothing");
        for (int v = 0; v < b; ++v) model.initial[j][v] = (model.initial[j][v] + smoothing) / denom;

        if (transition_total[j] <= 0.0 && smoothing <= 0.0)
            throw NumericalError("chains: variable " + std::to_string(j) +
                                 " has no usable transitions and no smoothing");
        for (int a = 0; a < b; ++a) {
            double row_total = 0.0;
            for (int c = 0; c < b; ++c) row_total += model.transition[j](a, c);
            const double row_denom = row_total + smoothing * b;
            if (row_denom <= 0.0) {
                // Source value never observed; the row is unconstrained.
                for (int c = 0; c < b; ++c) model.transition[j](a, c) = 1.0 / b;
            } else {
                for (int c = 0; c < b; ++c)
                    model.transition[j](a, c) = (model.transition[j](a, c) + smoothing) / row_denom;
            }
        }
    }
    return model;
}

ChainForestModel fit_cclf(const ObservationDataset& data, double smoothing,
                          InitialSlice convention) {
    bool any_transition = false;
    for (const Sequence& seq : data.sequences)
        if (seq.length >= 2) any_transition = true;
    if (!any_transition) throw DataError("fit_cclf: every sequence has length 1");

    ChainForestModel model;
    auto transition_stats =
        accumulate_stats(data, uniform_weights(data), true, TimeRange::FromSecond);
    model.transition = fit_conditional_chow_liu(transition_stats, smoothing);
    if (convention == InitialSlice::SeparateTree) {
        auto initial_stats =
            accumulate_stats(data, uniform_weights(data), false, TimeRange::FirstOnly);
        model.initial = fit_chow_liu(initial_stats, smoothing);
    } else {
        // Shared tables: the transition forest's within part doubles as
        // the first-slice distribution.
        model.initial = within_tree(model.transition);
    }
    return model;
}

LogLikelihood chains_log_likelihood(const IndependentChainsModel& model,
                                    const ObservationDataset& data) {
    if (data.num_vars != model.num_vars || data.cardinality != model.cardinality)
        throw DataError("chains_log_likelihood: model/data dimension mismatch");
    const int b = model.cardinality;

    LogLikelihood ll;
    for (const Sequence& seq : data.sequences) {
        for (int j = 0; j < model.num_vars; ++j) {
            // Forward pass over the variable's value chain; a missing cell
            // just propagates the predictive distribution.
            Vec state = model.initial[j];
            for (int t = 0; t < seq.length; ++t) {
                if (t > 0) {
                    Vec pred(b, 0.0);
                    for (int a = 0; a < b; ++a) {
                        if (state[a] == 0.0) continue;
                        for (int c = 0; c < b; ++c) pred[c] += state[a] * model.transition[j](a, c);
                    }
                    state = std::move(pred);
                }
                std::int32_t v = seq.at(t, j);
                if (v == kMissing) continue;
                if (state[v] <= 0.0)
                    throw NumericalError("chains_log_likelihood: zero-probability observation");
                ll.total += std::log(state[v]);
                ll.events += 1;
                std::fill(state.begin(), state.end(), 0.0);
                state[v] = 1.0;
            }
        }
    }
    return ll;
}

LogLikelihood cclf_log_likelihood(const ChainForestModel& model, const ObservationDataset& data) {
    if (data.num_vars != model.num_vars() || data.cardinality != model.cardinality())
        throw DataError("cclf_log_likelihood: model/data dimension mismatch");
    const int m = model.num_vars();

    LogLikelihood ll;
    for (const Sequence& seq : data.sequences) {
        for (int t = 0; t < seq.length; ++t) {
            std::span<const std::int32_t> row(seq.row(t), m);
            int observed = 0;
            for (int j = 0; j < m; ++j)
                if (row[j] != kMissing) ++observed;
            ll.events += observed;

            if (t == 0) {
                if (observed == m)
                    ll.total += log_prob_tree(model.initial, row);
                else if (observed > 0)
                    ll.total += tree_posterior_marginals(model.initial, row).log_evidence;
                continue;
            }
            std::span<const std::int32_t> prev(seq.row(t - 1), m);
            bool prev_complete = true;
            for (int j = 0; j < m; ++j)
                if (prev[j] == kMissing) prev_complete = false;
            if (observed == m && prev_complete)
                ll.total += log_prob_conditional(model.transition, row, prev);
            else if (observed > 0)
                ll.total += conditional_posterior_marginals(model.transition, row, prev)
                                .log_evidence;
        }
    }
    return ll;
}

Sequence chains_sample(const IndependentChainsModel& model, int length, Rng& rng) {
    Sequence seq(length, model.num_vars);
    for (int t = 0; t < length; ++t)
        for (int j = 0; j < model.num_vars; ++j) {
            if (t == 0) {
                seq.at(t, j) = rng.categorical(model.initial[j]);
            } else {
                const Mat& tr = model.transition[j];
                Vec row(model.cardinality);
                for (int c = 0; c < model.cardinality; ++c) row[c] = tr(seq.at(t - 1, j), c);
                seq.at(t, j) = rng.categorical(row);
            }
        }
    return seq;
}

Sequence cclf_sample(const ChainForestModel& model, int length, Rng& rng) {
    Sequence seq(length, model.num_vars());
    for (int t = 0; t < length; ++t) {
        std::vector<std::int32_t> slice;
        if (t == 0) {
            slice = sample_tree(model.initial, rng);
        } else {
            std::span<const std::int32_t> prev(seq.row(t - 1), model.num_vars());
            slice = sample_conditional(model.transition, prev, rng);
        }
        for (int j = 0; j < model.num_vars(); ++j) seq.at(t, j) = slice[j];
    }
    return seq;
}

std::vector<CellPosterior> impute_chains(const IndependentChainsModel& model,
                                         const ObservationDataset& data) {
    if (data.num_vars != model.num_vars || data.cardinality != model.cardinality)
        throw DataError("impute_chains: model/data dimension mismatch");
    const int b = model.cardinality;

    std::vector<CellPosterior> out;
    for (int n = 0; n < data.num_sequences(); ++n) {
        const Sequence& seq = data.sequences[n];
        for (int j = 0; j < model.num_vars; ++j) {
            bool any_missing = false;
            for (int t = 0; t < seq.length; ++t)
                if (seq.at(t, j) == kMissing) any_missing = true;
            if (!any_missing) continue;

            const int len = seq.length;
            // Scaled forward and backward passes over the value chain with
            // indicator evidence at observed cells.
            std::vector<Vec> fwd(len), bwd(len, Vec(b, 1.0));
            for (int t = 0; t < len; ++t) {
                Vec f = (t == 0) ? model.initial[j] : Vec(b, 0.0);
                if (t > 0) {
                    for (int a = 0; a < b; ++a) {
                        if (fwd[t - 1][a] == 0.0) continue;
                        for (int c = 0; c < b; ++c) f[c] += fwd[t - 1][a] * model.transition[j](a, c);
                    }
                }
                std::int32_t v = seq.at(t, j);
                if (v != kMissing)
                    for (int c = 0; c < b; ++c)
                        if (c != v) f[c] = 0.0;
                if (normalize(f) <= 0.0)
                    throw NumericalError("impute_chains: zero-probability evidence");
                fwd[t] = std::move(f);
            }
            for (int t = len - 2; t >= 0; --t) {
                Vec w(b, 0.0);
                std::int32_t v = seq.at(t + 1, j);
                for (int a = 0; a < b; ++a)
                    for (int c = 0; c < b; ++c) {
                        if (v != kMissing && c != v) continue;
                        w[a] += model.transition[j](a, c) * bwd[t + 1][c];
                    }
                normalize(w);
                bwd[t] = std::move(w);
            }
            for (int t = 0; t < len; ++t) {
                if (seq.at(t, j) != kMissing) continue;
                Vec post(b);
                for (int a = 0; a < b; ++a) post[a] = fwd[t][a] * bwd[t][a];
                normalize(post);
                out.push_back({n, t, j, post, std::int32_t(argmax_lowest(post))});
            }
        }
    }
    return out;
}

std::vector<CellPosterior> impute_cclf(const ChainForestModel& model,
                                       const ObservationDataset& data) {
    if (data.num_vars != model.num_vars() || data.cardinality != model.cardinality())
        throw DataError("impute_cclf: model/data dimension mismatch");
    const int m = model.num_vars();

    // Per-slice conditionals given the adjacent observed cells; the effect
    // of the following slice on the current one is not folded back in.
    std::vector<CellPosterior> out;
    for (int n = 0; n < data.num_sequences(); ++n) {
        const Sequence& seq = data.sequences[n];
        for (int t = 0; t < seq.length; ++t) {
            bool any_missing = false;
            for (int j = 0; j < m; ++j)
                if (seq.at(t, j) == kMissing) any_missing = true;
            if (!any_missing) continue;

            std::span<const std::int32_t> row(seq.row(t), m);
            PosteriorMarginals post;
            if (t == 0) {
                post = tree_posterior_marginals(model.initial, row);
            } else {
                std::span<const std::int32_t> prev(seq.row(t - 1), m);
                post = conditional_posterior_marginals(model.transition, row, prev);
            }
            for (int j = 0; j < m; ++j) {
                if (seq.at(t, j) != kMissing) continue;
                out.push_back({n, t, j, post.marginals[j],
                               std::int32_t(argmax_lowest(post.marginals[j]))});
            }
        }
    }
    return out;
}

}  // namespace cclhmm
