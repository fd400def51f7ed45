#include "cclhmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cclhmm/errors.hpp"

namespace cclhmm {

bool is_hmm_family(ModelFamily family) {
    return family == ModelFamily::HmmCi || family == ModelFamily::HmmCl ||
           family == ModelFamily::HmmCcl;
}

std::string family_name(ModelFamily family) {
    switch (family) {
        case ModelFamily::IndependentChains: return "chains";
        case ModelFamily::Cclf: return "cclf";
        case ModelFamily::HmmCi: return "hmm-ci";
        case ModelFamily::HmmCl: return "hmm-cl";
        case ModelFamily::HmmCcl: return "hmm-ccl";
    }
    return "?";
}

ModelFamily family_from_name(const std::string& name) {
    if (name == "chains") return ModelFamily::IndependentChains;
    if (name == "cclf") return ModelFamily::Cclf;
    if (name == "hmm-ci") return ModelFamily::HmmCi;
    if (name == "hmm-cl") return ModelFamily::HmmCl;
    if (name == "hmm-ccl") return ModelFamily::HmmCcl;
    throw DataError("unknown model family: " + name);
}

ModelFamily family_of(const AnyModel& model) {
    if (std::holds_alternative<IndependentChainsModel>(model))
        return ModelFamily::IndependentChains;
    if (std::holds_alternative<ChainForestModel>(model)) return ModelFamily::Cclf;
    switch (std::get<HmmModel>(model).family) {
        case EmissionFamily::CI: return ModelFamily::HmmCi;
        case EmissionFamily::CL: return ModelFamily::HmmCl;
        case EmissionFamily::CCL: return ModelFamily::HmmCcl;
    }
    return ModelFamily::HmmCi;
}

AnyModel fit_model(const ModelSpec& spec, const ObservationDataset& data, std::uint64_t seed,
                   int threads) {
    switch (spec.family) {
        case ModelFamily::IndependentChains:
            return fit_independent_chains(data, spec.smoothing);
        case ModelFamily::Cclf:
            return fit_cclf(data, spec.smoothing);
        default: {
            EmConfig config = spec.em;
            config.seed = seed;
            config.smoothing = spec.smoothing;
            config.num_states = spec.num_states;
            config.family = spec.family == ModelFamily::HmmCi   ? EmissionFamily::CI
                            : spec.family == ModelFamily::HmmCl ? EmissionFamily::CL
                                                                : EmissionFamily::CCL;
            return em_fit(data, config, threads).model;
        }
    }
}

LogLikelihood model_log_likelihood(const AnyModel& model, const ObservationDataset& data) {
    if (const auto* chains = std::get_if<IndependentChainsModel>(&model))
        return chains_log_likelihood(*chains, data);
    if (const auto* cclf = std::get_if<ChainForestModel>(&model))
        return cclf_log_likelihood(*cclf, data);
    return hmm_log_likelihood(std::get<HmmModel>(model), data);
}

std::vector<CellPosterior> model_impute(const AnyModel& model, const ObservationDataset& data) {
    if (const auto* chains = std::get_if<IndependentChainsModel>(&model))
        return impute_chains(*chains, data);
    if (const auto* cclf = std::get_if<ChainForestModel>(&model))
        return impute_cclf(*cclf, data);
    return impute(std::get<HmmModel>(model), data);
}

ObservationDataset model_sample(const AnyModel& model, const std::vector<int>& lengths, Rng& rng) {
    if (const auto* hmm = std::get_if<HmmModel>(&model)) return hmm_sample(*hmm, lengths, rng);
    ObservationDataset out;
    if (const auto* chains = std::get_if<IndependentChainsModel>(&model)) {
        out.num_vars = chains->num_vars;
        out.cardinality = chains->cardinality;
        for (int len : lengths) out.sequences.push_back(chains_sample(*chains, len, rng));
        return out;
    }
    const auto& cclf = std::get<ChainForestModel>(model);
    out.num_vars = cclf.num_vars();
    out.cardinality = cclf.cardinality();
    for (int len : lengths) out.sequences.push_back(cclf_sample(cclf, len, rng));
    return out;
}

double scaled_log_likelihood(const AnyModel& model, const ObservationDataset& heldout) {
    LogLikelihood ll = model_log_likelihood(model, heldout);
    if (ll.events == 0) throw DataError("scaled_log_likelihood: no observed cells to score");
    return ll.per_event();
}

namespace {

struct CellRef {
    int n, t, j;
    bool operator<(const CellRef& o) const {
        if (n != o.n) return n < o.n;
        if (t != o.t) return t < o.t;
        return j < o.j;
    }
};

// Seeded uniform sample (without replacement) of observed cells.
std::vector<CellRef> sample_cells(const ObservationDataset& data, double fraction, Rng& rng,
                                  std::vector<std::string>* warnings) {
    std::vector<CellRef> observed;
    for (int n = 0; n < data.num_sequences(); ++n) {
        const Sequence& seq = data.sequences[n];
        for (int t = 0; t < seq.length; ++t)
            for (int j = 0; j < seq.num_vars; ++j)
                if (seq.at(t, j) != kMissing) observed.push_back({n, t, j});
    }
    if (observed.empty()) throw DataError("holdout: dataset has no observed cells");

    // Fisher-Yates on the prefix we need.
    long long want = std::max<long long>(1, std::llround(fraction * double(observed.size())));
    want = std::min<long long>(want, (long long)observed.size());
    for (long long i = 0; i < want; ++i) {
        long long pick = i + (long long)(rng.uniform() * double(observed.size() - i));
        pick = std::min(pick, (long long)observed.size() - 1);
        std::swap(observed[i], observed[pick]);
    }
    observed.resize(want);

    if (warnings) {
        // A variable losing every observation makes its tables smoothing-only.
        std::vector<long long> total(data.num_vars, 0), masked(data.num_vars, 0);
        for (int n = 0; n < data.num_sequences(); ++n) {
            const Sequence& seq = data.sequences[n];
            for (int t = 0; t < seq.length; ++t)
                for (int j = 0; j < seq.num_vars; ++j)
                    if (seq.at(t, j) != kMissing) ++total[j];
        }
        for (const CellRef& c : observed) ++masked[c.j];
        for (int j = 0; j < data.num_vars; ++j)
            if (total[j] > 0 && masked[j] == total[j])
                warnings->push_back("holdout masked every observation of variable " +
                                    std::to_string(j));
    }
    return observed;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / double(xs.size());
}

double stddev_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / double(xs.size() - 1));
}

// Scores argmax predictions for the given cells against the intact data.
HoldoutResult score_predictions(const AnyModel& model, const ObservationDataset& masked,
                                const ObservationDataset& truth,
                                const std::vector<CellRef>& cells) {
    std::map<CellRef, std::int32_t> wanted;
    for (const CellRef& c : cells) wanted[c] = truth.sequences[c.n].at(c.t, c.j);

    HoldoutResult result;
    result.heldout_cells = (long long)cells.size();
    auto imputed = model_impute(model, masked);
    long long scored = 0;
    for (const auto& cell : imputed) {
        auto it = wanted.find({cell.sequence, cell.t, cell.var});
        if (it == wanted.end()) continue;
        ++scored;
        if (cell.prediction != it->second) ++result.wrong;
    }
    if (scored != result.heldout_cells)
        throw NumericalError("holdout: imputation did not cover every masked cell");
    result.error = result.heldout_cells > 0 ? double(result.wrong) / double(result.heldout_cells)
                                            : 0.0;
    return result;
}

}  // namespace

HoldoutResult holdout_prediction_error(const ModelSpec& spec, const ObservationDataset& data,
                                       double holdout_fraction, bool retrain_with_missing,
                                       std::uint64_t seed, int threads) {
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
        throw DataError("holdout_prediction_error: fraction must be in (0, 1)");
    Rng rng(seed);
    HoldoutResult result;
    auto cells = sample_cells(data, holdout_fraction, rng, &result.warnings);

    ObservationDataset masked = data;
    for (const CellRef& c : cells) masked.sequences[c.n].at(c.t, c.j) = kMissing;

    AnyModel model = fit_model(spec, retrain_with_missing ? masked : data, seed, threads);
    HoldoutResult scored = score_predictions(model, masked, data, cells);
    scored.warnings = std::move(result.warnings);
    return scored;
}

EvalReport leave_one_season_out_cv(const ModelSpec& spec, const ObservationDataset& data,
                                   std::uint64_t seed, double holdout_fraction, int threads) {
    if (data.num_sequences() < 2)
        throw DataError("leave_one_season_out_cv: need at least two sequences");

    EvalReport report;
    report.seed = seed;
    std::vector<double> scores, errors;

    for (int fold = 0; fold < data.num_sequences(); ++fold) {
        ObservationDataset train;
        train.num_vars = data.num_vars;
        train.cardinality = data.cardinality;
        for (int n = 0; n < data.num_sequences(); ++n)
            if (n != fold) train.sequences.push_back(data.sequences[n]);
        ObservationDataset test;
        test.num_vars = data.num_vars;
        test.cardinality = data.cardinality;
        test.sequences.push_back(data.sequences[fold]);

        AnyModel model = fit_model(spec, train, seed + std::uint64_t(fold), threads);

        FoldResult fr;
        fr.fold = fold;
        LogLikelihood ll = model_log_likelihood(model, test);
        fr.events = ll.events;
        fr.scaled_log_likelihood = ll.per_event();
        scores.push_back(fr.scaled_log_likelihood);

        if (holdout_fraction > 0.0) {
            Rng rng(seed + std::uint64_t(fold) * 1000003ull);
            auto cells = sample_cells(test, holdout_fraction, rng, &report.warnings);
            ObservationDataset masked = test;
            for (const CellRef& c : cells) masked.sequences[c.n].at(c.t, c.j) = kMissing;
            HoldoutResult scored = score_predictions(model, masked, test, cells);
            fr.has_prediction_error = true;
            fr.prediction_error = scored.error;
            fr.heldout_cells = scored.heldout_cells;
            errors.push_back(scored.error);
        }
        report.folds.push_back(fr);
    }

    report.mean_scaled_log_likelihood = mean_of(scores);
    report.stddev_scaled_log_likelihood = stddev_of(scores);
    if (!errors.empty()) {
        report.has_prediction_error = true;
        report.mean_prediction_error = mean_of(errors);
        report.stddev_prediction_error = stddev_of(errors);
    }
    return report;
}

KSelection select_k(const ModelSpec& spec, const ObservationDataset& data,
                    const std::vector<int>& k_range, std::uint64_t seed, int threads) {
    if (k_range.empty()) throw DataError("select_k: empty K range");
    if (!is_hmm_family(spec.family)) throw DataError("select_k: spec must name an HMM family");

    KSelection selection;
    for (int k : k_range) {
        ModelSpec per_k = spec;
        per_k.num_states = k;
        EvalReport report = leave_one_season_out_cv(per_k, data, seed, 0.0, threads);
        selection.k_values.push_back(k);
        selection.mean_scores.push_back(report.mean_scaled_log_likelihood);
    }
    int best = 0;
    for (size_t i = 1; i < selection.k_values.size(); ++i) {
        const bool better = selection.mean_scores[i] > selection.mean_scores[best];
        const bool tie_smaller_k = selection.mean_scores[i] == selection.mean_scores[best] &&
                                   selection.k_values[i] < selection.k_values[best];
        if (better || tie_smaller_k) best = int(i);
    }
    selection.chosen_k = selection.k_values[best];
    return selection;
}

}  // namespace cclhmm
