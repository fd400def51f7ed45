#ifndef CCLHMM_EVAL_HPP
#define CCLHMM_EVAL_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cclhmm/baselines.hpp"
#include "cclhmm/dataset.hpp"
#include "cclhmm/hmm.hpp"
#include "cclhmm/results.hpp"

namespace cclhmm {

enum class ModelFamily {
    IndependentChains,
    Cclf,
    HmmCi,
    HmmCl,
    HmmCcl,
};

bool is_hmm_family(ModelFamily family);
std::string family_name(ModelFamily family);
ModelFamily family_from_name(const std::string& name);

struct ModelSpec {
    ModelFamily family = ModelFamily::IndependentChains;
    int num_states = 1;  // HMM families only
    double smoothing = 0.1;
    EmConfig em;  // iteration/restart/tolerance settings for HMM families
};

using AnyModel = std::variant<IndependentChainsModel, ChainForestModel, HmmModel>;

ModelFamily family_of(const AnyModel& model);

// Fits the requested family; `seed` drives every random choice.
AnyModel fit_model(const ModelSpec& spec, const ObservationDataset& data, std::uint64_t seed,
                   int threads = 0);

LogLikelihood model_log_likelihood(const AnyModel& model, const ObservationDataset& data);
std::vector<CellPosterior> model_impute(const AnyModel& model, const ObservationDataset& data);
ObservationDataset model_sample(const AnyModel& model, const std::vector<int>& lengths, Rng& rng);

// Held-out log-likelihood divided by the number of observed cells.
double scaled_log_likelihood(const AnyModel& model, const ObservationDataset& heldout);

struct FoldResult {
    int fold = 0;
    double scaled_log_likelihood = 0.0;
    long long events = 0;
    bool has_prediction_error = false;
    double prediction_error = 0.0;
    long long heldout_cells = 0;
};

struct EvalReport {
    std::vector<FoldResult> folds;
    double mean_scaled_log_likelihood = 0.0;
    double stddev_scaled_log_likelihood = 0.0;
    bool has_prediction_error = false;
    double mean_prediction_error = 0.0;
    double stddev_prediction_error = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

struct HoldoutResult {
    double error = 0.0;
    long long heldout_cells = 0;
    long long wrong = 0;
    std::vector<std::string> warnings;
};

// Masks a seeded uniform sample of the observed cells, fits per spec (on
// the masked data when retrain_with_missing, otherwise on the intact
// data), and scores the argmax imputations against the hidden truth.
HoldoutResult holdout_prediction_error(const ModelSpec& spec, const ObservationDataset& data,
                                       double holdout_fraction, bool retrain_with_missing,
                                       std::uint64_t seed, int threads = 0);

// Leave-one-sequence-out cross-validation. When holdout_fraction > 0 each
// fold also masks that share of the held-out sequence's cells and scores
// the fold model's predictions on them.
EvalReport leave_one_season_out_cv(const ModelSpec& spec, const ObservationDataset& data,
                                   std::uint64_t seed, double holdout_fraction = 0.0,
                                   int threads = 0);

struct KSelection {
    int chosen_k = 0;
    std::vector<int> k_values;
    std::vector<double> mean_scores;
};

// Cross-validated scores per K; the smallest K attaining the best mean
// scaled log-likelihood wins.
KSelection select_k(const ModelSpec& spec, const ObservationDataset& data,
                    const std::vector<int>& k_range, std::uint64_t seed, int threads = 0);

}  // namespace cclhmm

#endif
