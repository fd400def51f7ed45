#ifndef CCLHMM_HMM_HPP
#define CCLHMM_HMM_HPP

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "cclhmm/conditional_forest.hpp"
#include "cclhmm/dataset.hpp"
#include "cclhmm/results.hpp"
#include "cclhmm/rng.hpp"
#include "cclhmm/stats.hpp"
#include "cclhmm/tree.hpp"

namespace cclhmm {

enum class EmissionFamily {
    CI,   // per-variable tables, conditionally independent given the state
    CL,   // tree over the slice
    CCL,  // conditional forest on the previous slice
};

struct CiEmission {
    std::vector<Vec> tables;  // per variable, length B
};

using Emission = std::variant<CiEmission, TreeDistribution, ConditionalForestDistribution>;

// Hidden Markov model over M-variate slices. For CCL emissions the slice
// at t = 1 is scored under the forest's within part only (the cross
// factors have no predecessor to bind to).
struct HmmModel {
    int num_states = 0;
    int num_vars = 0;
    int cardinality = 0;
    EmissionFamily family = EmissionFamily::CI;
    Vec initial;     // length K
    Mat transition;  // K x K, rows normalized
    std::vector<Emission> emissions;

    void validate() const;
};

struct PosteriorSummary {
    std::vector<Vec> gamma;  // T x K state posteriors
    std::vector<Mat> xi;     // T-1 entries; xi[t] pairs slices (t, t+1)
    double log_likelihood = 0.0;
    Vec log_scale;  // per-slice log normalizers from the forward pass
};

struct EmConfig {
    int max_iterations = 100;
    double tolerance = 1e-6;  // relative log-likelihood improvement
    int restarts = 10;
    std::uint64_t seed = 0;
    double smoothing = 0.1;
    EmissionFamily family = EmissionFamily::CL;
    int num_states = 1;
};

struct EmResult {
    HmmModel model;
    Vec trace;  // training log-likelihood per iteration, best restart
    int iterations = 0;
    int best_restart = 0;
    double final_log_likelihood = 0.0;
};

// Log-probability of one slice (possibly partial) under one state.
// prev is the previous slice for CCL emissions, nullptr at t = 1.
double emission_log_prob(const HmmModel& model, int state, std::span<const std::int32_t> slice,
                         const std::int32_t* prev);

PosteriorSummary forward_backward(const HmmModel& model, const Sequence& seq);

// Baum-Welch with per-iteration structure re-learning in the M-step.
// Runs `restarts` seeded initializations (seed + restart index) and keeps
// the best final training log-likelihood, ties to the lowest index.
// threads <= 0 selects the process-wide budget.
EmResult em_fit(const ObservationDataset& data, const EmConfig& config, int threads = 0);

LogLikelihood hmm_log_likelihood(const HmmModel& model, const ObservationDataset& data);

ObservationDataset hmm_sample(const HmmModel& model, const std::vector<int>& lengths, Rng& rng);

std::vector<int> posterior_decode(const HmmModel& model, const Sequence& seq);
std::vector<int> viterbi(const HmmModel& model, const Sequence& seq);

// Posterior distribution over each missing cell, mixing the per-state
// slice conditionals with the state posteriors.
std::vector<CellPosterior> impute(const HmmModel& model, const ObservationDataset& data);

}  // namespace cclhmm

#endif
