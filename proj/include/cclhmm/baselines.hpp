#ifndef CCLHMM_BASELINES_HPP
#define CCLHMM_BASELINES_HPP

#include <cstdint>
#include <vector>

#include "cclhmm/conditional_forest.hpp"
#include "cclhmm/dataset.hpp"
#include "cclhmm/results.hpp"
#include "cclhmm/rng.hpp"
#include "cclhmm/tree.hpp"

namespace cclhmm {

// One first-order Markov chain per variable, independent across variables.
struct IndependentChainsModel {
    int num_vars = 0;
    int cardinality = 0;
    std::vector<Vec> initial;      // per variable, length B
    std::vector<Mat> transition;   // per variable, B x B with normalized rows

    void validate() const;
};

// How the first slice of a chain forest is modeled: either its own tree
// fitted to the t=1 slices, or the transition forest's within part (the
// reduction hidden-state models use, exposed here so the two line up).
enum class InitialSlice {
    SeparateTree,
    WithinReduction,
};

// Each slice is a conditional Chow-Liu forest given the previous slice.
struct ChainForestModel {
    TreeDistribution initial;                // distribution of slice 1
    ConditionalForestDistribution transition;

    int num_vars() const { return transition.num_x; }
    int cardinality() const { return transition.cardinality; }
};

IndependentChainsModel fit_independent_chains(const ObservationDataset& data, double smoothing);

ChainForestModel fit_cclf(const ObservationDataset& data, double smoothing,
                          InitialSlice convention = InitialSlice::SeparateTree);

// Missing cells are handled exactly for the chains model (a forward pass
// over each variable's value chain) and per-slice for the chain forest
// (unobserved previous-slice parents are averaged under the forest's
// node marginals, the same approximation inference uses elsewhere).
LogLikelihood chains_log_likelihood(const IndependentChainsModel& model,
                                    const ObservationDataset& data);
LogLikelihood cclf_log_likelihood(const ChainForestModel& model, const ObservationDataset& data);

Sequence chains_sample(const IndependentChainsModel& model, int length, Rng& rng);
Sequence cclf_sample(const ChainForestModel& model, int length, Rng& rng);

std::vector<CellPosterior> impute_chains(const IndependentChainsModel& model,
                                         const ObservationDataset& data);
std::vector<CellPosterior> impute_cclf(const ChainForestModel& model,
                                       const ObservationDataset& data);

}  // namespace cclhmm

#endif
