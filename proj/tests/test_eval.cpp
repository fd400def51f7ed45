#include <cmath>

#include "cclhmm/errors.hpp"
#include "cclhmm/eval.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cclhmm;

namespace {

ObservationDataset coin_flips(int vars, int rows, std::uint64_t seed, int num_seqs = 1) {
    Rng rng(seed);
    ObservationDataset data;
    data.num_vars = vars;
    data.cardinality = 2;
    for (int n = 0; n < num_seqs; ++n) {
        Sequence seq(rows, vars);
        for (int t = 0; t < rows; ++t)
            for (int j = 0; j < vars; ++j) seq.at(t, j) = rng.uniform() < 0.5 ? 0 : 1;
        data.sequences.push_back(std::move(seq));
    }
    return data;
}

// Spatially coupled, temporally independent draws.
ObservationDataset spatial_data(int vars, int rows, std::uint64_t seed, int num_seqs = 1) {
    Rng rng(seed);
    ObservationDataset data;
    data.num_vars = vars;
    data.cardinality = 2;
    for (int n = 0; n < num_seqs; ++n) {
        Sequence seq(rows, vars);
        for (int t = 0; t < rows; ++t) {
            std::int32_t base = rng.uniform() < 0.5 ? 0 : 1;
            seq.at(t, 0) = base;
            for (int j = 1; j < vars; ++j)
                seq.at(t, j) = rng.uniform() < 0.9 ? seq.at(t, j - 1) : 1 - seq.at(t, j - 1);
        }
        data.sequences.push_back(std::move(seq));
    }
    return data;
}

}  // namespace

TEST_CASE("uniform model scores -ln 2 per event on any data") {
    IndependentChainsModel uniform;
    uniform.num_vars = 2;
    uniform.cardinality = 2;
    uniform.initial.assign(2, Vec{0.5, 0.5});
    uniform.transition.assign(2, Mat(2, 2, 0.5));
    AnyModel model = uniform;

    auto data = coin_flips(2, 50, 1);
    CHECK(scaled_log_likelihood(model, data) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("scaled log-likelihood recombines across split held-out sets") {
    auto train = spatial_data(3, 200, 2);
    ModelSpec spec;
    spec.family = ModelFamily::Cclf;
    AnyModel model = fit_model(spec, train, 0);

    auto part1 = spatial_data(3, 60, 3);
    auto part2 = spatial_data(3, 140, 4);
    ObservationDataset whole = part1;
    whole.sequences.push_back(part2.sequences[0]);

    LogLikelihood l1 = model_log_likelihood(model, part1);
    LogLikelihood l2 = model_log_likelihood(model, part2);
    const double combined =
        (l1.per_event() * l1.events + l2.per_event() * l2.events) / double(l1.events + l2.events);
    CHECK(scaled_log_likelihood(model, whole) == doctest::Approx(combined).epsilon(1e-12));
}

TEST_CASE("coin-flip data yields a half prediction error") {
    auto data = coin_flips(1, 40000, 5);
    ModelSpec spec;
    spec.family = ModelFamily::IndependentChains;
    auto result = holdout_prediction_error(spec, data, 0.25, true, 6);
    CHECK(result.heldout_cells == 10000);
    // Binomial 3-sigma band around 0.5.
    const double sigma = std::sqrt(0.25 / double(result.heldout_cells));
    CHECK(std::abs(result.error - 0.5) < 3.0 * sigma);
}

TEST_CASE("tree emissions beat the marginal-rate predictor on coupled stations") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto data = spatial_data(4, 150, 900 + seed, 2);

        ModelSpec spec;
        spec.family = ModelFamily::HmmCl;
        spec.num_states = 2;
        spec.em.restarts = 2;
        spec.em.max_iterations = 20;
        auto result = holdout_prediction_error(spec, data, 0.2, true, seed);

        // Oracle: predict every variable's majority value from the masked data.
        Rng rng(seed);
        ObservationDataset masked = data;
        // Recreate the same mask by re-running the op's own sampling rule is
        // not available here, so score the marginal predictor on fresh masks:
        // predict the global majority per variable and count errors over all
        // cells, which is what the predictor converges to.
        std::vector<Vec> marginal(4, Vec(2, 0.0));
        long long wrong = 0, total = 0;
        for (const auto& seq : data.sequences)
            for (int t = 0; t < seq.length; ++t)
                for (int j = 0; j < 4; ++j) marginal[j][seq.at(t, j)] += 1.0;
        for (const auto& seq : data.sequences)
            for (int t = 0; t < seq.length; ++t)
                for (int j = 0; j < 4; ++j) {
                    int guess = marginal[j][1] > marginal[j][0] ? 1 : 0;
                    if (guess != seq.at(t, j)) ++wrong;
                    ++total;
                }
        const double marginal_error = double(wrong) / double(total);
        if (result.error < marginal_error) ++wins;
    }
    CHECK(wins >= 8);
}

TEST_CASE("identical sequences give identical folds") {
    auto data = coin_flips(2, 40, 7);
    data.sequences.push_back(data.sequences[0]);
    ModelSpec spec;
    spec.family = ModelFamily::IndependentChains;
    auto report = leave_one_season_out_cv(spec, data, 3);
    REQUIRE(report.folds.size() == 2);
    CHECK(report.folds[0].scaled_log_likelihood ==
          doctest::Approx(report.folds[1].scaled_log_likelihood).epsilon(1e-12));
}

TEST_CASE("fold count equals sequence count and reports are deterministic") {
    auto data = spatial_data(3, 60, 8, 5);
    ModelSpec spec;
    spec.family = ModelFamily::HmmCi;
    spec.num_states = 2;
    spec.em.restarts = 2;
    spec.em.max_iterations = 15;
    auto a = leave_one_season_out_cv(spec, data, 77, 0.15);
    auto b = leave_one_season_out_cv(spec, data, 77, 0.15);
    CHECK(a.folds.size() == 5);
    REQUIRE(a.folds.size() == b.folds.size());
    for (size_t i = 0; i < a.folds.size(); ++i) {
        CHECK(a.folds[i].scaled_log_likelihood == b.folds[i].scaled_log_likelihood);
        CHECK(a.folds[i].prediction_error == b.folds[i].prediction_error);
    }
    CHECK(a.mean_scaled_log_likelihood == b.mean_scaled_log_likelihood);
}

TEST_CASE("chains cross-validation tracks an independent test draw") {
    auto data = spatial_data(2, 100, 9, 10);
    ModelSpec spec;
    spec.family = ModelFamily::IndependentChains;
    auto report = leave_one_season_out_cv(spec, data, 1);

    AnyModel model = fit_model(spec, data, 1);
    auto fresh = spatial_data(2, 100, 999, 30);
    const double test_score = scaled_log_likelihood(model, fresh);
    CHECK(std::abs(report.mean_scaled_log_likelihood - test_score) < 0.02);
}

TEST_CASE("single-element K range returns that K") {
    auto data = coin_flips(2, 30, 10, 3);
    ModelSpec spec;
    spec.family = ModelFamily::HmmCi;
    spec.em.restarts = 1;
    spec.em.max_iterations = 5;
    auto selection = select_k(spec, data, {1}, 0);
    CHECK(selection.chosen_k == 1);
}

TEST_CASE("exact score ties resolve to the smallest K") {
    // Constant length-one sequences with zero smoothing: every state's
    // table is a point mass and every normalizer is a power of two, so
    // the score is exactly zero for K in {2, 4}.
    ObservationDataset data;
    data.num_vars = 2;
    data.cardinality = 2;
    for (int n = 0; n < 3; ++n) {
        Sequence seq(1, 2);
        seq.at(0, 0) = 0;
        seq.at(0, 1) = 0;
        data.sequences.push_back(std::move(seq));
    }
    ModelSpec spec;
    spec.family = ModelFamily::HmmCi;
    spec.smoothing = 0.0;
    spec.em.restarts = 1;
    spec.em.max_iterations = 5;
    auto selection = select_k(spec, data, {4, 2}, 0);
    for (double s : selection.mean_scores) CHECK(s == 0.0);
    CHECK(selection.chosen_k == 2);
}

TEST_CASE("family name round-trip and validation errors") {
    for (ModelFamily f : {ModelFamily::IndependentChains, ModelFamily::Cclf, ModelFamily::HmmCi,
                          ModelFamily::HmmCl, ModelFamily::HmmCcl})
        CHECK(family_from_name(family_name(f)) == f);
    CHECK_THROWS_AS(family_from_name("boosted-trees"), DataError);

    auto data = coin_flips(1, 10, 11);
    ModelSpec spec;
    spec.family = ModelFamily::IndependentChains;
    CHECK_THROWS_AS(leave_one_season_out_cv(spec, data, 0), DataError);  // one sequence
    CHECK_THROWS_AS(holdout_prediction_error(spec, data, 1.5, true, 0), DataError);
    CHECK_THROWS_AS(select_k(spec, data, {}, 0), DataError);
    CHECK_THROWS_AS(select_k(spec, data, {1}, 0), DataError);  // not an HMM family
}

TEST_CASE("planted-model score gap stays small") {
    // Generate from a 2-state CI model with distinct states, fit the same
    // family, compare held-out scores.
    HmmModel truth;
    truth.num_states = 2;
    truth.num_vars = 3;
    truth.cardinality = 2;
    truth.family = EmissionFamily::CI;
    truth.initial = {0.5, 0.5};
    truth.transition = Mat(2, 2);
    truth.transition(0, 0) = 0.9;
    truth.transition(0, 1) = 0.1;
    truth.transition(1, 0) = 0.1;
    truth.transition(1, 1) = 0.9;
    CiEmission wet, dry;
    wet.tables.assign(3, Vec{0.2, 0.8});
    dry.tables.assign(3, Vec{0.8, 0.2});
    truth.emissions = {wet, dry};

    Rng rng(12);
    auto train = hmm_sample(truth, std::vector<int>(20, 80), rng);
    auto heldout = hmm_sample(truth, std::vector<int>(10, 80), rng);

    ModelSpec spec;
    spec.family = ModelFamily::HmmCi;
    spec.num_states = 2;
    spec.em.restarts = 3;
    spec.em.max_iterations = 40;
    AnyModel fitted = fit_model(spec, train, 21);

    AnyModel generator = truth;
    const double fitted_score = scaled_log_likelihood(fitted, heldout);
    const double truth_score = scaled_log_likelihood(generator, heldout);
    CHECK(std::abs(fitted_score - truth_score) < 0.02);
}

TEST_CASE("refitting a simulation recovers the original model's score") {
    auto data = spatial_data(3, 400, 21);
    ModelSpec spec;
    spec.family = ModelFamily::Cclf;
    AnyModel original = fit_model(spec, data, 0);

    Rng rng(22);
    auto simulated = model_sample(original, std::vector<int>(6, 300), rng);
    AnyModel refit = fit_model(spec, simulated, 0);

    auto heldout = model_sample(original, std::vector<int>(6, 300), rng);
    const double original_score = scaled_log_likelihood(original, heldout);
    const double refit_score = scaled_log_likelihood(refit, heldout);
    CHECK(std::abs(original_score - refit_score) < 0.05);
}
