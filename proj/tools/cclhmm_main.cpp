// cclhmm: fit, evaluate, cross-validate, simulate, impute, and describe
// tree-structured models of discrete vector time series.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cclhmm/dot_export.hpp"
#include "cclhmm/errors.hpp"
#include "cclhmm/eval.hpp"
#include "cclhmm/model_io.hpp"
#include "cclhmm/parallel.hpp"
#include "json.hpp"

namespace {

using namespace cclhmm;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
    std::string data_path;
    std::string family = "chains";
    int k = 1;
    double alpha = 0.1;
    int max_iter = 100;
    double tol = 1e-6;
    int restarts = 10;
    std::uint64_t seed = 0;
    std::string out_path;
};

ModelSpec make_spec(const CommonOptions& opt) {
    ModelSpec spec;
    spec.family = family_from_name(opt.family);
    spec.num_states = opt.k;
    spec.smoothing = opt.alpha;
    spec.em.max_iterations = opt.max_iter;
    spec.em.tolerance = opt.tol;
    spec.em.restarts = opt.restarts;
    return spec;
}

void add_model_flags(CLI::App* cmd, CommonOptions& opt, bool with_family = true) {
    cmd->add_option("--data", opt.data_path, "dataset file")->required();
    if (with_family)
        cmd->add_option("--family", opt.family, "model family")
            ->check(CLI::IsMember({"chains", "cclf", "hmm-ci", "hmm-cl", "hmm-ccl"}));
    cmd->add_option("--k", opt.k, "number of hidden states");
    cmd->add_option("--alpha", opt.alpha, "additive smoothing pseudo-count");
    cmd->add_option("--max-iter", opt.max_iter, "EM iteration cap");
    cmd->add_option("--tol", opt.tol, "relative log-likelihood tolerance");
    cmd->add_option("--restarts", opt.restarts, "EM restarts");
    cmd->add_option("--seed", opt.seed, "random seed");
}

std::string default_sibling(const std::string& path, const std::string& suffix) {
    return path + suffix;
}

json fold_to_json(const FoldResult& fr) {
    json j;
    j["fold"] = fr.fold;
    j["scaled_log_likelihood"] = fr.scaled_log_likelihood;
    j["events"] = fr.events;
    if (fr.has_prediction_error) {
        j["prediction_error"] = fr.prediction_error;
        j["heldout_cells"] = fr.heldout_cells;
    }
    return j;
}

json report_to_json(const EvalReport& report, const ModelSpec& spec) {
    json j;
    j["family"] = family_name(spec.family);
    if (is_hmm_family(spec.family)) j["num_states"] = spec.num_states;
    j["alpha"] = spec.smoothing;
    j["seed"] = report.seed;
    j["mean_scaled_log_likelihood"] = report.mean_scaled_log_likelihood;
    j["stddev_scaled_log_likelihood"] = report.stddev_scaled_log_likelihood;
    if (report.has_prediction_error) {
        j["mean_prediction_error"] = report.mean_prediction_error;
        j["stddev_prediction_error"] = report.stddev_prediction_error;
    }
    json folds = json::array();
    for (const FoldResult& fr : report.folds) folds.push_back(fold_to_json(fr));
    j["folds"] = std::move(folds);
    if (!report.warnings.empty()) j["warnings"] = report.warnings;
    return j;
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "fold,metric,value\n";
    char buf[64];
    for (const FoldResult& fr : report.folds) {
        std::snprintf(buf, sizeof(buf), "%.17g", fr.scaled_log_likelihood);
        out << fr.fold << ",scaled_log_likelihood," << buf << "\n";
        if (fr.has_prediction_error) {
            std::snprintf(buf, sizeof(buf), "%.17g", fr.prediction_error);
            out << fr.fold << ",prediction_error," << buf << "\n";
        }
    }
    return out.str();
}

int run_fit(const CommonOptions& opt) {
    auto data = load_dataset(opt.data_path);
    ModelSpec spec = make_spec(opt);

    TrainingInfo info;
    info.seed = opt.seed;
    info.smoothing = opt.alpha;
    info.restarts = is_hmm_family(spec.family) ? opt.restarts : 1;

    AnyModel model;
    if (is_hmm_family(spec.family)) {
        EmConfig config = spec.em;
        config.seed = opt.seed;
        config.smoothing = opt.alpha;
        config.num_states = opt.k;
        config.family = spec.family == ModelFamily::HmmCi   ? EmissionFamily::CI
                        : spec.family == ModelFamily::HmmCl ? EmissionFamily::CL
                                                            : EmissionFamily::CCL;
        EmResult result = em_fit(data, config);
        info.iterations_run = result.iterations;
        info.final_log_likelihood = result.final_log_likelihood;
        info.has_final_log_likelihood = true;
        model = std::move(result.model);
    } else {
        model = fit_model(spec, data, opt.seed);
        info.iterations_run = 1;
        LogLikelihood ll = model_log_likelihood(model, data);
        info.final_log_likelihood = ll.total;
        info.has_final_log_likelihood = true;
    }

    const std::string out = opt.out_path.empty() ? "model.json" : opt.out_path;
    save_model(model, info, out);
    LogLikelihood ll = model_log_likelihood(model, data);
    std::cout << "family: " << family_name(spec.family) << "\n"
              << "training log-likelihood: " << ll.total << "\n"
              << "nats per event: " << ll.per_event() << "\n"
              << "model written to " << out << "\n";
    return kExitOk;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             const std::string& out_path) {
    LoadedModel loaded = load_model(model_path);
    auto data = load_dataset(data_path);
    LogLikelihood ll = model_log_likelihood(loaded.model, data);

    json j;
    j["family"] = family_name(family_of(loaded.model));
    j["total_log_likelihood"] = ll.total;
    j["observed_cells"] = ll.events;
    j["scaled_log_likelihood"] = ll.per_event();
    std::cout << "total log-likelihood: " << ll.total << "\n"
              << "observed cells: " << ll.events << "\n"
              << "nats per event: " << ll.per_event() << "\n";
    if (!out_path.empty()) write_text_atomic(out_path, j.dump(2) + "\n");
    return kExitOk;
}

int run_cv(const CommonOptions& opt, double holdout_fraction, const std::string& csv_path) {
    auto data = load_dataset(opt.data_path);
    ModelSpec spec = make_spec(opt);
    EvalReport report = leave_one_season_out_cv(spec, data, opt.seed, holdout_fraction);

    std::cout << "folds: " << report.folds.size() << "\n"
              << "mean scaled log-likelihood: " << report.mean_scaled_log_likelihood << " (sd "
              << report.stddev_scaled_log_likelihood << ")\n";
    if (report.has_prediction_error)
        std::cout << "mean prediction error: " << report.mean_prediction_error << " (sd "
                  << report.stddev_prediction_error << ")\n";
    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";

    const std::string out = opt.out_path.empty() ? "cv_report.json" : opt.out_path;
    write_text_atomic(out, report_to_json(report, spec).dump(2) + "\n");
    if (!csv_path.empty()) write_text_atomic(csv_path, report_to_csv(report));
    std::cout << "report written to " << out << "\n";
    return kExitOk;
}

int run_holdout(const CommonOptions& opt, double holdout_fraction, bool retrain_missing) {
    auto data = load_dataset(opt.data_path);
    ModelSpec spec = make_spec(opt);
    HoldoutResult result =
        holdout_prediction_error(spec, data, holdout_fraction, retrain_missing, opt.seed);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "held-out cells: " << result.heldout_cells << "\n"
              << "wrong predictions: " << result.wrong << "\n"
              << "prediction error: " << result.error << "\n";
    if (!opt.out_path.empty()) {
        json j;
        j["family"] = family_name(spec.family);
        j["holdout_fraction"] = holdout_fraction;
        j["retrain_with_missing"] = retrain_missing;
        j["seed"] = opt.seed;
        j["heldout_cells"] = result.heldout_cells;
        j["wrong"] = result.wrong;
        j["prediction_error"] = result.error;
        if (!result.warnings.empty()) j["warnings"] = result.warnings;
        write_text_atomic(opt.out_path, j.dump(2) + "\n");
    }
    return kExitOk;
}

int run_simulate(const std::string& model_path, int num_sequences, int length,
                 std::uint64_t seed, const std::string& out_path) {
    if (num_sequences < 1 || length < 1)
        throw DataError("simulate: num-sequences and length must be positive");
    LoadedModel loaded = load_model(model_path);
    Rng rng(seed);
    auto data = model_sample(loaded.model, std::vector<int>(num_sequences, length), rng);
    const std::string out = out_path.empty() ? "simulated.txt" : out_path;
    std::ostringstream text;
    write_dataset(data, text);
    write_text_atomic(out, text.str());
    std::cout << "wrote " << num_sequences << " sequences of length " << length << " to " << out
              << "\n";
    return kExitOk;
}

int run_impute(const std::string& model_path, const std::string& data_path,
               const std::string& out_path, std::string posterior_path) {
    LoadedModel loaded = load_model(model_path);
    auto data = load_dataset(data_path);
    auto cells = model_impute(loaded.model, data);

    ObservationDataset completed = data;
    json posteriors = json::array();
    for (const auto& cell : cells) {
        completed.sequences[cell.sequence].at(cell.t, cell.var) = cell.prediction;
        json j;
        j["sequence"] = cell.sequence;
        j["t"] = cell.t + 1;  // rows are 1-based in the text format docs
        j["var"] = cell.var;
        j["posterior"] = cell.posterior;
        j["prediction"] = cell.prediction;
        posteriors.push_back(std::move(j));
    }

    const std::string out = out_path.empty() ? "completed.txt" : out_path;
    std::ostringstream text;
    write_dataset(completed, text);
    write_text_atomic(out, text.str());
    if (posterior_path.empty()) posterior_path = default_sibling(out, ".posteriors.json");
    write_text_atomic(posterior_path, posteriors.dump(2) + "\n");
    std::cout << "imputed " << cells.size() << " cells; dataset written to " << out
              << ", posteriors to " << posterior_path << "\n";
    return kExitOk;
}

int run_describe(const std::string& model_path, const std::string& dot_dir,
                 const std::string& meta_path) {
    LoadedModel loaded = load_model(model_path);
    const ModelFamily family = family_of(loaded.model);

    int num_vars = 0, cardinality = 0;
    if (const auto* chains = std::get_if<IndependentChainsModel>(&loaded.model)) {
        num_vars = chains->num_vars;
        cardinality = chains->cardinality;
    } else if (const auto* cclf = std::get_if<ChainForestModel>(&loaded.model)) {
        num_vars = cclf->num_vars();
        cardinality = cclf->cardinality();
    } else {
        const auto& hmm = std::get<HmmModel>(loaded.model);
        num_vars = hmm.num_vars;
        cardinality = hmm.cardinality;
    }

    std::vector<std::string> labels = default_labels(num_vars);
    if (!meta_path.empty()) {
        auto stations = load_station_metadata(meta_path, num_vars);
        for (int v = 0; v < num_vars; ++v) labels[v] = stations[v].id;
    }

    std::cout << "family: " << family_name(family) << "\n"
              << "variables: " << num_vars << ", values per variable: " << cardinality << "\n";
    std::cout << "trained with seed " << loaded.training.seed << ", alpha "
              << loaded.training.smoothing << ", " << loaded.training.iterations_run
              << " iterations";
    if (loaded.training.has_final_log_likelihood)
        std::cout << ", final log-likelihood " << loaded.training.final_log_likelihood;
    std::cout << "\n";

    std::vector<std::pair<std::string, std::string>> dots;
    if (const auto* cclf = std::get_if<ChainForestModel>(&loaded.model)) {
        std::cout << "initial tree edges: " << cclf->initial.edges.size()
                  << ", transition within edges: " << cclf->transition.within_edges.size()
                  << ", cross edges: " << cclf->transition.cross_edges.size() << "\n";
        dots.push_back({"initial", tree_to_dot(cclf->initial, labels, "initial")});
        dots.push_back({"transition", forest_to_dot(cclf->transition, labels, "transition")});
    } else if (const auto* hmm = std::get_if<HmmModel>(&loaded.model)) {
        std::cout << "hidden states: " << hmm->num_states << "\n";
        for (int i = 0; i < hmm->num_states; ++i) {
            const std::string name = "state" + std::to_string(i);
            std::cout << "  state " << i << ": initial " << hmm->initial[i];
            if (const auto* tree = std::get_if<TreeDistribution>(&hmm->emissions[i])) {
                std::cout << ", tree edges " << tree->edges.size();
                dots.push_back({name, tree_to_dot(*tree, labels, name)});
            } else if (const auto* forest =
                           std::get_if<ConditionalForestDistribution>(&hmm->emissions[i])) {
                std::cout << ", within edges " << forest->within_edges.size() << ", cross edges "
                          << forest->cross_edges.size();
                dots.push_back({name, forest_to_dot(*forest, labels, name)});
            }
            std::cout << "\n";
        }
    } else {
        std::cout << "independent per-variable chains (no structure to draw)\n";
    }

    if (!dot_dir.empty() && !dots.empty()) {
        std::filesystem::create_directories(dot_dir);
        for (const auto& [name, text] : dots)
            write_text_atomic((std::filesystem::path(dot_dir) / (name + ".dot")).string(), text);
        std::cout << dots.size() << " DOT files written to " << dot_dir << "\n";
    }
    return kExitOk;
}

int run_selectk(const CommonOptions& opt, const std::string& k_range_text) {
    auto data = load_dataset(opt.data_path);
    ModelSpec spec = make_spec(opt);

    std::vector<int> k_values;
    std::stringstream ss(k_range_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon != std::string::npos) {
            int lo = std::stoi(item.substr(0, colon));
            int hi = std::stoi(item.substr(colon + 1));
            for (int k = lo; k <= hi; ++k) k_values.push_back(k);
        } else if (!item.empty()) {
            k_values.push_back(std::stoi(item));
        }
    }

    KSelection selection = select_k(spec, data, k_values, opt.seed);
    std::cout << "K  mean scaled log-likelihood\n";
    for (size_t i = 0; i < selection.k_values.size(); ++i)
        std::cout << selection.k_values[i] << "  " << selection.mean_scores[i] << "\n";
    std::cout << "chosen K: " << selection.chosen_k << "\n";

    if (!opt.out_path.empty()) {
        json j;
        j["chosen_k"] = selection.chosen_k;
        j["k_values"] = selection.k_values;
        j["mean_scaled_log_likelihood"] = selection.mean_scores;
        write_text_atomic(opt.out_path, j.dump(2) + "\n");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree-structured models for discrete-valued vector time series"};
    app.set_config("--config");
    app.require_subcommand(1);

    CommonOptions opt;
    double holdout_fraction = 0.0;
    bool retrain_missing = true;
    std::string model_path, data_path, out_path, csv_path, posterior_path, dot_dir, meta_path;
    std::string k_range_text = "1:4";
    int num_sequences = 1, length = 90;
    std::uint64_t sim_seed = 0;

    CLI::App* fit = app.add_subcommand("fit", "fit a model and write it as JSON");
    add_model_flags(fit, opt);
    fit->add_option("--out", opt.out_path, "output model file");

    CLI::App* eval = app.add_subcommand("eval", "score a dataset under a saved model");
    eval->add_option("--model", model_path, "model file")->required();
    eval->add_option("--data", data_path, "dataset file")->required();
    eval->add_option("--out", out_path, "optional JSON report path");

    CLI::App* cv = app.add_subcommand("cv", "leave-one-sequence-out cross-validation");
    add_model_flags(cv, opt);
    cv->add_option("--out", opt.out_path, "report JSON path");
    cv->add_option("--csv", csv_path, "optional flat CSV path");
    cv->add_option("--holdout-fraction", holdout_fraction,
                   "also score masked-cell predictions per fold");

    CLI::App* holdout = app.add_subcommand(
        "holdout", "mask a sample of observed cells, fit, and score predictions");
    add_model_flags(holdout, opt);
    holdout->add_option("--holdout-fraction", holdout_fraction, "share of observed cells to mask")
        ->required();
    holdout->add_flag("--retrain-missing,!--no-retrain-missing", retrain_missing,
                      "fit on the masked data (default) or on the intact data");
    holdout->add_option("--out", opt.out_path, "optional JSON result path");

    CLI::App* simulate = app.add_subcommand("simulate", "sample sequences from a saved model");
    simulate->add_option("--model", model_path, "model file")->required();
    simulate->add_option("--num-sequences", num_sequences, "how many sequences");
    simulate->add_option("--length", length, "length of each sequence");
    simulate->add_option("--seed", sim_seed, "random seed");
    simulate->add_option("--out", out_path, "output dataset file");

    CLI::App* imputec = app.add_subcommand("impute", "fill in '?' cells under a saved model");
    imputec->add_option("--model", model_path, "model file")->required();
    imputec->add_option("--data", data_path, "dataset file with missing cells")->required();
    imputec->add_option("--out", out_path, "completed dataset path");
    imputec->add_option("--posteriors", posterior_path, "per-cell posterior JSON path");

    CLI::App* describe = app.add_subcommand("describe", "summarize a saved model");
    describe->add_option("--model", model_path, "model file")->required();
    describe->add_option("--dot-dir", dot_dir, "write one DOT file per structure");
    describe->add_option("--meta", meta_path, "station metadata for node labels");

    CLI::App* selectk = app.add_subcommand("selectk", "choose K by cross-validated score");
    add_model_flags(selectk, opt);
    selectk->add_option("--k-range", k_range_text, "K values, e.g. 1:4 or 1,2,4");
    selectk->add_option("--out", opt.out_path, "optional JSON result path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fit->parsed()) return run_fit(opt);
        if (eval->parsed()) return run_eval(model_path, data_path, out_path);
        if (cv->parsed()) return run_cv(opt, holdout_fraction, csv_path);
        if (holdout->parsed()) return run_holdout(opt, holdout_fraction, retrain_missing);
        if (simulate->parsed())
            return run_simulate(model_path, num_sequences, length, sim_seed, out_path);
        if (imputec->parsed()) return run_impute(model_path, data_path, out_path, posterior_path);
        if (describe->parsed()) return run_describe(model_path, dot_dir, meta_path);
        if (selectk->parsed()) return run_selectk(opt, k_range_text);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
