#include "cclhmm/model_io.hpp"

#include <filesystem>
#include <fstream>

#include "cclhmm/errors.hpp"
#include "json.hpp"

namespace cclhmm {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

json vec_to_json(const Vec& v) { return json(v); }

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Vec vec_from_json(const json& j) { return j.get<Vec>(); }

Mat mat_from_json(const json& j) {
    Mat m(int(j.size()), j.empty() ? 0 : int(j[0].size()));
    for (int r = 0; r < m.rows; ++r) {
        if (int(j[r].size()) != m.cols) throw DataError("model file: ragged matrix");
        for (int c = 0; c < m.cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json tables_to_json(const std::vector<Vec>& tables) {
    json out = json::array();
    for (const Vec& t : tables) out.push_back(vec_to_json(t));
    return out;
}

std::vector<Vec> tables_from_json(const json& j) {
    std::vector<Vec> out;
    for (const auto& t : j) out.push_back(vec_from_json(t));
    return out;
}

json tree_to_json(const TreeDistribution& tree) {
    json edges = json::array();
    for (const Edge& e : tree.edges) edges.push_back(json::array({e.u, e.v}));
    json joints = json::array();
    for (const Mat& m : tree.edge_joint) joints.push_back(mat_to_json(m));
    return json{{"edges", std::move(edges)},
                {"node_marginals", tables_to_json(tree.node_marginal)},
                {"edge_joints", std::move(joints)}};
}

TreeDistribution tree_from_json(const json& j, int num_vars, int cardinality) {
    TreeDistribution tree;
    tree.num_vars = num_vars;
    tree.cardinality = cardinality;
    for (const auto& e : j.at("edges")) tree.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    tree.node_marginal = tables_from_json(j.at("node_marginals"));
    for (const auto& m : j.at("edge_joints")) tree.edge_joint.push_back(mat_from_json(m));
    tree.validate();
    return tree;
}

json forest_to_json(const ConditionalForestDistribution& forest) {
    json within_edges = json::array();
    for (const Edge& e : forest.within_edges) within_edges.push_back(json::array({e.u, e.v}));
    json within_joints = json::array();
    for (const Mat& m : forest.within_joint) within_joints.push_back(mat_to_json(m));
    json cross_edges = json::array();
    for (const CrossEdge& e : forest.cross_edges) cross_edges.push_back(json::array({e.y, e.x}));
    json cross_joints = json::array();
    for (const Mat& m : forest.cross_joint) cross_joints.push_back(mat_to_json(m));
    return json{{"within_edges", std::move(within_edges)},
                {"within_joints", std::move(within_joints)},
                {"cross_edges", std::move(cross_edges)},
                {"cross_joints", std::move(cross_joints)},
                {"node_marginals", tables_to_json(forest.node_marginal)}};
}

ConditionalForestDistribution forest_from_json(const json& j, int num_x, int num_y,
                                               int cardinality) {
    ConditionalForestDistribution forest;
    forest.num_x = num_x;
    forest.num_y = num_y;
    forest.cardinality = cardinality;
    for (const auto& e : j.at("within_edges"))
        forest.within_edges.push_back({e[0].get<int>(), e[1].get<int>()});
    for (const auto& m : j.at("within_joints")) forest.within_joint.push_back(mat_from_json(m));
    for (const auto& e : j.at("cross_edges"))
        forest.cross_edges.push_back({e[0].get<int>(), e[1].get<int>()});
    for (const auto& m : j.at("cross_joints")) forest.cross_joint.push_back(mat_from_json(m));
    forest.node_marginal = tables_from_json(j.at("node_marginals"));
    for (const Mat& m : forest.cross_joint) forest.cross_y_marginal.push_back(m.row_sums());
    forest.validate();
    return forest;
}

}  // namespace

std::string model_to_json(const AnyModel& model, const TrainingInfo& training) {
    json root;
    root["schema_version"] = kSchemaVersion;
    root["family"] = family_name(family_of(model));

    if (const auto* chains = std::get_if<IndependentChainsModel>(&model)) {
        root["num_vars"] = chains->num_vars;
        root["cardinality"] = chains->cardinality;
        json transition = json::array();
        for (const Mat& m : chains->transition) transition.push_back(mat_to_json(m));
        root["model"] = json{{"initial", tables_to_json(chains->initial)},
                             {"transition", std::move(transition)}};
    } else if (const auto* cclf = std::get_if<ChainForestModel>(&model)) {
        root["num_vars"] = cclf->num_vars();
        root["cardinality"] = cclf->cardinality();
        root["model"] = json{{"initial_tree", tree_to_json(cclf->initial)},
                             {"transition_forest", forest_to_json(cclf->transition)}};
    } else {
        const auto& hmm = std::get<HmmModel>(model);
        root["num_vars"] = hmm.num_vars;
        root["cardinality"] = hmm.cardinality;
        root["num_states"] = hmm.num_states;
        json emissions = json::array();
        for (const Emission& e : hmm.emissions) {
            if (const auto* ci = std::get_if<CiEmission>(&e))
                emissions.push_back(json{{"tables", tables_to_json(ci->tables)}});
            else if (const auto* tree = std::get_if<TreeDistribution>(&e))
                emissions.push_back(tree_to_json(*tree));
            else
                emissions.push_back(forest_to_json(std::get<ConditionalForestDistribution>(e)));
        }
        root["model"] = json{{"initial", vec_to_json(hmm.initial)},
                             {"transition", mat_to_json(hmm.transition)},
                             {"emissions", std::move(emissions)}};
    }

    json t;
    t["seed"] = training.seed;
    t["alpha"] = training.smoothing;
    t["iterations_run"] = training.iterations_run;
    t["restarts"] = training.restarts;
    if (training.has_final_log_likelihood)
        t["final_log_likelihood"] = training.final_log_likelihood;
    root["training"] = std::move(t);

    return root.dump(2) + "\n";
}

LoadedModel model_from_json(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(origin + ": not valid JSON: " + e.what());
    }
    try {
        if (root.at("schema_version").get<int>() != kSchemaVersion)
            throw DataError(origin + ": unsupported schema version");
        const std::string family = root.at("family").get<std::string>();
        const int m = root.at("num_vars").get<int>();
        const int b = root.at("cardinality").get<int>();
        const json& body = root.at("model");

        LoadedModel loaded;
        if (family == "chains") {
            IndependentChainsModel chains;
            chains.num_vars = m;
            chains.cardinality = b;
            chains.initial = tables_from_json(body.at("initial"));
            for (const auto& t : body.at("transition"))
                chains.transition.push_back(mat_from_json(t));
            chains.validate();
            loaded.model = std::move(chains);
        } else if (family == "cclf") {
            ChainForestModel cclf;
            cclf.initial = tree_from_json(body.at("initial_tree"), m, b);
            cclf.transition = forest_from_json(body.at("transition_forest"), m, m, b);
            loaded.model = std::move(cclf);
        } else {
            const int k = root.at("num_states").get<int>();
            HmmModel hmm;
            hmm.num_states = k;
            hmm.num_vars = m;
            hmm.cardinality = b;
            hmm.family = family == "hmm-ci"   ? EmissionFamily::CI
                         : family == "hmm-cl" ? EmissionFamily::CL
                         : family == "hmm-ccl"
                             ? EmissionFamily::CCL
                             : throw DataError(origin + ": unknown family " + family);
            hmm.initial = vec_from_json(body.at("initial"));
            hmm.transition = mat_from_json(body.at("transition"));
            for (const auto& e : body.at("emissions")) {
                switch (hmm.family) {
                    case EmissionFamily::CI: {
                        CiEmission ci;
                        ci.tables = tables_from_json(e.at("tables"));
                        hmm.emissions.push_back(std::move(ci));
                        break;
                    }
                    case EmissionFamily::CL:
                        hmm.emissions.push_back(tree_from_json(e, m, b));
                        break;
                    case EmissionFamily::CCL:
                        hmm.emissions.push_back(forest_from_json(e, m, m, b));
                        break;
                }
            }
            hmm.validate();
            loaded.model = std::move(hmm);
        }

        const json& t = root.at("training");
        loaded.training.seed = t.at("seed").get<std::uint64_t>();
        loaded.training.smoothing = t.at("alpha").get<double>();
        loaded.training.iterations_run = t.at("iterations_run").get<int>();
        loaded.training.restarts = t.at("restarts").get<int>();
        if (t.contains("final_log_likelihood")) {
            loaded.training.final_log_likelihood = t.at("final_log_likelihood").get<double>();
            loaded.training.has_final_log_likelihood = true;
        }
        return loaded;
    } catch (const json::exception& e) {
        throw DataError(origin + ": malformed model file: " + e.what());
    }
}

void write_text_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp.string());
        out.write(contents.data(), std::streamsize(contents.size()));
        if (!out) throw DataError("short write: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw DataError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

void save_model(const AnyModel& model, const TrainingInfo& training, const std::string& path) {
    write_text_atomic(path, model_to_json(model, training));
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text, path);
}

}  // namespace cclhmm
