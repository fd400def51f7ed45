#ifndef CCLHMM_MODEL_IO_HPP
#define CCLHMM_MODEL_IO_HPP

#include <cstdint>
#include <string>

#include "cclhmm/eval.hpp"

namespace cclhmm {

struct TrainingInfo {
    std::uint64_t seed = 0;
    double smoothing = 0.0;
    int iterations_run = 0;
    int restarts = 0;
    double final_log_likelihood = 0.0;
    bool has_final_log_likelihood = false;
};

struct LoadedModel {
    AnyModel model;
    TrainingInfo training;
};

// JSON with sorted keys and exact shortest-round-trip doubles, so that
// save -> load -> save reproduces the file byte for byte.
std::string model_to_json(const AnyModel& model, const TrainingInfo& training);
LoadedModel model_from_json(const std::string& text, const std::string& origin);

// Write-temp-then-rename, so readers never see a half-written file.
void save_model(const AnyModel& model, const TrainingInfo& training, const std::string& path);
LoadedModel load_model(const std::string& path);

void write_text_atomic(const std::string& path, const std::string& contents);

}  // namespace cclhmm

#endif
