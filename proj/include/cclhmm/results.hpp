#ifndef CCLHMM_RESULTS_HPP
#define CCLHMM_RESULTS_HPP

#include <cstdint>

#include "cclhmm/table.hpp"

namespace cclhmm {

struct LogLikelihood {
    double total = 0.0;    // nats
    long long events = 0;  // observed cells scored
    double per_event() const { return events > 0 ? total / events : 0.0; }
};

// Posterior distribution and best guess for one missing cell.
struct CellPosterior {
    int sequence = 0;
    int t = 0;
    int var = 0;
    Vec posterior;
    std::int32_t prediction = 0;
};

}  // namespace cclhmm

#endif
