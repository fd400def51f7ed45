#ifndef CCLHMM_PARALLEL_HPP
#define CCLHMM_PARALLEL_HPP

#include <functional>

namespace cclhmm {

// Worker cap: CCLHMM_THREADS when set, otherwise hardware concurrency,
// never less than 1.
int thread_budget();

// Runs fn(0..n-1), splitting indices across at most `threads` workers.
// Each index writes only its own slot, so results are identical to a
// serial loop.
void parallel_for_index(int n, int threads, const std::function<void(int)>& fn);

}  // namespace cclhmm

#endif
