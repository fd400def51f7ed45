#ifndef CCLHMM_IPF_INTERNAL_HPP
#define CCLHMM_IPF_INTERNAL_HPP

#include <cmath>

#include "cclhmm/table.hpp"

namespace cclhmm::detail {

// Iterative proportional fitting of a positive table onto target row and
// column marginals. Smoothing the unary and pairwise counts separately
// leaves the raw tables very slightly inconsistent with each other; this
// projection restores exact consistency (it preserves the table's odds
// ratios and is a no-op when the marginals already match, e.g. for
// unsmoothed complete-data statistics).
inline void ipf_project(Mat& joint, const Vec& row_target, const Vec& col_target,
                        double tol = 1e-14, int max_iters = 200) {
    const int b = joint.rows;
    for (int iter = 0; iter < max_iters; ++iter) {
        double worst = 0.0;

        Vec rows = joint.row_sums();
        for (int r = 0; r < b; ++r) {
            if (rows[r] <= 0.0) continue;
            const double scale = row_target[r] / rows[r];
            worst = std::max(worst, std::abs(scale - 1.0));
            for (int c = 0; c < b; ++c) joint(r, c) *= scale;
        }

        Vec cols = joint.col_sums();
        for (int c = 0; c < b; ++c) {
            if (cols[c] <= 0.0) continue;
            const double scale = col_target[c] / cols[c];
            worst = std::max(worst, std::abs(scale - 1.0));
            for (int r = 0; r < b; ++r) joint(r, c) *= scale;
        }

        if (worst < tol) break;
    }
    // One last row pass so the row marginals are exact; columns are then
    // within tol of their targets.
    Vec rows = joint.row_sums();
    for (int r = 0; r < b; ++r) {
        if (rows[r] <= 0.0) continue;
        const double scale = row_target[r] / rows[r];
        for (int c = 0; c < b; ++c) joint(r, c) *= scale;
    }
}

}  // namespace cclhmm::detail

#endif
