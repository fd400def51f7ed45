#ifndef CCLHMM_TABLE_HPP
#define CCLHMM_TABLE_HPP

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace cclhmm {

using Vec = std::vector<double>;

// Dense row-major matrix used for the small B x B probability tables and
// the K x K transition matrices. Nothing fancy: the tables in this library
// are tiny and all the heavy loops index them directly.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), data(size_t(r) * c, fill) {}

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[size_t(r) * cols + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[size_t(r) * cols + c];
    }

    double sum() const {
        double s = 0.0;
        for (double x : data) s += x;
        return s;
    }

    Vec row_sums() const {
        Vec out(rows, 0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) out[r] += (*this)(r, c);
        return out;
    }

    Vec col_sums() const {
        Vec out(cols, 0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) out[c] += (*this)(r, c);
        return out;
    }

    Mat transposed() const {
        Mat t(cols, rows);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
        return t;
    }
};

inline double vec_sum(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

// Normalizes v in place to sum 1 and returns the normalizer.
inline double normalize(Vec& v) {
    double s = vec_sum(v);
    if (s > 0.0)
        for (double& x : v) x /= s;
    return s;
}

}  // namespace cclhmm

#endif
