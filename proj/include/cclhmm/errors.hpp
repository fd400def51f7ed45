#ifndef CCLHMM_ERRORS_HPP
#define CCLHMM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cclhmm {

// Malformed input files, dimension mismatches, out-of-range values.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Degenerate probability tables, zero-probability evidence, and similar
// numerical failures. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cclhmm

#endif
