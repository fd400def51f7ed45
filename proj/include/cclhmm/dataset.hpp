#ifndef CCLHMM_DATASET_HPP
#define CCLHMM_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cclhmm {

// Sentinel for an unobserved cell; always outside {0..B-1}.
constexpr std::int32_t kMissing = -1;

// One sequence of categorical observation vectors, row-major T x M.
struct Sequence {
    int length = 0;
    int num_vars = 0;
    std::vector<std::int32_t> values;

    Sequence() = default;
    Sequence(int t, int m) : length(t), num_vars(m), values(size_t(t) * m, kMissing) {}

    std::int32_t at(int t, int j) const { return values[size_t(t) * num_vars + j]; }
    std::int32_t& at(int t, int j) { return values[size_t(t) * num_vars + j]; }
    bool observed(int t, int j) const { return at(t, j) != kMissing; }
    const std::int32_t* row(int t) const { return values.data() + size_t(t) * num_vars; }

    bool row_complete(int t) const {
        for (int j = 0; j < num_vars; ++j)
            if (!observed(t, j)) return false;
        return true;
    }
};

struct StationInfo {
    std::string id;
    double latitude = 0.0;
    double longitude = 0.0;
};

// A set of discrete-valued M-variate sequences with cardinality B.
// Immutable after load in normal use; consumers share it read-only.
struct ObservationDataset {
    int num_vars = 0;     // M
    int cardinality = 0;  // B, >= 2
    std::vector<Sequence> sequences;
    std::vector<StationInfo> stations;  // optional, empty or size M

    int num_sequences() const { return int(sequences.size()); }

    long long total_slices() const {
        long long n = 0;
        for (const auto& s : sequences) n += s.length;
        return n;
    }

    long long observed_cell_count() const {
        long long n = 0;
        for (const auto& s : sequences)
            for (std::int32_t v : s.values)
                if (v != kMissing) ++n;
        return n;
    }

    // Throws DataError if any invariant is violated.
    void validate() const;
};

// Text format: line 1 "M B"; then sequences as blocks of T_n lines with M
// space-separated tokens, each an integer in {0..B-1} or "?"; blank line
// separates sequences.
ObservationDataset load_dataset(const std::string& path);
ObservationDataset parse_dataset(std::istream& in, const std::string& origin);

void save_dataset(const ObservationDataset& data, const std::string& path);
void write_dataset(const ObservationDataset& data, std::ostream& out);

// Sidecar metadata: one line per variable, "id latitude longitude".
std::vector<StationInfo> load_station_metadata(const std::string& path, int expected_vars);

}  // namespace cclhmm

#endif
