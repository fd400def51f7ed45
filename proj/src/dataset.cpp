#include "cclhmm/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cclhmm/errors.hpp"

namespace cclhmm {

namespace {

bool is_blank(const std::string& line) {
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) tokens.push_back(tok);
    return tokens;
}

int parse_int(const std::string& tok, const std::string& origin, int line_no) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw DataError(origin + ":" + std::to_string(line_no) + ": malformed value '" + tok + "'");
    return value;
}

}  // namespace

void ObservationDataset::validate() const {
    if (num_vars < 1) throw DataError("dataset: num_vars must be positive");
    if (cardinality < 2) throw DataError("dataset: cardinality must be >= 2");
    if (sequences.empty()) throw DataError("dataset: no sequences");
    bool any_rows = false;
    for (size_t n = 0; n < sequences.size(); ++n) {
        const Sequence& s = sequences[n];
        if (s.num_vars != num_vars)
            throw DataError("dataset: sequence " + std::to_string(n) + " has wrong width");
        if (s.length >= 1) any_rows = true;
        for (std::int32_t v : s.values) {
            if (v == kMissing) continue;
            if (v < 0 || v >= cardinality)
                throw DataError("dataset: sequence " + std::to_string(n) +
                                " contains out-of-range value " + std::to_string(v));
        }
    }
    if (!any_rows) throw DataError("dataset: all sequences are empty");
    if (!stations.empty() && int(stations.size()) != num_vars)
        throw DataError("dataset: station metadata size does not match num_vars");
}

ObservationDataset parse_dataset(std::istream& in, const std::string& origin) {
    std::string line;
    int line_no = 0;

    // Header
    if (!std::getline(in, line)) throw DataError(origin + ": empty dataset file");
    ++line_no;
    auto header = split_tokens(line);
    if (header.size() != 2)
        throw DataError(origin + ":1: expected header 'M B'");
    int m = parse_int(header[0], origin, 1);
    int b = parse_int(header[1], origin, 1);
    if (m < 1) throw DataError(origin + ":1: num_vars must be positive");
    if (b < 2) throw DataError(origin + ":1: cardinality must be >= 2");

    ObservationDataset data;
    data.num_vars = m;
    data.cardinality = b;

    std::vector<std::int32_t> current;  // rows of the block being read
    auto flush_block = [&]() {
        if (current.empty()) return;
        Sequence seq;
        seq.num_vars = m;
        seq.length = int(current.size() / m);
        seq.values = std::move(current);
        data.sequences.push_back(std::move(seq));
        current.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) {
            flush_block();
            continue;
        }
        auto tokens = split_tokens(line);
        if (int(tokens.size()) != m)
            throw DataError(origin + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(m) + " values, got " + std::to_string(tokens.size()));
        for (const auto& tok : tokens) {
            if (tok == "?") {
                current.push_back(kMissing);
                continue;
            }
            int v = parse_int(tok, origin, line_no);
            if (v < 0 || v >= b)
                throw DataError(origin + ":" + std::to_string(line_no) + ": value " +
                                std::to_string(v) + " outside {0.." + std::to_string(b - 1) + "}");
            current.push_back(v);
        }
    }
    flush_block();

    if (data.sequences.empty()) throw DataError(origin + ": no observation rows");
    data.validate();
    return data;
}

ObservationDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    return parse_dataset(in, path);
}

void write_dataset(const ObservationDataset& data, std::ostream& out) {
    out << data.num_vars << " " << data.cardinality << "\n";
    for (size_t n = 0; n < data.sequences.size(); ++n) {
        if (n > 0) out << "\n";
        const Sequence& s = data.sequences[n];
        for (int t = 0; t < s.length; ++t) {
            for (int j = 0; j < s.num_vars; ++j) {
                if (j > 0) out << " ";
                std::int32_t v = s.at(t, j);
                if (v == kMissing)
                    out << "?";
                else
                    out << v;
            }
            out << "\n";
        }
    }
}

void save_dataset(const ObservationDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file: " + path);
    write_dataset(data, out);
}

std::vector<StationInfo> load_station_metadata(const std::string& path, int expected_vars) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open metadata file: " + path);
    std::vector<StationInfo> stations;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        std::istringstream iss(line);
        StationInfo info;
        if (!(iss >> info.id >> info.latitude >> info.longitude))
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected 'id latitude longitude'");
        stations.push_back(std::move(info));
    }
    if (int(stations.size()) != expected_vars)
        throw DataError(path + ": expected " + std::to_string(expected_vars) +
                        " metadata lines, got " + std::to_string(stations.size()));
    return stations;
}

}  // namespace cclhmm
