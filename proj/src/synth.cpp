#include "thindiff/synth.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "thindiff/errors.hpp"
#include "thindiff/threading.hpp"

namespace thindiff {

namespace {

void validate_spec(const NegBinSpec& spec) {
    if (spec.dim < 1) throw std::invalid_argument("synth: dim must be >= 1");
    if (!(spec.mu_low > 0.0 && spec.mu_low < spec.mu_high))
        throw std::invalid_argument("synth: need 0 < mu_low < mu_high");
    if (!(spec.theta_low > 0.0 && spec.theta_low < spec.theta_high))
        throw std::invalid_argument("synth: need 0 < theta_low < theta_high");
    if (!(spec.size_factor_scale >= 0.0))
        throw std::invalid_argument("synth: size factor scale must be >= 0");
}

double log_uniform(double low, double high, RngHandle& rng) {
    return std::exp(std::log(low) + rng.uniform() * (std::log(high) - std::log(low)));
}

}  // namespace

SynthDataset sample_dataset(const NegBinSpec& spec, std::int64_t n) {
    validate_spec(spec);
    if (n < 1) throw std::invalid_argument("synth: need n >= 1 samples");

    RngHandle rng(spec.seed);
    SynthDataset out;
    out.params.size_factor_location = spec.size_factor_location;
    out.params.size_factor_scale = spec.size_factor_scale;
    out.params.mu.reserve(static_cast<std::size_t>(spec.dim));
    out.params.theta.reserve(static_cast<std::size_t>(spec.dim));
    for (int d = 0; d < spec.dim; ++d) {
        out.params.mu.push_back(log_uniform(spec.mu_low, spec.mu_high, rng));
        out.params.theta.push_back(log_uniform(spec.theta_low, spec.theta_high, rng));
    }
    out.counts = sample_from_params(out.params, n, rng);
    return out;
}

CountMatrix sample_from_params(const NegBinParams& params, std::int64_t n, RngHandle& rng) {
    if (params.mu.empty() || params.mu.size() != params.theta.size())
        throw std::invalid_argument("synth: parameter record is empty or inconsistent");
    if (n < 1) throw std::invalid_argument("synth: need n >= 1 samples");
    for (double v : params.mu)
        if (!(v > 0.0)) throw std::invalid_argument("synth: mu entries must be positive");
    for (double v : params.theta)
        if (!(v > 0.0)) throw std::invalid_argument("synth: theta entries must be positive");

    const auto dim = static_cast<std::int64_t>(params.mu.size());
    // One u64 from the caller per invocation, so repeated calls differ while
    // each row draws from its own substream independent of thread count.
    const RngHandle row_root(rng.next_u64());
    CountMatrix counts(n, dim);
    parallel_for(n, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            RngHandle row_rng = row_root.substream(static_cast<std::uint64_t>(i));
            const double size_factor =
                row_rng.lognormal(params.size_factor_location, params.size_factor_scale);
            for (std::int64_t j = 0; j < dim; ++j) {
                const double theta = params.theta[static_cast<std::size_t>(j)];
                const double mean = size_factor * params.mu[static_cast<std::size_t>(j)];
                const double lambda = row_rng.gamma(theta, mean / theta);
                counts.at(i, j) = row_rng.poisson(lambda);
            }
        }
    });
    return counts;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    cells.push_back(cell);
    return cells;
}

std::int64_t parse_count_cell(const std::string& cell, const std::string& path,
                              std::size_t line_no, std::size_t col_no) {
    const std::string where = path + ": row " + std::to_string(line_no) + ", column " +
                              std::to_string(col_no);
    if (cell.empty()) throw IoError(where + ": empty cell");
    errno = 0;
    char* end = nullptr;
    const long long value = std::strtoll(cell.c_str(), &end, 10);
    if (end != cell.c_str() + cell.size() || errno == ERANGE)
        throw IoError(where + ": '" + cell + "' is not an integer");
    if (value < 0) throw IoError(where + ": negative count " + cell);
    return static_cast<std::int64_t>(value);
}

}  // namespace

LoadedCounts load_counts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read counts file: " + path);

    std::string line;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line != "\r") break;
    }
    if (line_no == 0 || line.empty() || line == "\r")
        throw IoError(path + ": empty dataset file");
    header = split_line(line);
    const bool has_labels = header.back() == "label";
    const std::size_t n_cols = header.size() - (has_labels ? 1 : 0);
    if (n_cols == 0) throw IoError(path + ": header has no count columns");

    std::vector<std::int64_t> values;
    std::vector<int> labels;
    std::size_t n_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw IoError(path + ": row " + std::to_string(line_no) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(header.size()));
        for (std::size_t c = 0; c < n_cols; ++c)
            values.push_back(parse_count_cell(cells[c], path, line_no, c + 1));
        if (has_labels) {
            const std::int64_t label =
                parse_count_cell(cells.back(), path, line_no, header.size());
            labels.push_back(static_cast<int>(label));
        }
        ++n_rows;
    }
    if (n_rows == 0) throw IoError(path + ": no data rows");

    LoadedCounts out;
    out.counts = CountMatrix(static_cast<std::int64_t>(n_rows),
                             static_cast<std::int64_t>(n_cols));
    out.counts.data = std::move(values);
    if (has_labels) out.labels = std::move(labels);
    return out;
}

void save_counts(const CountMatrix& counts, const std::string& path,
                 const std::vector<int>* labels) {
    if (counts.rows < 1 || counts.cols < 1)
        throw std::invalid_argument("save_counts: matrix must be nonempty");
    if (labels != nullptr && static_cast<std::int64_t>(labels->size()) != counts.rows)
        throw std::invalid_argument("save_counts: labels size must match rows");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write counts file: " + path);
    for (std::int64_t j = 0; j < counts.cols; ++j) {
        if (j > 0) out << ',';
        out << 'd' << j;
    }
    if (labels != nullptr) out << ",label";
    out << '\n';
    for (std::int64_t i = 0; i < counts.rows; ++i) {
        for (std::int64_t j = 0; j < counts.cols; ++j) {
            if (j > 0) out << ',';
            out << counts.at(i, j);
        }
        if (labels != nullptr) out << ',' << (*labels)[static_cast<std::size_t>(i)];
        out << '\n';
    }
    if (!out) throw IoError("failed writing counts file: " + path);
}

}  // namespace thindiff
