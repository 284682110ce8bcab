#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace thindiff {

// Row-major matrix of nonnegative integer counts.
struct CountMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::int64_t> data;

    CountMatrix() = default;
    CountMatrix(std::int64_t r, std::int64_t c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0) {
        if (r < 0 || c < 0) throw std::invalid_argument("CountMatrix: negative shape");
    }

    std::int64_t& at(std::int64_t i, std::int64_t j) {
        return data[static_cast<std::size_t>(i * cols + j)];
    }
    std::int64_t at(std::int64_t i, std::int64_t j) const {
        return data[static_cast<std::size_t>(i * cols + j)];
    }
    std::span<const std::int64_t> row(std::int64_t i) const {
        return {data.data() + i * cols, static_cast<std::size_t>(cols)};
    }
    std::span<std::int64_t> row(std::int64_t i) {
        return {data.data() + i * cols, static_cast<std::size_t>(cols)};
    }
    bool same_shape(const CountMatrix& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const CountMatrix& o) const = default;
};

// Row-major matrix of doubles.
struct RealMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::int64_t r, std::int64_t c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("RealMatrix: negative shape");
    }

    double& at(std::int64_t i, std::int64_t j) {
        return data[static_cast<std::size_t>(i * cols + j)];
    }
    double at(std::int64_t i, std::int64_t j) const {
        return data[static_cast<std::size_t>(i * cols + j)];
    }
    std::span<const double> row(std::int64_t i) const {
        return {data.data() + i * cols, static_cast<std::size_t>(cols)};
    }
    std::span<double> row(std::int64_t i) {
        return {data.data() + i * cols, static_cast<std::size_t>(cols)};
    }
    bool same_shape(const RealMatrix& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const RealMatrix& o) const = default;
};

inline RealMatrix to_real(const CountMatrix& m) {
    RealMatrix r(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) r.data[i] = static_cast<double>(m.data[i]);
    return r;
}

inline void require_nonnegative(const CountMatrix& m, const char* what) {
    for (std::int64_t v : m.data)
        if (v < 0) throw std::invalid_argument(std::string(what) + ": negative count entry");
}

}  // namespace thindiff
