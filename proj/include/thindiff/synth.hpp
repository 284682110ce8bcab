#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thindiff/matrix.hpp"
#include "thindiff/rng.hpp"

namespace thindiff {

// Negative-binomial toy data: per-dimension mean mu_d ~ log-uniform and
// dispersion theta_d ~ log-uniform, a per-sample multiplicative size factor
// s_i ~ LogNormal, counts via the gamma-Poisson mixture. Variance convention:
// Var = m + m^2 / theta with m = s * mu.
struct NegBinSpec {
    int dim = 10;
    double mu_low = 0.05;
    double mu_high = 0.5;
    double theta_low = 0.2;
    double theta_high = 5.0;
    double size_factor_location = 0.0;
    double size_factor_scale = 0.6;
    std::uint64_t seed = 1;
};

// Realized generative parameters; enough to draw fresh samples from the same
// population.
struct NegBinParams {
    std::vector<double> mu;
    std::vector<double> theta;
    double size_factor_location = 0.0;
    double size_factor_scale = 0.6;
};

struct SynthDataset {
    CountMatrix counts;
    NegBinParams params;
};

// Draws (mu_d, theta_d) once, then n rows: s ~ LogNormal, per entry
// lambda ~ Gamma(theta_d, s * mu_d / theta_d), count ~ Poisson(lambda).
SynthDataset sample_dataset(const NegBinSpec& spec, std::int64_t n);

// Fresh draws from previously realized parameters.
CountMatrix sample_from_params(const NegBinParams& params, std::int64_t n, RngHandle& rng);

// Plain CSV with a header row; an optional final "label" column holds
// nonnegative integer class ids.
struct LoadedCounts {
    CountMatrix counts;
    std::optional<std::vector<int>> labels;
};

LoadedCounts load_counts(const std::string& path);

void save_counts(const CountMatrix& counts, const std::string& path,
                 const std::vector<int>* labels = nullptr);

}  // namespace thindiff
