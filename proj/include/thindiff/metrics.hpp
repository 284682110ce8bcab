#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thindiff/matrix.hpp"
#include "thindiff/rng.hpp"
#include "thindiff/sampler.hpp"

namespace thindiff {

// Unbiased squared-MMD U-statistic with kernel k(a,b) = exp(-gamma |a-b|^2).
// The raw estimator can be negative; rbf_mmd clamps it at zero for reporting.
double rbf_mmd_raw(const RealMatrix& x, const RealMatrix& y, double gamma_kernel);
double rbf_mmd(const RealMatrix& x, const RealMatrix& y, double gamma_kernel);

// 1-D Wasserstein-1. Equal sizes: mean |sorted(a) - sorted(b)|; otherwise the
// integral of the absolute quantile difference.
double wasserstein1_1d(const std::vector<double>& a, const std::vector<double>& b);

// Mean 1-D Wasserstein-1 distance over random unit-sphere projections. The
// projection directions are drawn from rng up front, so a shared seed gives
// the same projection set to both argument orders.
double sliced_wasserstein(const RealMatrix& x, const RealMatrix& y, int n_projections,
                          RngHandle& rng);

// Unbiased sample variance per dimension.
std::vector<double> variance_report(const RealMatrix& x);

// Per-row imputation metrics over masked entries only, averaged across rows.
// Rows with no masked entry are skipped entirely; rows whose masked truth or
// imputed values are constant have no defined rank correlation and are
// excluded from the spearman average. Standard errors come from bootstrap
// resamples of the evaluated rows. When no row yields a defined spearman,
// the spearman fields are 0 and rows_spearman says so.
struct SampleMetrics {
    double rmse = 0.0;
    double bias = 0.0;
    double spearman = 0.0;
    double rmse_se = 0.0;
    double bias_se = 0.0;
    double spearman_se = 0.0;
    std::int64_t rows_evaluated = 0;
    std::int64_t rows_spearman = 0;
    std::int64_t rows_skipped_unmasked = 0;
    std::int64_t rows_skipped_constant = 0;
};

SampleMetrics sample_metrics(const CountMatrix& imputed, const CountMatrix& truth,
                             const MissingnessMask& mask, RngHandle& rng,
                             int n_bootstrap = 10);

struct PerDimMetrics {
    double wasserstein1 = 0.0;
    double mmd = 0.0;
    double variance_true = 0.0;
    double variance_gen = 0.0;
};

struct MetricReport {
    double joint_mmd = 0.0;
    double joint_swd = 0.0;
    std::vector<PerDimMetrics> per_dim;
    std::optional<SampleMetrics> sample_level;
    double gamma_kernel = 1.0;
    int n_projections = 100;
    std::uint64_t swd_projection_seed = 1;
};

// Counts are cast to reals as-is; no log transform.
MetricReport make_report(const CountMatrix& truth, const CountMatrix& generated,
                         double gamma_kernel = 1.0, int n_projections = 100,
                         std::uint64_t projection_seed = 1);

// Byte-stable serializations: JSON with sorted keys, and a flat
// "metric,value" CSV for plotting.
std::string report_to_json(const MetricReport& report);
std::string report_to_csv(const MetricReport& report);

}  // namespace thindiff
