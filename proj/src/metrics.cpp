#include "thindiff/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <stdexcept>

#include <json.hpp>

#include "thindiff/threading.hpp"

namespace thindiff {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

// Row partials are written disjointly and reduced in index order, so the sum
// does not depend on the thread count.
double kernel_sum(const RealMatrix& a, const RealMatrix& b, double gamma, bool skip_diagonal) {
    std::vector<double> partial(static_cast<std::size_t>(a.rows), 0.0);
    parallel_for(a.rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            double s = 0.0;
            for (std::int64_t j = 0; j < b.rows; ++j) {
                if (skip_diagonal && i == j) continue;
                s += std::exp(-gamma * sq_dist(a.row(i), b.row(j)));
            }
            partial[static_cast<std::size_t>(i)] = s;
        }
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

void check_mmd_inputs(const RealMatrix& x, const RealMatrix& y, double gamma) {
    if (x.cols != y.cols) throw std::invalid_argument("rbf_mmd: dimension mismatch");
    if (x.rows < 2 || y.rows < 2)
        throw std::invalid_argument("rbf_mmd: need at least 2 rows per sample");
    if (!(gamma > 0.0)) throw std::invalid_argument("rbf_mmd: gamma must be positive");
}

}  // namespace

double rbf_mmd_raw(const RealMatrix& x, const RealMatrix& y, double gamma_kernel) {
    check_mmd_inputs(x, y, gamma_kernel);
    const double n = static_cast<double>(x.rows);
    const double m = static_cast<double>(y.rows);
    const double xx = kernel_sum(x, x, gamma_kernel, true) / (n * (n - 1.0));
    const double yy = kernel_sum(y, y, gamma_kernel, true) / (m * (m - 1.0));
    const double xy = kernel_sum(x, y, gamma_kernel, false) / (n * m);
    return xx + yy - 2.0 * xy;
}

double rbf_mmd(const RealMatrix& x, const RealMatrix& y, double gamma_kernel) {
    return std::max(0.0, rbf_mmd_raw(x, y, gamma_kernel));
}

double wasserstein1_1d(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1_1d: empty input");
    std::vector<double> sa = a;
    std::vector<double> sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa.size() == sb.size()) {
        double s = 0.0;
        for (std::size_t k = 0; k < sa.size(); ++k) s += std::fabs(sa[k] - sb[k]);
        return s / static_cast<double>(sa.size());
    }
    // Both quantile functions are step functions with jumps at i/n and j/m;
    // integrate |q_a - q_b| across the merged segments.
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double u = 0.0;
    double total = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double edge_a = static_cast<double>(i + 1) / na;
        const double edge_b = static_cast<double>(j + 1) / nb;
        const double next = std::min(edge_a, edge_b);
        total += (next - u) * std::fabs(sa[i] - sb[j]);
        u = next;
        if (edge_a <= next) ++i;
        if (edge_b <= next) ++j;
    }
    return total;
}

double sliced_wasserstein(const RealMatrix& x, const RealMatrix& y, int n_projections,
                          RngHandle& rng) {
    if (x.cols != y.cols) throw std::invalid_argument("sliced_wasserstein: dimension mismatch");
    if (x.rows < 1 || y.rows < 1) throw std::invalid_argument("sliced_wasserstein: empty input");
    if (x.cols < 1) throw std::invalid_argument("sliced_wasserstein: zero-dimensional input");
    if (n_projections < 1)
        throw std::invalid_argument("sliced_wasserstein: need at least one projection");

    // Directions are drawn sequentially up front; a shared rng therefore gives
    // identical projections to both argument orders and any thread count.
    const std::int64_t d = x.cols;
    RealMatrix dirs(n_projections, d);
    for (std::int64_t p = 0; p < n_projections; ++p) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (std::int64_t k = 0; k < d; ++k) {
                const double z = rng.normal();
                dirs.at(p, k) = z;
                norm2 += z * z;
            }
        } while (!(norm2 > 0.0));
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::int64_t k = 0; k < d; ++k) dirs.at(p, k) *= inv;
    }

    std::vector<double> w1(static_cast<std::size_t>(n_projections), 0.0);
    parallel_for(n_projections, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> px(static_cast<std::size_t>(x.rows));
        std::vector<double> py(static_cast<std::size_t>(y.rows));
        for (std::int64_t p = lo; p < hi; ++p) {
            const auto dir = dirs.row(p);
            for (std::int64_t r = 0; r < x.rows; ++r) {
                const auto row = x.row(r);
                double s = 0.0;
                for (std::int64_t k = 0; k < d; ++k) s += row[static_cast<std::size_t>(k)] * dir[static_cast<std::size_t>(k)];
                px[static_cast<std::size_t>(r)] = s;
            }
            for (std::int64_t r = 0; r < y.rows; ++r) {
                const auto row = y.row(r);
                double s = 0.0;
                for (std::int64_t k = 0; k < d; ++k) s += row[static_cast<std::size_t>(k)] * dir[static_cast<std::size_t>(k)];
                py[static_cast<std::size_t>(r)] = s;
            }
            w1[static_cast<std::size_t>(p)] = wasserstein1_1d(px, py);
        }
    });
    double total = 0.0;
    for (double v : w1) total += v;
    return total / static_cast<double>(n_projections);
}

std::vector<double> variance_report(const RealMatrix& x) {
    if (x.rows < 2) throw std::invalid_argument("variance_report: need at least 2 rows");
    std::vector<double> out(static_cast<std::size_t>(x.cols), 0.0);
    for (std::int64_t j = 0; j < x.cols; ++j) {
        double mean = 0.0;
        for (std::int64_t i = 0; i < x.rows; ++i) mean += x.at(i, j);
        mean /= static_cast<double>(x.rows);
        double ss = 0.0;
        for (std::int64_t i = 0; i < x.rows; ++i) {
            const double dv = x.at(i, j) - mean;
            ss += dv * dv;
        }
        out[static_cast<std::size_t>(j)] = ss / static_cast<double>(x.rows - 1);
    }
    return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> spearman_corr(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2) return std::nullopt;
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (double v : ra) ma += v;
    for (double v : rb) mb += v;
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t k = 0; k < ra.size(); ++k) {
        const double da = ra[k] - ma;
        const double db = rb[k] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (!(va > 0.0) || !(vb > 0.0)) return std::nullopt;
    return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

SampleMetrics sample_metrics(const CountMatrix& imputed, const CountMatrix& truth,
                             const MissingnessMask& mask, RngHandle& rng, int n_bootstrap) {
    if (!imputed.same_shape(truth))
        throw std::invalid_argument("sample_metrics: imputed/truth shape mismatch");
    if (mask.rows != truth.rows || mask.cols != truth.cols)
        throw std::invalid_argument("sample_metrics: mask shape mismatch");
    if (n_bootstrap < 1) throw std::invalid_argument("sample_metrics: need n_bootstrap >= 1");

    SampleMetrics out;
    std::vector<double> row_rmse;
    std::vector<double> row_bias;
    std::vector<std::optional<double>> row_spear;
    for (std::int64_t i = 0; i < truth.rows; ++i) {
        std::vector<double> imp;
        std::vector<double> tru;
        for (std::int64_t j = 0; j < truth.cols; ++j) {
            if (mask.is_observed(i, j)) continue;
            imp.push_back(static_cast<double>(imputed.at(i, j)));
            tru.push_back(static_cast<double>(truth.at(i, j)));
        }
        if (imp.empty()) {
            ++out.rows_skipped_unmasked;
            continue;
        }
        double se = 0.0, bias = 0.0;
        for (std::size_t k = 0; k < imp.size(); ++k) {
            const double d = imp[k] - tru[k];
            se += d * d;
            bias += d;
        }
        const double cnt = static_cast<double>(imp.size());
        row_rmse.push_back(std::sqrt(se / cnt));
        row_bias.push_back(bias / cnt);
        std::optional<double> sp = spearman_corr(imp, tru);
        if (!sp.has_value()) ++out.rows_skipped_constant;
        row_spear.push_back(sp);
    }
    out.rows_evaluated = static_cast<std::int64_t>(row_rmse.size());
    if (out.rows_evaluated == 0)
        throw std::invalid_argument("sample_metrics: no rows with masked entries");

    out.rmse = mean_of(row_rmse);
    out.bias = mean_of(row_bias);
    double spear_sum = 0.0;
    for (const auto& sp : row_spear)
        if (sp.has_value()) {
            spear_sum += *sp;
            ++out.rows_spearman;
        }
    out.spearman = out.rows_spearman > 0 ? spear_sum / static_cast<double>(out.rows_spearman) : 0.0;

    const auto n_rows = static_cast<std::uint64_t>(out.rows_evaluated);
    std::vector<double> boot_rmse, boot_bias, boot_spear;
    for (int b = 0; b < n_bootstrap; ++b) {
        double s_rmse = 0.0, s_bias = 0.0, s_spear = 0.0;
        std::int64_t n_spear = 0;
        for (std::int64_t k = 0; k < out.rows_evaluated; ++k) {
            const auto r = static_cast<std::size_t>(rng.uniform_index(n_rows));
            s_rmse += row_rmse[r];
            s_bias += row_bias[r];
            if (row_spear[r].has_value()) {
                s_spear += *row_spear[r];
                ++n_spear;
            }
        }
        const double cnt = static_cast<double>(out.rows_evaluated);
        boot_rmse.push_back(s_rmse / cnt);
        boot_bias.push_back(s_bias / cnt);
        if (n_spear > 0) boot_spear.push_back(s_spear / static_cast<double>(n_spear));
    }
    out.rmse_se = sample_sd(boot_rmse);
    out.bias_se = sample_sd(boot_bias);
    out.spearman_se = sample_sd(boot_spear);
    return out;
}

MetricReport make_report(const CountMatrix& truth, const CountMatrix& generated,
                         double gamma_kernel, int n_projections, std::uint64_t projection_seed) {
    if (truth.cols != generated.cols)
        throw std::invalid_argument("make_report: dimension mismatch");
    const RealMatrix rt = to_real(truth);
    const RealMatrix rg = to_real(generated);

    MetricReport report;
    report.gamma_kernel = gamma_kernel;
    report.n_projections = n_projections;
    report.swd_projection_seed = projection_seed;
    report.joint_mmd = rbf_mmd(rt, rg, gamma_kernel);
    RngHandle proj_rng(projection_seed);
    report.joint_swd = sliced_wasserstein(rt, rg, n_projections, proj_rng);

    const std::vector<double> var_true = variance_report(rt);
    const std::vector<double> var_gen = variance_report(rg);
    report.per_dim.resize(static_cast<std::size_t>(truth.cols));
    for (std::int64_t j = 0; j < truth.cols; ++j) {
        RealMatrix ct(rt.rows, 1);
        RealMatrix cg(rg.rows, 1);
        std::vector<double> vt(static_cast<std::size_t>(rt.rows));
        std::vector<double> vg(static_cast<std::size_t>(rg.rows));
        for (std::int64_t i = 0; i < rt.rows; ++i) {
            ct.at(i, 0) = rt.at(i, j);
            vt[static_cast<std::size_t>(i)] = rt.at(i, j);
        }
        for (std::int64_t i = 0; i < rg.rows; ++i) {
            cg.at(i, 0) = rg.at(i, j);
            vg[static_cast<std::size_t>(i)] = rg.at(i, j);
        }
        PerDimMetrics& pd = report.per_dim[static_cast<std::size_t>(j)];
        pd.wasserstein1 = wasserstein1_1d(vt, vg);
        pd.mmd = rbf_mmd(ct, cg, gamma_kernel);
        pd.variance_true = var_true[static_cast<std::size_t>(j)];
        pd.variance_gen = var_gen[static_cast<std::size_t>(j)];
    }
    return report;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["format"] = "thindiff-metrics-v1";
    j["gamma_kernel"] = report.gamma_kernel;
    j["n_projections"] = report.n_projections;
    j["swd_projection_seed"] = report.swd_projection_seed;
    j["joint"]["mmd"] = report.joint_mmd;
    j["joint"]["swd"] = report.joint_swd;
    j["per_dim"] = nlohmann::json::array();
    for (const PerDimMetrics& pd : report.per_dim) {
        nlohmann::json e;
        e["mmd"] = pd.mmd;
        e["wasserstein1"] = pd.wasserstein1;
        e["variance_gen"] = pd.variance_gen;
        e["variance_true"] = pd.variance_true;
        j["per_dim"].push_back(e);
    }
    if (report.sample_level.has_value()) {
        const SampleMetrics& s = *report.sample_level;
        nlohmann::json e;
        e["bias"] = s.bias;
        e["bias_se"] = s.bias_se;
        e["rmse"] = s.rmse;
        e["rmse_se"] = s.rmse_se;
        e["rows_evaluated"] = s.rows_evaluated;
        e["rows_skipped_constant"] = s.rows_skipped_constant;
        e["rows_skipped_unmasked"] = s.rows_skipped_unmasked;
        e["rows_spearman"] = s.rows_spearman;
        e["spearman"] = s.spearman;
        e["spearman_se"] = s.spearman_se;
        j["sample_level"] = e;
    }
    return j.dump(2) + "\n";
}

namespace {

void append_metric(std::string& out, const std::string& name, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out += name;
    out += ',';
    out += buf;
    out += '\n';
}

}  // namespace

std::string report_to_csv(const MetricReport& report) {
    std::string out = "metric,value\n";
    append_metric(out, "joint_mmd", report.joint_mmd);
    append_metric(out, "joint_swd", report.joint_swd);
    for (std::size_t j = 0; j < report.per_dim.size(); ++j) {
        const PerDimMetrics& pd = report.per_dim[j];
        const std::string prefix = "dim" + std::to_string(j) + "_";
        append_metric(out, prefix + "wasserstein1", pd.wasserstein1);
        append_metric(out, prefix + "mmd", pd.mmd);
        append_metric(out, prefix + "variance_true", pd.variance_true);
        append_metric(out, prefix + "variance_gen", pd.variance_gen);
    }
    if (report.sample_level.has_value()) {
        const SampleMetrics& s = *report.sample_level;
        append_metric(out, "sample_rmse", s.rmse);
        append_metric(out, "sample_rmse_se", s.rmse_se);
        append_metric(out, "sample_bias", s.bias);
        append_metric(out, "sample_bias_se", s.bias_se);
        append_metric(out, "sample_spearman", s.spearman);
        append_metric(out, "sample_spearman_se", s.spearman_se);
        append_metric(out, "sample_rows_evaluated", static_cast<double>(s.rows_evaluated));
        append_metric(out, "sample_rows_spearman", static_cast<double>(s.rows_spearman));
        append_metric(out, "sample_rows_skipped_unmasked",
                      static_cast<double>(s.rows_skipped_unmasked));
        append_metric(out, "sample_rows_skipped_constant",
                      static_cast<double>(s.rows_skipped_constant));
    }
    append_metric(out, "gamma_kernel", report.gamma_kernel);
    append_metric(out, "n_projections", static_cast<double>(report.n_projections));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%" PRIu64, report.swd_projection_seed);
    out += "swd_projection_seed,";
    out += buf;
    out += '\n';
    return out;
}

}  // namespace thindiff
