#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "thindiff/matrix.hpp"
#include "thindiff/metrics.hpp"
#include "thindiff/rng.hpp"
#include "thindiff/sampler.hpp"
#include "thindiff/threading.hpp"

using namespace thindiff;

namespace {

RealMatrix random_real(std::int64_t rows, std::int64_t cols, RngHandle& rng) {
    RealMatrix m(rows, cols);
    for (auto& v : m.data) v = 10.0 * rng.uniform();
    return m;
}

CountMatrix random_counts(std::int64_t rows, std::int64_t cols, std::int64_t max_value,
                          RngHandle& rng) {
    CountMatrix m(rows, cols);
    for (auto& v : m.data)
        v = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(max_value + 1)));
    return m;
}

std::vector<double> random_vector(std::size_t size, double scale, RngHandle& rng) {
    std::vector<double> v(size);
    for (double& x : v) x = scale * rng.uniform();
    return v;
}

RealMatrix rows_of(const std::vector<std::vector<double>>& rows) {
    RealMatrix m(static_cast<std::int64_t>(rows.size()),
                 static_cast<std::int64_t>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m.at(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = rows[i][j];
    return m;
}

// Riemann-sum oracle for the quantile-difference integral.
double w1_grid_oracle(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const int grid = 1000000;
    double total = 0.0;
    for (int k = 0; k < grid; ++k) {
        const double u = (static_cast<double>(k) + 0.5) / grid;
        const auto ia = std::min(a.size() - 1, static_cast<std::size_t>(u * static_cast<double>(a.size())));
        const auto ib = std::min(b.size() - 1, static_cast<std::size_t>(u * static_cast<double>(b.size())));
        total += std::fabs(a[ia] - b[ib]);
    }
    return total / grid;
}

std::vector<double> column_of(const CountMatrix& m, std::int64_t j) {
    std::vector<double> v(static_cast<std::size_t>(m.rows));
    for (std::int64_t i = 0; i < m.rows; ++i)
        v[static_cast<std::size_t>(i)] = static_cast<double>(m.at(i, j));
    return v;
}

}  // namespace

TEST_CASE("mmd on identical multisets is negative raw, zero reported") {
    RngHandle rng(1);
    RealMatrix x = random_real(10, 3, rng);
    CHECK(rbf_mmd_raw(x, x, 1.0) < 0.0);
    CHECK(rbf_mmd(x, x, 1.0) == 0.0);
}

TEST_CASE("mmd between two point masses matches the closed form") {
    // All rows of x at one point, all rows of y at another: the U-statistic
    // collapses to 2(1 - exp(-gamma r^2)).
    RealMatrix x = rows_of({{0.0, 0.0}, {0.0, 0.0}});
    RealMatrix y = rows_of({{3.0, 4.0}, {3.0, 4.0}});
    const double r2 = 25.0;
    for (double gamma : {0.1, 1.0, 2.5}) {
        const double expected = 2.0 * (1.0 - std::exp(-gamma * r2));
        CHECK(rbf_mmd(x, y, gamma) == doctest::Approx(expected).epsilon(1e-10));
    }

    RealMatrix a = rows_of({{0.0}, {0.0}, {0.0}});
    RealMatrix b = rows_of({{10.0}, {10.0}, {10.0}});
    CHECK(rbf_mmd(a, b, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mmd is symmetric and independent of the thread count") {
    RngHandle rng(7);
    RealMatrix x = random_real(23, 3, rng);
    RealMatrix y = random_real(31, 3, rng);
    const double xy = rbf_mmd_raw(x, y, 0.5);
    const double yx = rbf_mmd_raw(y, x, 0.5);
    CHECK(xy == doctest::Approx(yx).epsilon(1e-12));

    const int saved = max_threads();
    set_max_threads(1);
    const double serial = rbf_mmd_raw(x, y, 0.5);
    set_max_threads(7);
    const double threaded = rbf_mmd_raw(x, y, 0.5);
    set_max_threads(saved);
    CHECK(serial == threaded);
}

TEST_CASE("mmd validates its inputs") {
    RngHandle rng(2);
    RealMatrix x = random_real(5, 3, rng);
    RealMatrix y = random_real(5, 2, rng);
    CHECK_THROWS_AS(rbf_mmd(x, y, 1.0), std::invalid_argument);
    RealMatrix one = random_real(1, 3, rng);
    CHECK_THROWS_AS(rbf_mmd(x, one, 1.0), std::invalid_argument);
    RealMatrix z = random_real(5, 3, rng);
    CHECK_THROWS_AS(rbf_mmd(x, z, 0.0), std::invalid_argument);
}

TEST_CASE("wasserstein1_1d hand values") {
    CHECK(wasserstein1_1d({1.0, 4.0, 2.0}, {1.0, 4.0, 2.0}) == 0.0);
    CHECK(wasserstein1_1d({0.0, 0.0}, {1.0, 1.0}) == 1.0);
    CHECK(wasserstein1_1d({0.0, 2.0}, {1.0, 1.0}) == 1.0);
    // Unequal sizes: q_a is 0 everywhere, q_b jumps to 10 at u = 1/2.
    CHECK(wasserstein1_1d({0.0}, {0.0, 10.0}) == 5.0);
    CHECK(wasserstein1_1d({0.0, 1.0}, {0.0, 1.0, 2.0}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(wasserstein1_1d({}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(wasserstein1_1d({1.0}, {}), std::invalid_argument);
}

TEST_CASE("wasserstein1_1d matches a quantile-grid oracle on unequal sizes") {
    RngHandle rng(11);
    const std::vector<std::pair<std::size_t, std::size_t>> sizes = {
        {3, 7}, {5, 12}, {1, 9}, {8, 3}, {10, 4}};
    for (const auto& [na, nb] : sizes) {
        const std::vector<double> a = random_vector(na, 10.0, rng);
        const std::vector<double> b = random_vector(nb, 10.0, rng);
        const double fast = wasserstein1_1d(a, b);
        const double slow = w1_grid_oracle(a, b);
        CHECK(std::fabs(fast - slow) < 1e-3);
        CHECK(fast == wasserstein1_1d(b, a));
    }
}

TEST_CASE("wasserstein1_1d satisfies the triangle inequality") {
    RngHandle rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto size = [&rng] { return 1 + rng.uniform_index(15); };
        const std::vector<double> a = random_vector(size(), 5.0, rng);
        const std::vector<double> b = random_vector(size(), 5.0, rng);
        const std::vector<double> c = random_vector(size(), 5.0, rng);
        CHECK(wasserstein1_1d(a, c) <=
              wasserstein1_1d(a, b) + wasserstein1_1d(b, c) + 1e-12);
    }
}

TEST_CASE("sliced wasserstein is zero on identical samples") {
    RngHandle rng(3);
    RealMatrix x = random_real(20, 4, rng);
    RngHandle proj(5);
    CHECK(sliced_wasserstein(x, x, 50, proj) == 0.0);
}

TEST_CASE("sliced wasserstein reduces to wasserstein1_1d in one dimension") {
    RngHandle rng(17);
    RealMatrix x = random_real(15, 1, rng);
    RealMatrix y = random_real(9, 1, rng);
    std::vector<double> xv(x.data);
    std::vector<double> yv(y.data);
    const double direct = wasserstein1_1d(xv, yv);
    RngHandle proj(23);
    const double sliced = sliced_wasserstein(x, y, 33, proj);
    CHECK(sliced == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("sliced wasserstein of a pure translation matches the sphere average") {
    // X and Y = X + c differ by <proj, c> in every projection, so the distance
    // is the spherical mean of |<u, c>|; in three dimensions that is |c|/2.
    RngHandle rng(29);
    RealMatrix x = random_real(40, 3, rng);
    const std::vector<double> shift = {1.0, -2.0, 0.5};
    RealMatrix y = x;
    for (std::int64_t i = 0; i < y.rows; ++i)
        for (std::int64_t j = 0; j < y.cols; ++j) y.at(i, j) += shift[static_cast<std::size_t>(j)];

    const double norm = std::sqrt(1.0 + 4.0 + 0.25);
    RngHandle proj(31);
    const double swd = sliced_wasserstein(x, y, 2000, proj);
    CHECK(std::fabs(swd - norm / 2.0) < 0.06);

    // The translation distance does not depend on the base sample when the
    // projection set is shared.
    RealMatrix x2 = random_real(25, 3, rng);
    RealMatrix y2 = x2;
    for (std::int64_t i = 0; i < y2.rows; ++i)
        for (std::int64_t j = 0; j < y2.cols; ++j)
            y2.at(i, j) += shift[static_cast<std::size_t>(j)];
    RngHandle proj_a(31);
    RngHandle proj_b(31);
    const double swd_a = sliced_wasserstein(x, y, 200, proj_a);
    const double swd_b = sliced_wasserstein(x2, y2, 200, proj_b);
    CHECK(swd_a == doctest::Approx(swd_b).epsilon(1e-10));
}

TEST_CASE("sliced wasserstein is symmetric under a shared projection seed") {
    RngHandle rng(37);
    RealMatrix x = random_real(14, 5, rng);
    RealMatrix y = random_real(21, 5, rng);
    RngHandle proj_a(41);
    RngHandle proj_b(41);
    CHECK(sliced_wasserstein(x, y, 64, proj_a) == sliced_wasserstein(y, x, 64, proj_b));
}

TEST_CASE("sliced wasserstein is independent of the thread count") {
    RngHandle rng(43);
    RealMatrix x = random_real(30, 4, rng);
    RealMatrix y = random_real(18, 4, rng);
    const int saved = max_threads();
    set_max_threads(1);
    RngHandle proj_a(47);
    const double serial = sliced_wasserstein(x, y, 40, proj_a);
    set_max_threads(5);
    RngHandle proj_b(47);
    const double threaded = sliced_wasserstein(x, y, 40, proj_b);
    set_max_threads(saved);
    CHECK(serial == threaded);
}

TEST_CASE("sliced wasserstein validates its inputs") {
    RngHandle rng(4);
    RealMatrix x = random_real(5, 3, rng);
    RealMatrix y = random_real(5, 2, rng);
    RealMatrix empty;
    CHECK_THROWS_AS(sliced_wasserstein(x, y, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(sliced_wasserstein(x, empty, 10, rng), std::invalid_argument);
    RealMatrix z = random_real(5, 3, rng);
    CHECK_THROWS_AS(sliced_wasserstein(x, z, 0, rng), std::invalid_argument);
}

TEST_CASE("variance report per dimension") {
    RealMatrix m = rows_of({{3.0, 0.0}, {3.0, 2.0}});
    const std::vector<double> v = variance_report(m);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 2.0);

    RngHandle rng(53);
    RealMatrix draws(100000, 1);
    for (auto& x : draws.data) x = static_cast<double>(rng.binomial(4, 0.5));
    const std::vector<double> bin = variance_report(draws);
    CHECK(std::fabs(bin[0] - 1.0) < 0.03);

    RealMatrix single(1, 2);
    CHECK_THROWS_AS(variance_report(single), std::invalid_argument);
}

TEST_CASE("sample metrics on exact and shifted imputations") {
    // Masked columns 0, 2, 4; truth values are distinct within each row.
    CountMatrix truth(30, 6);
    for (std::int64_t i = 0; i < truth.rows; ++i)
        for (std::int64_t j = 0; j < truth.cols; ++j) truth.at(i, j) = (i + j) % 7;
    MissingnessMask mask(30, 6);
    for (std::int64_t i = 0; i < mask.rows; ++i)
        for (std::int64_t j : {0, 2, 4}) mask.set_observed(i, j, false);

    RngHandle rng(59);
    SampleMetrics exact = sample_metrics(truth, truth, mask, rng);
    CHECK(exact.rmse == 0.0);
    CHECK(exact.bias == 0.0);
    CHECK(exact.spearman == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(exact.rmse_se == 0.0);
    CHECK(exact.bias_se == 0.0);
    CHECK(exact.rows_evaluated == 30);
    CHECK(exact.rows_spearman == 30);
    CHECK(exact.rows_skipped_unmasked == 0);
    CHECK(exact.rows_skipped_constant == 0);

    CountMatrix shifted = truth;
    for (auto& v : shifted.data) v += 1;
    RngHandle rng2(59);
    SampleMetrics plus = sample_metrics(shifted, truth, mask, rng2);
    CHECK(plus.rmse == 1.0);
    CHECK(plus.bias == 1.0);
    CHECK(plus.spearman == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(plus.rmse_se == 0.0);
    CHECK(plus.bias_se == 0.0);
}

TEST_CASE("sample metrics skips unmasked rows and degenerate rank rows") {
    CountMatrix truth(4, 3);
    CountMatrix imputed(4, 3);
    MissingnessMask mask(4, 3);
    // Row 0 fully observed. Row 1: constant truth on masked entries. Rows 2-3
    // are regular.
    for (std::int64_t i = 1; i < 4; ++i)
        for (std::int64_t j : {0, 1}) mask.set_observed(i, j, false);
    truth.at(1, 0) = 5;
    truth.at(1, 1) = 5;
    imputed.at(1, 0) = 1;
    imputed.at(1, 1) = 2;
    truth.at(2, 0) = 0;
    truth.at(2, 1) = 3;
    imputed.at(2, 0) = 0;
    imputed.at(2, 1) = 3;
    truth.at(3, 0) = 2;
    truth.at(3, 1) = 4;
    imputed.at(3, 0) = 3;
    imputed.at(3, 1) = 5;

    RngHandle rng(61);
    SampleMetrics m = sample_metrics(imputed, truth, mask, rng);
    CHECK(m.rows_evaluated == 3);
    CHECK(m.rows_skipped_unmasked == 1);
    CHECK(m.rows_skipped_constant == 1);
    CHECK(m.rows_spearman == 2);
    const double rmse_row1 = std::sqrt((16.0 + 9.0) / 2.0);
    CHECK(m.rmse == doctest::Approx((rmse_row1 + 0.0 + 1.0) / 3.0).epsilon(1e-12));
    CHECK(m.bias == doctest::Approx((-3.5 + 0.0 + 1.0) / 3.0).epsilon(1e-12));
    CHECK(m.spearman == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spearman handles reversals and ties with average ranks") {
    CountMatrix truth(1, 3);
    CountMatrix imputed(1, 3);
    MissingnessMask mask(1, 3);
    for (std::int64_t j = 0; j < 3; ++j) mask.set_observed(0, j, false);

    truth.at(0, 0) = 1;
    truth.at(0, 1) = 2;
    truth.at(0, 2) = 3;
    imputed.at(0, 0) = 3;
    imputed.at(0, 1) = 2;
    imputed.at(0, 2) = 1;
    RngHandle rng(67);
    SampleMetrics rev = sample_metrics(imputed, truth, mask, rng);
    CHECK(rev.spearman == doctest::Approx(-1.0).epsilon(1e-12));

    // Ranks with ties: truth {0,0,1} -> {1.5,1.5,3}, imputed {0,1,1} ->
    // {1,2.5,2.5}; the rank correlation is exactly 1/2.
    truth.at(0, 0) = 0;
    truth.at(0, 1) = 0;
    truth.at(0, 2) = 1;
    imputed.at(0, 0) = 0;
    imputed.at(0, 1) = 1;
    imputed.at(0, 2) = 1;
    RngHandle rng2(67);
    SampleMetrics tie = sample_metrics(imputed, truth, mask, rng2);
    CHECK(tie.spearman == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("sample metrics stays in range and bootstraps deterministically") {
    RngHandle data_rng(71);
    CountMatrix truth = random_counts(50, 8, 9, data_rng);
    CountMatrix imputed = random_counts(50, 8, 9, data_rng);
    MissingnessMask mask = make_mask(truth, MaskMechanism::mcar(0.5), data_rng);

    RngHandle rng_a(73);
    SampleMetrics a = sample_metrics(imputed, truth, mask, rng_a);
    CHECK(a.spearman >= -1.0);
    CHECK(a.spearman <= 1.0);
    CHECK(a.rmse >= 0.0);
    CHECK(a.rmse_se >= 0.0);
    CHECK(a.bias_se >= 0.0);
    CHECK(a.spearman_se >= 0.0);
    CHECK(a.rmse_se > 0.0);

    RngHandle rng_b(73);
    SampleMetrics b = sample_metrics(imputed, truth, mask, rng_b);
    CHECK(a.rmse == b.rmse);
    CHECK(a.rmse_se == b.rmse_se);
    CHECK(a.bias_se == b.bias_se);
    CHECK(a.spearman_se == b.spearman_se);

    RngHandle rng_c(74);
    SampleMetrics c = sample_metrics(imputed, truth, mask, rng_c);
    CHECK((a.rmse_se != c.rmse_se || a.bias_se != c.bias_se || a.spearman_se != c.spearman_se));
    CHECK(a.rmse == c.rmse);
}

TEST_CASE("sample metrics validates its inputs") {
    CountMatrix truth(3, 2);
    CountMatrix wrong(2, 2);
    MissingnessMask mask(3, 2);
    RngHandle rng(79);
    CHECK_THROWS_AS(sample_metrics(wrong, truth, mask, rng), std::invalid_argument);
    MissingnessMask bad_mask(3, 3);
    CHECK_THROWS_AS(sample_metrics(truth, truth, bad_mask, rng), std::invalid_argument);
    // Fully observed mask: nothing to evaluate.
    CHECK_THROWS_AS(sample_metrics(truth, truth, mask, rng), std::invalid_argument);
    MissingnessMask some(3, 2);
    some.set_observed(0, 0, false);
    CHECK_THROWS_AS(sample_metrics(truth, truth, some, rng, 0), std::invalid_argument);
}

TEST_CASE("report assembles the joint, per-dimension, and metadata fields") {
    RngHandle rng(83);
    CountMatrix truth = random_counts(60, 3, 8, rng);
    CountMatrix generated = random_counts(50, 3, 8, rng);

    MetricReport report = make_report(truth, generated, 1.0, 16, 9);
    CHECK(report.joint_mmd >= 0.0);
    CHECK(report.joint_swd >= 0.0);
    CHECK(report.gamma_kernel == 1.0);
    CHECK(report.n_projections == 16);
    CHECK(report.swd_projection_seed == 9);
    REQUIRE(report.per_dim.size() == 3);

    const RealMatrix rt = to_real(truth);
    const RealMatrix rg = to_real(generated);
    const std::vector<double> vt = variance_report(rt);
    const std::vector<double> vg = variance_report(rg);
    for (std::int64_t j = 0; j < 3; ++j) {
        const PerDimMetrics& pd = report.per_dim[static_cast<std::size_t>(j)];
        CHECK(pd.variance_true == vt[static_cast<std::size_t>(j)]);
        CHECK(pd.variance_gen == vg[static_cast<std::size_t>(j)]);
        CHECK(pd.wasserstein1 == wasserstein1_1d(column_of(truth, j), column_of(generated, j)));
        CHECK(pd.mmd >= 0.0);
    }

    MetricReport self = make_report(truth, truth, 1.0, 16, 9);
    CHECK(self.joint_mmd == 0.0);
    CHECK(self.joint_swd == 0.0);
    for (const PerDimMetrics& pd : self.per_dim) {
        CHECK(pd.wasserstein1 == 0.0);
        CHECK(pd.mmd == 0.0);
        CHECK(pd.variance_gen == pd.variance_true);
    }

    CHECK_THROWS_AS(make_report(truth, random_counts(10, 2, 3, rng)), std::invalid_argument);
}

TEST_CASE("report serializations are parseable and byte stable") {
    RngHandle rng(89);
    CountMatrix truth = random_counts(40, 2, 6, rng);
    CountMatrix generated = random_counts(40, 2, 6, rng);
    MetricReport report = make_report(truth, generated, 0.5, 8, 3);

    const std::string json_text = report_to_json(report);
    CHECK(report_to_json(report) == json_text);
    const nlohmann::json j = nlohmann::json::parse(json_text);
    CHECK(j.at("format").get<std::string>() == "thindiff-metrics-v1");
    CHECK(j.at("gamma_kernel").get<double>() == 0.5);
    CHECK(j.at("swd_projection_seed").get<std::uint64_t>() == 3);
    CHECK(j.at("joint").at("mmd").get<double>() == report.joint_mmd);
    CHECK(j.at("joint").at("swd").get<double>() == report.joint_swd);
    REQUIRE(j.at("per_dim").size() == 2);
    CHECK(j.at("per_dim")[0].at("wasserstein1").get<double>() ==
          report.per_dim[0].wasserstein1);
    CHECK_FALSE(j.contains("sample_level"));

    const std::string csv = report_to_csv(report);
    CHECK(csv.rfind("metric,value\n", 0) == 0);
    CHECK(csv.find("joint_mmd,") != std::string::npos);
    CHECK(csv.find("dim1_variance_gen,") != std::string::npos);
    CHECK(csv.find("sample_rmse") == std::string::npos);
    CHECK(static_cast<long>(std::count(csv.begin(), csv.end(), '\n')) == 1 + 2 + 2 * 4 + 3);

    MissingnessMask mask(40, 2);
    for (std::int64_t i = 0; i < 40; ++i) mask.set_observed(i, 0, false);
    RngHandle mrng(97);
    report.sample_level = sample_metrics(generated, truth, mask, mrng);
    const std::string with_sample = report_to_json(report);
    const nlohmann::json js = nlohmann::json::parse(with_sample);
    CHECK(js.at("sample_level").at("rows_evaluated").get<std::int64_t>() == 40);
    CHECK(js.at("sample_level").at("rmse").get<double>() == report.sample_level->rmse);
    const std::string csv2 = report_to_csv(report);
    CHECK(csv2.find("sample_rmse,") != std::string::npos);
    CHECK(static_cast<long>(std::count(csv2.begin(), csv2.end(), '\n')) ==
          1 + 2 + 2 * 4 + 3 + 10);
}
