#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "thindiff/rng.hpp"

using thindiff::RngHandle;

namespace {

// Exact Poisson pmf by the multiplicative recurrence.
std::vector<double> poisson_pmf_table(double mean, std::int64_t upto) {
    std::vector<double> pmf(static_cast<std::size_t>(upto) + 1);
    pmf[0] = std::exp(-mean);
    for (std::int64_t k = 1; k <= upto; ++k)
        pmf[static_cast<std::size_t>(k)] = pmf[static_cast<std::size_t>(k - 1)] * mean / static_cast<double>(k);
    return pmf;
}

double binomial_chi2_pvalue(std::uint64_t seed, std::int64_t n, double p, int draws) {
    RngHandle rng(seed);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < draws; ++i) {
        std::int64_t v = rng.binomial(n, p);
        REQUIRE(v >= 0);
        REQUIRE(v <= n);
        ++counts[static_cast<std::size_t>(v)];
    }
    std::vector<double> expected(static_cast<std::size_t>(n) + 1);
    for (std::int64_t k = 0; k <= n; ++k)
        expected[static_cast<std::size_t>(k)] =
            testsupport::binomial_pmf_oracle(static_cast<int>(n), static_cast<int>(k), p);
    return testsupport::chi_square_pvalue(counts, expected, draws);
}

}  // namespace

TEST_CASE("uniform stays in [0,1) and is deterministic per seed") {
    RngHandle a(42), b(42), c(43);
    bool diverged = false;
    for (int i = 0; i < 1000; ++i) {
        double u = a.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform());
        if (u != c.uniform()) diverged = true;
    }
    CHECK(diverged);
}

TEST_CASE("substreams are deterministic and independent of parent draws") {
    RngHandle root(7);
    RngHandle s1 = root.substream(3);
    root.uniform();  // consuming the parent must not affect derived streams
    RngHandle s2 = root.substream(3);
    for (int i = 0; i < 100; ++i) CHECK(s1.uniform() == s2.uniform());
    RngHandle other = root.substream(4);
    bool diverged = false;
    RngHandle s3 = root.substream(3);
    for (int i = 0; i < 100; ++i)
        if (s3.uniform() != other.uniform()) diverged = true;
    CHECK(diverged);
}

TEST_CASE("binomial edge cases") {
    RngHandle rng(1);
    CHECK(rng.binomial(0, 0.5) == 0);
    CHECK(rng.binomial(10, 0.0) == 0);
    CHECK(rng.binomial(10, 1.0) == 10);
    CHECK_THROWS_AS(rng.binomial(-1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(rng.binomial(5, 1.5), std::invalid_argument);
}

TEST_CASE("binomial matches the exact pmf in the inversion regime") {
    CHECK(binomial_chi2_pvalue(101, 6, 0.5, 100000) > 0.01);
    CHECK(binomial_chi2_pvalue(102, 25, 0.12, 100000) > 0.01);
    CHECK(binomial_chi2_pvalue(103, 40, 0.9, 100000) > 0.01);  // flip path
}

TEST_CASE("binomial matches the exact pmf in the rejection regime") {
    CHECK(binomial_chi2_pvalue(104, 500, 0.3, 100000) > 0.01);
    CHECK(binomial_chi2_pvalue(105, 120, 0.5, 100000) > 0.01);
    CHECK(binomial_chi2_pvalue(106, 300, 0.77, 100000) > 0.01);  // flip + rejection
}

TEST_CASE("poisson matches the exact pmf in both regimes") {
    for (double mean : {3.0, 100.0}) {
        RngHandle rng(200 + static_cast<std::uint64_t>(mean));
        std::int64_t upto = static_cast<std::int64_t>(mean + 10.0 * std::sqrt(mean) + 10.0);
        std::vector<std::int64_t> counts(static_cast<std::size_t>(upto) + 1, 0);
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) {
            std::int64_t v = rng.poisson(mean);
            REQUIRE(v >= 0);
            if (v <= upto) ++counts[static_cast<std::size_t>(v)];
        }
        CHECK(testsupport::chi_square_pvalue(counts, poisson_pmf_table(mean, upto), draws) > 0.01);
    }
}

TEST_CASE("gamma moments match shape*scale and shape*scale^2") {
    for (double shape : {0.4, 2.3}) {
        const double scale = 1.7;
        RngHandle rng(300);
        const int draws = 200000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < draws; ++i) {
            double g = rng.gamma(shape, scale);
            REQUIRE(g > 0.0);
            sum += g;
            sumsq += g * g;
        }
        double mean = sum / draws;
        double var = sumsq / draws - mean * mean;
        double mean_se = std::sqrt(shape * scale * scale / draws);
        CHECK(std::fabs(mean - shape * scale) < 5.0 * mean_se);
        CHECK(std::fabs(var - shape * scale * scale) < 0.05 * (1.0 + shape * scale * scale));
    }
}

TEST_CASE("normal moments") {
    RngHandle rng(400);
    const int draws = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < draws; ++i) {
        double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    CHECK(std::fabs(sum / draws) < 0.01);
    CHECK(std::fabs(sumsq / draws - 1.0) < 0.02);
}

TEST_CASE("uniform_index is unbiased over a small range") {
    RngHandle rng(500);
    std::vector<std::int64_t> counts(7, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) ++counts[rng.uniform_index(7)];
    std::vector<double> expected(7, 1.0 / 7.0);
    CHECK(testsupport::chi_square_pvalue(counts, expected, draws) > 0.01);
}
