#include "thindiff/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace thindiff {

namespace {

// splitmix64 finalizer; mixes seed and substream index into a fresh seed.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stirling series tail log(k!) - [ (k+1/2)log(k+1) - (k+1) + log(2*pi)/2 ],
// exact table below k = 10.
double stirling_tail(double k) {
    static const double table[] = {
        0.0810614667953272,  0.0413406959554092,  0.0276779256849983,
        0.02079067210376509, 0.0166446911898211,  0.0138761288230707,
        0.0118967099458917,  0.0104112652619720,  0.00925546218271273,
        0.00833056343336287};
    if (k <= 9.0) return table[static_cast<int>(k)];
    double kp1sq = (k + 1.0) * (k + 1.0);
    return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / (k + 1.0);
}

}  // namespace

RngHandle::RngHandle(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

RngHandle RngHandle::substream(std::uint64_t index) const {
    return RngHandle(mix64(seed_ ^ mix64(index)));
}

std::uint64_t RngHandle::next_u64() { return engine_(); }

double RngHandle::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngHandle::uniform_index(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_index: bound must be positive");
    // Rejection keeps the mapping exactly uniform.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

double RngHandle::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t RngHandle::bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p outside [0,1]");
    return uniform() < p ? 1 : 0;
}

std::int64_t RngHandle::binomial(std::int64_t n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: n must be nonnegative");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: p outside [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    if (static_cast<double>(n) * p < 30.0) return binomial_inversion(n, p);
    return binomial_btrs(n, p);
}

std::int64_t RngHandle::binomial_inversion(std::int64_t n, double p) {
    // CDF walk with the pmf ratio recurrence; p <= 0.5 and n*p < 30 here, so
    // the starting mass (1-p)^n cannot underflow.
    double f = std::exp(static_cast<double>(n) * std::log1p(-p));
    double ratio = p / (1.0 - p);
    double u = uniform();
    std::int64_t x = 0;
    while (u > f) {
        u -= f;
        ++x;
        if (x > n) return n;  // float residue past the total mass
        f *= ratio * static_cast<double>(n - x + 1) / static_cast<double>(x);
    }
    return x;
}

std::int64_t RngHandle::binomial_btrs(std::int64_t n, double p) {
    // Transformed rejection with squeeze (Hormann); valid for p <= 0.5 and
    // moderate-to-large n*p, which the dispatcher guarantees.
    const double nd = static_cast<double>(n);
    const double q = 1.0 - p;
    const double spq = std::sqrt(nd * p * q);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = nd * p + 0.5;
    const double v_r = 0.92 - 4.2 / b;
    const double r = p / q;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double m = std::floor((nd + 1.0) * p);
    while (true) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::fabs(u);
        double kd = std::floor((2.0 * a / us + b) * u + c);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kd);
        if (kd < 0.0 || kd > nd) continue;
        v = std::log(v * alpha / (a / (us * us) + b));
        double upper = (m + 0.5) * std::log((m + 1.0) / (r * (nd - m + 1.0))) +
                       (nd + 1.0) * std::log((nd - m + 1.0) / (nd - kd + 1.0)) +
                       (kd + 0.5) * std::log(r * (nd - kd + 1.0) / (kd + 1.0)) +
                       stirling_tail(m) + stirling_tail(nd - m) - stirling_tail(kd) -
                       stirling_tail(nd - kd);
        if (v <= upper) return static_cast<std::int64_t>(kd);
    }
}

std::int64_t RngHandle::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw std::invalid_argument("poisson: mean must be finite and nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 30.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
}

std::int64_t RngHandle::poisson_inversion(double mean) {
    double bound = std::exp(-mean);
    double prod = 1.0;
    std::int64_t x = 0;
    while (true) {
        prod *= uniform();
        if (prod > bound)
            ++x;
        else
            return x;
    }
}

std::int64_t RngHandle::poisson_ptrs(double mean) {
    // Transformed rejection with squeeze (Hormann); mean >= 10 required,
    // the dispatcher routes mean >= 30 here.
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::fabs(u);
        double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kd);
        if (kd < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            kd * loglam - mean - std::lgamma(kd + 1.0))
            return static_cast<std::int64_t>(kd);
    }
}

double RngHandle::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("gamma: shape and scale must be positive");
    if (shape < 1.0) {
        // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
        double u = uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v * scale;
    }
}

double RngHandle::lognormal(double location, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("lognormal: sigma must be nonnegative");
    return std::exp(location + sigma * normal());
}

}  // namespace thindiff
