#pragma once

#include <cstdint>
#include <random>

namespace thindiff {

// Deterministic random stream. All sampling algorithms are implemented here
// (not via std:: distributions) so that a given (seed, call sequence) yields
// identical draws on every build of this library.
//
// Substreams are derived from the seed alone, so row- or sample-parallel code
// can hand each partition an independent stream without coupling the result
// to thread scheduling.
class RngHandle {
  public:
    explicit RngHandle(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    // Independent stream determined by (seed, index) only.
    RngHandle substream(std::uint64_t index) const;

    std::uint64_t next_u64();

    // Uniform on [0, 1), 53-bit resolution.
    double uniform();

    // Unbiased uniform integer on [0, bound); bound > 0.
    std::uint64_t uniform_index(std::uint64_t bound);

    // Standard normal via Box-Muller; consumes exactly two uniforms per call.
    double normal();

    std::int64_t bernoulli(double p);

    // Binomial(n, p). Inversion when n*min(p,1-p) < 30, transformed rejection
    // above; both pull from this stream, so determinism holds per call index.
    std::int64_t binomial(std::int64_t n, double p);

    // Poisson(mean): multiplicative inversion below mean 30, transformed
    // rejection above.
    std::int64_t poisson(double mean);

    // Gamma(shape, scale), shape > 0, via Marsaglia-Tsang with the
    // shape-boost transform for shape < 1.
    double gamma(double shape, double scale);

    double lognormal(double location, double sigma);

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;

    std::int64_t binomial_inversion(std::int64_t n, double p);
    std::int64_t binomial_btrs(std::int64_t n, double p);
    std::int64_t poisson_inversion(double mean);
    std::int64_t poisson_ptrs(double mean);
};

}  // namespace thindiff
