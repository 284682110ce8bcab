#pragma once

#include <cstdint>
#include <vector>

#include "thindiff/matrix.hpp"
#include "thindiff/rng.hpp"
#include "thindiff/schedule.hpp"

namespace thindiff {

// Entrywise thinning: each count survives independently with probability p_t,
// giving the forward marginal Binomial(x0_ij, p_t) per entry.
CountMatrix forward_sample(const CountMatrix& x0, double p_t, RngHandle& rng);

// Same thinning with one survival probability per row (training draws one
// time per batch element).
CountMatrix forward_sample(const CountMatrix& x0, const std::vector<double>& p_rows,
                           RngHandle& rng);

// Forward transition from level p_s to the deeper level p_t <= p_s:
// Binomial(x_s_ij, p_t/p_s) per entry. Throws when p_t > p_s.
CountMatrix forward_conditional_sample(const CountMatrix& x_s, double p_t, double p_s,
                                       RngHandle& rng);

// Binomial pmf via log-gamma; exact at the p=0/1 edges. 0 <= k <= n required.
double binomial_pmf(std::int64_t n, std::int64_t k, double p);

// One reverse step: x_s = survivors + births with
//   survivors ~ Binomial(x_t, 1 - sigma)
//   births    ~ Binomial(y_hat_rounded, beta(p_t, p_s, sigma))
// per entry. sigma must lie in [0, min(1, (1-p_s)/p_t)].
CountMatrix attrition_step(const CountMatrix& x_t, const CountMatrix& y_hat_rounded,
                           double p_t, double p_s, double sigma, RngHandle& rng);

// Expectation-preserving integer projection: floor(y) + Bernoulli(frac(y)).
// Entries must be finite and nonnegative.
CountMatrix random_round(const RealMatrix& y_hat, RngHandle& rng);

// Geometric interpolation cond^gamma * uncond^(1-gamma), computed in log
// space. All entries must be positive. gamma=1 returns cond exactly,
// gamma=0 returns uncond exactly.
RealMatrix guide(const RealMatrix& y_cond, const RealMatrix& y_uncond, double gamma);

// Entrywise z ~ Poisson(lambda * x); lambda >= 1. de_randomize divides the
// counts back by lambda.
CountMatrix poisson_randomize(const RealMatrix& x_real, double lambda, RngHandle& rng);
RealMatrix de_randomize(const CountMatrix& z, double lambda);

// Exact terminal distribution of the reverse chain started from all-zeros at
// t=1, run with oracle predictions y_hat = x0 - x_t over num_steps uniform
// steps down to t=0. States stay within 0..x0, so the pmf vector has x0+1
// entries. Source states with mass below 1e-14 are dropped into
// discarded_mass, which must stay below 1e-10.
struct ReverseChainPmf {
    std::vector<double> pmf;
    double discarded_mass = 0.0;
};

ReverseChainPmf enumerate_reverse_chain(std::int64_t x0, const PSchedule& schedule,
                                        int num_steps, const AttritionRule& rule);

// 0.5 * sum |a_i - b_i| over a common support.
double total_variation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace thindiff
