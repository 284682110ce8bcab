#include "thindiff/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace thindiff {

namespace {

void check_prob(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(std::string(what) + ": probability outside [0,1]");
}

}  // namespace

CountMatrix forward_sample(const CountMatrix& x0, double p_t, RngHandle& rng) {
    check_prob(p_t, "forward_sample");
    require_nonnegative(x0, "forward_sample");
    CountMatrix out(x0.rows, x0.cols);
    for (std::size_t i = 0; i < x0.data.size(); ++i)
        out.data[i] = rng.binomial(x0.data[i], p_t);
    return out;
}

CountMatrix forward_sample(const CountMatrix& x0, const std::vector<double>& p_rows,
                           RngHandle& rng) {
    if (static_cast<std::int64_t>(p_rows.size()) != x0.rows)
        throw std::invalid_argument("forward_sample: one probability per row required");
    require_nonnegative(x0, "forward_sample");
    CountMatrix out(x0.rows, x0.cols);
    for (std::int64_t i = 0; i < x0.rows; ++i) {
        check_prob(p_rows[i], "forward_sample");
        for (std::int64_t j = 0; j < x0.cols; ++j)
            out.at(i, j) = rng.binomial(x0.at(i, j), p_rows[i]);
    }
    return out;
}

CountMatrix forward_conditional_sample(const CountMatrix& x_s, double p_t, double p_s,
                                       RngHandle& rng) {
    check_prob(p_t, "forward_conditional_sample");
    check_prob(p_s, "forward_conditional_sample");
    if (p_t > p_s)
        throw std::invalid_argument(
            "forward_conditional_sample: requires p_t <= p_s (time moves forward)");
    double ratio = (p_t == 0.0) ? 0.0 : p_t / p_s;
    return forward_sample(x_s, ratio, rng);
}

double binomial_pmf(std::int64_t n, std::int64_t k, double p) {
    if (n < 0 || k < 0 || k > n)
        throw std::invalid_argument("binomial_pmf: requires 0 <= k <= n");
    check_prob(p, "binomial_pmf");
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    double nd = static_cast<double>(n), kd = static_cast<double>(k);
    double log_pmf = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) -
                     std::lgamma(nd - kd + 1.0) + kd * std::log(p) +
                     (nd - kd) * std::log1p(-p);
    return std::exp(log_pmf);
}

CountMatrix attrition_step(const CountMatrix& x_t, const CountMatrix& y_hat_rounded,
                           double p_t, double p_s, double sigma, RngHandle& rng) {
    if (!x_t.same_shape(y_hat_rounded))
        throw std::invalid_argument("attrition_step: shape mismatch");
    require_nonnegative(x_t, "attrition_step");
    require_nonnegative(y_hat_rounded, "attrition_step");
    double cap = sigma_max(p_t, p_s);
    if (!(sigma >= 0.0 && sigma <= cap + 1e-12))
        throw std::invalid_argument(
            "attrition_step: sigma must lie in [0, min(1, (1-p_s)/p_t)]");
    double b = beta(p_t, p_s, sigma);
    CountMatrix out(x_t.rows, x_t.cols);
    for (std::size_t i = 0; i < x_t.data.size(); ++i) {
        std::int64_t survivors = rng.binomial(x_t.data[i], 1.0 - sigma);
        std::int64_t births = rng.binomial(y_hat_rounded.data[i], b);
        out.data[i] = survivors + births;
    }
    return out;
}

CountMatrix random_round(const RealMatrix& y_hat, RngHandle& rng) {
    CountMatrix out(y_hat.rows, y_hat.cols);
    for (std::size_t i = 0; i < y_hat.data.size(); ++i) {
        double v = y_hat.data[i];
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("random_round: entries must be finite and >= 0");
        double fl = std::floor(v);
        out.data[i] = static_cast<std::int64_t>(fl) + rng.bernoulli(v - fl);
    }
    return out;
}

RealMatrix guide(const RealMatrix& y_cond, const RealMatrix& y_uncond, double gamma) {
    if (!y_cond.same_shape(y_uncond))
        throw std::invalid_argument("guide: shape mismatch");
    if (gamma == 1.0) return y_cond;
    if (gamma == 0.0) return y_uncond;
    RealMatrix out(y_cond.rows, y_cond.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double c = y_cond.data[i], u = y_uncond.data[i];
        if (!(c > 0.0) || !(u > 0.0))
            throw std::invalid_argument("guide: entries must be positive");
        out.data[i] = std::exp(gamma * std::log(c) + (1.0 - gamma) * std::log(u));
    }
    return out;
}

CountMatrix poisson_randomize(const RealMatrix& x_real, double lambda, RngHandle& rng) {
    if (!(lambda >= 1.0))
        throw std::invalid_argument("poisson_randomize: lambda must be >= 1");
    CountMatrix out(x_real.rows, x_real.cols);
    for (std::size_t i = 0; i < x_real.data.size(); ++i) {
        double v = x_real.data[i];
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("poisson_randomize: entries must be finite and >= 0");
        out.data[i] = rng.poisson(lambda * v);
    }
    return out;
}

RealMatrix de_randomize(const CountMatrix& z, double lambda) {
    if (!(lambda >= 1.0))
        throw std::invalid_argument("de_randomize: lambda must be >= 1");
    require_nonnegative(z, "de_randomize");
    RealMatrix out(z.rows, z.cols);
    for (std::size_t i = 0; i < z.data.size(); ++i)
        out.data[i] = static_cast<double>(z.data[i]) / lambda;
    return out;
}

ReverseChainPmf enumerate_reverse_chain(std::int64_t x0, const PSchedule& schedule,
                                        int num_steps, const AttritionRule& rule) {
    if (x0 < 0) throw std::invalid_argument("enumerate_reverse_chain: x0 must be >= 0");
    if (num_steps < 1)
        throw std::invalid_argument("enumerate_reverse_chain: num_steps must be >= 1");
    // Branch enumeration touches sum_x (x+1)(x0-x+1) ~ (x0+2)^3/6 triples.
    double joint = std::pow(static_cast<double>(x0) + 2.0, 3.0) / 6.0;
    if (joint > 1e4)
        throw std::invalid_argument("enumerate_reverse_chain: state space too large");

    const double mass_floor = 1e-14;
    const std::size_t states = static_cast<std::size_t>(x0) + 1;
    std::vector<double> pmf(states, 0.0);
    pmf[0] = 1.0;  // the chain starts from all-zeros at t=1
    double discarded = 0.0;

    for (int k = 0; k < num_steps; ++k) {
        double t = 1.0 - static_cast<double>(k) / num_steps;
        double s = 1.0 - static_cast<double>(k + 1) / num_steps;
        double p_t = p_of(schedule, t);
        double p_s = p_of(schedule, s);
        double sigma = sigma_at(rule, p_t, p_s);
        double b = beta(p_t, p_s, sigma);

        std::vector<double> next(states, 0.0);
        for (std::int64_t x = 0; x <= x0; ++x) {
            double mass = pmf[static_cast<std::size_t>(x)];
            if (mass < mass_floor) {
                discarded += mass;
                continue;
            }
            // Oracle prediction: exactly the x0 - x counts still missing.
            std::int64_t budget = x0 - x;
            for (std::int64_t n = 0; n <= x; ++n) {
                double pn = mass * binomial_pmf(x, n, 1.0 - sigma);
                if (pn < mass_floor) {
                    discarded += pn;
                    continue;
                }
                for (std::int64_t bc = 0; bc <= budget; ++bc) {
                    double pb = pn * binomial_pmf(budget, bc, b);
                    next[static_cast<std::size_t>(n + bc)] += pb;
                }
            }
        }
        pmf = std::move(next);
    }

    // Schedules with p(0) < 1 finish with a completion step adding the
    // predicted remainder; with oracle predictions that is exactly x0 - x.
    if (p_of(schedule, 0.0) < 1.0) {
        std::vector<double> next(states, 0.0);
        for (std::int64_t x = 0; x <= x0; ++x)
            next[static_cast<std::size_t>(x0)] += pmf[static_cast<std::size_t>(x)];
        pmf = std::move(next);
    }

    if (discarded >= 1e-10)
        throw std::runtime_error("enumerate_reverse_chain: discarded mass exceeds 1e-10");
    return {std::move(pmf), discarded};
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("total_variation: support size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
    return 0.5 * acc;
}

}  // namespace thindiff
