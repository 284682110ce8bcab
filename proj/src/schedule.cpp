#include "thindiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace thindiff {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

void check_t(double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("schedule: t outside [0,1]");
}

// Nearest grid point of the num_steps-point uniform grid on [0,1].
double snap(double t, int num_steps) {
    double k = std::round(t * (num_steps - 1));
    return k / (num_steps - 1);
}

// Logit-linear from logit(1-p_min) down to logit(p_min). The high endpoint
// is the exact negation of the low one; forming it as -logit(p_min) avoids
// the cancellation in 1-(1-p_min).
double blackout_p(double t, double p_min) {
    double lo = logit(p_min);
    return sigmoid(lo * (2.0 * t - 1.0));
}

double blackout_dp(double t, double p_min) {
    double lo = logit(p_min);
    double p = sigmoid(lo * (2.0 * t - 1.0));
    return 2.0 * lo * p * (1.0 - p);
}

}  // namespace

PSchedule PSchedule::from_name(const std::string& name) {
    PSchedule s;
    if (name == "cosine")
        s.kind = Kind::Cosine;
    else if (name == "blackout_cont")
        s.kind = Kind::BlackoutContinuous;
    else if (name == "blackout_disc")
        s.kind = Kind::BlackoutDiscrete;
    else
        throw std::invalid_argument("unknown schedule kind: " + name);
    return s;
}

std::string PSchedule::name() const {
    switch (kind) {
        case Kind::Cosine: return "cosine";
        case Kind::BlackoutContinuous: return "blackout_cont";
        case Kind::BlackoutDiscrete: return "blackout_disc";
    }
    return "?";
}

double p_of(const PSchedule& schedule, double t) {
    check_t(t);
    switch (schedule.kind) {
        case PSchedule::Kind::Cosine: {
            double c = std::cos(std::numbers::pi * t / 2.0);
            return c * c;
        }
        case PSchedule::Kind::BlackoutContinuous:
            return blackout_p(t, schedule.p_min);
        case PSchedule::Kind::BlackoutDiscrete:
            return blackout_p(snap(t, schedule.num_steps), schedule.p_min);
    }
    return 0.0;
}

double dp_dt(const PSchedule& schedule, double t) {
    check_t(t);
    switch (schedule.kind) {
        case PSchedule::Kind::Cosine:
            return -(std::numbers::pi / 2.0) * std::sin(std::numbers::pi * t);
        case PSchedule::Kind::BlackoutContinuous:
            return blackout_dp(t, schedule.p_min);
        case PSchedule::Kind::BlackoutDiscrete:
            return blackout_dp(snap(t, schedule.num_steps), schedule.p_min);
    }
    return 0.0;
}

WeightSpec WeightSpec::from_name(const std::string& name) {
    WeightSpec w;
    if (name == "neg_prime")
        w.kind = Kind::NegPrime;
    else if (name == "nll")
        w.kind = Kind::Nll;
    else if (name == "constant")
        w.kind = Kind::Constant;
    else
        throw std::invalid_argument("unknown weight kind: " + name);
    return w;
}

std::string WeightSpec::name() const {
    switch (kind) {
        case Kind::NegPrime: return "neg_prime";
        case Kind::Nll: return "nll";
        case Kind::Constant: return "constant";
    }
    return "?";
}

double weight(const WeightSpec& spec, const PSchedule& schedule, double t) {
    check_t(t);
    switch (spec.kind) {
        case WeightSpec::Kind::NegPrime:
            return -dp_dt(schedule, t);
        case WeightSpec::Kind::Nll: {
            // Diverges as t->0 where p->1; capped by evaluating at t >= 1e-4.
            double tc = std::max(t, 1e-4);
            double denom = 1.0 - p_of(schedule, tc);
            if (denom <= 0.0) return 0.0;
            return -dp_dt(schedule, tc) / denom;
        }
        case WeightSpec::Kind::Constant:
            return 1.0;
    }
    return 0.0;
}

double sigma_max(double p_t, double p_s) {
    if (!(p_t >= 0.0 && p_t <= 1.0) || !(p_s >= 0.0 && p_s <= 1.0))
        throw std::invalid_argument("sigma_max: probabilities outside [0,1]");
    if (p_s < p_t)
        throw std::invalid_argument("sigma_max: requires p_s >= p_t (s precedes t)");
    if (p_t == 0.0) return 1.0;
    return std::min(1.0, (1.0 - p_s) / p_t);
}

double sigma_at(const AttritionRule& rule, double p_t, double p_s) {
    switch (rule.kind) {
        case AttritionRule::Kind::None:
            return 0.0;
        case AttritionRule::Kind::Rescale:
            if (!(rule.eta >= 0.0 && rule.eta <= 1.0))
                throw std::invalid_argument("attrition: eta outside [0,1]");
            return rule.eta * sigma_max(p_t, p_s);
    }
    return 0.0;
}

double beta(double p_t, double p_s, double sigma) {
    if (p_t == 1.0)
        throw std::invalid_argument("beta: p_t = 1 admits no reverse step");
    double cap = sigma_max(p_t, p_s);
    if (!(sigma >= 0.0 && sigma <= cap + 1e-12))
        throw std::invalid_argument(
            "beta: sigma must lie in [0, min(1, (1-p_s)/p_t)]");
    double value = (p_s - (1.0 - sigma) * p_t) / (1.0 - p_t);
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace thindiff
