#pragma once

#include <string>

namespace thindiff {

// Survival schedule p(t) on t in [0,1]: the probability that a unit count
// present at t=0 is still present at time t. p decreases from ~1 at t=0 to
// ~0 at t=1.
//
//   Cosine              p(t) = cos^2(pi*t/2); hits 1 and 0 exactly.
//   BlackoutContinuous  p(t) = sigmoid(logit(1-p_min) + t*(logit(p_min) -
//                       logit(1-p_min))); p(0)=1-p_min, p(1)=p_min.
//   BlackoutDiscrete    the same curve evaluated on a uniform grid of
//                       num_steps points; t snaps to the nearest grid point.
struct PSchedule {
    enum class Kind { Cosine, BlackoutContinuous, BlackoutDiscrete };

    Kind kind = Kind::Cosine;
    double p_min = 3.0590232050182579e-07;  // exp(-15)
    int num_steps = 1000;                   // BlackoutDiscrete grid size

    static PSchedule from_name(const std::string& name);
    std::string name() const;
};

// Survival probability at t; throws for t outside [0,1].
double p_of(const PSchedule& schedule, double t);

// dp/dt, closed form. For BlackoutDiscrete this is the continuous-curve
// derivative evaluated at the snapped t (the snapped curve itself is
// piecewise constant). Nonpositive everywhere.
double dp_dt(const PSchedule& schedule, double t);

// Loss weighting w(t) for the count-regression objective.
//   NegPrime  w(t) = -p'(t)
//   Nll       w(t) = -p'(t) / ((1 - p(t)) * phi(t)), phi uniform on [0,1];
//             evaluated at t' = max(t, 1e-4) to cap the divergence as p->1.
//   Constant  w(t) = 1
struct WeightSpec {
    enum class Kind { NegPrime, Nll, Constant };
    Kind kind = Kind::NegPrime;

    static WeightSpec from_name(const std::string& name);
    std::string name() const;
};

double weight(const WeightSpec& spec, const PSchedule& schedule, double t);

// Largest admissible attrition probability for a reverse step from survival
// level p_t to p_s (p_s >= p_t): min(1, (1-p_s)/p_t). Returns 1 when p_t=0.
double sigma_max(double p_t, double p_s);

// How much attrition a reverse step applies.
//   None     sigma = 0 (existing counts always survive)
//   Rescale  sigma = eta * sigma_max(p_t, p_s), eta in [0,1]
struct AttritionRule {
    enum class Kind { None, Rescale };
    Kind kind = Kind::None;
    double eta = 0.0;

    static AttritionRule none() { return {}; }
    static AttritionRule rescale(double eta) { return {Kind::Rescale, eta}; }
};

double sigma_at(const AttritionRule& rule, double p_t, double p_s);

// Birth probability for the reverse step: (p_s - (1-sigma)*p_t) / (1-p_t),
// clamped to [0,1] against rounding. Requires sigma in [0, sigma_max];
// throws when p_t = 1 (no reverse step leaves t=0).
double beta(double p_t, double p_s, double sigma);

}  // namespace thindiff
