#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "thindiff/matrix.hpp"
#include "thindiff/predictor.hpp"
#include "thindiff/rng.hpp"
#include "thindiff/schedule.hpp"

namespace thindiff {

struct SamplerConfig {
    int num_steps = 200;
    double gamma = 1.0;  // guidance strength; used only when class_id is set
    AttritionRule attrition;
    std::uint64_t seed = 1;
    std::optional<int> class_id;
};

// sigma for one reverse step under the configured attrition rule.
double attrition_at(const SamplerConfig& config, double p_t, double p_s);

// Prediction callback: same shape contract as predict(). Lets tests drive the
// reverse chain with exact oracles instead of a trained network.
using PredictFn =
    std::function<RealMatrix(const CountMatrix& x_t, double t, const std::vector<int>* class_ids)>;

// Called after the state for time s is fully formed; s runs down to 0.
using StepObserver = std::function<void(double s, const CountMatrix& state)>;

// Reverse chain from all-zeros at t=1 over the uniform grid t_k = 1 - k/T:
// predict, guide, random_round, then attrition_step per row. Schedules whose
// p(0) < 1 get a final completion step adding random_round(y_hat(t=0)).
// Each row draws from substream(seed, row), so results are independent of
// thread count and row order.
CountMatrix generate_with(const PredictFn& fn, int data_dim, const SamplerConfig& config,
                          std::int64_t n_samples, const PSchedule& schedule,
                          const StepObserver& observer = nullptr);

CountMatrix generate(const Predictor& model, const SamplerConfig& config,
                     std::int64_t n_samples, const PSchedule& schedule,
                     const StepObserver& observer = nullptr);

struct MaskMechanism {
    enum class Kind { Mcar, MnarLowBiased };
    Kind kind = Kind::Mcar;
    double rate = 0.0;           // target missing fraction
    double bias_strength = 1.0;  // MNAR decay scale in count units

    static MaskMechanism mcar(double rate) { return {Kind::Mcar, rate, 1.0}; }
    static MaskMechanism mnar_low_biased(double rate, double bias_strength) {
        return {Kind::MnarLowBiased, rate, bias_strength};
    }
};

struct MissingnessMask {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::uint8_t> observed;  // 1 = observed, 0 = missing
    MaskMechanism mechanism;

    MissingnessMask() = default;
    MissingnessMask(std::int64_t r, std::int64_t c)
        : rows(r), cols(c), observed(static_cast<std::size_t>(r * c), 1) {}

    bool is_observed(std::int64_t i, std::int64_t j) const {
        return observed[static_cast<std::size_t>(i * cols + j)] != 0;
    }
    void set_observed(std::int64_t i, std::int64_t j, bool value) {
        observed[static_cast<std::size_t>(i * cols + j)] = value ? 1 : 0;
    }
    std::int64_t observed_count() const;
};

// MCAR drops each entry with probability rate. MnarLowBiased drops entry
// (i,j) with probability min(1, c * exp(-x_ij / bias_strength)) where c is
// bisected so the expected missing fraction equals rate; low counts are
// masked preferentially.
MissingnessMask make_mask(const CountMatrix& x_true, const MaskMechanism& mechanism,
                          RngHandle& rng);

// RePaint imputation: runs the reverse chain; after every step the observed
// positions are overwritten with forward-thinned ground truth at the current
// noise level, and at t=0 with the exact observed values. Imputation m uses
// per-row substreams offset by m * 2^32, so imputation 0 of a fully masked
// input reproduces generate() bit for bit.
std::vector<CountMatrix> repaint_impute_with(const PredictFn& fn, const CountMatrix& x_obs,
                                             const MissingnessMask& mask,
                                             const SamplerConfig& config,
                                             const PSchedule& schedule, int n_imputations);

// Uses the model's own schedule.
std::vector<CountMatrix> repaint_impute(const Predictor& model, const CountMatrix& x_obs,
                                        const MissingnessMask& mask,
                                        const SamplerConfig& config, int n_imputations);

// Entrywise mean of the imputations followed by random_round.
CountMatrix ensemble_mean_round(const std::vector<CountMatrix>& imputations, RngHandle& rng);

}  // namespace thindiff
