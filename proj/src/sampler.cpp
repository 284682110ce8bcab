#include "thindiff/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "thindiff/errors.hpp"
#include "thindiff/kernel.hpp"
#include "thindiff/threading.hpp"

namespace thindiff {

namespace {

void validate_config(const SamplerConfig& config) {
    if (config.num_steps < 1) throw ConfigError("sampler: num_steps must be >= 1");
    if (!(config.gamma >= 0.0)) throw ConfigError("sampler: gamma must be >= 0");
    if (config.attrition.kind == AttritionRule::Kind::Rescale &&
        !(config.attrition.eta >= 0.0 && config.attrition.eta <= 1.0))
        throw ConfigError("sampler: attrition eta must lie in [0, 1]");
    if (config.class_id && *config.class_id < 0)
        throw ConfigError("sampler: class_id must be >= 0");
}

void check_guidance(const Predictor& model, const SamplerConfig& config) {
    if (!config.class_id) return;
    if (model.n_classes == 0)
        throw ConfigError("sampler: class guidance requested but the model has no class table");
    if (*config.class_id > model.n_classes)
        throw ConfigError("sampler: class_id exceeds the model's class count");
}

PredictFn model_fn(const Predictor& model) {
    return [&model](const CountMatrix& x_t, double t, const std::vector<int>* ids) {
        return predict(model, x_t, t, ids);
    };
}

// Guided prediction for the whole batch; gamma=1 (or no class) needs one call.
RealMatrix guided_prediction(const PredictFn& fn, const CountMatrix& state, double t,
                             const SamplerConfig& config, const std::vector<int>* ids) {
    if (!config.class_id) return fn(state, t, nullptr);
    RealMatrix conditional = fn(state, t, ids);
    if (config.gamma == 1.0) return conditional;
    return guide(conditional, fn(state, t, nullptr), config.gamma);
}

// One reverse chain shared by generate and repaint: x_obs/mask are null for
// plain generation. Row r of imputation m draws from substream
// (m << 32) + r; all per-entry draws happen in row-major entry order inside
// the row, so results are independent of threading.
CountMatrix reverse_chain(const PredictFn& fn, int data_dim, const SamplerConfig& config,
                          std::int64_t rows, const PSchedule& schedule,
                          const CountMatrix* x_obs, const MissingnessMask* mask,
                          std::uint64_t substream_base, const StepObserver& observer) {
    validate_config(config);
    if (rows < 1) throw ConfigError("sampler: need at least one sample row");
    if (data_dim < 1) throw std::invalid_argument("sampler: data_dim must be >= 1");

    const RngHandle root(config.seed);
    std::vector<RngHandle> streams;
    streams.reserve(static_cast<std::size_t>(rows));
    for (std::int64_t r = 0; r < rows; ++r)
        streams.push_back(root.substream(substream_base + static_cast<std::uint64_t>(r)));

    std::vector<int> ids;
    const std::vector<int>* ids_ptr = nullptr;
    if (config.class_id) {
        ids.assign(static_cast<std::size_t>(rows), *config.class_id);
        ids_ptr = &ids;
    }

    CountMatrix state(rows, data_dim);
    const int T = config.num_steps;
    const bool needs_completion = p_of(schedule, 0.0) < 1.0;

    for (int k = 0; k < T; ++k) {
        const double t = 1.0 - static_cast<double>(k) / T;
        const double s = 1.0 - static_cast<double>(k + 1) / T;
        const double p_t = p_of(schedule, t);
        const double p_s = p_of(schedule, s);
        const double sigma = attrition_at(config, p_t, p_s);

        const RealMatrix y_hat = guided_prediction(fn, state, t, config, ids_ptr);

        parallel_for(static_cast<std::size_t>(rows), [&](std::size_t begin, std::size_t end) {
            CountMatrix x_row(1, data_dim);
            RealMatrix y_row(1, data_dim);
            for (std::size_t ri = begin; ri < end; ++ri) {
                const auto r = static_cast<std::int64_t>(ri);
                RngHandle& rng = streams[ri];
                for (std::int64_t j = 0; j < data_dim; ++j) {
                    x_row.at(0, j) = state.at(r, j);
                    y_row.at(0, j) = y_hat.at(r, j);
                }
                const CountMatrix rounded = random_round(y_row, rng);
                const CountMatrix next = attrition_step(x_row, rounded, p_t, p_s, sigma, rng);
                for (std::int64_t j = 0; j < data_dim; ++j) state.at(r, j) = next.at(0, j);
                if (x_obs != nullptr && s > 0.0) {
                    for (std::int64_t j = 0; j < data_dim; ++j)
                        if (mask->is_observed(r, j))
                            state.at(r, j) = rng.binomial(x_obs->at(r, j), p_s);
                }
            }
        });

        if (observer && s > 0.0) observer(s, state);
    }

    if (needs_completion) {
        const RealMatrix y_hat = guided_prediction(fn, state, 0.0, config, ids_ptr);
        parallel_for(static_cast<std::size_t>(rows), [&](std::size_t begin, std::size_t end) {
            RealMatrix y_row(1, data_dim);
            for (std::size_t ri = begin; ri < end; ++ri) {
                const auto r = static_cast<std::int64_t>(ri);
                for (std::int64_t j = 0; j < data_dim; ++j) y_row.at(0, j) = y_hat.at(r, j);
                const CountMatrix rounded = random_round(y_row, streams[ri]);
                for (std::int64_t j = 0; j < data_dim; ++j) state.at(r, j) += rounded.at(0, j);
            }
        });
    }

    if (x_obs != nullptr) {
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t j = 0; j < data_dim; ++j)
                if (mask->is_observed(r, j)) state.at(r, j) = x_obs->at(r, j);
    }

    if (observer) observer(0.0, state);
    return state;
}

}  // namespace

double attrition_at(const SamplerConfig& config, double p_t, double p_s) {
    return sigma_at(config.attrition, p_t, p_s);
}

CountMatrix generate_with(const PredictFn& fn, int data_dim, const SamplerConfig& config,
                          std::int64_t n_samples, const PSchedule& schedule,
                          const StepObserver& observer) {
    return reverse_chain(fn, data_dim, config, n_samples, schedule, nullptr, nullptr, 0,
                         observer);
}

CountMatrix generate(const Predictor& model, const SamplerConfig& config,
                     std::int64_t n_samples, const PSchedule& schedule,
                     const StepObserver& observer) {
    check_guidance(model, config);
    return generate_with(model_fn(model), model.data_dim, config, n_samples, schedule,
                         observer);
}

std::int64_t MissingnessMask::observed_count() const {
    std::int64_t n = 0;
    for (std::uint8_t v : observed) n += v;
    return n;
}

MissingnessMask make_mask(const CountMatrix& x_true, const MaskMechanism& mechanism,
                          RngHandle& rng) {
    if (!(mechanism.rate > 0.0 && mechanism.rate < 1.0))
        throw std::invalid_argument("make_mask: rate must lie in (0, 1)");
    if (x_true.rows < 1 || x_true.cols < 1)
        throw std::invalid_argument("make_mask: matrix must be nonempty");
    require_nonnegative(x_true, "make_mask input");

    MissingnessMask mask(x_true.rows, x_true.cols);
    mask.mechanism = mechanism;

    if (mechanism.kind == MaskMechanism::Kind::Mcar) {
        for (std::size_t i = 0; i < mask.observed.size(); ++i)
            mask.observed[i] = rng.bernoulli(mechanism.rate) ? 0 : 1;
        return mask;
    }

    if (!(mechanism.bias_strength > 0.0))
        throw std::invalid_argument("make_mask: bias_strength must be positive");

    // Drop probability c * exp(-x / bias); bisect c so the mean hits rate.
    const auto mean_drop = [&](double c) {
        double acc = 0.0;
        for (std::int64_t v : x_true.data)
            acc += std::min(1.0, c * std::exp(-static_cast<double>(v) / mechanism.bias_strength));
        return acc / static_cast<double>(x_true.data.size());
    };
    double hi = 1.0;
    while (mean_drop(hi) < mechanism.rate && hi < 1e300) hi *= 2.0;
    double lo = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mean_drop(mid) < mechanism.rate)
            lo = mid;
        else
            hi = mid;
    }
    const double c = 0.5 * (lo + hi);

    for (std::int64_t i = 0; i < x_true.rows; ++i) {
        for (std::int64_t j = 0; j < x_true.cols; ++j) {
            const double drop = std::min(
                1.0, c * std::exp(-static_cast<double>(x_true.at(i, j)) / mechanism.bias_strength));
            mask.set_observed(i, j, rng.bernoulli(drop) == 0);
        }
    }
    return mask;
}

std::vector<CountMatrix> repaint_impute_with(const PredictFn& fn, const CountMatrix& x_obs,
                                             const MissingnessMask& mask,
                                             const SamplerConfig& config,
                                             const PSchedule& schedule, int n_imputations) {
    if (mask.rows != x_obs.rows || mask.cols != x_obs.cols)
        throw std::invalid_argument("repaint: mask shape must match the observed matrix");
    require_nonnegative(x_obs, "repaint input");
    if (n_imputations < 1) throw ConfigError("repaint: n_imputations must be >= 1");

    std::vector<CountMatrix> out;
    out.reserve(static_cast<std::size_t>(n_imputations));
    for (int m = 0; m < n_imputations; ++m) {
        const auto base = static_cast<std::uint64_t>(m) << 32;
        out.push_back(reverse_chain(fn, static_cast<int>(x_obs.cols), config, x_obs.rows,
                                    schedule, &x_obs, &mask, base, nullptr));
    }
    return out;
}

std::vector<CountMatrix> repaint_impute(const Predictor& model, const CountMatrix& x_obs,
                                        const MissingnessMask& mask,
                                        const SamplerConfig& config, int n_imputations) {
    check_guidance(model, config);
    return repaint_impute_with(model_fn(model), x_obs, mask, config, model.schedule,
                               n_imputations);
}

CountMatrix ensemble_mean_round(const std::vector<CountMatrix>& imputations, RngHandle& rng) {
    if (imputations.empty())
        throw std::invalid_argument("ensemble: need at least one imputation");
    const CountMatrix& first = imputations.front();
    RealMatrix mean(first.rows, first.cols);
    for (const CountMatrix& m : imputations) {
        if (!m.same_shape(first))
            throw std::invalid_argument("ensemble: imputations must share one shape");
        for (std::size_t i = 0; i < m.data.size(); ++i)
            mean.data[i] += static_cast<double>(m.data[i]);
    }
    const double n = static_cast<double>(imputations.size());
    for (double& v : mean.data) v /= n;
    return random_round(mean, rng);
}

}  // namespace thindiff
