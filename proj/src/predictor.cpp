#include "thindiff/predictor.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "thindiff/errors.hpp"
#include "thindiff/threading.hpp"

namespace thindiff {

namespace {

double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Output head. The floor only matters for adversarial inputs where softplus
// underflows; it keeps the strict-positivity contract airtight.
double head(double z) {
    return std::max(softplus(z), 1e-300);
}

double sigmoid(double z) {
    return z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

int embed_width(const Predictor& model) {
    return model.n_classes > 0 ? model.embed_dim : 0;
}

void check_batch(const Predictor& model, const CountMatrix& x_t,
                 const std::vector<int>* class_ids) {
    if (x_t.cols != model.data_dim)
        throw std::invalid_argument("predict: input has " + std::to_string(x_t.cols) +
                                    " columns, model expects " +
                                    std::to_string(model.data_dim));
    require_nonnegative(x_t, "predict input");
    if (class_ids != nullptr) {
        if (static_cast<std::int64_t>(class_ids->size()) != x_t.rows)
            throw std::invalid_argument("predict: class_ids size must match rows");
        for (int id : *class_ids)
            if (id < 0 || id > model.n_classes)
                throw std::invalid_argument("predict: class id " + std::to_string(id) +
                                            " outside [0, " +
                                            std::to_string(model.n_classes) + "]");
    }
}

// Input row layout: [x / scale, p(t), 1 - p(t), class embedding].
void build_input(const Predictor& model, const CountMatrix& x_t, std::int64_t row,
                 double p, int class_id, std::vector<double>& out) {
    const int d = model.data_dim;
    out.resize(static_cast<std::size_t>(model.input_width()));
    auto xr = x_t.row(row);
    for (int j = 0; j < d; ++j)
        out[static_cast<std::size_t>(j)] =
            static_cast<double>(xr[static_cast<std::size_t>(j)]) /
            model.input_scale[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(d)] = p;
    out[static_cast<std::size_t>(d) + 1] = 1.0 - p;
    const int e = embed_width(model);
    for (int j = 0; j < e; ++j)
        out[static_cast<std::size_t>(d + 2 + j)] = model.class_embed.at(class_id, j);
}

// Affine stack with tanh between layers; activations[l] is the output of
// layer l - 1 (activations[0] is the input row), z_last the final pre-softplus.
void forward_row(const Predictor& model, const std::vector<double>& input,
                 std::vector<std::vector<double>>& activations,
                 std::vector<double>& z_last) {
    const std::size_t n_layers = model.layers.size();
    activations.assign(n_layers, {});
    activations[0] = input;
    const std::vector<double>* cur = &input;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Layer& layer = model.layers[l];
        std::vector<double> z(static_cast<std::size_t>(layer.w.rows));
        for (std::int64_t r = 0; r < layer.w.rows; ++r) {
            double acc = layer.b[static_cast<std::size_t>(r)];
            const double* wr = layer.w.data.data() +
                               static_cast<std::size_t>(r * layer.w.cols);
            for (std::int64_t c = 0; c < layer.w.cols; ++c)
                acc += wr[c] * (*cur)[static_cast<std::size_t>(c)];
            z[static_cast<std::size_t>(r)] = acc;
        }
        if (l + 1 == n_layers) {
            z_last = std::move(z);
        } else {
            for (double& v : z) v = std::tanh(v);
            activations[l + 1] = std::move(z);
            cur = &activations[l + 1];
        }
    }
}

Gradients zero_gradients(const Predictor& model) {
    Gradients g;
    g.layers.reserve(model.layers.size());
    for (const Layer& layer : model.layers) {
        Layer zl;
        zl.w = RealMatrix(layer.w.rows, layer.w.cols);
        zl.b.assign(layer.b.size(), 0.0);
        g.layers.push_back(std::move(zl));
    }
    g.class_embed = RealMatrix(model.class_embed.rows, model.class_embed.cols);
    return g;
}

std::vector<double> flatten_gradients(const Predictor& model, const Gradients& g) {
    std::vector<double> out;
    out.reserve(model.param_count());
    for (const Layer& layer : g.layers) {
        out.insert(out.end(), layer.w.data.begin(), layer.w.data.end());
        out.insert(out.end(), layer.b.begin(), layer.b.end());
    }
    // Row 0 of the embedding is the frozen null class.
    for (std::int64_t r = 1; r < g.class_embed.rows; ++r) {
        auto row = g.class_embed.row(r);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

nlohmann::json schedule_to_json(const PSchedule& schedule) {
    return {{"kind", schedule.name()},
            {"num_steps", schedule.num_steps},
            {"p_min", schedule.p_min}};
}

PSchedule schedule_from_json(const nlohmann::json& j) {
    PSchedule s = PSchedule::from_name(j.at("kind").get<std::string>());
    s.num_steps = j.at("num_steps").get<int>();
    s.p_min = j.at("p_min").get<double>();
    return s;
}

}  // namespace

std::vector<int> Predictor::layer_dims() const {
    std::vector<int> dims;
    dims.push_back(input_width());
    for (const Layer& layer : layers) dims.push_back(static_cast<int>(layer.w.rows));
    return dims;
}

std::size_t Predictor::param_count() const {
    std::size_t n = 0;
    for (const Layer& layer : layers)
        n += static_cast<std::size_t>(layer.w.rows * layer.w.cols) + layer.b.size();
    if (n_classes > 0)
        n += static_cast<std::size_t>(n_classes) * static_cast<std::size_t>(embed_dim);
    return n;
}

Predictor make_predictor(int data_dim, const std::vector<int>& hidden_dims,
                         const PSchedule& schedule, int n_classes, int embed_dim,
                         RngHandle& rng) {
    if (data_dim < 1) throw std::invalid_argument("make_predictor: data_dim must be >= 1");
    if (n_classes < 0) throw std::invalid_argument("make_predictor: n_classes must be >= 0");
    if (n_classes > 0 && embed_dim < 1)
        throw std::invalid_argument("make_predictor: embed_dim must be >= 1 with classes");
    for (int h : hidden_dims)
        if (h < 1) throw std::invalid_argument("make_predictor: hidden dims must be >= 1");

    Predictor model;
    model.data_dim = data_dim;
    model.schedule = schedule;
    model.input_scale.assign(static_cast<std::size_t>(data_dim), 1.0);
    model.n_classes = n_classes;
    model.embed_dim = n_classes > 0 ? embed_dim : 0;
    model.class_embed = RealMatrix(n_classes + 1, model.embed_dim);

    std::vector<int> dims;
    dims.push_back(model.input_width());
    for (int h : hidden_dims) dims.push_back(h);
    dims.push_back(data_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.w = RealMatrix(dims[l + 1], dims[l]);
        layer.b.assign(static_cast<std::size_t>(dims[l + 1]), 0.0);
        const bool final_layer = (l + 2 == dims.size());
        if (!final_layer) {
            const double limit = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
            for (double& v : layer.w.data) v = (2.0 * rng.uniform() - 1.0) * limit;
        }
        model.layers.push_back(std::move(layer));
    }
    return model;
}

std::vector<double> get_params(const Predictor& model) {
    std::vector<double> out;
    out.reserve(model.param_count());
    for (const Layer& layer : model.layers) {
        out.insert(out.end(), layer.w.data.begin(), layer.w.data.end());
        out.insert(out.end(), layer.b.begin(), layer.b.end());
    }
    for (std::int64_t r = 1; r < model.class_embed.rows; ++r) {
        auto row = model.class_embed.row(r);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

void set_params(Predictor& model, const std::vector<double>& params) {
    if (params.size() != model.param_count())
        throw std::invalid_argument("set_params: size mismatch");
    std::size_t k = 0;
    for (Layer& layer : model.layers) {
        for (double& v : layer.w.data) v = params[k++];
        for (double& v : layer.b) v = params[k++];
    }
    for (std::int64_t r = 1; r < model.class_embed.rows; ++r)
        for (std::int64_t c = 0; c < model.class_embed.cols; ++c)
            model.class_embed.at(r, c) = params[k++];
}

RealMatrix predict_rows(const Predictor& model, const CountMatrix& x_t,
                        const std::vector<double>& ts,
                        const std::vector<int>* class_ids) {
    check_batch(model, x_t, class_ids);
    if (static_cast<std::int64_t>(ts.size()) != x_t.rows)
        throw std::invalid_argument("predict: times size must match rows");
    std::vector<double> ps(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) ps[i] = p_of(model.schedule, ts[i]);

    RealMatrix out(x_t.rows, x_t.cols);
    parallel_for(static_cast<std::size_t>(x_t.rows), [&](std::size_t begin, std::size_t end) {
        std::vector<double> input;
        std::vector<std::vector<double>> activations;
        std::vector<double> z_last;
        for (std::size_t i = begin; i < end; ++i) {
            const auto row = static_cast<std::int64_t>(i);
            const int id = class_ids ? (*class_ids)[i] : 0;
            build_input(model, x_t, row, ps[i], id, input);
            forward_row(model, input, activations, z_last);
            for (std::int64_t j = 0; j < out.cols; ++j)
                out.at(row, j) = head(z_last[static_cast<std::size_t>(j)]);
        }
    });
    return out;
}

RealMatrix predict(const Predictor& model, const CountMatrix& x_t, double t,
                   const std::vector<int>* class_ids) {
    return predict_rows(model, x_t, std::vector<double>(static_cast<std::size_t>(x_t.rows), t),
                        class_ids);
}

double loss(const RealMatrix& y_hat, const CountMatrix& y, double w) {
    if (y_hat.rows != y.rows || y_hat.cols != y.cols)
        throw std::invalid_argument("loss: shape mismatch");
    if (y_hat.rows == 0 || y_hat.cols == 0)
        throw std::invalid_argument("loss: empty batch");
    require_nonnegative(y, "loss target");
    double acc = 0.0;
    for (std::int64_t i = 0; i < y.rows; ++i) {
        for (std::int64_t j = 0; j < y.cols; ++j) {
            const double yh = y_hat.at(i, j);
            if (!(yh > 0.0))
                throw std::invalid_argument("loss: predictions must be positive");
            const auto yv = static_cast<double>(y.at(i, j));
            acc += yh - (yv > 0.0 ? yv * std::log(yh) : 0.0);
        }
    }
    return w * acc / (static_cast<double>(y.rows) * static_cast<double>(y.cols));
}

Gradients grad_rows(const Predictor& model, const CountMatrix& x_t,
                    const std::vector<double>& ts, const std::vector<double>& ws,
                    const std::vector<int>* class_ids, const CountMatrix& y,
                    double* loss_out) {
    check_batch(model, x_t, class_ids);
    if (!x_t.same_shape(y)) throw std::invalid_argument("grad: shape mismatch");
    if (static_cast<std::int64_t>(ts.size()) != x_t.rows ||
        static_cast<std::int64_t>(ws.size()) != x_t.rows)
        throw std::invalid_argument("grad: times/weights size must match rows");
    require_nonnegative(y, "grad target");

    const auto rows = static_cast<std::size_t>(x_t.rows);
    const double denom = static_cast<double>(x_t.rows) * static_cast<double>(x_t.cols);
    const std::size_t n_layers = model.layers.size();
    const int d = model.data_dim;
    const int e = embed_width(model);

    Gradients grads = zero_gradients(model);
    double total_loss = 0.0;
    std::vector<double> input;
    std::vector<std::vector<double>> activations;
    std::vector<double> z_last;
    std::vector<double> delta, delta_prev;

    for (std::size_t i = 0; i < rows; ++i) {
        const auto row = static_cast<std::int64_t>(i);
        const int id = class_ids ? (*class_ids)[i] : 0;
        const double p = p_of(model.schedule, ts[i]);
        build_input(model, x_t, row, p, id, input);
        forward_row(model, input, activations, z_last);

        const double scale = ws[i] / denom;
        delta.assign(z_last.size(), 0.0);
        for (std::size_t j = 0; j < z_last.size(); ++j) {
            const double yh = head(z_last[j]);
            const auto yv = static_cast<double>(y.at(row, static_cast<std::int64_t>(j)));
            total_loss += scale * (yh - (yv > 0.0 ? yv * std::log(yh) : 0.0));
            // d loss / d z = scale * (1 - y / softplus(z)) * sigmoid(z)
            delta[j] = scale * (1.0 - yv / yh) * sigmoid(z_last[j]);
        }

        for (std::size_t l = n_layers; l-- > 0;) {
            Layer& gl = grads.layers[l];
            const Layer& layer = model.layers[l];
            const std::vector<double>& a_in = activations[l];
            for (std::int64_t r = 0; r < layer.w.rows; ++r) {
                const double dr = delta[static_cast<std::size_t>(r)];
                gl.b[static_cast<std::size_t>(r)] += dr;
                double* gw = gl.w.data.data() + static_cast<std::size_t>(r * layer.w.cols);
                for (std::int64_t c = 0; c < layer.w.cols; ++c)
                    gw[c] += dr * a_in[static_cast<std::size_t>(c)];
            }
            if (l == 0) break;
            delta_prev.assign(a_in.size(), 0.0);
            for (std::int64_t r = 0; r < layer.w.rows; ++r) {
                const double dr = delta[static_cast<std::size_t>(r)];
                const double* wr = layer.w.data.data() +
                                   static_cast<std::size_t>(r * layer.w.cols);
                for (std::int64_t c = 0; c < layer.w.cols; ++c)
                    delta_prev[static_cast<std::size_t>(c)] += dr * wr[c];
            }
            // Through tanh: a = tanh(z), da/dz = 1 - a^2.
            for (std::size_t c = 0; c < a_in.size(); ++c)
                delta_prev[c] *= 1.0 - a_in[c] * a_in[c];
            delta = delta_prev;
        }

        // Embedding rows feed the input slice after [x, p, 1-p]; row 0 stays frozen.
        if (e > 0 && id > 0) {
            delta_prev.assign(input.size(), 0.0);
            const Layer& first = model.layers[0];
            for (std::int64_t r = 0; r < first.w.rows; ++r) {
                const double dr = delta[static_cast<std::size_t>(r)];
                const double* wr = first.w.data.data() +
                                   static_cast<std::size_t>(r * first.w.cols);
                for (std::int64_t c = 0; c < first.w.cols; ++c)
                    delta_prev[static_cast<std::size_t>(c)] += dr * wr[c];
            }
            for (int j = 0; j < e; ++j)
                grads.class_embed.at(id, j) += delta_prev[static_cast<std::size_t>(d + 2 + j)];
        }
    }
    if (loss_out != nullptr) *loss_out = total_loss;
    return grads;
}

Gradients grad(const Predictor& model, const CountMatrix& x_t, double t,
               const std::vector<int>* class_ids, const CountMatrix& y, double w) {
    const auto rows = static_cast<std::size_t>(x_t.rows);
    // The scalar weight scales the whole gradient, so apply it once at the
    // end; this keeps grad(w) exactly linear in w.
    Gradients g = grad_rows(model, x_t, std::vector<double>(rows, t),
                            std::vector<double>(rows, 1.0), class_ids, y);
    for (Layer& layer : g.layers) {
        for (double& v : layer.w.data) v *= w;
        for (double& v : layer.b) v *= w;
    }
    for (double& v : g.class_embed.data) v *= w;
    return g;
}

AdamState make_adam_state(const Predictor& model) {
    AdamState state;
    state.m.assign(model.param_count(), 0.0);
    state.v.assign(model.param_count(), 0.0);
    return state;
}

void adam_step(Predictor& model, const Gradients& grads, AdamState& state,
               const TrainConfig& config) {
    std::vector<double> params = get_params(model);
    std::vector<double> g = flatten_gradients(model, grads);
    if (g.size() != params.size() || state.m.size() != params.size())
        throw std::invalid_argument("adam_step: size mismatch");
    state.step += 1;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
    set_params(model, params);
}

TrainResult train(const CountMatrix& dataset, const std::vector<int>* labels,
                  const TrainConfig& config) {
    if (dataset.rows < 1 || dataset.cols < 1)
        throw std::invalid_argument("train: dataset must be nonempty");
    require_nonnegative(dataset, "train dataset");
    if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (config.max_steps < 0) throw std::invalid_argument("train: max_steps must be >= 0");
    if (!(config.learning_rate > 0.0))
        throw std::invalid_argument("train: learning_rate must be positive");
    if (!(config.p_uncond >= 0.0 && config.p_uncond <= 1.0))
        throw std::invalid_argument("train: p_uncond must lie in [0, 1]");

    int n_classes = 0;
    if (labels != nullptr) {
        if (static_cast<std::int64_t>(labels->size()) != dataset.rows)
            throw std::invalid_argument("train: labels size must match dataset rows");
        for (int id : *labels) {
            if (id < 0) throw std::invalid_argument("train: labels must be >= 0");
            n_classes = std::max(n_classes, id);
        }
    }

    RngHandle rng(config.seed);
    Predictor model = make_predictor(static_cast<int>(dataset.cols), config.hidden_dims,
                                     config.schedule, n_classes, config.embed_dim, rng);
    for (std::int64_t j = 0; j < dataset.cols; ++j) {
        double mx = 1.0;
        for (std::int64_t i = 0; i < dataset.rows; ++i)
            mx = std::max(mx, static_cast<double>(dataset.at(i, j)));
        model.input_scale[static_cast<std::size_t>(j)] = mx;
    }

    AdamState adam = make_adam_state(model);
    TrainResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(config.max_steps));

    const auto batch = static_cast<std::int64_t>(config.batch_size);
    CountMatrix x_batch(batch, dataset.cols);
    CountMatrix y_batch(batch, dataset.cols);
    std::vector<double> ts(static_cast<std::size_t>(batch));
    std::vector<double> ws(static_cast<std::size_t>(batch));
    std::vector<int> ids(static_cast<std::size_t>(batch), 0);
    std::int64_t labeled_seen = 0;
    std::int64_t labeled_dropped = 0;

    for (int step = 0; step < config.max_steps; ++step) {
        // Per element: pick a row, draw t, resolve the class id, then thin.
        for (std::int64_t i = 0; i < batch; ++i) {
            const auto src = static_cast<std::int64_t>(
                rng.uniform_index(static_cast<std::uint64_t>(dataset.rows)));
            const double t = rng.uniform();
            ts[static_cast<std::size_t>(i)] = t;
            ws[static_cast<std::size_t>(i)] = weight(config.weight_spec, config.schedule, t);
            int id = 0;
            if (labels != nullptr) {
                id = (*labels)[static_cast<std::size_t>(src)];
                if (id > 0) {
                    ++labeled_seen;
                    if (rng.uniform() < config.p_uncond) {
                        id = 0;
                        ++labeled_dropped;
                    }
                }
            }
            ids[static_cast<std::size_t>(i)] = id;
            const double p = p_of(config.schedule, t);
            for (std::int64_t j = 0; j < dataset.cols; ++j) {
                const std::int64_t x0 = dataset.at(src, j);
                const std::int64_t xt = rng.binomial(x0, p);
                x_batch.at(i, j) = xt;
                y_batch.at(i, j) = x0 - xt;
            }
        }

        double batch_loss = 0.0;
        Gradients grads = grad_rows(model, x_batch, ts, ws,
                                    labels != nullptr ? &ids : nullptr, y_batch,
                                    &batch_loss);
        if (!std::isfinite(batch_loss))
            throw NumericalAbort("training loss left the finite range", step);
        result.loss_trace.push_back(batch_loss);
        adam_step(model, grads, adam, config);
    }

    result.model = std::move(model);
    if (labeled_seen > 0)
        result.dropped_class_fraction =
            static_cast<double>(labeled_dropped) / static_cast<double>(labeled_seen);
    return result;
}

namespace {

nlohmann::json config_to_json(const TrainConfig& config) {
    return {{"adam_beta1", config.adam_beta1},
            {"adam_beta2", config.adam_beta2},
            {"adam_eps", config.adam_eps},
            {"batch_size", config.batch_size},
            {"embed_dim", config.embed_dim},
            {"hidden_dims", config.hidden_dims},
            {"learning_rate", config.learning_rate},
            {"max_steps", config.max_steps},
            {"p_uncond", config.p_uncond},
            {"schedule", schedule_to_json(config.schedule)},
            {"seed", config.seed},
            {"weight", config.weight_spec.name()}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_steps = j.at("max_steps").get<int>();
    c.p_uncond = j.at("p_uncond").get<double>();
    c.schedule = schedule_from_json(j.at("schedule"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.weight_spec = WeightSpec::from_name(j.at("weight").get<std::string>());
    return c;
}

}  // namespace

void save_checkpoint(const Predictor& model, const TrainConfig& config,
                     const std::string& path) {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& layer : model.layers) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::int64_t r = 0; r < layer.w.rows; ++r) {
            auto row = layer.w.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        layers.push_back({{"b", layer.b}, {"w", rows}});
    }
    nlohmann::json embed = nlohmann::json::array();
    for (std::int64_t r = 0; r < model.class_embed.rows; ++r) {
        auto row = model.class_embed.row(r);
        embed.push_back(std::vector<double>(row.begin(), row.end()));
    }
    nlohmann::json doc = {
        {"config", config_to_json(config)},
        {"format", "thindiff-checkpoint-v1"},
        {"model",
         {{"class_embed", embed},
          {"data_dim", model.data_dim},
          {"embed_dim", model.embed_dim},
          {"input_scale", model.input_scale},
          {"layers", layers},
          {"n_classes", model.n_classes},
          {"schedule", schedule_to_json(model.schedule)}}}};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& err) {
        throw IoError("checkpoint " + path + " is not valid JSON: " + err.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "thindiff-checkpoint-v1")
            throw IoError("checkpoint " + path + " has an unknown format tag");
        Checkpoint ckpt;
        ckpt.config = config_from_json(doc.at("config"));
        const nlohmann::json& m = doc.at("model");
        Predictor& model = ckpt.model;
        model.data_dim = m.at("data_dim").get<int>();
        model.embed_dim = m.at("embed_dim").get<int>();
        model.n_classes = m.at("n_classes").get<int>();
        model.schedule = schedule_from_json(m.at("schedule"));
        model.input_scale = m.at("input_scale").get<std::vector<double>>();
        if (static_cast<int>(model.input_scale.size()) != model.data_dim)
            throw IoError("checkpoint " + path + ": input_scale length mismatch");
        const auto embed = m.at("class_embed").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(embed.size()) != model.n_classes + 1)
            throw IoError("checkpoint " + path + ": class_embed row count mismatch");
        model.class_embed = RealMatrix(model.n_classes + 1, model.embed_dim);
        for (std::size_t r = 0; r < embed.size(); ++r) {
            if (static_cast<int>(embed[r].size()) != model.embed_dim)
                throw IoError("checkpoint " + path + ": class_embed width mismatch");
            for (std::size_t c = 0; c < embed[r].size(); ++c)
                model.class_embed.at(static_cast<std::int64_t>(r),
                                     static_cast<std::int64_t>(c)) = embed[r][c];
        }
        for (const nlohmann::json& lj : m.at("layers")) {
            const auto rows = lj.at("w").get<std::vector<std::vector<double>>>();
            if (rows.empty()) throw IoError("checkpoint " + path + ": empty layer");
            Layer layer;
            layer.w = RealMatrix(static_cast<std::int64_t>(rows.size()),
                                 static_cast<std::int64_t>(rows[0].size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != rows[0].size())
                    throw IoError("checkpoint " + path + ": ragged layer weights");
                for (std::size_t c = 0; c < rows[r].size(); ++c)
                    layer.w.at(static_cast<std::int64_t>(r),
                               static_cast<std::int64_t>(c)) = rows[r][c];
            }
            layer.b = lj.at("b").get<std::vector<double>>();
            if (layer.b.size() != rows.size())
                throw IoError("checkpoint " + path + ": bias length mismatch");
            model.layers.push_back(std::move(layer));
        }
        if (model.layers.empty()) throw IoError("checkpoint " + path + ": no layers");
        std::vector<int> dims = model.layer_dims();
        for (std::size_t l = 0; l < model.layers.size(); ++l)
            if (model.layers[l].w.cols != dims[l])
                throw IoError("checkpoint " + path + ": layer width chain broken");
        if (dims.back() != model.data_dim)
            throw IoError("checkpoint " + path + ": output width mismatch");
        return ckpt;
    } catch (const nlohmann::json::exception& err) {
        throw IoError("checkpoint " + path + " is malformed: " + err.what());
    }
}

}  // namespace thindiff
