#include "thindiff/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "thindiff/errors.hpp"

namespace thindiff {

namespace {

using nlohmann::json;

std::string dotted(const std::string& section, const char* key) {
    return section.empty() ? std::string(key) : section + "." + key;
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown config key: " + dotted(section, item.key().c_str()));
    }
}

const json& section_object(const json& obj, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_object()) throw ConfigError("config key " + std::string(key) + " must be an object");
    return v;
}

double get_double(const json& obj, const std::string& section, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("config key " + dotted(section, key) + " must be a number");
    return v.get<double>();
}

int get_int(const json& obj, const std::string& section, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer())
        throw ConfigError("config key " + dotted(section, key) + " must be an integer");
    return v.get<int>();
}

std::int64_t get_int64(const json& obj, const std::string& section, const char* key,
                       std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer())
        throw ConfigError("config key " + dotted(section, key) + " must be an integer");
    return v.get<std::int64_t>();
}

std::uint64_t get_uint64(const json& obj, const std::string& section, const char* key,
                         std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        const auto x = v.get<std::int64_t>();
        if (x < 0)
            throw ConfigError("config key " + dotted(section, key) + " must be nonnegative");
        return static_cast<std::uint64_t>(x);
    }
    throw ConfigError("config key " + dotted(section, key) + " must be an integer");
}

std::string get_string(const json& obj, const std::string& section, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string())
        throw ConfigError("config key " + dotted(section, key) + " must be a string");
    return v.get<std::string>();
}

std::vector<int> get_int_list(const json& obj, const std::string& section, const char* key,
                              const std::vector<int>& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array())
        throw ConfigError("config key " + dotted(section, key) + " must be an integer list");
    std::vector<int> out;
    for (const json& e : v) {
        if (!e.is_number_integer())
            throw ConfigError("config key " + dotted(section, key) + " must be an integer list");
        out.push_back(e.get<int>());
    }
    return out;
}

double parse_double_strict(const std::string& text, const std::string& what) {
    if (text.empty()) throw ConfigError(what + ": missing number");
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size())
        throw ConfigError(what + ": '" + text + "' is not a number");
    return v;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(j, "", {"output_dir", "seed", "threads", "data", "schedule", "weight", "train",
                       "sample", "impute", "eval"});

    RunConfig c;
    c.output_dir = get_string(j, "", "output_dir", c.output_dir);
    c.seed = get_uint64(j, "", "seed", c.seed);
    c.threads = get_int(j, "", "threads", c.threads);
    if (c.threads < 0) throw ConfigError("config key threads must be >= 0");

    if (j.contains("data")) {
        const json& d = section_object(j, "data");
        check_keys(d, "data",
                   {"dim", "mu_low", "mu_high", "theta_low", "theta_high",
                    "size_factor_location", "size_factor_scale", "n", "path"});
        c.data.dim = get_int(d, "data", "dim", c.data.dim);
        c.data.mu_low = get_double(d, "data", "mu_low", c.data.mu_low);
        c.data.mu_high = get_double(d, "data", "mu_high", c.data.mu_high);
        c.data.theta_low = get_double(d, "data", "theta_low", c.data.theta_low);
        c.data.theta_high = get_double(d, "data", "theta_high", c.data.theta_high);
        c.data.size_factor_location =
            get_double(d, "data", "size_factor_location", c.data.size_factor_location);
        c.data.size_factor_scale =
            get_double(d, "data", "size_factor_scale", c.data.size_factor_scale);
        c.data_n = get_int64(d, "data", "n", c.data_n);
        c.data_path = get_string(d, "data", "path", c.data_path);
    }

    if (j.contains("schedule")) {
        const json& s = section_object(j, "schedule");
        check_keys(s, "schedule", {"kind", "p_min", "num_steps"});
        PSchedule sched;
        try {
            sched = PSchedule::from_name(get_string(s, "schedule", "kind", c.schedule.name()));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config key schedule.kind: ") + e.what());
        }
        sched.p_min = get_double(s, "schedule", "p_min", sched.p_min);
        sched.num_steps = get_int(s, "schedule", "num_steps", sched.num_steps);
        c.schedule = sched;
    }

    if (j.contains("weight")) {
        const json& w = section_object(j, "weight");
        check_keys(w, "weight", {"kind"});
        try {
            c.weight = WeightSpec::from_name(get_string(w, "weight", "kind", c.weight.name()));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config key weight.kind: ") + e.what());
        }
    }

    if (j.contains("train")) {
        const json& t = section_object(j, "train");
        check_keys(t, "train",
                   {"hidden", "embed_dim", "batch_size", "learning_rate", "adam_beta1",
                    "adam_beta2", "adam_eps", "max_steps", "p_uncond"});
        c.train.hidden_dims = get_int_list(t, "train", "hidden", c.train.hidden_dims);
        c.train.embed_dim = get_int(t, "train", "embed_dim", c.train.embed_dim);
        c.train.batch_size = get_int(t, "train", "batch_size", c.train.batch_size);
        c.train.learning_rate = get_double(t, "train", "learning_rate", c.train.learning_rate);
        c.train.adam_beta1 = get_double(t, "train", "adam_beta1", c.train.adam_beta1);
        c.train.adam_beta2 = get_double(t, "train", "adam_beta2", c.train.adam_beta2);
        c.train.adam_eps = get_double(t, "train", "adam_eps", c.train.adam_eps);
        c.train.max_steps = get_int(t, "train", "max_steps", c.train.max_steps);
        c.train.p_uncond = get_double(t, "train", "p_uncond", c.train.p_uncond);
    }

    if (j.contains("sample")) {
        const json& s = section_object(j, "sample");
        check_keys(s, "sample", {"n", "num_steps", "gamma", "attrition", "class_id", "checkpoint"});
        c.sample_n = get_int64(s, "sample", "n", c.sample_n);
        c.sample.num_steps = get_int(s, "sample", "num_steps", c.sample.num_steps);
        c.sample.gamma = get_double(s, "sample", "gamma", c.sample.gamma);
        c.sample.attrition =
            parse_attrition(get_string(s, "sample", "attrition", attrition_name(c.sample.attrition)));
        const int class_id = get_int(s, "sample", "class_id", -1);
        if (class_id < -1)
            throw ConfigError("config key sample.class_id must be >= -1 (-1 = unconditional)");
        if (class_id >= 0) c.sample.class_id = class_id;
        c.sample_checkpoint = get_string(s, "sample", "checkpoint", c.sample_checkpoint);
    }

    if (j.contains("impute")) {
        const json& m = section_object(j, "impute");
        check_keys(m, "impute", {"mechanism", "n_imputations", "checkpoint", "data", "mask"});
        c.impute_mechanism =
            parse_mechanism(get_string(m, "impute", "mechanism", mechanism_name(c.impute_mechanism)));
        c.n_imputations = get_int(m, "impute", "n_imputations", c.n_imputations);
        c.impute_checkpoint = get_string(m, "impute", "checkpoint", c.impute_checkpoint);
        c.impute_data = get_string(m, "impute", "data", c.impute_data);
        c.impute_mask = get_string(m, "impute", "mask", c.impute_mask);
    }

    if (j.contains("eval")) {
        const json& e = section_object(j, "eval");
        check_keys(e, "eval",
                   {"gamma_kernel", "n_projections", "generated", "reference", "mask"});
        c.eval_gamma = get_double(e, "eval", "gamma_kernel", c.eval_gamma);
        c.eval_projections = get_int(e, "eval", "n_projections", c.eval_projections);
        c.eval_generated = get_string(e, "eval", "generated", c.eval_generated);
        c.eval_reference = get_string(e, "eval", "reference", c.eval_reference);
        c.eval_mask = get_string(e, "eval", "mask", c.eval_mask);
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void finalize_config(RunConfig& config) {
    config.data.seed = config.seed;
    config.train.schedule = config.schedule;
    config.train.weight_spec = config.weight;
    config.train.seed = config.seed + 1;
    config.sample.seed = config.seed + 2;
    const auto fill = [&config](std::string& path, const char* name) {
        if (path.empty()) path = config.output_dir + "/" + name;
    };
    fill(config.data_path, "dataset.csv");
    fill(config.sample_checkpoint, "checkpoint.json");
    fill(config.impute_checkpoint, "checkpoint.json");
    fill(config.impute_data, "dataset.csv");
    fill(config.eval_generated, "samples.csv");
    fill(config.eval_reference, "dataset.csv");
}

std::string resolved_config_text(const RunConfig& c) {
    json j;
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["data"] = {{"dim", c.data.dim},
                 {"mu_low", c.data.mu_low},
                 {"mu_high", c.data.mu_high},
                 {"theta_low", c.data.theta_low},
                 {"theta_high", c.data.theta_high},
                 {"size_factor_location", c.data.size_factor_location},
                 {"size_factor_scale", c.data.size_factor_scale},
                 {"n", c.data_n},
                 {"path", c.data_path}};
    j["schedule"] = {{"kind", c.schedule.name()},
                     {"p_min", c.schedule.p_min},
                     {"num_steps", c.schedule.num_steps}};
    j["weight"] = {{"kind", c.weight.name()}};
    j["train"] = {{"hidden", c.train.hidden_dims},
                  {"embed_dim", c.train.embed_dim},
                  {"batch_size", c.train.batch_size},
                  {"learning_rate", c.train.learning_rate},
                  {"adam_beta1", c.train.adam_beta1},
                  {"adam_beta2", c.train.adam_beta2},
                  {"adam_eps", c.train.adam_eps},
                  {"max_steps", c.train.max_steps},
                  {"p_uncond", c.train.p_uncond}};
    j["sample"] = {{"n", c.sample_n},
                   {"num_steps", c.sample.num_steps},
                   {"gamma", c.sample.gamma},
                   {"attrition", attrition_name(c.sample.attrition)},
                   {"class_id", c.sample.class_id.has_value() ? *c.sample.class_id : -1},
                   {"checkpoint", c.sample_checkpoint}};
    j["impute"] = {{"mechanism", mechanism_name(c.impute_mechanism)},
                   {"n_imputations", c.n_imputations},
                   {"checkpoint", c.impute_checkpoint},
                   {"data", c.impute_data},
                   {"mask", c.impute_mask}};
    j["eval"] = {{"gamma_kernel", c.eval_gamma},
                 {"n_projections", c.eval_projections},
                 {"generated", c.eval_generated},
                 {"reference", c.eval_reference},
                 {"mask", c.eval_mask}};
    return j.dump(2) + "\n";
}

AttritionRule parse_attrition(const std::string& text) {
    if (text == "none") return AttritionRule::none();
    const std::string prefix = "rescale:";
    if (text.rfind(prefix, 0) == 0)
        return AttritionRule::rescale(
            parse_double_strict(text.substr(prefix.size()), "attrition eta"));
    throw ConfigError("unknown attrition rule: '" + text + "' (expected none or rescale:ETA)");
}

std::string attrition_name(const AttritionRule& rule) {
    if (rule.kind == AttritionRule::Kind::None) return "none";
    return "rescale:" + fmt_double(rule.eta);
}

MaskMechanism parse_mechanism(const std::string& text) {
    const auto first = text.find(':');
    const std::string kind = text.substr(0, first);
    if (kind != "mcar" && kind != "mnar")
        throw ConfigError("unknown mask mechanism: '" + text + "' (expected mcar:RATE or mnar:RATE[:BIAS])");
    if (first == std::string::npos)
        throw ConfigError("mask mechanism '" + text + "' is missing its rate");
    const std::string rest = text.substr(first + 1);
    const auto second = rest.find(':');
    const std::string rate_text = rest.substr(0, second);
    const double rate = parse_double_strict(rate_text, "mask rate");
    if (kind == "mcar") {
        if (second != std::string::npos)
            throw ConfigError("mcar mechanism takes a single rate: '" + text + "'");
        return MaskMechanism::mcar(rate);
    }
    double bias = 1.0;
    if (second != std::string::npos)
        bias = parse_double_strict(rest.substr(second + 1), "mask bias");
    return MaskMechanism::mnar_low_biased(rate, bias);
}

std::string mechanism_name(const MaskMechanism& mechanism) {
    if (mechanism.kind == MaskMechanism::Kind::Mcar)
        return "mcar:" + fmt_double(mechanism.rate);
    return "mnar:" + fmt_double(mechanism.rate) + ":" + fmt_double(mechanism.bias_strength);
}

}  // namespace thindiff
