#include "thindiff/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "thindiff/errors.hpp"
#include "thindiff/metrics.hpp"
#include "thindiff/predictor.hpp"
#include "thindiff/synth.hpp"

namespace thindiff {

namespace {

std::string shape_str(std::int64_t rows, std::int64_t cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("failed while writing file: " + path);
}

RunConfig finalized(const RunConfig& raw) {
    RunConfig c = raw;
    finalize_config(c);
    return c;
}

// Creates output_dir and records the fully resolved config beside the outputs.
void prepare_output_dir(const RunConfig& c) {
    std::error_code ec;
    std::filesystem::create_directories(c.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + c.output_dir + ": " + ec.message());
    write_text(c.output_dir + "/resolved_config.json", resolved_config_text(c));
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

std::string count_header(std::int64_t cols) {
    std::string header;
    for (std::int64_t j = 0; j < cols; ++j) {
        if (j > 0) header += ",";
        header += "d" + std::to_string(j);
    }
    header += "\n";
    return header;
}

const std::vector<int>* labels_ptr(const LoadedCounts& loaded) {
    return loaded.labels.has_value() ? &*loaded.labels : nullptr;
}

}  // namespace

void cmd_synth(const RunConfig& raw) {
    const RunConfig c = finalized(raw);
    const SynthDataset dataset = sample_dataset(c.data, c.data_n);
    prepare_output_dir(c);
    save_counts(dataset.counts, c.output_dir + "/dataset.csv");
    nlohmann::json pj;
    pj["format"] = "thindiff-params-v1";
    pj["dim"] = c.data.dim;
    pj["n"] = c.data_n;
    pj["seed"] = c.data.seed;
    pj["mu"] = dataset.params.mu;
    pj["theta"] = dataset.params.theta;
    pj["size_factor_location"] = dataset.params.size_factor_location;
    pj["size_factor_scale"] = dataset.params.size_factor_scale;
    write_text(c.output_dir + "/params.json", pj.dump(2) + "\n");
}

void cmd_train(const RunConfig& raw) {
    const RunConfig c = finalized(raw);
    const LoadedCounts loaded = load_counts(c.data_path);
    const TrainResult result = train(loaded.counts, labels_ptr(loaded), c.train);
    prepare_output_dir(c);
    save_checkpoint(result.model, c.train, c.output_dir + "/checkpoint.json");
    std::string trace = "step,loss\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
        trace += std::to_string(i) + "," + fmt_double(result.loss_trace[i]) + "\n";
    write_text(c.output_dir + "/loss_trace.csv", trace);
}

void cmd_sample(const RunConfig& raw) {
    const RunConfig c = finalized(raw);
    if (c.sample_n < 0) throw ConfigError("sample.n must be >= 0");
    const Checkpoint ckpt = load_checkpoint(c.sample_checkpoint);
    if (c.sample.gamma != 1.0 && ckpt.model.n_classes == 0)
        throw ConfigError("guidance gamma is set but checkpoint " + c.sample_checkpoint +
                          " is unconditional");
    if (c.sample_n == 0) {
        prepare_output_dir(c);
        write_text(c.output_dir + "/samples.csv", count_header(ckpt.model.data_dim));
        return;
    }
    const CountMatrix samples = generate(ckpt.model, c.sample, c.sample_n, ckpt.model.schedule);
    prepare_output_dir(c);
    save_counts(samples, c.output_dir + "/samples.csv");
}

void cmd_impute(const RunConfig& raw) {
    const RunConfig c = finalized(raw);
    const Checkpoint ckpt = load_checkpoint(c.impute_checkpoint);
    const LoadedCounts loaded = load_counts(c.impute_data);
    MissingnessMask mask;
    if (!c.impute_mask.empty()) {
        mask = load_mask(c.impute_mask);
        if (mask.rows != loaded.counts.rows || mask.cols != loaded.counts.cols)
            throw ConfigError("mask shape " + shape_str(mask.rows, mask.cols) +
                              " does not match dataset shape " +
                              shape_str(loaded.counts.rows, loaded.counts.cols));
    } else {
        RngHandle mask_rng(c.seed + 5);
        mask = make_mask(loaded.counts, c.impute_mechanism, mask_rng);
    }
    SamplerConfig sc = c.sample;
    sc.seed = c.seed + 3;
    const std::vector<CountMatrix> imputations =
        repaint_impute(ckpt.model, loaded.counts, mask, sc, c.n_imputations);
    RngHandle ensemble_rng(c.seed + 6);
    const CountMatrix ensemble = ensemble_mean_round(imputations, ensemble_rng);
    prepare_output_dir(c);
    save_mask(mask, c.output_dir + "/mask.csv");
    for (std::size_t m = 0; m < imputations.size(); ++m)
        save_counts(imputations[m], c.output_dir + "/imputed_" + std::to_string(m + 1) + ".csv");
    save_counts(ensemble, c.output_dir + "/imputed_ensemble.csv");
}

void cmd_eval(const RunConfig& raw) {
    const RunConfig c = finalized(raw);
    const LoadedCounts generated = load_counts(c.eval_generated);
    const LoadedCounts reference = load_counts(c.eval_reference);
    if (generated.counts.cols != reference.counts.cols)
        throw ConfigError("shape mismatch: generated is " +
                          shape_str(generated.counts.rows, generated.counts.cols) +
                          ", reference is " +
                          shape_str(reference.counts.rows, reference.counts.cols));
    MetricReport report = make_report(reference.counts, generated.counts, c.eval_gamma,
                                      c.eval_projections, c.seed + 4);
    if (!c.eval_mask.empty()) {
        const MissingnessMask mask = load_mask(c.eval_mask);
        if (generated.counts.rows != reference.counts.rows)
            throw ConfigError("sample-level metrics need equal shapes: generated is " +
                              shape_str(generated.counts.rows, generated.counts.cols) +
                              ", reference is " +
                              shape_str(reference.counts.rows, reference.counts.cols));
        if (mask.rows != generated.counts.rows || mask.cols != generated.counts.cols)
            throw ConfigError("mask shape " + shape_str(mask.rows, mask.cols) +
                              " does not match data shape " +
                              shape_str(generated.counts.rows, generated.counts.cols));
        RngHandle bootstrap_rng(c.seed + 7);
        report.sample_level =
            sample_metrics(generated.counts, reference.counts, mask, bootstrap_rng);
    }
    prepare_output_dir(c);
    write_text(c.output_dir + "/metrics.json", report_to_json(report));
    write_text(c.output_dir + "/metrics.csv", report_to_csv(report));
}

void save_mask(const MissingnessMask& mask, const std::string& path) {
    if (mask.rows < 1 || mask.cols < 1)
        throw std::invalid_argument("save_mask: mask must be nonempty");
    if (static_cast<std::int64_t>(mask.observed.size()) != mask.rows * mask.cols)
        throw std::invalid_argument("save_mask: observed size does not match rows*cols");
    const double total = static_cast<double>(mask.rows) * static_cast<double>(mask.cols);
    const double missing = 1.0 - static_cast<double>(mask.observed_count()) / total;
    std::string text = "# mechanism=" + mechanism_name(mask.mechanism) +
                       " missing_fraction=" + fmt_double(missing) + " coding=1-observed\n";
    text += count_header(mask.cols);
    for (std::int64_t i = 0; i < mask.rows; ++i) {
        for (std::int64_t j = 0; j < mask.cols; ++j) {
            if (j > 0) text += ",";
            text += mask.is_observed(i, j) ? "1" : "0";
        }
        text += "\n";
    }
    write_text(path, text);
}

MissingnessMask load_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read mask file: " + path);
    MissingnessMask mask;
    std::string line;
    bool saw_header = false;
    std::int64_t cols = 0;
    std::vector<std::uint8_t> observed;
    std::int64_t rows = 0;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("mechanism=");
            if (pos != std::string::npos) {
                const auto start = pos + std::string("mechanism=").size();
                const auto stop = line.find(' ', start);
                const std::string token = line.substr(
                    start, stop == std::string::npos ? std::string::npos : stop - start);
                try {
                    mask.mechanism = parse_mechanism(token);
                } catch (const ConfigError& e) {
                    throw IoError(path + ": bad mechanism metadata: " + e.what());
                }
            }
            continue;
        }
        const std::vector<std::string> cells = split_cells(line);
        if (!saw_header) {
            saw_header = true;
            cols = static_cast<std::int64_t>(cells.size());
            if (cols == 0) throw IoError(path + ": mask header has no columns");
            continue;
        }
        if (static_cast<std::int64_t>(cells.size()) != cols)
            throw IoError(path + ": row " + std::to_string(rows + 1) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(cols));
        for (std::int64_t j = 0; j < cols; ++j) {
            const std::string& cell = cells[static_cast<std::size_t>(j)];
            if (cell == "1")
                observed.push_back(1);
            else if (cell == "0")
                observed.push_back(0);
            else
                throw IoError(path + ": row " + std::to_string(rows + 1) + ", column " +
                              std::to_string(j + 1) + ": '" + cell + "' is not 0 or 1");
        }
        ++rows;
    }
    if (!saw_header) throw IoError(path + ": empty mask file");
    if (rows == 0) throw IoError(path + ": mask has no data rows");
    mask.rows = rows;
    mask.cols = cols;
    mask.observed = std::move(observed);
    return mask;
}

}  // namespace thindiff
