#pragma once

#include <string>

#include "thindiff/config.hpp"
#include "thindiff/sampler.hpp"

namespace thindiff {

// Each command finalizes a copy of the config, creates the output directory,
// and writes resolved_config.json next to its outputs. Validation failures
// surface as ConfigError / std::invalid_argument, file problems as IoError,
// diverged numerics as NumericalAbort; the CLI maps these to exit codes.

// Writes dataset.csv and params.json.
void cmd_synth(const RunConfig& config);

// Reads data.path (default output_dir/dataset.csv), writes checkpoint.json
// and loss_trace.csv.
void cmd_train(const RunConfig& config);

// Reads sample.checkpoint, writes samples.csv. sample.n = 0 writes a
// header-only file.
void cmd_sample(const RunConfig& config);

// Reads impute.checkpoint and impute.data, uses impute.mask when given and
// otherwise draws one from impute.mechanism, then writes mask.csv,
// imputed_1.csv .. imputed_K.csv, and imputed_ensemble.csv.
void cmd_impute(const RunConfig& config);

// Reads eval.generated and eval.reference, attaches masked sample-level
// metrics when eval.mask is given, writes metrics.json and metrics.csv.
void cmd_eval(const RunConfig& config);

// Mask file format: a comment line "# mechanism=... missing_fraction=...
// coding=1-observed", a d0,...,dD-1 header, then 0/1 rows (1 = observed).
void save_mask(const MissingnessMask& mask, const std::string& path);
MissingnessMask load_mask(const std::string& path);

}  // namespace thindiff
