#pragma once

#include <cstdint>
#include <string>

#include "thindiff/predictor.hpp"
#include "thindiff/sampler.hpp"
#include "thindiff/schedule.hpp"
#include "thindiff/synth.hpp"

namespace thindiff {

// Fully resolved run configuration. Loaded from a two-level JSON document;
// every key has a default, unknown keys are rejected, and the expanded result
// is echoed to <output_dir>/resolved_config.json so any run can be replayed.
//
// One global seed drives every stage through fixed offsets, keeping the
// stages decoupled: synth +0, train +1, sample chains +2, impute chains +3,
// eval projections +4, mask draw +5, ensemble rounding +6, bootstrap +7.
struct RunConfig {
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = all hardware threads

    // data: synthesize with `data` unless data_path points at a counts CSV.
    NegBinSpec data;
    std::int64_t data_n = 4000;
    std::string data_path;

    // schedule/weight: copied into train.schedule and train.weight_spec.
    PSchedule schedule;
    WeightSpec weight;

    TrainConfig train;

    SamplerConfig sample;
    std::int64_t sample_n = 4000;
    std::string sample_checkpoint;  // default <output_dir>/checkpoint.json

    MaskMechanism impute_mechanism = MaskMechanism::mcar(0.5);
    int n_imputations = 5;
    std::string impute_checkpoint;  // default <output_dir>/checkpoint.json
    std::string impute_data;        // default <output_dir>/dataset.csv
    std::string impute_mask;        // when set, load this mask instead of drawing one

    double eval_gamma = 1.0;
    int eval_projections = 100;
    std::string eval_generated;  // default <output_dir>/samples.csv
    std::string eval_reference;  // default <output_dir>/dataset.csv
    std::string eval_mask;       // when set, sample-level metrics are added
};

// Parse a config document. Unknown keys, wrong types, and unparseable JSON
// throw ConfigError naming the offending key or position.
RunConfig parse_config_text(const std::string& text);

// Reads the file (IoError when unreadable) and parses it.
RunConfig load_config(const std::string& path);

// Derives the stage seeds from the global seed, copies the schedule and
// weight into the train config, and fills empty paths with their
// output_dir-relative defaults. Idempotent; commands apply it on entry.
void finalize_config(RunConfig& config);

// Byte-stable JSON echo of a finalized config: sorted keys, two-space
// indent, trailing newline. parse_config_text inverts it.
std::string resolved_config_text(const RunConfig& config);

// Compact forms used in config values and CLI flags.
//   attrition: "none" | "rescale:ETA"
//   mechanism: "mcar:RATE" | "mnar:RATE" | "mnar:RATE:BIAS"
AttritionRule parse_attrition(const std::string& text);
std::string attrition_name(const AttritionRule& rule);
MaskMechanism parse_mechanism(const std::string& text);
std::string mechanism_name(const MaskMechanism& mechanism);

}  // namespace thindiff
