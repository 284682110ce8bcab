#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thindiff/commands.hpp"
#include "thindiff/config.hpp"
#include "thindiff/errors.hpp"
#include "thindiff/schedule.hpp"
#include "thindiff/threading.hpp"

namespace {

// Flag storage shared across subcommands; only the parsed subcommand's
// options are consumed, gated on Option::count().
struct Flags {
    std::string config_path;
    std::string output_dir;
    std::uint64_t seed = 1;
    int threads = 0;

    std::int64_t n = 0;
    std::string data;
    std::string schedule;
    std::string weight;
    int max_steps = 0;
    std::string checkpoint;
    int num_steps = 0;
    double gamma = 1.0;
    int class_id = -1;
    std::string attrition;
    std::string mask;
    std::string mechanism;
    int n_imputations = 0;
    std::string generated;
    std::string reference;
    double gamma_kernel = 1.0;
    int n_projections = 0;
};

void apply(const CLI::Option* opt, const std::function<void()>& fn) {
    if (opt != nullptr && opt->count() > 0) fn();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace thindiff;

    CLI::App app{"Count diffusion toolkit: thinning forward process, learned birth-death reverse process"};
    app.require_subcommand(1);
    // Global flags may appear after the subcommand name.
    app.fallthrough();
    Flags f;

    auto* o_config = app.add_option("-c,--config", f.config_path, "JSON run config file");
    auto* o_output = app.add_option("-o,--output_dir", f.output_dir, "Directory for outputs");
    auto* o_seed = app.add_option("--seed", f.seed, "Global seed; stage seeds derive from it");
    auto* o_threads = app.add_option("--threads", f.threads, "Worker threads (0 = hardware)");

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic count dataset");
    synth->fallthrough();
    auto* sy_n = synth->add_option("--n", f.n, "Rows to generate");

    CLI::App* train = app.add_subcommand("train", "Train a remaining-count predictor");
    train->fallthrough();
    auto* tr_data = train->add_option("--data", f.data, "Counts CSV (default output_dir/dataset.csv)");
    auto* tr_steps = train->add_option("--max_steps", f.max_steps, "Optimizer steps");
    auto* tr_sched = train->add_option("--schedule", f.schedule, "Survival schedule kind");
    auto* tr_weight = train->add_option("--weight", f.weight, "Loss weight kind");

    CLI::App* sample = app.add_subcommand("sample", "Run the reverse chain from a checkpoint");
    sample->fallthrough();
    auto* sa_ckpt = sample->add_option("--checkpoint", f.checkpoint, "Checkpoint JSON path");
    auto* sa_n = sample->add_option("--n", f.n, "Samples to draw");
    auto* sa_steps = sample->add_option("--num_steps", f.num_steps, "Reverse steps");
    auto* sa_gamma = sample->add_option("--gamma", f.gamma, "Guidance strength");
    auto* sa_class = sample->add_option("--class_id", f.class_id, "Class to condition on (-1 = none)");
    auto* sa_attr = sample->add_option("--attrition", f.attrition, "none or rescale:ETA");

    CLI::App* impute = app.add_subcommand("impute", "Impute missing entries by repainting");
    impute->fallthrough();
    auto* im_ckpt = impute->add_option("--checkpoint", f.checkpoint, "Checkpoint JSON path");
    auto* im_data = impute->add_option("--data", f.data, "Counts CSV with ground truth");
    auto* im_mask = impute->add_option("--mask", f.mask, "Mask CSV (otherwise drawn from mechanism)");
    auto* im_mech = impute->add_option("--mechanism", f.mechanism, "mcar:RATE or mnar:RATE[:BIAS]");
    auto* im_k = impute->add_option("--n_imputations", f.n_imputations, "Imputations per dataset");
    auto* im_steps = impute->add_option("--num_steps", f.num_steps, "Reverse steps");
    auto* im_attr = impute->add_option("--attrition", f.attrition, "none or rescale:ETA");

    CLI::App* eval = app.add_subcommand("eval", "Compare generated counts against a reference");
    eval->fallthrough();
    auto* ev_gen = eval->add_option("--generated", f.generated, "Generated counts CSV");
    auto* ev_ref = eval->add_option("--reference", f.reference, "Reference counts CSV");
    auto* ev_mask = eval->add_option("--mask", f.mask, "Mask CSV for sample-level metrics");
    auto* ev_gamma = eval->add_option("--gamma_kernel", f.gamma_kernel, "RBF kernel bandwidth");
    auto* ev_proj = eval->add_option("--n_projections", f.n_projections, "Sliced distance projections");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig config;
        if (o_config->count() > 0) config = load_config(f.config_path);
        apply(o_output, [&] { config.output_dir = f.output_dir; });
        apply(o_seed, [&] { config.seed = f.seed; });
        apply(o_threads, [&] {
            if (f.threads < 0) throw ConfigError("--threads must be >= 0");
            config.threads = f.threads;
        });

        apply(sy_n, [&] { config.data_n = f.n; });
        apply(tr_data, [&] { config.data_path = f.data; });
        apply(tr_steps, [&] { config.train.max_steps = f.max_steps; });
        apply(tr_sched, [&] { config.schedule = PSchedule::from_name(f.schedule); });
        apply(tr_weight, [&] { config.weight = WeightSpec::from_name(f.weight); });
        apply(sa_ckpt, [&] { config.sample_checkpoint = f.checkpoint; });
        apply(sa_n, [&] { config.sample_n = f.n; });
        apply(sa_steps, [&] { config.sample.num_steps = f.num_steps; });
        apply(sa_gamma, [&] { config.sample.gamma = f.gamma; });
        apply(sa_class, [&] {
            if (f.class_id < -1) throw ConfigError("--class_id must be >= -1 (-1 = unconditional)");
            if (f.class_id >= 0)
                config.sample.class_id = f.class_id;
            else
                config.sample.class_id.reset();
        });
        apply(sa_attr, [&] { config.sample.attrition = parse_attrition(f.attrition); });
        apply(im_ckpt, [&] { config.impute_checkpoint = f.checkpoint; });
        apply(im_data, [&] { config.impute_data = f.data; });
        apply(im_mask, [&] { config.impute_mask = f.mask; });
        apply(im_mech, [&] { config.impute_mechanism = parse_mechanism(f.mechanism); });
        apply(im_k, [&] { config.n_imputations = f.n_imputations; });
        apply(im_steps, [&] { config.sample.num_steps = f.num_steps; });
        apply(im_attr, [&] { config.sample.attrition = parse_attrition(f.attrition); });
        apply(ev_gen, [&] { config.eval_generated = f.generated; });
        apply(ev_ref, [&] { config.eval_reference = f.reference; });
        apply(ev_mask, [&] { config.eval_mask = f.mask; });
        apply(ev_gamma, [&] { config.eval_gamma = f.gamma_kernel; });
        apply(ev_proj, [&] { config.eval_projections = f.n_projections; });

        if (config.threads > 0) set_max_threads(config.threads);

        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "synth")
            cmd_synth(config);
        else if (name == "train")
            cmd_train(config);
        else if (name == "sample")
            cmd_sample(config);
        else if (name == "impute")
            cmd_impute(config);
        else
            cmd_eval(config);
        std::printf("%s: outputs in %s\n", name.c_str(), config.output_dir.c_str());
        return 0;
    } catch (const NumericalAbort& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 4;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
