// ctvbench: dataset curation and cross-team evaluation workbench.
//
// Subcommands mirror the pipeline stages; `pipeline` chains them all.
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctv/pipeline.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string protocol = "both";
    std::optional<std::string> predictions_dir;
};

void add_common(CLI::App* sub, CliArgs& args, bool with_protocol) {
    sub->add_option("--config", args.config_path, "pipeline config JSON file")
        ->required();
    sub->add_option("--seed", args.seed,
                    "override the config seed for synthesis, splits, and training");
    sub->add_option("--threads", args.threads, "worker cap (1 reproduces any N)")
        ->check(CLI::PositiveNumber);
    if (with_protocol)
        sub->add_option("--protocol", args.protocol, "toto, loto, or both")
            ->check(CLI::IsMember({"toto", "loto", "both"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dataset curation and cross-team evaluation workbench"};
    app.require_subcommand(1);
    CliArgs args;

    CLI::App* synth = app.add_subcommand("synth", "render the synthetic corpus");
    CLI::App* catalog = app.add_subcommand("catalog", "scan the dataset into a catalog");
    CLI::App* dedup = app.add_subcommand("dedup", "drop perceptual-hash duplicates");
    CLI::App* normalize =
        app.add_subcommand("normalize", "resize and center-crop every image");
    CLI::App* split = app.add_subcommand("split", "generate split manifests");
    CLI::App* train = app.add_subcommand("train", "train the reference classifier");
    CLI::App* eval = app.add_subcommand("eval", "score predictions against manifests");
    CLI::App* report = app.add_subcommand("report", "emit tables, matrix, and curves");
    CLI::App* pipeline = app.add_subcommand("pipeline", "run every stage in order");

    add_common(synth, args, false);
    add_common(catalog, args, false);
    add_common(dedup, args, false);
    add_common(normalize, args, false);
    add_common(split, args, true);
    add_common(train, args, true);
    add_common(eval, args, true);
    add_common(report, args, true);
    add_common(pipeline, args, true);
    eval->add_option("--predictions", args.predictions_dir,
                     "directory of external prediction CSVs to score instead of"
                     " the train stage output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ctv::PipelineConfig cfg = ctv::load_pipeline_config(args.config_path);
        if (args.seed) ctv::override_seed(cfg, *args.seed);
        const std::vector<ctv::Protocol> protocols =
            ctv::protocols_from_flag(args.protocol);
        std::optional<std::filesystem::path> predictions;
        if (args.predictions_dir) predictions = *args.predictions_dir;

        if (app.got_subcommand(synth)) ctv::run_synth(cfg, args.threads);
        if (app.got_subcommand(catalog)) ctv::run_catalog(cfg, args.threads);
        if (app.got_subcommand(dedup)) ctv::run_dedup(cfg);
        if (app.got_subcommand(normalize)) ctv::run_normalize(cfg, args.threads);
        if (app.got_subcommand(split)) ctv::run_split(cfg, protocols);
        if (app.got_subcommand(train)) ctv::run_train(cfg, protocols, args.threads);
        if (app.got_subcommand(eval)) ctv::run_eval(cfg, protocols, predictions);
        if (app.got_subcommand(report)) ctv::run_report(cfg, protocols);
        if (app.got_subcommand(pipeline))
            ctv::run_pipeline(cfg, protocols, args.threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
