#include "affect/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Three-stream continuous affect regression pipeline"};
    app.require_subcommand(1);

    std::string config_file;
    std::vector<std::string> overrides;
    std::string out_dir;
    int64_t seed = -1;
    int threads = -1;
    bool force = false;
    bool paper_scale = false;

    app.add_option("--config", config_file, "run configuration JSON file");
    app.add_option("--set", overrides, "override a config value, e.g. --set optim.lr=1e-4")
        ->take_all();
    app.add_option("--out", out_dir, "run directory (default: run)");
    app.add_option("--seed", seed, "override the run seed");
    app.add_option("--threads", threads, "worker threads for per-clip stages (0 = auto)");
    app.add_flag("--force", force, "redo work even if cached artifacts exist");
    app.add_flag("--paper-scale", paper_scale,
                 "use the published training scale (600 clips, 200 epochs)");

    auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
    auto* preprocess =
        app.add_subcommand("preprocess", "crop faces/eyes/mouths, equalize, write the split");
    auto* keyframes =
        app.add_subcommand("keyframes", "train the selector and pick 10 key frames per clip");
    auto* flow = app.add_subcommand("flow", "compute eye/mouth optical-flow encodings");
    auto* train = app.add_subcommand("train", "train the three-stream regressor");
    auto* eval = app.add_subcommand("eval", "evaluate on the test split and write reports");
    auto* report = app.add_subcommand("report", "print the metric table of a finished run");
    auto* all = app.add_subcommand("all", "run every stage in order");

    CLI11_PARSE(app, argc, argv);

    try {
        affect::RunConfig cfg;
        if (!config_file.empty()) cfg = affect::load_run_config(config_file);
        if (paper_scale) cfg.paper_scale();
        for (const auto& kv : overrides) affect::apply_override(cfg, kv);
        if (!out_dir.empty()) cfg.out = out_dir;
        if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
        if (threads >= 0) cfg.threads = threads;
        cfg.validate();

        if (synth->parsed()) affect::stage_synth(cfg, force);
        if (preprocess->parsed()) affect::stage_preprocess(cfg, force);
        if (keyframes->parsed()) affect::stage_keyframes(cfg, force);
        if (flow->parsed()) affect::stage_flow(cfg, force);
        if (train->parsed()) affect::stage_train(cfg, force);
        if (eval->parsed()) affect::stage_eval(cfg);
        if (report->parsed()) {
            auto rep = affect::load_report(cfg.metrics_file());
            std::cout << affect::format_report_table(rep);
        }
        if (all->parsed()) affect::run_all_stages(cfg, force);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
