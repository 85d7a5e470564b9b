#pragma once

#include "affect/checkpoint.hpp"
#include "affect/metrics.hpp"
#include "affect/preprocess.hpp"
#include "affect/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace affect {

/// Full run configuration. Defaults are the desk-scale setup; `paper_scale()`
/// switches the trainer and dataset sizes to the published ones.
struct RunConfig {
    std::filesystem::path out = "run";
    std::string dataset_root;  // empty: <out>/dataset
    std::string cache_root;    // empty: <out>/cache
    uint64_t seed = 1;
    int threads = 0;  // 0 = hardware default (stage parallelism only)

    struct Synth {
        int n_clips = 200;
        int frames_min = 24;
        int frames_max = 48;
        int image_size = 128;
        bool signal_mode = false;
        double signal_fraction = 0.4;
    } synth;

    struct Split {
        double test_fraction = 0.25;
    } split;

    struct Preprocess {
        double face_margin = 0.2;
        double clip_limit = 2.0;
        int tile_rows = 8;
        int tile_cols = 8;
    } preprocess;

    struct Selector {
        std::vector<int> channels{16, 32, 64, 128};
        int r_heads = 4;
        int attn_hidden = 64;
        int epochs = 8;
        double lr = 1e-3;
    } selector;

    struct Flow {
        double alpha = 1.0;
        int max_iters = 200;
        double eps = 1e-4;
        double max_mag = 5.0;
    } flow;

    struct Model {
        std::vector<int> channels{16, 32, 64, 128, 256};
        double dropout = 0.3;
        int f_bank = 3;
        int n_gauss = 4;
        std::vector<int> fc{256, 128};
    } model;

    struct Optim {
        double lr = 5e-5;
        int batch_size = 32;
        int epochs = 40;
        double scheduler_factor = 0.5;
        int scheduler_patience = 10;
        double val_fraction = 0.1;
    } optim;

    void paper_scale() {
        synth.n_clips = 600;
        split.test_fraction = 1.0 / 6.0;
        optim.epochs = 200;
    }

    std::filesystem::path dataset_dir() const {
        return dataset_root.empty() ? out / "dataset" : std::filesystem::path(dataset_root);
    }
    std::filesystem::path cache_dir() const {
        return cache_root.empty() ? out / "cache" : std::filesystem::path(cache_root);
    }
    std::filesystem::path split_file() const { return out / "split.json"; }
    std::filesystem::path selector_ckpt() const { return out / "selector.bin"; }
    std::filesystem::path keyframes_dir() const { return out / "keyframes"; }
    std::filesystem::path model_ckpt() const { return out / "checkpoint.bin"; }
    std::filesystem::path model_ckpt_best() const { return out / "checkpoint_best.bin"; }
    std::filesystem::path report_dir() const { return out / "report"; }
    std::filesystem::path metrics_file() const { return report_dir() / "metrics.json"; }

    int effective_threads() const { return threads > 0 ? threads : default_threads(); }
    void validate() const;
};

/// Parses a config JSON file over the defaults; unknown keys are rejected.
RunConfig load_run_config(const std::filesystem::path& file);

/// Applies a dotted-path override such as "optim.lr=1e-4" or
/// "model.channels=[8,16,32,64,128]".
void apply_override(RunConfig& cfg, const std::string& key_value);

void save_run_config(const RunConfig& cfg, const std::filesystem::path& file);

/// Per-stage wall-clock accounting plus an artifact inventory, persisted as
/// <out>/manifest.json after every stage.
struct RunManifest {
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<std::string> artifacts;
};

void stage_synth(const RunConfig& cfg, bool force = false);
void stage_preprocess(const RunConfig& cfg, bool force = false);
void stage_keyframes(const RunConfig& cfg, bool force = false);
void stage_flow(const RunConfig& cfg, bool force = false);
void stage_train(const RunConfig& cfg, bool force = false);
MetricReport stage_eval(const RunConfig& cfg);
void run_all_stages(const RunConfig& cfg, bool force = false);

/// Key-frame manifest for one clip.
struct KeyframeManifest {
    std::string clip_id;
    std::vector<int> selected;      // 10 chronological indices
    std::vector<double> marginal;   // length F
};
void save_keyframes(const KeyframeManifest& m, const std::filesystem::path& path);
KeyframeManifest load_keyframes(const std::filesystem::path& path);

}  // namespace affect
