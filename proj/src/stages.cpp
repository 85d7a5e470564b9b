#include "affect/pipeline.hpp"

#include "affect/flow.hpp"
#include "affect/plot.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

namespace affect {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class StageTimer {
public:
    StageTimer(const RunConfig& cfg, std::string name)
        : cfg_(cfg), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {
        std::filesystem::create_directories(cfg.out);
        save_run_config(cfg, cfg.out / "config.json");
    }

    ~StageTimer() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        try {
            const fs::path path = cfg_.out / "manifest.json";
            json j = json::object();
            if (fs::exists(path)) {
                std::ifstream in(path);
                in >> j;
            }
            j["version"] = "affect-0.1";
            j["config"] = "config.json";
            j["stages"][name_] = {{"seconds", secs}};
            json arts = json::array();
            for (const char* a : {"config.json", "split.json", "selector.bin", "checkpoint.bin",
                                  "checkpoint_best.bin", "train_log.csv", "batch_log.csv",
                                  "epoch_log.csv", "selector_loss.csv", "keyframes",
                                  "report/metrics.json", "report/metrics.txt", "report/plots"})
                if (fs::exists(cfg_.out / a)) arts.push_back(a);
            if (fs::exists(cfg_.dataset_dir())) arts.push_back(cfg_.dataset_dir().string());
            if (fs::exists(cfg_.cache_dir())) arts.push_back(cfg_.cache_dir().string());
            j["artifacts"] = arts;
            std::ofstream out(path);
            out << j.dump(2) << "\n";
        } catch (...) {
            // manifest bookkeeping must not mask stage errors
        }
    }

private:
    const RunConfig& cfg_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

std::string frame_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.png", index);
    return buf;
}

json clip_preprocess_signature(const RunConfig& cfg, int n_frames) {
    return json{{"n_frames", n_frames},
                {"face_margin", cfg.preprocess.face_margin},
                {"clip_limit", cfg.preprocess.clip_limit},
                {"tile_rows", cfg.preprocess.tile_rows},
                {"tile_cols", cfg.preprocess.tile_cols},
                {"equalization", "post-crop"}};
}

SelectorConfig<float> selector_config(const RunConfig& cfg) {
    SelectorConfig<float> sc;
    std::copy_n(cfg.selector.channels.begin(), 4, sc.channels.begin());
    sc.r_heads = cfg.selector.r_heads;
    sc.attn_hidden = cfg.selector.attn_hidden;
    sc.seed = cfg.seed;
    return sc;
}

ModelConfig<float> model_config(const RunConfig& cfg) {
    ModelConfig<float> mc;
    std::copy_n(cfg.model.channels.begin(), 5, mc.channels.begin());
    mc.dropout = cfg.model.dropout;
    mc.f_bank = cfg.model.f_bank;
    mc.n_gauss = cfg.model.n_gauss;
    std::copy_n(cfg.model.fc.begin(), 2, mc.fc.begin());
    return mc;
}

/// Uint8-resident inputs for one clip; converted to float per batch.
struct ClipData {
    std::string clip_id;
    std::array<int, 10> selected{};
    std::vector<Image> rgb, eyes, mouth;  // 10 images each
    MatX<float> labels;                   // 10 x 2 normalized
};

ClipTensors<float> to_tensors(const ClipData& c) {
    ClipTensors<float> t;
    t.clip_id = c.clip_id;
    t.frame_indices = c.selected;
    t.labels = c.labels;
    auto stack = [](const std::vector<Image>& imgs) {
        MatX<float> m(static_cast<Eigen::Index>(imgs.size()) * 96 * 96, 3);
        for (size_t i = 0; i < imgs.size(); ++i)
            m.middleRows(static_cast<Eigen::Index>(i) * 96 * 96, 96 * 96) =
                image_to_matrix<float>(imgs[i]);
        return m;
    };
    t.rgb = stack(c.rgb);
    t.eye_flow = stack(c.eyes);
    t.mouth_flow = stack(c.mouth);
    return t;
}

ClipData load_clip_data(const RunConfig& cfg, const ClipRecord& clip) {
    const fs::path cache = cfg.cache_dir() / clip.clip_id;
    KeyframeManifest km = load_keyframes(cfg.keyframes_dir() / (clip.clip_id + ".json"));
    if (km.selected.size() != 10)
        throw AffectError("keyframe manifest for " + clip.clip_id + " must list 10 frames");
    ClipData d;
    d.clip_id = clip.clip_id;
    std::copy_n(km.selected.begin(), 10, d.selected.begin());
    d.labels.resize(10, 2);
    for (int i = 0; i < 10; ++i) {
        const int fr = km.selected[i];
        if (fr < 0 || fr >= clip.frame_count())
            throw AffectError("keyframe index out of range in " + clip.clip_id);
        d.rgb.push_back(load_png(cache / "face" / frame_name(fr)));
        d.eyes.push_back(load_png(cache / "eyes_flow" / frame_name(i)));
        d.mouth.push_back(load_png(cache / "mouth_flow" / frame_name(i)));
        d.labels(i, 0) = static_cast<float>(normalize_label(clip.annotations[fr].valence));
        d.labels(i, 1) = static_cast<float>(normalize_label(clip.annotations[fr].arousal));
    }
    return d;
}

SplitSpec require_split(const RunConfig& cfg) {
    if (!fs::exists(cfg.split_file()))
        throw AffectError("missing " + cfg.split_file().string() + "; run preprocess first");
    return load_split(cfg.split_file());
}

}  // namespace

void stage_synth(const RunConfig& cfg, bool force) {
    cfg.validate();
    fs::create_directories(cfg.out);
    StageTimer timer(cfg, "synth");
    const fs::path root = cfg.dataset_dir();
    const fs::path marker = root / ".synth.json";
    json sig = {{"n_clips", cfg.synth.n_clips},
                {"frames_min", cfg.synth.frames_min},
                {"frames_max", cfg.synth.frames_max},
                {"image_size", cfg.synth.image_size},
                {"signal_mode", cfg.synth.signal_mode},
                {"signal_fraction", cfg.synth.signal_fraction},
                {"seed", cfg.seed}};
    if (!force && fs::exists(marker)) {
        std::ifstream in(marker);
        json prev;
        in >> prev;
        if (prev == sig) {
            std::cout << "[synth] dataset up to date, skipping\n";
            return;
        }
    }
    if (fs::exists(root)) fs::remove_all(root);
    SynthConfig sc;
    sc.n_clips = cfg.synth.n_clips;
    sc.frames_min = cfg.synth.frames_min;
    sc.frames_max = cfg.synth.frames_max;
    sc.image_size = cfg.synth.image_size;
    sc.signal_mode = cfg.synth.signal_mode;
    sc.signal_fraction = cfg.synth.signal_fraction;
    sc.seed = cfg.seed;
    DatasetIndex index = generate_synthetic_dataset(sc, root);
    std::ofstream out(marker);
    out << sig.dump(2) << "\n";
    int frames = 0;
    for (const auto& c : index.clips) frames += c.frame_count();
    std::cout << "[synth] wrote " << index.clips.size() << " clips, " << frames << " frames to "
              << root << "\n";
}

void stage_preprocess(const RunConfig& cfg, bool force) {
    cfg.validate();
    fs::create_directories(cfg.out);
    StageTimer timer(cfg, "preprocess");
    DatasetIndex index = load_dataset(cfg.dataset_dir());
    fs::create_directories(cfg.cache_dir());

    const ClaheConfig clahe_cfg{cfg.preprocess.clip_limit, cfg.preprocess.tile_rows,
                                cfg.preprocess.tile_cols};
    std::vector<std::string> failures(index.clips.size());
    parallel_for(static_cast<int>(index.clips.size()), cfg.effective_threads(), [&](int ci) {
        const ClipRecord& clip = index.clips[ci];
        const fs::path dir = cfg.cache_dir() / clip.clip_id;
        const fs::path manifest_path = dir / "manifest.json";
        const json sig = clip_preprocess_signature(cfg, clip.frame_count());
        if (!force && fs::exists(manifest_path)) {
            std::ifstream in(manifest_path);
            json prev;
            try {
                in >> prev;
                if (prev.value("signature", json()) == sig) return;  // up to date
            } catch (...) {
            }
        }
        try {
            fs::create_directories(dir / "face");
            fs::create_directories(dir / "eyes");
            fs::create_directories(dir / "mouth");
            json boxes = json::array();
            for (int f = 0; f < clip.frame_count(); ++f) {
                Image frame = load_frame(clip, f);
                const auto& lm = clip.annotations[f].landmarks;
                RegionCrop face = crop_face(frame, lm, cfg.preprocess.face_margin);
                auto [eyes, mouth] = extract_regions(frame, lm);
                save_png(clahe(face.image, clahe_cfg), dir / "face" / frame_name(f));
                save_png(clahe(eyes.image, clahe_cfg), dir / "eyes" / frame_name(f));
                save_png(clahe(mouth.image, clahe_cfg), dir / "mouth" / frame_name(f));
                boxes.push_back({{"face", face.source_box},
                                 {"eyes", eyes.source_box},
                                 {"mouth", mouth.source_box}});
            }
            json m = {{"clip_id", clip.clip_id}, {"signature", sig}, {"boxes", boxes}};
            std::ofstream out(manifest_path);
            out << m.dump(2) << "\n";
        } catch (const std::exception& e) {
            failures[ci] = clip.clip_id + ": " + e.what();
        }
    });
    std::string all;
    for (const auto& f : failures)
        if (!f.empty()) all += "  " + f + "\n";
    if (!all.empty()) throw AffectError("preprocess failed for:\n" + all);

    if (force || !fs::exists(cfg.split_file())) {
        SplitSpec split = make_split(index, cfg.split.test_fraction, cfg.seed);
        save_split(split, cfg.split_file());
        std::cout << "[preprocess] split: " << split.train_ids.size() << " train / "
                  << split.test_ids.size() << " test, histogram distance "
                  << split.histogram_distance << "\n";
    }
}

void stage_keyframes(const RunConfig& cfg, bool force) {
    cfg.validate();
    StageTimer timer(cfg, "keyframes");
    DatasetIndex index = load_dataset(cfg.dataset_dir());
    SplitSpec split = require_split(cfg);
    fs::create_directories(cfg.keyframes_dir());

    bool complete = !force && fs::exists(cfg.selector_ckpt());
    if (complete)
        for (const auto& c : index.clips)
            if (!fs::exists(cfg.keyframes_dir() / (c.clip_id + ".json"))) {
                complete = false;
                break;
            }
    if (complete) {
        std::cout << "[keyframes] manifests up to date, skipping\n";
        return;
    }

    // Face crops and per-frame classes for the train split only.
    std::set<std::string> test_ids(split.test_ids.begin(), split.test_ids.end());
    struct RawClip {
        const ClipRecord* clip;
        std::vector<Image> faces;
        std::vector<int> classes;
    };
    std::vector<RawClip> train_clips;
    for (const auto& clip : index.clips) {
        if (test_ids.count(clip.clip_id)) continue;
        RawClip rc;
        rc.clip = &clip;
        for (int f = 0; f < clip.frame_count(); ++f) {
            rc.faces.push_back(load_png(cfg.cache_dir() / clip.clip_id / "face" / frame_name(f)));
            rc.classes.push_back(class_of(clip.annotations[f].valence, clip.annotations[f].arousal));
        }
        train_clips.push_back(std::move(rc));
    }
    if (train_clips.empty()) throw AffectError("keyframes: no training clips in split");

    Selector<float> sel(selector_config(cfg));
    auto clip_loader = [&](int i) {
        SelectorClip<float> sc;
        const RawClip& rc = train_clips[i];
        sc.clip_id = rc.clip->clip_id;
        sc.n_frames = rc.clip->frame_count();
        sc.classes = rc.classes;
        sc.frames.resize(static_cast<Eigen::Index>(sc.n_frames) * 96 * 96, 3);
        for (int f = 0; f < sc.n_frames; ++f)
            sc.frames.middleRows(static_cast<Eigen::Index>(f) * 96 * 96, 96 * 96) =
                image_to_matrix<float>(rc.faces[f]);
        return sc;
    };
    SelectorTrainOptions opt{cfg.selector.epochs, cfg.selector.lr, cfg.seed};
    auto trace = train_selector<float>(sel, static_cast<int>(train_clips.size()), clip_loader, opt);

    {
        std::ofstream csv(cfg.out / "selector_loss.csv");
        csv << "step,clip_id,loss\n";
        for (size_t i = 0; i < trace.losses.size(); ++i)
            csv << i << "," << trace.batch_clip_ids[i] << "," << trace.losses[i] << "\n";
    }
    for (const auto& id : trace.batch_clip_ids)
        if (test_ids.count(id))
            throw AffectError("selector training touched test clip " + id);
    save_selector_checkpoint(cfg.selector_ckpt(), sel);

    // Score every clip, write manifests and heatmaps for the selected frames.
    parallel_for(static_cast<int>(index.clips.size()), cfg.effective_threads(), [&](int ci) {
        const ClipRecord& clip = index.clips[ci];
        const fs::path facedir = cfg.cache_dir() / clip.clip_id / "face";
        MatX<float> frames(static_cast<Eigen::Index>(clip.frame_count()) * 96 * 96, 3);
        std::vector<Image> faces(clip.frame_count());
        for (int f = 0; f < clip.frame_count(); ++f) {
            faces[f] = load_png(facedir / frame_name(f));
            frames.middleRows(static_cast<Eigen::Index>(f) * 96 * 96, 96 * 96) =
                image_to_matrix<float>(faces[f]);
        }
        FrameImportance fi = sel.score_clip(frames, clip.frame_count());
        KeyframeManifest km;
        km.clip_id = clip.clip_id;
        km.selected = fi.selected;
        km.marginal.assign(fi.marginal.data(), fi.marginal.data() + fi.marginal.size());
        save_keyframes(km, cfg.keyframes_dir() / (clip.clip_id + ".json"));

        const fs::path heatdir = cfg.cache_dir() / clip.clip_id / "heatmaps";
        fs::create_directories(heatdir);
        std::set<int> uniq(fi.selected.begin(), fi.selected.end());
        for (int f : uniq) {
            auto weights = sel.frame_attention(
                MatX<float>(frames.middleRows(static_cast<Eigen::Index>(f) * 96 * 96, 96 * 96)));
            Image overlay =
                render_heatmap(faces[f], weights.weights.cast<double>(), {6, 6});
            save_png(overlay, heatdir / frame_name(f));
        }
    });
    std::cout << "[keyframes] wrote manifests for " << index.clips.size() << " clips\n";
}

void stage_flow(const RunConfig& cfg, bool force) {
    cfg.validate();
    StageTimer timer(cfg, "flow");
    DatasetIndex index = load_dataset(cfg.dataset_dir());
    FlowConfig fc{cfg.flow.alpha, cfg.flow.max_iters, cfg.flow.eps, cfg.flow.max_mag};

    std::vector<std::string> failures(index.clips.size());
    parallel_for(static_cast<int>(index.clips.size()), cfg.effective_threads(), [&](int ci) {
        const ClipRecord& clip = index.clips[ci];
        try {
            const fs::path cache = cfg.cache_dir() / clip.clip_id;
            const fs::path km_path = cfg.keyframes_dir() / (clip.clip_id + ".json");
            if (!fs::exists(km_path))
                throw AffectError("missing keyframe manifest; run keyframes first");
            KeyframeManifest km = load_keyframes(km_path);
            bool done = !force;
            for (const char* region : {"eyes_flow", "mouth_flow"})
                for (int i = 0; done && i < 10; ++i)
                    if (!fs::exists(cache / region / frame_name(i))) done = false;
            if (done) return;
            for (const char* region : {"eyes", "mouth"}) {
                std::vector<Image> crops;
                for (int idx : km.selected)
                    crops.push_back(load_png(cache / region / frame_name(idx)));
                auto encodings = flow_sequence<float>(crops, fc);
                const fs::path outdir = cache / (std::string(region) + "_flow");
                fs::create_directories(outdir);
                for (size_t i = 0; i < encodings.size(); ++i)
                    save_png(encodings[i], outdir / frame_name(static_cast<int>(i)));
            }
        } catch (const std::exception& e) {
            failures[ci] = clip.clip_id + ": " + e.what();
        }
    });
    std::string all;
    for (const auto& f : failures)
        if (!f.empty()) all += "  " + f + "\n";
    if (!all.empty()) throw AffectError("flow failed for:\n" + all);
    std::cout << "[flow] encodings ready for " << index.clips.size() << " clips\n";
}

void stage_train(const RunConfig& cfg, bool force) {
    cfg.validate();
    StageTimer timer(cfg, "train");
    DatasetIndex index = load_dataset(cfg.dataset_dir());
    SplitSpec split = require_split(cfg);
    std::set<std::string> test_ids(split.test_ids.begin(), split.test_ids.end());

    std::vector<ClipData> clips;
    for (const auto& id : split.train_ids) clips.push_back(load_clip_data(cfg, index.clip(id)));

    // Seeded internal validation split for checkpoint selection.
    std::vector<int> order(clips.size());
    for (size_t i = 0; i < clips.size(); ++i) order[i] = static_cast<int>(i);
    Rng vrng(Rng::mix(cfg.seed, 0x7A11D));
    vrng.shuffle(order);
    int n_val = static_cast<int>(std::llround(cfg.optim.val_fraction * clips.size()));
    n_val = std::min<int>(n_val, static_cast<int>(clips.size()) - 1);
    std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    std::vector<int> train_idx(order.begin() + n_val, order.end());
    if (train_idx.empty()) throw AffectError("train: no clips left after validation split");

    AffectNet<float> net(model_config(cfg), cfg.seed);
    nn::Adam<float> adam(static_cast<float>(cfg.optim.lr));
    adam.init(net.parameters());
    TrainState state;
    state.lr = cfg.optim.lr;

    const bool resume = !force && fs::exists(cfg.model_ckpt());
    if (resume) {
        LoadedModel lm = load_model_checkpoint(cfg.model_ckpt());
        if (lm.net.config().channels != net.config().channels)
            throw AffectError("incompatible checkpoint (model channels changed); use --force");
        net = std::move(lm.net);
        state = lm.state;
        adam = std::move(lm.opt);
        if (state.epochs_done >= cfg.optim.epochs) {
            std::cout << "[train] checkpoint already at " << state.epochs_done
                      << " epochs, skipping\n";
            return;
        }
        std::cout << "[train] resuming from epoch " << state.epochs_done << "\n";
    }

    std::ofstream train_log(cfg.out / "train_log.csv", resume ? std::ios::app : std::ios::out);
    std::ofstream batch_log(cfg.out / "batch_log.csv", resume ? std::ios::app : std::ios::out);
    std::ofstream epoch_log(cfg.out / "epoch_log.csv", resume ? std::ios::app : std::ios::out);
    if (!resume) {
        train_log << "epoch,step,loss,lr\n";
        batch_log << "epoch,step,clip_ids\n";
        epoch_log << "epoch,val_loss,lr,best\n";
    }

    auto eval_val_loss = [&]() -> double {
        if (val_idx.empty()) return 0.0;
        std::vector<MatX<float>> preds, labels;
        for (int vi : val_idx) {
            ClipTensors<float> t = to_tensors(clips[vi]);
            Batch<float> b = make_batch<float>({&t});
            preds.push_back(net.forward(b, false));
            labels.push_back(t.labels);
        }
        Eigen::Index total = 0;
        for (const auto& p : preds) total += p.rows();
        MatX<float> pa(total, 2), la(total, 2);
        Eigen::Index at = 0;
        for (size_t i = 0; i < preds.size(); ++i) {
            pa.middleRows(at, preds[i].rows()) = preds[i];
            la.middleRows(at, preds[i].rows()) = labels[i];
            at += preds[i].rows();
        }
        return ccc_loss<float>(pa, la);
    };

    for (int epoch = state.epochs_done; epoch < cfg.optim.epochs; ++epoch) {
        Rng erng(Rng::mix(cfg.seed, 0x7E9000 + epoch));
        std::vector<int> sched = train_idx;
        erng.shuffle(sched);
        int step = 0;
        adam.lr = static_cast<float>(state.lr);
        for (size_t at = 0; at < sched.size(); at += cfg.optim.batch_size, ++step) {
            const size_t end = std::min(sched.size(), at + cfg.optim.batch_size);
            std::vector<ClipTensors<float>> tensors;
            std::vector<const ClipTensors<float>*> ptrs;
            std::string ids;
            for (size_t i = at; i < end; ++i) {
                tensors.push_back(to_tensors(clips[sched[i]]));
                ids += (ids.empty() ? "" : " ") + clips[sched[i]].clip_id;
                if (test_ids.count(clips[sched[i]].clip_id))
                    throw AffectError("train/test hygiene violation: " +
                                      clips[sched[i]].clip_id);
            }
            for (auto& t : tensors) ptrs.push_back(&t);
            Batch<float> batch = make_batch<float>(ptrs);
            const uint64_t step_seed = Rng::mix(cfg.seed, (static_cast<uint64_t>(epoch) << 20) + step);
            const float loss = net.training_step(batch, adam, step_seed);
            train_log << epoch << "," << step << "," << loss << "," << state.lr << "\n";
            batch_log << epoch << "," << step << "," << ids << "\n";
        }
        const double val_loss = val_idx.empty() ? 0.0 : eval_val_loss();
        const bool improved = val_loss < state.best_val - 1e-6;
        if (improved) {
            state.best_val = val_loss;
            state.stall_epochs = 0;
        } else if (++state.stall_epochs >= cfg.optim.scheduler_patience) {
            state.lr *= cfg.optim.scheduler_factor;
            state.stall_epochs = 0;
        }
        state.epochs_done = epoch + 1;
        epoch_log << epoch << "," << val_loss << "," << state.lr << "," << state.best_val << "\n";
        save_model_checkpoint(cfg.model_ckpt(), net, state, adam);
        if (improved || (val_idx.empty() && epoch + 1 == cfg.optim.epochs))
            save_model_checkpoint(cfg.model_ckpt_best(), net, state, adam);
        std::cout << "[train] epoch " << epoch << " val_loss " << val_loss << " lr " << state.lr
                  << "\n";
    }
}

MetricReport stage_eval(const RunConfig& cfg) {
    cfg.validate();
    StageTimer timer(cfg, "eval");
    DatasetIndex index = load_dataset(cfg.dataset_dir());
    SplitSpec split = require_split(cfg);
    const fs::path ckpt =
        fs::exists(cfg.model_ckpt_best()) ? cfg.model_ckpt_best() : cfg.model_ckpt();
    if (!fs::exists(ckpt)) throw AffectError("missing model checkpoint; run train first");
    LoadedModel lm = load_model_checkpoint(ckpt);

    // Global-mean baseline from the train split's key-frame labels.
    double mean_v = 0, mean_a = 0;
    int n_train_frames = 0;
    for (const auto& id : split.train_ids) {
        ClipData cd = load_clip_data(cfg, index.clip(id));
        for (int i = 0; i < 10; ++i) {
            mean_v += denormalize_label(cd.labels(i, 0));
            mean_a += denormalize_label(cd.labels(i, 1));
            ++n_train_frames;
        }
    }
    mean_v /= n_train_frames;
    mean_a /= n_train_frames;

    fs::create_directories(cfg.report_dir() / "plots");
    std::vector<std::string> ids;
    std::vector<MatX<double>> preds, truths, base_preds;
    for (const auto& id : split.test_ids) {
        ClipData cd = load_clip_data(cfg, index.clip(id));
        ClipTensors<float> t = to_tensors(cd);
        AffectPrediction p = lm.net.predict_clip(t);
        MatX<double> truth(10, 2);
        for (int i = 0; i < 10; ++i) {
            truth(i, 0) = denormalize_label(cd.labels(i, 0));
            truth(i, 1) = denormalize_label(cd.labels(i, 1));
        }
        ids.push_back(id);
        preds.push_back(p.va_denormalized);
        truths.push_back(truth);
        MatX<double> bp(10, 2);
        bp.col(0).setConstant(mean_v);
        bp.col(1).setConstant(mean_a);
        base_preds.push_back(bp);

        for (int dim = 0; dim < 2; ++dim) {
            std::vector<double> tr, pr;
            for (int i = 0; i < 10; ++i) {
                tr.push_back(truth(i, dim));
                pr.push_back(p.va_denormalized(i, dim));
            }
            const char* name = dim == 0 ? "valence" : "arousal";
            save_png(render_trace_plot(tr, pr),
                     cfg.report_dir() / "plots" / (id + "_" + name + ".png"));
        }
    }

    // Baseline CCC over the same concatenated frames (eps-guarded; a constant
    // predictor has zero covariance, so this lands at ~0 by construction).
    std::vector<double> btv, btp, bav, bap;
    for (size_t c = 0; c < ids.size(); ++c)
        for (int i = 0; i < 10; ++i) {
            btv.push_back(truths[c](i, 0));
            btp.push_back(base_preds[c](i, 0));
            bav.push_back(truths[c](i, 1));
            bap.push_back(base_preds[c](i, 1));
        }
    const double base_v = ccc<double>(btp, btv, CccMode::loss);
    const double base_a = ccc<double>(bap, bav, CccMode::loss);

    MetricReport rep = compute_report(ids, preds, truths, base_v, base_a);
    save_report(rep, cfg.metrics_file());
    std::ofstream table(cfg.report_dir() / "metrics.txt");
    table << format_report_table(rep);
    std::cout << format_report_table(rep);
    return rep;
}

void run_all_stages(const RunConfig& cfg, bool force) {
    stage_synth(cfg, force);
    stage_preprocess(cfg, force);
    stage_keyframes(cfg, force);
    stage_flow(cfg, force);
    stage_train(cfg, force);
    stage_eval(cfg);
}

}  // namespace affect
