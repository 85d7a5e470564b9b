#include "affect/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace affect {

using nlohmann::json;

namespace fs = std::filesystem;

std::filesystem::path ClipRecord::frame_path(int index) const {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.png", index);
    return dir / name;
}

const ClipRecord& DatasetIndex::clip(const std::string& id) const {
    for (const auto& c : clips)
        if (c.clip_id == id) return c;
    throw AffectError("unknown clip id: " + id);
}

bool SplitSpec::is_train(const std::string& id) const {
    return std::find(train_ids.begin(), train_ids.end(), id) != train_ids.end();
}

double normalize_label(int level) {
    if (level < kLabelMin || level > kLabelMax)
        throw AffectError("label level out of range [-10,10]: " + std::to_string(level));
    return (level + 10) / 20.0;
}

double denormalize_label(double unit) { return unit * 20.0 - 10.0; }

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw AffectError("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

ClipRecord load_clip(const fs::path& dir) {
    ClipRecord clip;
    clip.clip_id = dir.filename().string();
    clip.dir = dir;

    const fs::path ann_path = dir / "annotations.json";
    if (!fs::exists(ann_path))
        throw AffectError("clip '" + clip.clip_id + "': missing annotations.json");

    json j;
    try {
        j = read_json_file(ann_path);
    } catch (const json::exception& e) {
        throw AffectError("clip '" + clip.clip_id + "': bad annotations.json: " + e.what());
    }
    if (!j.contains("fps") || !j.contains("frames"))
        throw AffectError("clip '" + clip.clip_id + "': annotations.json missing fps/frames");
    clip.fps = j["fps"].get<int>();

    const auto& frames = j["frames"];
    int n_frames = static_cast<int>(frames.size());
    if (n_frames < 2)
        throw AffectError("clip '" + clip.clip_id + "': needs at least 2 annotated frames");
    clip.annotations.resize(n_frames);

    std::vector<bool> seen(n_frames, false);
    for (auto it = frames.begin(); it != frames.end(); ++it) {
        int idx;
        try {
            idx = std::stoi(it.key());
        } catch (...) {
            throw AffectError("clip '" + clip.clip_id + "': non-integer frame key '" + it.key() + "'");
        }
        if (idx < 0 || idx >= n_frames || seen[idx])
            throw AffectError("clip '" + clip.clip_id + "': frame indices must be 0.." +
                              std::to_string(n_frames - 1) + " without gaps");
        seen[idx] = true;

        const auto& f = *it;
        FrameAnnotation& a = clip.annotations[idx];
        a.valence = f.at("valence").get<int>();
        a.arousal = f.at("arousal").get<int>();
        if (a.valence < kLabelMin || a.valence > kLabelMax ||
            a.arousal < kLabelMin || a.arousal > kLabelMax)
            throw AffectError("clip '" + clip.clip_id + "' frame " + std::to_string(idx) +
                              ": label outside [-10,10]");
        const auto& lm = f.at("landmarks");
        if (static_cast<int>(lm.size()) != kNumLandmarks)
            throw AffectError("clip '" + clip.clip_id + "' frame " + std::to_string(idx) +
                              ": expected 68 landmarks, got " + std::to_string(lm.size()));
        for (int k = 0; k < kNumLandmarks; ++k) {
            a.landmarks[k].x = lm[k][0].get<double>();
            a.landmarks[k].y = lm[k][1].get<double>();
        }
    }

    // Frame files must match the annotation count exactly.
    int n_files = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string name = e.path().filename().string();
        if (name.starts_with("frame_") && name.ends_with(".png")) ++n_files;
    }
    if (n_files != n_frames)
        throw AffectError("clip '" + clip.clip_id + "': " + std::to_string(n_files) +
                          " frame images vs " + std::to_string(n_frames) + " annotations");
    for (int i = 0; i < n_frames; ++i)
        if (!fs::exists(clip.frame_path(i)))
            throw AffectError("clip '" + clip.clip_id + "': missing " +
                              clip.frame_path(i).filename().string());

    // Landmark bounds are checked against the first frame's size, with a
    // 2 px slack for annotation jitter (cropping clamps the rest).
    Image first = load_png(clip.frame_path(0));
    clip.frame_width = first.width;
    clip.frame_height = first.height;
    for (int i = 0; i < n_frames; ++i)
        for (const auto& p : clip.annotations[i].landmarks)
            if (p.x < -2.0 || p.y < -2.0 || p.x > first.width + 2.0 || p.y > first.height + 2.0)
                throw AffectError("clip '" + clip.clip_id + "' frame " + std::to_string(i) +
                                  ": landmark outside frame bounds");
    return clip;
}

}  // namespace

DatasetIndex load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw AffectError("dataset root not found: " + root.string());
    DatasetIndex index;
    index.root = root;
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) index.clips.push_back(load_clip(d));
    std::set<std::string> ids;
    for (const auto& c : index.clips)
        if (!ids.insert(c.clip_id).second)
            throw AffectError("duplicate clip id: " + c.clip_id);
    return index;
}

Image load_frame(const ClipRecord& clip, int frame_index) {
    if (frame_index < 0 || frame_index >= clip.frame_count())
        throw AffectError("frame index out of range for clip " + clip.clip_id);
    return load_png(clip.frame_path(frame_index));
}

void save_annotations(const ClipRecord& clip, const fs::path& json_path) {
    json frames = json::object();
    for (int i = 0; i < clip.frame_count(); ++i) {
        const auto& a = clip.annotations[i];
        json lm = json::array();
        for (const auto& p : a.landmarks) lm.push_back({p.x, p.y});
        frames[std::to_string(i)] = {
            {"valence", a.valence}, {"arousal", a.arousal}, {"landmarks", lm}};
    }
    json j = {{"fps", clip.fps}, {"frames", frames}};
    std::ofstream out(json_path);
    if (!out) throw AffectError("cannot write " + json_path.string());
    out << j.dump(2) << "\n";
}

namespace {

using Hist = std::array<int64_t, 2 * kLabelLevels>;  // valence bins then arousal bins

Hist clip_histogram(const ClipRecord& clip) {
    Hist h{};
    for (const auto& a : clip.annotations) {
        h[a.valence - kLabelMin]++;
        h[kLabelLevels + a.arousal - kLabelMin]++;
    }
    return h;
}

double chi_square(const Hist& train, int64_t train_n, const Hist& test, int64_t test_n) {
    // 0.5 * sum (p-q)^2/(p+q) over normalized bins, per dimension, summed.
    double d = 0.0;
    for (int i = 0; i < 2 * kLabelLevels; ++i) {
        double p = static_cast<double>(train[i]) / train_n;
        double q = static_cast<double>(test[i]) / test_n;
        if (p + q > 0) d += 0.5 * (p - q) * (p - q) / (p + q);
    }
    return d;
}

}  // namespace

double split_histogram_distance(const DatasetIndex& index,
                                const std::vector<std::string>& train_ids,
                                const std::vector<std::string>& test_ids) {
    Hist train{}, test{};
    int64_t ntr = 0, nte = 0;
    for (const auto& id : train_ids) {
        const auto& c = index.clip(id);
        Hist h = clip_histogram(c);
        for (int i = 0; i < 2 * kLabelLevels; ++i) train[i] += h[i];
        ntr += c.frame_count();
    }
    for (const auto& id : test_ids) {
        const auto& c = index.clip(id);
        Hist h = clip_histogram(c);
        for (int i = 0; i < 2 * kLabelLevels; ++i) test[i] += h[i];
        nte += c.frame_count();
    }
    if (ntr == 0 || nte == 0) throw AffectError("split with an empty side");
    return chi_square(train, ntr, test, nte);
}

SplitSpec make_split(const DatasetIndex& index, double test_fraction, uint64_t seed,
                     int max_passes) {
    const int n = static_cast<int>(index.clips.size());
    if (n < 2) throw AffectError("make_split needs at least 2 clips");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw AffectError("test_fraction must be in (0,1)");

    int n_test = static_cast<int>(std::llround(n * test_fraction));
    n_test = std::clamp(n_test, 1, n - 1);

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    Rng rng(Rng::mix(seed, 0x5117));
    rng.shuffle(order);

    std::vector<int> train(order.begin() + n_test, order.end());
    std::vector<int> test(order.begin(), order.begin() + n_test);

    std::vector<Hist> hists(n);
    std::vector<int64_t> counts(n);
    for (int i = 0; i < n; ++i) {
        hists[i] = clip_histogram(index.clips[i]);
        counts[i] = index.clips[i].frame_count();
    }
    Hist train_h{}, test_h{};
    int64_t train_n = 0, test_n = 0;
    for (int i : train) {
        for (int b = 0; b < 2 * kLabelLevels; ++b) train_h[b] += hists[i][b];
        train_n += counts[i];
    }
    for (int i : test) {
        for (int b = 0; b < 2 * kLabelLevels; ++b) test_h[b] += hists[i][b];
        test_n += counts[i];
    }

    double cur = chi_square(train_h, train_n, test_h, test_n);
    for (int pass = 0; pass < max_passes; ++pass) {
        bool improved = false;
        for (size_t ti = 0; ti < train.size(); ++ti) {
            for (size_t si = 0; si < test.size(); ++si) {
                const int a = train[ti], b = test[si];
                Hist th = train_h, sh = test_h;
                for (int k = 0; k < 2 * kLabelLevels; ++k) {
                    th[k] += hists[b][k] - hists[a][k];
                    sh[k] += hists[a][k] - hists[b][k];
                }
                int64_t tn = train_n - counts[a] + counts[b];
                int64_t sn = test_n - counts[b] + counts[a];
                double cand = chi_square(th, tn, sh, sn);
                if (cand < cur - 1e-15) {
                    train[ti] = b;
                    test[si] = a;
                    train_h = th;
                    test_h = sh;
                    train_n = tn;
                    test_n = sn;
                    cur = cand;
                    improved = true;
                }
            }
        }
        if (!improved) break;
    }

    SplitSpec split;
    split.seed = seed;
    split.histogram_distance = cur;
    for (int i : train) split.train_ids.push_back(index.clips[i].clip_id);
    for (int i : test) split.test_ids.push_back(index.clips[i].clip_id);
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

void save_split(const SplitSpec& split, const fs::path& path) {
    json j = {{"seed", split.seed},
              {"train_ids", split.train_ids},
              {"test_ids", split.test_ids},
              {"histogram_distance", split.histogram_distance}};
    std::ofstream out(path);
    if (!out) throw AffectError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

SplitSpec load_split(const fs::path& path) {
    json j = read_json_file(path);
    SplitSpec s;
    s.seed = j.at("seed").get<uint64_t>();
    s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    s.histogram_distance = j.at("histogram_distance").get<double>();
    return s;
}

}  // namespace affect
