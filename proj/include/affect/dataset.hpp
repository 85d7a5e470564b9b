#pragma once

#include "affect/common.hpp"
#include "affect/image.hpp"

#include <array>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace affect {

constexpr int kNumLandmarks = 68;
constexpr int kLabelMin = -10;
constexpr int kLabelMax = 10;
constexpr int kLabelLevels = 21;

struct Landmark {
    double x = 0;
    double y = 0;
};

struct FrameAnnotation {
    int valence = 0;  // integer level in [-10, 10]
    int arousal = 0;
    std::array<Landmark, kNumLandmarks> landmarks{};
};

/// One clip on disk: <root>/<clip_id>/frame_%05d.png plus annotations.json.
struct ClipRecord {
    std::string clip_id;
    std::filesystem::path dir;
    int fps = 30;
    int frame_width = 0;
    int frame_height = 0;
    std::vector<FrameAnnotation> annotations;  // one per frame, chronological

    int frame_count() const { return static_cast<int>(annotations.size()); }
    std::filesystem::path frame_path(int index) const;
};

struct DatasetIndex {
    std::filesystem::path root;
    std::vector<ClipRecord> clips;

    const ClipRecord& clip(const std::string& id) const;
};

struct SplitSpec {
    uint64_t seed = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    double histogram_distance = 0.0;

    bool is_train(const std::string& id) const;
};

/// Scans root for clip directories and validates every annotation file.
/// A malformed clip aborts the load with an error naming the clip; nothing
/// is skipped silently.
DatasetIndex load_dataset(const std::filesystem::path& root);

Image load_frame(const ClipRecord& clip, int frame_index);

void save_annotations(const ClipRecord& clip, const std::filesystem::path& json_path);

/// Min-max normalization of an integer level in [-10, 10] to [0, 1].
double normalize_label(int level);

/// Inverse map back to the [-10, 10] scale (continuous).
double denormalize_label(double unit);

/// Chi-square distance between the frame-level valence and arousal histograms
/// of two clip sets (21 bins each, the two distances summed).
double split_histogram_distance(const DatasetIndex& index,
                                const std::vector<std::string>& train_ids,
                                const std::vector<std::string>& test_ids);

/// Seeded random split refined by greedy swaps that minimize the chi-square
/// distance between train and test frame-level label histograms. Deterministic
/// in seed; the distance never increases across refinement steps.
SplitSpec make_split(const DatasetIndex& index, double test_fraction, uint64_t seed,
                     int max_passes = 20);

void save_split(const SplitSpec& split, const std::filesystem::path& path);
SplitSpec load_split(const std::filesystem::path& path);

}  // namespace affect
