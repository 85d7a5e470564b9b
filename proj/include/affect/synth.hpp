#pragma once

#include "affect/dataset.hpp"

#include <filesystem>
#include <map>

namespace affect {

/// Parametric cartoon-face clip generator. Mouth curvature is an affine
/// function of valence; eye openness and head-motion amplitude are affine
/// functions of arousal, so the labels are recoverable from pixels and
/// landmark geometry by construction.
struct SynthConfig {
    int n_clips = 200;
    int frames_min = 24;
    int frames_max = 48;
    int image_size = 128;
    uint64_t seed = 1;

    /// Signal-window mode: labels are a constant expressive (valence, arousal)
    /// for the whole clip, but the face is rendered expressive (with motion)
    /// only inside a contiguous window covering `signal_fraction` of the
    /// frames; outside it the face is neutral and static. Window positions are
    /// written to <out>/signal_windows.json.
    bool signal_mode = false;
    double signal_fraction = 0.4;
};

struct SignalWindow {
    int begin = 0;  // first frame inside the window
    int end = 0;    // one past the last frame inside the window
};

DatasetIndex generate_synthetic_dataset(const SynthConfig& cfg,
                                        const std::filesystem::path& out);

std::map<std::string, SignalWindow> load_signal_windows(const std::filesystem::path& root);

/// Curvature statistic used by the generator's self-checks: mean lip-corner
/// height minus mid-lip height, normalized by mouth width. Positive for a
/// smile, negative for a frown, translation-invariant.
double measured_mouth_curvature(const FrameAnnotation& a);

/// Eye-opening statistic: mean lid separation of both eyes normalized by eye
/// width.
double measured_eye_openness(const FrameAnnotation& a);

}  // namespace affect
