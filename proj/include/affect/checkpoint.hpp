#pragma once

#include "affect/model.hpp"
#include "affect/selector.hpp"

#include <filesystem>

namespace affect {

/// Training-loop state carried inside a model checkpoint so interrupted runs
/// resume exactly where they stopped.
struct TrainState {
    int epochs_done = 0;
    double lr = 5e-5;
    double best_val = std::numeric_limits<double>::infinity();
    int stall_epochs = 0;  // epochs since the validation loss last improved
};

void save_selector_checkpoint(const std::filesystem::path& path, Selector<float>& sel);
Selector<float> load_selector_checkpoint(const std::filesystem::path& path);

void save_model_checkpoint(const std::filesystem::path& path, AffectNet<float>& net,
                           const TrainState& state, const nn::Adam<float>& opt);
struct LoadedModel {
    AffectNet<float> net;
    TrainState state;
    nn::Adam<float> opt;
};
LoadedModel load_model_checkpoint(const std::filesystem::path& path);

}  // namespace affect
