#pragma once

#include "slotseed/numcore/adam.hpp"
#include "slotseed/scene/model.hpp"

#include <cstdint>
#include <span>

namespace slotseed::scene {

struct TrainConfig {
    std::size_t steps = 20000;
    std::size_t batch_size = 1;
    num::AdamConfig adam{};
    std::uint64_t seed = 0;
};

struct TrainState {
    std::size_t step = 0; // completed steps
    num::AdamState adam;
};

struct StepStats {
    std::size_t step = 0;
    double loss = 0.0; // mean over the batch
    double learning_rate = 0.0;
    double mean_slots = 0.0;
};

/// Randomness for training step `step` (batch draw, clustering seeds, slot noise), so a
/// resumed run replays exactly the steps an uninterrupted one would.
Rng step_rng(std::uint64_t seed, std::size_t step);

/// Forward, MSE and backward on a batch drawn uniformly from `images`, then one Adam
/// update of every model parameter.
StepStats train_step(Model& model, TrainState& state, const TrainConfig& config, std::span<const Tensor> images);

} // namespace slotseed::scene
