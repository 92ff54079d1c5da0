#pragma once

#include "slotseed/numcore/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace slotseed::num {

struct AdamConfig {
    double learning_rate = 4e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t warmup_steps = 0;
    double decay_factor = 0.5;
    std::size_t decay_interval = 5000;
};

struct AdamState {
    std::size_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

/// base * min(step / warmup, 1) * decay^(step / interval), with integer division in the
/// exponent (staircase decay). `step` is 1-based.
double scheduled_rate(const AdamConfig& config, std::size_t step);

/// One Adam update using explicit gradients (one vector per parameter).
void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads, AdamState& state,
               const AdamConfig& config);

/// One Adam update using each parameter's accumulated gradient.
void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& config);

} // namespace slotseed::num
