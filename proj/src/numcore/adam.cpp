#include "slotseed/numcore/adam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slotseed::num {

double scheduled_rate(const AdamConfig& config, std::size_t step) {
    double warm = 1.0;
    if (config.warmup_steps > 0) {
        warm = std::min(static_cast<double>(step) / static_cast<double>(config.warmup_steps), 1.0);
    }
    double decay = 1.0;
    if (config.decay_interval > 0) {
        decay = std::pow(config.decay_factor, static_cast<double>(step / config.decay_interval));
    }
    return config.learning_rate * warm * decay;
}

void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads, AdamState& state,
               const AdamConfig& config) {
    if (grads.size() != params.size()) throw DimensionError("adam_step: gradient count does not match parameters");
    if (state.first_moment.empty()) {
        for (const Tensor& p : params) {
            state.first_moment.emplace_back(p.size(), 0.0);
            state.second_moment.emplace_back(p.size(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size()) throw DimensionError("adam_step: state does not match parameters");

    ++state.step;
    const double rate = scheduled_rate(config, state.step);
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto values = params[k].mutable_values();
        const auto& g = grads[k];
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        if (g.size() != values.size() || m.size() != values.size()) {
            throw DimensionError("adam_step: gradient/moment shape differs from parameter " +
                                 shape_string(params[k].dims()));
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            values[i] -= rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& config) {
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (const Tensor& p : params) grads.push_back(p.grad());
    adam_step(params, grads, state, config);
}

} // namespace slotseed::num
