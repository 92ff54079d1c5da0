#include "slotseed/scene/training.hpp"

#include "slotseed/numcore/ops.hpp"
#include "slotseed/numcore/tape.hpp"

#include <random>

namespace slotseed::scene {

Rng step_rng(std::uint64_t seed, std::size_t step) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(step),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(step) >> 32), 0x7a11u};
    return Rng(seq);
}

StepStats train_step(Model& model, TrainState& state, const TrainConfig& config, std::span<const Tensor> images) {
    if (images.empty()) throw std::invalid_argument("train_step needs at least one image");
    if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    Rng rng = step_rng(config.seed, state.step);
    std::uniform_int_distribution<std::size_t> pick(0, images.size() - 1);
    const num::ParameterList named = model.parameters();
    std::vector<Tensor> params = num::tensors_of(named);
    for (Tensor& p : params) p.zero_grad();

    StepStats stats;
    const double share = 1.0 / static_cast<double>(config.batch_size);
    for (std::size_t b = 0; b < config.batch_size; ++b) {
        const Tensor& image = images[pick(rng)];
        num::Tape tape;
        num::Tape::Scope scope(tape);
        const ForwardResult out = forward(image, model, rng);
        const Tensor loss = reconstruction_loss(out.rendered.reconstruction, image);
        tape.backward(num::scale(loss, share));
        stats.loss += loss.item() * share;
        stats.mean_slots += static_cast<double>(out.diagnostics.slot_count) * share;
    }
    num::adam_step(params, state.adam, config.adam);
    for (Tensor& p : params) p.zero_grad();
    state.step = state.adam.step;
    stats.step = state.step;
    stats.learning_rate = num::scheduled_rate(config.adam, state.step);
    return stats;
}

} // namespace slotseed::scene
