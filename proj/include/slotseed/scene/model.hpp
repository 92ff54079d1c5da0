#pragma once

#include "slotseed/numcore/layers.hpp"
#include "slotseed/numcore/tensor.hpp"
#include "slotseed/slotinit/slotinit.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace slotseed::scene {

using num::Rng;
using num::Tensor;

struct ModelConfig {
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t dim = 32;
    std::size_t encoder_hidden = 16;
    std::size_t decoder_hidden = 32;
    std::size_t decoder_layers = 3;
    std::size_t decoder_frequencies = 4; // octaves of sin/cos coordinate features
    std::size_t iterations = 3;
    // Mean-shift bandwidth on the encoder's feature scale at initialization; training
    // replaces it with calibrate_bandwidth unless set explicitly.
    slots::InitConfig init = [] {
        slots::InitConfig c;
        c.meanshift.sigma = 0.35;
        c.meanshift.epsilon = 0.175;
        return c;
    }();

    void validate() const;
};

/// Raised for inputs without anything to work on (no slots).
class DegenerateInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// N x 2 pixel-center coordinates (x, y) scaled to [-1, 1], row-major over H x W.
Tensor coordinate_grid(std::size_t height, std::size_t width);

/// Coordinates followed by sin and cos of pi * 2^f * coordinate for f < frequencies:
/// N x (2 + 4 * frequencies).
Tensor fourier_coordinates(std::size_t height, std::size_t width, std::size_t frequencies);

struct Encoder {
    Tensor kernel1, bias1; // 3x3x3xC, C
    Tensor kernel2, bias2; // 3x3xCxD, D
    num::Linear position;  // 2 -> D

    static Encoder create(const ModelConfig& cfg, Rng& rng);
    void collect(const std::string& prefix, num::ParameterList& out) const;
};

struct Refiner {
    Tensor query, key, value; // D x D
    num::Linear gate;         // [update, slot] -> D
    num::Linear candidate;    // [update, gate * slot] -> D
    num::Mlp residual;        // D -> 2D -> D

    static Refiner create(std::size_t dim, Rng& rng);
    void collect(const std::string& prefix, num::ParameterList& out) const;
};

struct Decoder {
    Tensor slot_weight;  // D x H, first layer split into a slot part
    Tensor coord_weight; // C x H, and a coordinate-feature part
    Tensor bias;         // H
    num::Mlp head;       // H -> ... -> 4 (rgb, alpha logit)

    static Decoder create(const ModelConfig& cfg, Rng& rng);
    void collect(const std::string& prefix, num::ParameterList& out) const;
};

struct Model {
    ModelConfig config;
    Encoder encoder;
    slots::SlotInitializer init;
    Refiner refiner;
    Decoder decoder;

    static Model create(const ModelConfig& cfg, Rng& rng);
    /// Every trainable tensor with a stable name, in checkpoint order.
    num::ParameterList parameters() const;
};

/// image H x W x 3 in [0, 1] -> N x D features (two relu convolutions plus a learned
/// projection of the pixel coordinates).
Tensor encode(const Tensor& image, const Encoder& encoder);

struct Refined {
    Tensor slots;     // K x D
    Tensor attention; // N x K from the last iteration (softmax over slots); empty if none ran
};

/// Slot-attention refinement; iterations = 0 returns the slots unchanged.
Refined refine_slots(const Tensor& slots, const Tensor& features, const Refiner& refiner, std::size_t iterations);

struct Rendered {
    Tensor reconstruction; // H x W x 3
    Tensor masks;          // K x H x W, softmax over slots per pixel
    Tensor rgbs;           // K x H x W x 3
};

/// Alpha compositing of per-slot rgb (K x N x 3, already in [0, 1]) by a softmax over
/// slots of the alpha logits (K x N x 1).
Rendered composite(const Tensor& rgb, const Tensor& alpha_logits, std::size_t height, std::size_t width);

Rendered decode_and_render(const Tensor& slots, const Decoder& decoder, std::size_t height, std::size_t width);

/// Mean squared error over all pixels and channels.
Tensor reconstruction_loss(const Tensor& reconstruction, const Tensor& target);

/// Per-pixel argmax over the slot axis of K x H x W masks; ties go to the lowest slot.
std::vector<std::size_t> segment(const Tensor& masks);

struct Diagnostics {
    std::size_t slot_count = 0;
    std::size_t clustering_iterations = 0;
    /// Mean over pixels of the entropy (nats) of the final attention over slots.
    double attention_entropy = 0.0;
};

struct ForwardOptions {
    std::optional<std::size_t> iterations; // defaults to the model's training count
    std::optional<std::size_t> slots;      // overrides K
};

struct ForwardResult {
    Rendered rendered;
    Tensor slots;
    Diagnostics diagnostics;
};

ForwardResult forward(const Tensor& image, const Model& model, Rng& rng, const ForwardOptions& options = {});

} // namespace slotseed::scene
