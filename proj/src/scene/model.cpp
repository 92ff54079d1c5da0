#include "slotseed/scene/model.hpp"

#include "slotseed/numcore/ops.hpp"
#include "slotseed/numcore/tape.hpp"

#include <cmath>
#include <numbers>

namespace slotseed::scene {

namespace {

Tensor gated_update(const Tensor& slot, const Tensor& update, const Refiner& r) {
    // Minimal gated unit: one gate both forgets the old slot and admits the candidate.
    const Tensor f = num::sigmoid(r.gate(num::concat_last(update, slot)));
    const Tensor h = num::tanh(r.candidate(num::concat_last(update, num::mul(f, slot))));
    return num::add(slot, num::mul(f, num::sub(h, slot)));
}

double attention_entropy(const Tensor& attention) {
    const std::size_t n = attention.dim(0), k = attention.dim(1);
    double total = 0.0;
    for (std::size_t i = 0; i < n * k; ++i) {
        const double a = attention[i];
        if (a > 0.0) total -= a * std::log(a);
    }
    return total / static_cast<double>(n);
}

} // namespace

void ModelConfig::validate() const {
    if (height == 0 || width == 0) throw num::DimensionError("image size must be positive");
    if (dim == 0 || dim % 2 != 0) throw num::DimensionError("slot dimension D must be even and positive");
    if (decoder_layers < 2) throw num::DimensionError("decoder needs at least two layers");
    init.validate();
}

Tensor coordinate_grid(std::size_t height, std::size_t width) {
    std::vector<double> v(height * width * 2);
    const auto scaled = [](std::size_t i, std::size_t n) {
        return n == 1 ? 0.0 : (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) - 1.0;
    };
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            v[2 * (y * width + x)] = scaled(x, width);
            v[2 * (y * width + x) + 1] = scaled(y, height);
        }
    return Tensor({height * width, 2}, std::move(v));
}

Tensor fourier_coordinates(std::size_t height, std::size_t width, std::size_t frequencies) {
    const Tensor grid = coordinate_grid(height, width);
    const std::size_t n = height * width, cols = 2 + 4 * frequencies;
    std::vector<double> v(n * cols);
    for (std::size_t p = 0; p < n; ++p) {
        double* row = v.data() + p * cols;
        row[0] = grid[2 * p];
        row[1] = grid[2 * p + 1];
        for (std::size_t f = 0; f < frequencies; ++f) {
            const double w = std::numbers::pi * static_cast<double>(std::size_t{1} << f);
            for (std::size_t a = 0; a < 2; ++a) {
                row[2 + 4 * f + 2 * a] = std::sin(w * grid[2 * p + a]);
                row[3 + 4 * f + 2 * a] = std::cos(w * grid[2 * p + a]);
            }
        }
    }
    return Tensor({n, cols}, std::move(v));
}

Encoder Encoder::create(const ModelConfig& cfg, Rng& rng) {
    return Encoder{num::glorot_uniform({3, 3, 3, cfg.encoder_hidden}, rng), Tensor::zeros({cfg.encoder_hidden}, true),
                   num::glorot_uniform({3, 3, cfg.encoder_hidden, cfg.dim}, rng), Tensor::zeros({cfg.dim}, true),
                   num::Linear::create(2, cfg.dim, rng)};
}

void Encoder::collect(const std::string& prefix, num::ParameterList& out) const {
    out.emplace_back(prefix + ".conv1.kernel", kernel1);
    out.emplace_back(prefix + ".conv1.bias", bias1);
    out.emplace_back(prefix + ".conv2.kernel", kernel2);
    out.emplace_back(prefix + ".conv2.bias", bias2);
    position.collect(prefix + ".position", out);
}

Refiner Refiner::create(std::size_t dim, Rng& rng) {
    return Refiner{num::glorot_uniform({dim, dim}, rng), num::glorot_uniform({dim, dim}, rng),
                   num::glorot_uniform({dim, dim}, rng),     num::Linear::create(2 * dim, dim, rng),
                   num::Linear::create(2 * dim, dim, rng),   num::Mlp::create({dim, 2 * dim, dim}, rng)};
}

void Refiner::collect(const std::string& prefix, num::ParameterList& out) const {
    out.emplace_back(prefix + ".query", query);
    out.emplace_back(prefix + ".key", key);
    out.emplace_back(prefix + ".value", value);
    gate.collect(prefix + ".gate", out);
    candidate.collect(prefix + ".candidate", out);
    residual.collect(prefix + ".residual", out);
}

Decoder Decoder::create(const ModelConfig& cfg, Rng& rng) {
    const std::size_t h = cfg.decoder_hidden, c = 2 + 4 * cfg.decoder_frequencies;
    // Glorot limits of the unsplit (D + C) x H first layer.
    const Tensor first = num::glorot_uniform({cfg.dim + c, h}, rng);
    const auto v = first.values();
    Decoder d;
    d.slot_weight = Tensor({cfg.dim, h}, {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(cfg.dim * h)}, true);
    d.coord_weight = Tensor({c, h}, {v.begin() + static_cast<std::ptrdiff_t>(cfg.dim * h), v.end()}, true);
    d.bias = Tensor::zeros({h}, true);
    std::vector<std::size_t> widths(cfg.decoder_layers - 1, h);
    widths.push_back(4);
    d.head = num::Mlp::create(widths, rng);
    return d;
}

void Decoder::collect(const std::string& prefix, num::ParameterList& out) const {
    out.emplace_back(prefix + ".slot_weight", slot_weight);
    out.emplace_back(prefix + ".coord_weight", coord_weight);
    out.emplace_back(prefix + ".bias", bias);
    head.collect(prefix + ".head", out);
}

Model Model::create(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    Model m;
    m.config = cfg;
    m.encoder = Encoder::create(cfg, rng);
    m.init = slots::SlotInitializer::create(cfg.init, cfg.dim, rng);
    m.refiner = Refiner::create(cfg.dim, rng);
    m.decoder = Decoder::create(cfg, rng);
    return m;
}

num::ParameterList Model::parameters() const {
    num::ParameterList out;
    encoder.collect("encoder", out);
    init.collect("init", out);
    refiner.collect("refiner", out);
    decoder.collect("decoder", out);
    return out;
}

Tensor encode(const Tensor& image, const Encoder& encoder) {
    if (image.rank() != 3 || image.dim(2) != 3) {
        throw num::DimensionError("encode expects an H x W x 3 image, got " + num::shape_string(image.dims()));
    }
    const std::size_t h = image.dim(0), w = image.dim(1);
    const Tensor hidden = num::relu(num::conv2d_same(image, encoder.kernel1, encoder.bias1));
    const Tensor conv = num::relu(num::conv2d_same(hidden, encoder.kernel2, encoder.bias2));
    const std::size_t d = conv.dim(2);
    return num::add(num::reshape(conv, {h * w, d}), encoder.position(coordinate_grid(h, w)));
}

Refined refine_slots(const Tensor& slots, const Tensor& features, const Refiner& refiner, std::size_t iterations) {
    if (slots.rank() != 2 || slots.dim(0) == 0) throw DegenerateInput("refine_slots needs at least one slot");
    if (features.rank() != 2 || features.dim(1) != slots.dim(1)) {
        throw num::DimensionError("refine_slots: features " + num::shape_string(features.dims()) + " vs slots " +
                                  num::shape_string(slots.dims()));
    }
    Refined out{slots, Tensor()};
    if (iterations == 0) return out;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(slots.dim(1)));
    const Tensor inputs = num::layer_norm(features);
    const Tensor keys = num::matmul(inputs, refiner.key);
    const Tensor values = num::matmul(inputs, refiner.value);
    for (std::size_t it = 0; it < iterations; ++it) {
        const Tensor queries = num::matmul(num::layer_norm(out.slots), refiner.query);
        const Tensor logits = num::scale(num::matmul(keys, num::transpose(queries)), inv_sqrt_d); // N x K
        out.attention = num::softmax(logits, 1);
        const Tensor weights = num::normalize_sum(out.attention, 0);
        const Tensor updates = num::matmul(num::transpose(weights), values); // K x D
        const Tensor gated = gated_update(out.slots, updates, refiner);
        out.slots = num::add(gated, refiner.residual(num::layer_norm(gated)));
    }
    return out;
}

Rendered decode_and_render(const Tensor& slots, const Decoder& decoder, std::size_t height, std::size_t width) {
    if (slots.rank() != 2 || slots.dim(0) == 0) throw DegenerateInput("decode_and_render needs at least one slot");
    const std::size_t n = height * width;
    const Tensor per_slot = num::expand(num::matmul(slots, decoder.slot_weight), 1, n); // K x N x H
    const std::size_t frequencies = (decoder.coord_weight.dim(0) - 2) / 4;
    const Tensor coords = fourier_coordinates(height, width, frequencies);
    const Tensor per_pixel = num::add(num::matmul(coords, decoder.coord_weight), decoder.bias);
    const Tensor out = decoder.head(num::relu(num::add(per_slot, per_pixel))); // K x N x 4
    return composite(num::sigmoid(num::slice_last(out, 0, 3)), num::slice_last(out, 3, 4), height, width);
}

Rendered composite(const Tensor& rgb, const Tensor& alpha_logits, std::size_t height, std::size_t width) {
    const std::size_t k = rgb.dim(0);
    if (rgb.rank() != 3 || rgb.dim(1) != height * width || rgb.dim(2) != 3 ||
        alpha_logits.dims() != num::Shape{k, height * width, 1}) {
        throw num::DimensionError("composite: rgb " + num::shape_string(rgb.dims()) + ", alpha " +
                                  num::shape_string(alpha_logits.dims()));
    }
    const Tensor masks = num::softmax(alpha_logits, 0); // K x N x 1
    const Tensor masks3 = num::concat_last(num::concat_last(masks, masks), masks);
    const Tensor recon = num::sum(num::mul(masks3, rgb), 0); // N x 3
    return Rendered{num::reshape(recon, {height, width, 3}), num::reshape(masks, {k, height, width}),
                    num::reshape(rgb, {k, height, width, 3})};
}

Tensor reconstruction_loss(const Tensor& reconstruction, const Tensor& target) {
    if (reconstruction.dims() != target.dims()) {
        throw num::DimensionError("reconstruction " + num::shape_string(reconstruction.dims()) + " vs target " +
                                  num::shape_string(target.dims()));
    }
    return num::mean_all(num::square(num::sub(reconstruction, target)));
}

std::vector<std::size_t> segment(const Tensor& masks) {
    if (masks.rank() != 3 || masks.dim(0) == 0) throw num::DimensionError("segment expects K x H x W masks");
    const std::size_t k = masks.dim(0), n = masks.dim(1) * masks.dim(2);
    std::vector<std::size_t> labels(n, 0);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t s = 1; s < k; ++s)
            if (masks[s * n + p] > masks[labels[p] * n + p]) labels[p] = s;
    return labels;
}

ForwardResult forward(const Tensor& image, const Model& model, Rng& rng, const ForwardOptions& options) {
    const ModelConfig& cfg = model.config;
    const Tensor features = encode(image, model.encoder);
    slots::InitResult init = slots::init_slots(features, model.init, rng, options.slots);
    const Refined refined = refine_slots(init.slots.slots, features, model.refiner, options.iterations.value_or(cfg.iterations));

    ForwardResult result;
    result.rendered = decode_and_render(refined.slots, model.decoder, image.dim(0), image.dim(1));
    result.slots = refined.slots;
    result.diagnostics.slot_count = refined.slots.dim(0);
    result.diagnostics.clustering_iterations = init.clusters.iterations_used;
    if (refined.attention.size() > 0) result.diagnostics.attention_entropy = attention_entropy(refined.attention);
    return result;
}

} // namespace slotseed::scene
