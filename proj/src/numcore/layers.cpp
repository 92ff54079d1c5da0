#include "slotseed/numcore/layers.hpp"

#include "slotseed/numcore/ops.hpp"

#include <cmath>

namespace slotseed::num {

std::vector<Tensor> tensors_of(const ParameterList& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& [name, t] : params) out.push_back(t);
    return out;
}

Tensor glorot_uniform(Shape dims, Rng& rng) {
    if (dims.size() < 2) throw DimensionError("glorot_uniform needs rank >= 2, got " + shape_string(dims));
    std::size_t receptive = 1;
    for (std::size_t i = 0; i + 2 < dims.size(); ++i) receptive *= dims[i];
    const double fan_in = static_cast<double>(dims[dims.size() - 2] * receptive);
    const double fan_out = static_cast<double>(dims.back() * receptive);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> values(shape_size(dims));
    for (double& v : values) v = dist(rng);
    return Tensor(std::move(dims), std::move(values), true);
}

Linear Linear::create(std::size_t in, std::size_t out, Rng& rng) {
    return Linear{glorot_uniform(Shape{in, out}, rng), Tensor::zeros(Shape{out}, true)};
}

Tensor Linear::operator()(const Tensor& x) const {
    if (x.rank() == 2) return add(matmul(x, weight), bias);
    const std::size_t width = x.rank() ? x.dims().back() : 1;
    Shape out_dims = x.dims();
    out_dims.back() = out_features();
    const Tensor rows = reshape(x, Shape{x.size() / width, width});
    return reshape(add(matmul(rows, weight), bias), std::move(out_dims));
}

void Linear::collect(const std::string& prefix, ParameterList& out) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
}

Mlp Mlp::create(const std::vector<std::size_t>& widths, Rng& rng) {
    if (widths.size() < 2) throw DimensionError("Mlp needs at least input and output widths");
    Mlp mlp;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) mlp.layers.push_back(Linear::create(widths[i], widths[i + 1], rng));
    return mlp;
}

Tensor Mlp::operator()(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = layers[i](h);
        if (i + 1 < layers.size()) h = relu(h);
    }
    return h;
}

void Mlp::collect(const std::string& prefix, ParameterList& out) const {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(prefix + "." + std::to_string(i), out);
}

} // namespace slotseed::num
