#pragma once

#include "slotseed/numcore/tensor.hpp"

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace slotseed::num {

using Rng = std::mt19937_64;

/// Named trainable tensors in a fixed order (checkpoint and optimizer order).
using ParameterList = std::vector<std::pair<std::string, Tensor>>;

std::vector<Tensor> tensors_of(const ParameterList& params);

/// Glorot-uniform initialized trainable tensor of the given shape (fan-in/out from
/// the last two axes).
Tensor glorot_uniform(Shape dims, Rng& rng);

struct Linear {
    Tensor weight; // in x out
    Tensor bias;   // out

    static Linear create(std::size_t in, std::size_t out, Rng& rng);
    std::size_t in_features() const { return weight.dim(0); }
    std::size_t out_features() const { return weight.dim(1); }

    /// rows x in -> rows x out; inputs of higher rank are treated as flattened rows.
    Tensor operator()(const Tensor& x) const;
    void collect(const std::string& prefix, ParameterList& out) const;
};

/// Fully connected stack with relu between layers and a linear output.
struct Mlp {
    std::vector<Linear> layers;

    /// widths = {in, hidden..., out}
    static Mlp create(const std::vector<std::size_t>& widths, Rng& rng);
    std::size_t in_features() const { return layers.front().in_features(); }
    std::size_t out_features() const { return layers.back().out_features(); }

    Tensor operator()(const Tensor& x) const;
    void collect(const std::string& prefix, ParameterList& out) const;
};

} // namespace slotseed::num
