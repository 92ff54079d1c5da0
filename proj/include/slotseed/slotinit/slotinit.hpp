#pragma once

#include "slotseed/clustering/clustering.hpp"
#include "slotseed/numcore/layers.hpp"
#include "slotseed/numcore/tensor.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace slotseed::slots {

using num::Rng;
using num::Tensor;

enum class InitMethod { random, kmeans, meanshift };
enum class Mapping { direct, shared_mlp, large_mlp, pseudoweights };

std::string_view to_string(InitMethod method);
std::string_view to_string(Mapping mapping);
InitMethod parse_method(std::string_view name);
Mapping parse_mapping(std::string_view name);

/// A method/mapping combination the architecture cannot express.
class UnsupportedVariant : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// K x D sine-cosine table; row k (1-based) holds sin(j*pi*k/D'), cos(j*pi*k/D') for
/// j = 1..D' with D' = D/2. Throws DimensionError for odd or zero D.
Tensor positional_encoding(std::size_t slots, std::size_t dim);

struct SlotSet {
    Tensor slots; // K x D
    std::string origin;

    std::size_t count() const { return slots.dim(0); }
};

/// Learned mapping from M cluster centers to K slots.
struct MappingParams {
    Mapping variant = Mapping::direct;
    bool gaussian_output = false;
    std::size_t dim = 0;
    std::size_t slots = 0;    // K the parameters were built for
    std::size_t clusters = 0; // M the parameters were built for
    num::Mlp net;             // empty for direct
    /// Pseudoweights with gaussian_output: log sigma per slot from its mean.
    std::optional<num::Linear> log_sigma_head;

    /// Default shapes: shared 2 layers / hidden 2D, large 2 layers / hidden M*D,
    /// pseudoweights segregation net 3 layers / hidden 2D.
    static MappingParams create(Mapping variant, std::size_t dim, std::size_t slots, std::size_t clusters,
                                bool gaussian_output, Rng& rng);
    void collect(const std::string& prefix, num::ParameterList& out) const;
    /// Output width per slot: D, or 2D for (mu, log sigma).
    std::size_t output_width() const { return gaussian_output ? 2 * dim : dim; }
};

SlotSet map_direct(const Tensor& centers);
SlotSet map_shared_mlp(const Tensor& centers, const MappingParams& params);
/// Throws DimensionError when centers do not hold exactly params.clusters rows or K
/// differs from params.slots.
SlotSet map_large_mlp(const Tensor& centers, const MappingParams& params, std::size_t slots);

struct PseudoweightResult {
    SlotSet slots;
    Tensor weights; // K x M x D, each (k, d) column sums to 1 over m
};

/// Segregation network over every (center m, slot encoding k) pair, softmax over m per
/// (k, d), then z_k = sum_m w_km * c_m. Valid for any K and M.
PseudoweightResult map_pseudoweights(const Tensor& centers, const MappingParams& params, std::size_t slots);

/// Runs the configured mapping with doubled output, splits it into (mu, log sigma) and
/// samples z = mu + exp(log sigma) * eta with eta ~ N(0, 1) from rng.
SlotSet map_to_gaussian_and_sample(const Tensor& centers, const MappingParams& params, std::size_t slots, Rng& rng);

/// Baseline initialization: slots drawn from a learned per-dimension Gaussian.
struct RandomInitParams {
    Tensor mu;        // D, starts at 0
    Tensor log_sigma; // D, starts at 0

    static RandomInitParams create(std::size_t dim);
    void collect(const std::string& prefix, num::ParameterList& out) const;
};

SlotSet sample_random_slots(const RandomInitParams& params, std::size_t slots, Rng& rng);

struct InitConfig {
    InitMethod method = InitMethod::kmeans;
    Mapping mapping = Mapping::pseudoweights;
    bool gaussian_output = false;
    std::size_t slots = 5;
    std::size_t kmeans_iterations = 20;
    cluster::MeanShiftConfig meanshift{};
    /// Mean-shift iterations recorded for backpropagation; nullopt records all.
    std::optional<std::size_t> meanshift_backprop = 2;

    /// Throws UnsupportedVariant for combinations outside the compatibility table.
    void validate() const;
    /// Cluster count requested from k-means: 2K for large_mlp and pseudoweights, K otherwise.
    std::size_t cluster_count() const;
    /// Whether the method consumes learned mapping parameters.
    bool uses_mapping() const { return method != InitMethod::random; }
};

struct SlotInitializer {
    InitConfig config;
    std::size_t dim = 0;
    RandomInitParams random;
    MappingParams mapping;

    static SlotInitializer create(const InitConfig& config, std::size_t dim, Rng& rng);
    void collect(const std::string& prefix, num::ParameterList& out) const;
};

struct InitResult {
    SlotSet slots;
    cluster::ClusterSet clusters; // empty for random
    Tensor pseudoweights;         // set for the pseudoweights mapping
};

/// Slots for one image's N x D features. `slots` overrides config.slots (K); it is
/// ignored by mean-shift, which sets K to the discovered cluster count.
InitResult init_slots(const Tensor& features, const SlotInitializer& init, Rng& rng,
                      std::optional<std::size_t> slots = std::nullopt);

} // namespace slotseed::slots
