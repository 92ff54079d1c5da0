#include "slotseed/slotinit/slotinit.hpp"

#include "slotseed/numcore/ops.hpp"

#include <cmath>
#include <array>
#include <numbers>
#include <random>

namespace slotseed::slots {

namespace {

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view name, const std::array<std::string_view, N>& names, const char* what) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == name) return static_cast<Enum>(i);
    throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

constexpr std::array<std::string_view, 3> method_names{"random", "kmeans", "meanshift"};
constexpr std::array<std::string_view, 4> mapping_names{"direct", "shared_mlp", "large_mlp", "pseudoweights"};

void require_centers(const Tensor& centers, std::size_t dim) {
    if (centers.rank() != 2 || centers.dim(0) == 0 || centers.dim(1) != dim) {
        throw num::DimensionError("expected M x " + std::to_string(dim) + " cluster centers, got " +
                                  num::shape_string(centers.dims()));
    }
}

Tensor large_mlp_output(const Tensor& centers, const MappingParams& params, std::size_t slots) {
    require_centers(centers, params.dim);
    if (centers.dim(0) != params.clusters) {
        throw num::DimensionError("large_mlp was built for " + std::to_string(params.clusters) + " cluster centers, got " +
                                  std::to_string(centers.dim(0)) + "; it can not generalize to other counts");
    }
    if (slots != params.slots) {
        throw num::DimensionError("large_mlp was built for K=" + std::to_string(params.slots) + ", asked for K=" +
                                  std::to_string(slots));
    }
    const Tensor flat = num::reshape(centers, {1, centers.size()});
    return num::reshape(params.net(flat), {slots, params.output_width()});
}

PseudoweightResult pseudoweights(const Tensor& centers, const MappingParams& params, std::size_t slots) {
    require_centers(centers, params.dim);
    if (slots == 0) throw num::DimensionError("pseudoweights needs K >= 1");
    const std::size_t m = centers.dim(0), d = params.dim;
    const Tensor tiled = num::expand(centers, 0, slots);                                   // K x M x D
    const Tensor codes = num::expand(positional_encoding(slots, d), 1, m);                // K x M x D
    const Tensor logits = params.net(num::concat_last(tiled, codes));                     // K x M x D
    const Tensor w = num::softmax(logits, 1);
    return {SlotSet{num::sum(num::mul(w, tiled), 1), "pseudoweights"}, w};
}

Tensor gaussian_mapping_output(const Tensor& centers, const MappingParams& params, std::size_t slots) {
    switch (params.variant) {
    case Mapping::shared_mlp:
        require_centers(centers, params.dim);
        return params.net(centers);
    case Mapping::large_mlp:
        return large_mlp_output(centers, params, slots);
    case Mapping::pseudoweights: {
        const Tensor mu = pseudoweights(centers, params, slots).slots.slots;
        return num::concat_last(mu, (*params.log_sigma_head)(mu));
    }
    case Mapping::direct:
        break;
    }
    throw UnsupportedVariant("direct mapping cannot emit Gaussian parameters");
}

void reject_gaussian(const MappingParams& params, const char* name) {
    if (params.gaussian_output) {
        throw UnsupportedVariant(std::string(name) + " parameters emit Gaussian parameters; use map_to_gaussian_and_sample");
    }
}

} // namespace

std::string_view to_string(InitMethod method) { return method_names.at(static_cast<std::size_t>(method)); }
std::string_view to_string(Mapping mapping) { return mapping_names.at(static_cast<std::size_t>(mapping)); }
InitMethod parse_method(std::string_view name) { return parse_enum<InitMethod>(name, method_names, "method"); }
Mapping parse_mapping(std::string_view name) { return parse_enum<Mapping>(name, mapping_names, "mapping"); }

Tensor positional_encoding(std::size_t slots, std::size_t dim) {
    if (dim == 0 || dim % 2 != 0) throw num::DimensionError("positional encoding needs an even D >= 2, got " + std::to_string(dim));
    if (slots == 0) throw num::DimensionError("positional encoding needs K >= 1");
    const std::size_t half = dim / 2;
    std::vector<double> table(slots * dim);
    for (std::size_t k = 0; k < slots; ++k) {
        for (std::size_t j = 0; j < half; ++j) {
            const double angle = std::numbers::pi * static_cast<double>((j + 1) * (k + 1)) / static_cast<double>(half);
            table[k * dim + 2 * j] = std::sin(angle);
            table[k * dim + 2 * j + 1] = std::cos(angle);
        }
    }
    return Tensor({slots, dim}, std::move(table));
}

MappingParams MappingParams::create(Mapping variant, std::size_t dim, std::size_t slots, std::size_t clusters,
                                    bool gaussian_output, Rng& rng) {
    if (variant == Mapping::direct && gaussian_output) throw UnsupportedVariant("direct mapping cannot emit Gaussian parameters");
    MappingParams p;
    p.variant = variant;
    p.gaussian_output = gaussian_output;
    p.dim = dim;
    p.slots = slots;
    p.clusters = clusters;
    const std::size_t out = p.output_width();
    switch (variant) {
    case Mapping::direct:
        break;
    case Mapping::shared_mlp:
        p.net = num::Mlp::create({dim, 2 * dim, out}, rng);
        break;
    case Mapping::large_mlp:
        p.net = num::Mlp::create({clusters * dim, clusters * dim, slots * out}, rng);
        break;
    case Mapping::pseudoweights:
        p.net = num::Mlp::create({2 * dim, 2 * dim, 2 * dim, dim}, rng);
        if (gaussian_output) p.log_sigma_head = num::Linear::create(dim, dim, rng);
        break;
    }
    return p;
}

void MappingParams::collect(const std::string& prefix, num::ParameterList& out) const {
    if (!net.layers.empty()) net.collect(prefix + ".net", out);
    if (log_sigma_head) log_sigma_head->collect(prefix + ".log_sigma", out);
}

SlotSet map_direct(const Tensor& centers) {
    if (centers.rank() != 2) throw num::DimensionError("expected M x D cluster centers, got " + num::shape_string(centers.dims()));
    return {centers, "direct"};
}

SlotSet map_shared_mlp(const Tensor& centers, const MappingParams& params) {
    reject_gaussian(params, "shared_mlp");
    require_centers(centers, params.dim);
    return {params.net(centers), "shared_mlp"};
}

SlotSet map_large_mlp(const Tensor& centers, const MappingParams& params, std::size_t slots) {
    reject_gaussian(params, "large_mlp");
    return {large_mlp_output(centers, params, slots), "large_mlp"};
}

PseudoweightResult map_pseudoweights(const Tensor& centers, const MappingParams& params, std::size_t slots) {
    reject_gaussian(params, "pseudoweights");
    return pseudoweights(centers, params, slots);
}

SlotSet map_to_gaussian_and_sample(const Tensor& centers, const MappingParams& params, std::size_t slots, Rng& rng) {
    if (!params.gaussian_output) throw UnsupportedVariant("mapping parameters were built without Gaussian output");
    const Tensor out = gaussian_mapping_output(centers, params, slots);
    const std::size_t d = params.dim;
    const Tensor mu = num::slice_last(out, 0, d);
    const Tensor log_sigma = num::slice_last(out, d, 2 * d);
    std::normal_distribution<double> normal;
    std::vector<double> eta(mu.size());
    for (double& e : eta) e = normal(rng);
    const Tensor noise(mu.dims(), std::move(eta));
    return {num::add(mu, num::mul(num::exp(log_sigma), noise)), std::string(to_string(params.variant)) + "+gaussian"};
}

RandomInitParams RandomInitParams::create(std::size_t dim) {
    return {Tensor::zeros({dim}, true), Tensor::zeros({dim}, true)};
}

void RandomInitParams::collect(const std::string& prefix, num::ParameterList& out) const {
    out.emplace_back(prefix + ".mu", mu);
    out.emplace_back(prefix + ".log_sigma", log_sigma);
}

SlotSet sample_random_slots(const RandomInitParams& params, std::size_t slots, Rng& rng) {
    const std::size_t d = params.mu.size();
    std::normal_distribution<double> normal;
    std::vector<double> eta(slots * d);
    for (double& e : eta) e = normal(rng);
    const Tensor noise({slots, d}, std::move(eta));
    return {num::add(num::mul(noise, num::exp(params.log_sigma)), params.mu), "random"};
}

void InitConfig::validate() const {
    if (method == InitMethod::random) return;
    if (mapping == Mapping::direct && gaussian_output) {
        throw UnsupportedVariant("direct mapping cannot emit Gaussian parameters");
    }
    if (method == InitMethod::meanshift && mapping == Mapping::large_mlp) {
        throw UnsupportedVariant("large_mlp needs a fixed cluster count; mean-shift discovers a variable one");
    }
    if (method == InitMethod::kmeans && slots == 0) throw UnsupportedVariant("k-means initialization needs K >= 1");
    if (method == InitMethod::meanshift) meanshift.validate();
}

std::size_t InitConfig::cluster_count() const {
    return mapping == Mapping::large_mlp || mapping == Mapping::pseudoweights ? 2 * slots : slots;
}

SlotInitializer SlotInitializer::create(const InitConfig& config, std::size_t dim, Rng& rng) {
    config.validate();
    SlotInitializer init;
    init.config = config;
    init.dim = dim;
    init.random = RandomInitParams::create(dim);
    if (config.uses_mapping()) {
        init.mapping = MappingParams::create(config.mapping, dim, config.slots, config.cluster_count(),
                                             config.gaussian_output, rng);
    }
    return init;
}

void SlotInitializer::collect(const std::string& prefix, num::ParameterList& out) const {
    if (config.method == InitMethod::random) {
        random.collect(prefix + ".random", out);
    } else {
        mapping.collect(prefix + ".mapping", out);
    }
}

InitResult init_slots(const Tensor& features, const SlotInitializer& init, Rng& rng, std::optional<std::size_t> slots) {
    const InitConfig& cfg = init.config;
    cfg.validate();
    if (features.rank() != 2 || features.dim(1) != init.dim) {
        throw num::DimensionError("init_slots expects N x " + std::to_string(init.dim) + " features, got " +
                                  num::shape_string(features.dims()));
    }
    InitResult result;
    const std::size_t k = slots.value_or(cfg.slots);
    if (cfg.method == InitMethod::random) {
        result.slots = sample_random_slots(init.random, k, rng);
        return result;
    }

    Tensor centers;
    std::size_t slot_count = k;
    if (cfg.method == InitMethod::kmeans) {
        // Cluster count follows the requested K; mappings with fixed M reject a mismatch.
        const std::size_t m = (cfg.mapping == Mapping::large_mlp || cfg.mapping == Mapping::pseudoweights) ? 2 * k : k;
        const cluster::FeatureGrid grid = cluster::FeatureGrid::from_tensor(features);
        result.clusters = cluster::kmeans_run(grid, cluster::KMeansConfig{m, cfg.kmeans_iterations, 0.0}, rng);
        centers = cluster::kmeans_centers(features, result.clusters);
    } else {
        const cluster::FeatureGrid grid = cluster::FeatureGrid::from_tensor(features);
        const auto indices = cluster::select_query_indices(grid, cfg.meanshift, rng);
        auto shifted = cluster::meanshift_differentiable(features, cfg.meanshift, indices, cfg.meanshift_backprop);
        centers = shifted.centers;
        result.clusters = std::move(shifted.clusters);
        slot_count = centers.dim(0);
    }

    const MappingParams& params = init.mapping;
    if (cfg.gaussian_output) {
        result.slots = map_to_gaussian_and_sample(centers, params, slot_count, rng);
        return result;
    }
    switch (cfg.mapping) {
    case Mapping::direct:
        result.slots = map_direct(centers);
        break;
    case Mapping::shared_mlp:
        result.slots = map_shared_mlp(centers, params);
        break;
    case Mapping::large_mlp:
        result.slots = map_large_mlp(centers, params, slot_count);
        break;
    case Mapping::pseudoweights: {
        auto pw = map_pseudoweights(centers, params, slot_count);
        result.slots = std::move(pw.slots);
        result.pseudoweights = std::move(pw.weights);
        break;
    }
    }
    return result;
}

} // namespace slotseed::slots
