#include "slotseed/cli/cli.hpp"

#include "slotseed/clustering/clustering.hpp"
#include "slotseed/numcore/gradcheck.hpp"
#include "slotseed/numcore/ops.hpp"
#include "slotseed/numcore/tape.hpp"
#include "slotseed/slotinit/slotinit.hpp"

#include <algorithm>
#include <functional>

namespace slotseed::cli {

namespace {

using num::Rng;
using num::Shape;
using num::Tensor;
using namespace num;

constexpr double op_tolerance = 1e-4;
constexpr double pipeline_tolerance = 1e-3;

Tensor uniform(const Shape& dims, Rng& rng, double lo, double hi) {
    std::vector<double> v(num::shape_size(dims));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& x : v) x = u(rng);
    return Tensor(dims, std::move(v));
}

// Values bounded away from zero so relu-style kinks stay outside the probe step.
Tensor off_kink(const Shape& dims, Rng& rng) {
    Tensor t = uniform(dims, rng, 0.1, 1.0);
    std::bernoulli_distribution flip(0.5);
    for (double& x : t.mutable_values())
        if (flip(rng)) x = -x;
    return t;
}

GradcheckRow worst_of(std::string name, double tolerance, const std::function<GradCheckResult()>& once, int points) {
    GradcheckRow row{std::move(name), 0.0, 0, tolerance};
    for (int i = 0; i < points; ++i) {
        const GradCheckResult r = once();
        row.max_rel_error = std::max(row.max_rel_error, r.max_rel_error);
        row.checked += r.checked;
    }
    return row;
}

void op_rows(Rng& rng, std::vector<GradcheckRow>& rows) {
    const Tensor mix = uniform({3, 4}, rng, -1, 1);
    const Tensor rhs = uniform({4, 2}, rng, -1, 1);
    const Tensor row = uniform({4}, rng, -1, 1);
    const std::vector<std::size_t> segments{0, 2, 2};
    const std::vector<std::size_t> picks{2, 0, 2};
    const auto weighted = [&mix](const Tensor& t) { return sum_all(mul(t, mix)); };

    struct Case {
        const char* name;
        ScalarFunction f;
        Shape dims;
        bool positive = false;
    };
    const std::vector<Case> cases{
        {"matmul", [&](const Tensor& x) { return sum_all(square(matmul(x, rhs))); }, {3, 4}},
        {"transpose", [&](const Tensor& x) { return weighted(transpose(x)); }, {4, 3}},
        {"add", [&](const Tensor& x) { return weighted(add(mix, x)); }, {4}},
        {"sub", [&](const Tensor& x) { return weighted(sub(row, x)); }, {3, 4}},
        {"mul", [&](const Tensor& x) { return sum_all(mul(x, x)); }, {3, 4}},
        {"scale", [&](const Tensor& x) { return weighted(scale(x, -2.5)); }, {3, 4}},
        {"add_scalar", [&](const Tensor& x) { return weighted(add_scalar(x, 0.3)); }, {3, 4}},
        {"relu", [&](const Tensor& x) { return weighted(relu(x)); }, {3, 4}},
        {"exp", [&](const Tensor& x) { return weighted(exp(x)); }, {3, 4}},
        {"log", [&](const Tensor& x) { return weighted(log(x)); }, {3, 4}, true},
        {"square", [&](const Tensor& x) { return weighted(square(x)); }, {3, 4}},
        {"sigmoid", [&](const Tensor& x) { return weighted(sigmoid(x)); }, {3, 4}},
        {"tanh", [&](const Tensor& x) { return weighted(tanh(x)); }, {3, 4}},
        {"softmax", [&](const Tensor& x) { return weighted(softmax(x, 1)); }, {3, 4}},
        {"normalize_sum", [&](const Tensor& x) { return weighted(normalize_sum(x, 0)); }, {3, 4}, true},
        {"sum", [&](const Tensor& x) { return sum_all(mul(sum(x, 0), row)); }, {3, 4}},
        {"mean", [&](const Tensor& x) { return weighted(expand(mean(x, 0), 0, 3)); }, {3, 4}},
        {"sum_all", [&](const Tensor& x) { return mul(sum_all(x), sum_all(mix)); }, {3, 4}},
        {"mean_all", [&](const Tensor& x) { return mul(mean_all(x), sum_all(mix)); }, {3, 4}},
        {"reshape", [&](const Tensor& x) { return weighted(reshape(x, {3, 4})); }, {2, 6}},
        {"expand", [&](const Tensor& x) { return weighted(expand(x, 0, 3)); }, {4}},
        {"concat_last", [&](const Tensor& x) { return weighted(concat_last(x, slice_last(mix, 0, 1))); }, {3, 3}},
        {"slice_last", [&](const Tensor& x) { return weighted(slice_last(x, 1, 5)); }, {3, 6}},
        {"gather_rows", [&](const Tensor& x) { return weighted(gather_rows(x, picks)); }, {3, 4}},
        {"segment_mean", [&](const Tensor& x) { return weighted(segment_mean(x, segments, 3)); }, {3, 4}},
        {"layer_norm", [&](const Tensor& x) { return weighted(layer_norm(x)); }, {3, 4}},
    };
    for (const Case& c : cases) {
        rows.push_back(worst_of(c.name, op_tolerance, [&] {
            const Tensor x = c.positive ? uniform(c.dims, rng, 0.2, 2.0) : off_kink(c.dims, rng);
            return finite_difference_check(c.f, x);
        }, 5));
    }

    const Tensor kernels = uniform({3, 3, 2, 3}, rng, -1, 1);
    const Tensor weights = uniform({4, 4, 3}, rng, -1, 1);
    rows.push_back(worst_of("conv2d_same", op_tolerance, [&] {
        const Tensor bias = uniform({3}, rng, -1, 1);
        Tensor k = off_kink({3, 3, 2, 3}, rng), x = off_kink({4, 4, 2}, rng);
        k.set_requires_grad(true);
        x.set_requires_grad(true);
        std::vector<Tensor> params{k, x};
        return finite_difference_check([&] { return sum_all(mul(conv2d_same(x, k, bias), weights)); }, params);
    }, 5));
}

void mapping_rows(Rng& rng, std::vector<GradcheckRow>& rows) {
    const std::size_t d = 4, k = 3, m = 5;
    for (auto [variant, name] : std::vector<std::pair<slots::Mapping, const char*>>{
             {slots::Mapping::shared_mlp, "map_shared_mlp"},
             {slots::Mapping::large_mlp, "map_large_mlp"},
             {slots::Mapping::pseudoweights, "map_pseudoweights"}}) {
        rows.push_back(worst_of(name, op_tolerance, [&] {
            const std::size_t clusters = variant == slots::Mapping::shared_mlp ? k : m;
            const slots::MappingParams p = slots::MappingParams::create(variant, d, k, clusters, false, rng);
            Tensor centers = off_kink({clusters, d}, rng);
            centers.set_requires_grad(true);
            const Tensor w = uniform({k, d}, rng, -1, 1);
            std::vector<Tensor> params = num::tensors_of([&] {
                num::ParameterList list;
                p.collect("m", list);
                return list;
            }());
            params.push_back(centers);
            return finite_difference_check([&] {
                Tensor s;
                if (variant == slots::Mapping::shared_mlp) s = slots::map_shared_mlp(centers, p).slots;
                else if (variant == slots::Mapping::large_mlp) s = slots::map_large_mlp(centers, p, k).slots;
                else s = slots::map_pseudoweights(centers, p, k).slots.slots;
                return sum_all(mul(s, w));
            }, params);
        }, 3));
    }

    rows.push_back(worst_of("map_to_gaussian_and_sample", op_tolerance, [&] {
        const slots::MappingParams p = slots::MappingParams::create(slots::Mapping::pseudoweights, d, k, m, true, rng);
        Tensor centers = off_kink({m, d}, rng);
        centers.set_requires_grad(true);
        const Tensor w = uniform({k, d}, rng, -1, 1);
        const std::uint64_t noise_seed = rng();
        std::vector<Tensor> params{centers};
        return finite_difference_check([&] {
            Rng noise(noise_seed);
            return sum_all(mul(slots::map_to_gaussian_and_sample(centers, p, k, noise).slots, w));
        }, params);
    }, 3));
}

void clustering_rows(Rng& rng, std::vector<GradcheckRow>& rows) {
    rows.push_back(worst_of("kmeans_centers", op_tolerance, [&] {
        Tensor x = uniform({12, 3}, rng, -1, 1);
        const cluster::ClusterSet clusters = cluster::kmeans_run(cluster::FeatureGrid::from_tensor(x), {3, 20, 0.0}, rng);
        x.set_requires_grad(true);
        const Tensor w = uniform({3, 3}, rng, -1, 1);
        std::vector<Tensor> params{x};
        return finite_difference_check([&] { return sum_all(mul(cluster::kmeans_centers(x, clusters), w)); }, params);
    }, 3));

    rows.push_back(worst_of("meanshift_differentiable", op_tolerance, [&] {
        Tensor x = uniform({12, 3}, rng, -1, 1);
        cluster::MeanShiftConfig cfg;
        cfg.sigma = 0.6;
        cfg.epsilon = 1e-3;
        cfg.initial_centers = 4;
        cfg.max_iterations = 10;
        cfg.fixed_point_tolerance = 0.0;
        const std::vector<std::size_t> starts{0, 3, 6, 9};
        x.set_requires_grad(true);
        std::vector<Tensor> params{x};
        const Tensor w = uniform({3}, rng, -1, 1);
        return finite_difference_check([&] {
            return sum_all(square(add(cluster::meanshift_differentiable(x, cfg, starts, std::nullopt).centers, w)));
        }, params);
    }, 3));
}

void pipeline_rows(std::uint64_t seed, const std::optional<slots::InitConfig>& extra, std::vector<GradcheckRow>& rows) {
    data::SceneConfig sc;
    sc.height = sc.width = 8;
    sc.min_size = 3;
    sc.max_size = 5;
    Rng scene_rng(seed);
    const Tensor image = data::generate_scene(scene_rng, sc).image();

    struct Path {
        std::string name;
        slots::InitMethod method;
        slots::Mapping mapping;
        bool gaussian = false;
    };
    std::vector<Path> paths{{"end_to_end_kmeans", slots::InitMethod::kmeans, slots::Mapping::pseudoweights},
                            {"end_to_end_meanshift", slots::InitMethod::meanshift, slots::Mapping::shared_mlp},
                            {"end_to_end_random", slots::InitMethod::random, slots::Mapping::direct}};
    if (extra) {
        paths.push_back({"end_to_end_" + std::string(slots::to_string(extra->method)) + "+" +
                             std::string(slots::to_string(extra->mapping)) + (extra->gaussian_output ? "+gaussian" : ""),
                         extra->method, extra->mapping, extra->gaussian_output});
    }
    for (const Path& path : paths) {
        scene::ModelConfig cfg;
        cfg.height = cfg.width = 8;
        cfg.dim = 4;
        cfg.encoder_hidden = 3;
        cfg.decoder_hidden = 5;
        cfg.iterations = 2;
        cfg.init.method = path.method;
        cfg.init.mapping = path.mapping;
        cfg.init.gaussian_output = path.gaussian;
        cfg.init.slots = 2;
        cfg.init.meanshift.sigma = 0.5;
        cfg.init.meanshift.epsilon = 0.25;
        cfg.init.meanshift.initial_centers = 4;
        cfg.init.meanshift.max_iterations = 10;
        cfg.init.meanshift.fixed_point_tolerance = 0.0;
        cfg.init.meanshift_backprop = std::nullopt;
        Rng rng(seed + 1);
        const scene::Model model = scene::Model::create(cfg, rng);
        // Zero biases leave dead pixels exactly on relu(0); probe a generic point instead.
        for (auto& [name, t] : model.parameters()) {
            if (!name.ends_with("bias")) continue;
            Tensor w = t;
            for (double& v : w.mutable_values()) v = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
        }
        std::vector<Tensor> params = num::tensors_of(model.parameters());
        GradCheckOptions opts;
        opts.max_coordinates = 12;
        const GradCheckResult r = finite_difference_check([&] {
            Rng fixed(seed + 2);
            return scene::reconstruction_loss(scene::forward(image, model, fixed).rendered.reconstruction, image);
        }, params, opts);
        rows.push_back({path.name, r.max_rel_error, r.checked, pipeline_tolerance});
    }
}

} // namespace

std::vector<GradcheckRow> gradcheck_suite(std::uint64_t seed, const std::optional<slots::InitConfig>& extra) {
    Rng rng(seed);
    std::vector<GradcheckRow> rows;
    op_rows(rng, rows);
    mapping_rows(rng, rows);
    clustering_rows(rng, rows);
    pipeline_rows(seed, extra, rows);
    return rows;
}

} // namespace slotseed::cli
