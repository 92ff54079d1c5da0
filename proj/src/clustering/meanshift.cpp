#include "slotseed/clustering/clustering.hpp"

#include "slotseed/numcore/ops.hpp"
#include "slotseed/numcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace slotseed::cluster {

namespace {

// Precomputed data-side terms of the kernel logits. With the query norm dropped (it is
// constant along the softmax axis), log p(n|q) = (q . x_n - |x_n|^2 / 2) / sigma^2 + const.
struct ShiftKernel {
    num::Tensor data;
    num::Tensor data_t;
    num::Tensor half_norms;
    double inv_variance;

    ShiftKernel(const num::Tensor& x, double sigma)
        : data(x), data_t(num::transpose(x)), half_norms(num::scale(num::sum(num::square(x), 1), 0.5)),
          inv_variance(1.0 / (sigma * sigma)) {}

    num::Tensor weights(const num::Tensor& queries) const {
        const num::Tensor logits = num::scale(num::sub(num::matmul(queries, data_t), half_norms), inv_variance);
        return num::softmax(logits, 1);
    }

    num::Tensor step(const num::Tensor& queries) const { return num::matmul(weights(queries), data); }
};

double max_displacement(const num::Tensor& before, const num::Tensor& after) {
    const std::size_t q = before.dim(0), d = before.dim(1);
    double worst = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = after[i * d + j] - before[i * d + j];
            s += diff * diff;
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

void check_indices(std::size_t n, std::span<const std::size_t> indices) {
    if (indices.empty()) throw CapacityError("mean-shift needs at least one initial query");
    for (std::size_t i : indices) {
        if (i >= n) throw CapacityError("mean-shift start index " + std::to_string(i) + " out of range");
    }
}

} // namespace

void MeanShiftConfig::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("mean-shift sigma must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("mean-shift epsilon must be positive");
    if (initial_centers == 0) throw std::invalid_argument("mean-shift needs at least one initial center");
}

std::vector<double> gaussian_kernel_weights(std::span<const double> query, const FeatureGrid& x, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("kernel bandwidth must be positive");
    std::vector<double> w(x.rows());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < x.rows(); ++n) {
        w[n] = -0.5 * squared_distance(query, x.row(n)) / (sigma * sigma);
        peak = std::max(peak, w[n]);
    }
    double total = 0.0;
    for (double& v : w) {
        v = std::exp(v - peak);
        total += v;
    }
    for (double& v : w) v /= total;
    return w;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
    if (count > n) throw CapacityError("cannot sample " + std::to_string(count) + " of " + std::to_string(n) + " points");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(count);
    return pool;
}

DifferentiableMeanShift meanshift_differentiable(const num::Tensor& features, const MeanShiftConfig& config,
                                                 std::span<const std::size_t> initial_indices,
                                                 std::optional<std::size_t> backprop_iterations) {
    config.validate();
    if (features.rank() != 2) throw num::DimensionError("mean-shift needs an N x D feature matrix");
    check_indices(features.dim(0), initial_indices);

    DifferentiableMeanShift out;
    ClusterSet& result = out.clusters;
    result.initial_indices.assign(initial_indices.begin(), initial_indices.end());

    // Detached pass: fixes the iteration count and keeps the trajectory so the taped
    // window can start from the matching intermediate positions.
    std::vector<num::Tensor> trajectory;
    {
        num::Tape::Pause pause;
        const num::Tensor detached = features.detach();
        const ShiftKernel kernel(detached, config.sigma);
        trajectory.push_back(num::gather_rows(detached, initial_indices));
        while (trajectory.size() - 1 < config.max_iterations) {
            num::Tensor next = kernel.step(trajectory.back());
            const double moved = max_displacement(trajectory.back(), next);
            trajectory.push_back(std::move(next));
            if (moved < config.fixed_point_tolerance) {
                result.converged = true;
                break;
            }
        }
    }
    const std::size_t iterations = trajectory.size() - 1;
    result.iterations_used = iterations;

    const std::size_t taped = backprop_iterations ? std::min(*backprop_iterations, iterations) : iterations;
    num::Tensor q = trajectory[iterations - taped];
    if (!backprop_iterations) q = num::gather_rows(features, initial_indices);
    if (taped > 0) {
        const ShiftKernel kernel(features, config.sigma);
        for (std::size_t it = 0; it < taped; ++it) q = kernel.step(q);
    }

    result.query_points = FeatureGrid::from_tensor(q.detach());
    Components merged = connected_components_merge(result.query_points, config.epsilon);
    result.membership = std::move(merged.membership);
    out.centers = num::segment_mean(q, result.membership, merged.representatives.rows());
    result.centers = FeatureGrid::from_tensor(out.centers.detach());
    return out;
}

ClusterSet meanshift_run(const FeatureGrid& x, const MeanShiftConfig& config,
                         std::span<const std::size_t> initial_indices) {
    num::Tape::Pause pause;
    return meanshift_differentiable(x.to_tensor(), config, initial_indices, 0).clusters;
}

std::vector<std::size_t> select_query_indices(const FeatureGrid& x, const MeanShiftConfig& config, Rng& rng) {
    config.validate();
    if (config.initial_centers > x.rows()) {
        throw CapacityError("mean-shift asks for " + std::to_string(config.initial_centers) + " queries from " +
                            std::to_string(x.rows()) + " points");
    }
    if (config.seeding == QuerySeeding::uniform) return sample_without_replacement(x.rows(), config.initial_centers, rng);
    std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
    return farthest_point_indices(x, config.initial_centers, pick(rng));
}

ClusterSet meanshift_run(const FeatureGrid& x, const MeanShiftConfig& config, Rng& rng) {
    return meanshift_run(x, config, select_query_indices(x, config, rng));
}

} // namespace slotseed::cluster
