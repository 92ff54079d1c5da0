#include "slotseed/clustering/clustering.hpp"

#include "slotseed/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace slotseed::cluster {

namespace {

void require_capacity(const FeatureGrid& x, std::size_t count) {
    if (count == 0) throw CapacityError("k-means needs at least one cluster");
    if (count > x.rows()) {
        throw CapacityError("requested " + std::to_string(count) + " clusters for " + std::to_string(x.rows()) +
                            " points");
    }
}

double nearest_distance(std::span<const double> point, const FeatureGrid& centers, std::size_t used) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < used; ++c) best = std::min(best, squared_distance(point, centers.row(c)));
    return best;
}

FeatureGrid member_means(const FeatureGrid& x, const std::vector<std::size_t>& assignments, const FeatureGrid& fallback) {
    const std::size_t k = fallback.rows(), d = x.cols();
    FeatureGrid sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto dst = sums.row(assignments[i]);
        const auto src = x.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        auto dst = sums.row(c);
        if (counts[c] == 0) {
            std::copy(fallback.row(c).begin(), fallback.row(c).end(), dst.begin());
            continue;
        }
        for (double& v : dst) v /= static_cast<double>(counts[c]);
    }
    return sums;
}

// Reseeds each empty cluster at the point farthest from the surviving centers and moves
// that point into it. Donor points are taken only from clusters that keep a member.
void prevent_dying(const FeatureGrid& x, std::vector<std::size_t>& assignments, FeatureGrid& centers,
                   const std::vector<std::size_t>& empty) {
    std::vector<std::size_t> counts(centers.rows(), 0);
    for (std::size_t a : assignments) ++counts[a];
    std::vector<bool> alive(centers.rows(), true);
    for (std::size_t e : empty) alive[e] = false;

    for (std::size_t e : empty) {
        std::size_t pick = x.rows();
        double best = -1.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (counts[assignments[i]] < 2) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centers.rows(); ++c) {
                if (alive[c]) nearest = std::min(nearest, squared_distance(x.row(i), centers.row(c)));
            }
            if (nearest > best) {
                best = nearest;
                pick = i;
            }
        }
        if (pick == x.rows()) break; // unreachable while clusters <= points
        --counts[assignments[pick]];
        assignments[pick] = e;
        counts[e] = 1;
        alive[e] = true;
        std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(e).begin());
    }
    centers = member_means(x, assignments, centers);
}

} // namespace

std::size_t farthest_point(const FeatureGrid& x, const FeatureGrid& centers) {
    std::size_t pick = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double d = nearest_distance(x.row(i), centers, centers.rows());
        if (d > best) {
            best = d;
            pick = i;
        }
    }
    return pick;
}

std::vector<std::size_t> farthest_point_indices(const FeatureGrid& x, std::size_t count, std::size_t first) {
    require_capacity(x, count);
    if (first >= x.rows()) throw CapacityError("first seed index out of range");
    std::vector<std::size_t> picks{first};
    std::vector<bool> chosen(x.rows(), false);
    chosen[first] = true;
    std::vector<double> nearest(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) nearest[i] = squared_distance(x.row(i), x.row(first));
    while (picks.size() < count) {
        std::size_t pick = x.rows();
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (!chosen[i] && (pick == x.rows() || nearest[i] > nearest[pick])) pick = i;
        }
        picks.push_back(pick);
        chosen[pick] = true;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(x.row(i), x.row(pick)));
        }
    }
    return picks;
}

FeatureGrid kmeanspp_init(const FeatureGrid& x, std::size_t count, std::size_t first) {
    const auto picks = farthest_point_indices(x, count, first);
    FeatureGrid centers(count, x.cols());
    for (std::size_t c = 0; c < count; ++c) std::copy(x.row(picks[c]).begin(), x.row(picks[c]).end(), centers.row(c).begin());
    return centers;
}

FeatureGrid kmeanspp_init(const FeatureGrid& x, std::size_t count, Rng& rng) {
    require_capacity(x, count);
    std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
    return kmeanspp_init(x, count, pick(rng));
}

LloydStep lloyd_step(const FeatureGrid& x, const FeatureGrid& centers) {
    if (centers.rows() == 0) throw CapacityError("lloyd_step needs at least one center");
    LloydStep step;
    step.assignments.resize(x.rows());
    std::vector<std::size_t> counts(centers.rows(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::size_t best = 0;
        double best_d = squared_distance(x.row(i), centers.row(0));
        for (std::size_t c = 1; c < centers.rows(); ++c) {
            const double d = squared_distance(x.row(i), centers.row(c));
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        step.assignments[i] = best;
        ++counts[best];
    }
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        if (counts[c] == 0) step.empty.push_back(c);
    }
    step.centers = member_means(x, step.assignments, centers);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        step.inertia += squared_distance(x.row(i), step.centers.row(step.assignments[i]));
    }
    return step;
}

ClusterSet kmeans_run(const FeatureGrid& x, const KMeansConfig& config, std::size_t first) {
    ClusterSet result;
    FeatureGrid centers = kmeanspp_init(x, config.clusters, first);
    std::vector<std::size_t> previous;
    for (std::size_t it = 1; it <= std::max<std::size_t>(config.max_iterations, 1); ++it) {
        LloydStep step = lloyd_step(x, centers);
        const bool reinit = !step.empty.empty();
        if (reinit) prevent_dying(x, step.assignments, step.centers, step.empty);

        double shift = 0.0;
        for (std::size_t c = 0; c < centers.rows(); ++c) {
            shift = std::max(shift, std::sqrt(squared_distance(centers.row(c), step.centers.row(c))));
        }
        const bool stable = !reinit && step.assignments == previous;
        centers = std::move(step.centers);
        previous = std::move(step.assignments);
        result.iterations_used = it;
        if (stable) {
            result.converged = true;
            break;
        }
        if (!reinit && shift < config.tolerance) break;
    }
    result.centers = std::move(centers);
    result.assignments = std::move(previous);
    return result;
}

ClusterSet kmeans_run(const FeatureGrid& x, const KMeansConfig& config, Rng& rng) {
    require_capacity(x, config.clusters);
    std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
    return kmeans_run(x, config, pick(rng));
}

num::Tensor kmeans_centers(const num::Tensor& features, const ClusterSet& clusters) {
    return num::segment_mean(features, clusters.assignments, clusters.centers.rows());
}

} // namespace slotseed::cluster
