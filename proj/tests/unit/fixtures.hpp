#pragma once

#include "slotseed/clustering/clustering.hpp"
#include "slotseed/numcore/tensor.hpp"

#include <random>
#include <vector>

namespace slotseed::testing {

struct Blobs {
    cluster::FeatureGrid points;
    std::vector<std::size_t> labels;
    cluster::FeatureGrid means; // true generator means
};

/// `groups` isotropic Gaussian blobs with centers `separation` apart along a random
/// direction per axis pair, each with `per_group` points of std `spread`.
inline Blobs make_blobs(std::size_t groups, std::size_t per_group, std::size_t dim, double separation, double spread,
                        num::Rng& rng) {
    std::normal_distribution<double> noise(0.0, spread);
    Blobs b;
    b.points = cluster::FeatureGrid(groups * per_group, dim);
    b.means = cluster::FeatureGrid(groups, dim);
    for (std::size_t g = 0; g < groups; ++g) {
        // Centers on a line through the origin along the first axis, offset on the
        // second so that all pairs are at least `separation` apart.
        b.means.row(g)[0] = separation * static_cast<double>(g);
        if (dim > 1) b.means.row(g)[1] = (g % 2) * separation * 0.5;
    }
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t i = 0; i < per_group; ++i) {
            auto row = b.points.row(g * per_group + i);
            for (std::size_t j = 0; j < dim; ++j) row[j] = b.means.row(g)[j] + noise(rng);
            b.labels.push_back(g);
        }
    return b;
}

inline num::Tensor random_tensor(num::Shape dims, num::Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(num::shape_size(dims));
    for (double& x : v) x = dist(rng);
    return num::Tensor(std::move(dims), std::move(v));
}

} // namespace slotseed::testing
