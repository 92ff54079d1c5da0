#include "slotseed/clustering/clustering.hpp"

#include <string>

namespace slotseed::cluster {

FeatureGrid::FeatureGrid(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

FeatureGrid::FeatureGrid(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw num::DimensionError("feature grid " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
                                  std::to_string(values_.size()) + " values");
    }
}

FeatureGrid FeatureGrid::from_tensor(const num::Tensor& t) {
    if (t.rank() != 2) throw num::DimensionError("feature grid needs a matrix, got " + num::shape_string(t.dims()));
    return FeatureGrid(t.dim(0), t.dim(1), std::vector<double>(t.values().begin(), t.values().end()));
}

num::Tensor FeatureGrid::to_tensor() const { return num::Tensor(num::Shape{rows_, cols_}, values_); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace slotseed::cluster
