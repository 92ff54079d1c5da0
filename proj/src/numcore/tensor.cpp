#include "slotseed/numcore/tensor.hpp"

#include <functional>
#include <numeric>
#include <sstream>

namespace slotseed::num {

std::size_t shape_size(const Shape& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& dims) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out << 'x';
        out << dims[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor() : Tensor(Shape{}, std::vector<double>{0.0}) {}

Tensor::Tensor(Shape dims, std::vector<double> values, bool requires_grad)
    : node_(std::make_shared<Node>()) {
    if (shape_size(dims) != values.size()) {
        throw DimensionError("tensor " + shape_string(dims) + " needs " +
                             std::to_string(shape_size(dims)) + " values, got " +
                             std::to_string(values.size()));
    }
    node_->dims = std::move(dims);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape dims, bool requires_grad) { return full(std::move(dims), 0.0, requires_grad); }

Tensor Tensor::full(Shape dims, double value, bool requires_grad) {
    const std::size_t n = shape_size(dims);
    return Tensor(std::move(dims), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(Shape{}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                             shape_string(dims()));
    }
    return node_->dims[axis];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != rank()) throw DimensionError("index rank mismatch for " + shape_string(dims()));
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= node_->dims[axis]) throw DimensionError("index out of range for " + shape_string(dims()));
        flat = flat * node_->dims[axis] + i;
        ++axis;
    }
    return node_->value[flat];
}

double Tensor::item() const {
    if (size() != 1) throw DimensionError("item() on tensor " + shape_string(dims()));
    return node_->value[0];
}

std::vector<double> Tensor::grad() const {
    if (node_->grad.size() != node_->value.size()) return std::vector<double>(size(), 0.0);
    return node_->grad;
}

Tensor Tensor::detach() const { return Tensor(node_->dims, node_->value, false); }

} // namespace slotseed::num
