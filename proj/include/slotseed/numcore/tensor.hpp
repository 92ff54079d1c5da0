#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slotseed::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& dims);
std::string shape_string(const Shape& dims);

/// Raised when operand extents do not fit the operation.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for inputs outside an operation's mathematical domain (log of a nonpositive value).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

struct Node {
    Shape dims;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

/// Dense row-major tensor. Copies share storage; use clone() or detach() for a deep copy.
class Tensor {
  public:
    Tensor();
    Tensor(Shape dims, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(Shape dims, bool requires_grad = false);
    static Tensor full(Shape dims, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& dims() const { return node_->dims; }
    std::size_t rank() const { return node_->dims.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return node_->value.size(); }

    std::span<const double> values() const { return node_->value; }
    /// Writable view for in-place parameter updates; bypasses the tape.
    std::span<double> mutable_values() { return node_->value; }
    double operator[](std::size_t flat) const { return node_->value[flat]; }
    double at(std::initializer_list<std::size_t> index) const;
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }

    /// Accumulated gradient; zeros when nothing has flowed into this tensor.
    std::vector<double> grad() const;
    void zero_grad() { node_->grad.clear(); }

    Tensor detach() const;
    Tensor clone() const { return detach(); }

    const std::shared_ptr<Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  private:
    std::shared_ptr<Node> node_;
};

} // namespace slotseed::num
