#include "slotseed/numcore/ops.hpp"

#include "slotseed/numcore/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>

namespace slotseed::num {

namespace {

using Backward = std::function<void(const Tape::Entry&)>;

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
    if (Tape::active() == nullptr) return false;
    for (const Tensor* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

// Wraps computed values into an output tensor and, when differentiable, records the op.
Tensor finish(const char* op, Shape dims, std::vector<double> values,
              std::initializer_list<const Tensor*> inputs, Backward backward) {
    Tensor out(std::move(dims), std::move(values));
    if (any_requires_grad(inputs)) {
        out.set_requires_grad(true);
        std::vector<std::shared_ptr<Node>> nodes;
        for (const Tensor* t : inputs) nodes.push_back(t->node());
        Tape::active()->record(op, std::move(nodes), out.node(), std::move(backward));
    }
    return out;
}

bool is_suffix(const Shape& shorter, const Shape& longer) {
    if (shorter.size() > longer.size()) return false;
    return std::equal(shorter.rbegin(), shorter.rend(), longer.rbegin());
}

Shape broadcast_dims(const char* op, const Tensor& a, const Tensor& b) {
    if (is_suffix(b.dims(), a.dims())) return a.dims();
    if (is_suffix(a.dims(), b.dims())) return b.dims();
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.dims()) + " and " +
                         shape_string(b.dims()) + " do not broadcast");
}

// Calls f(i, ia, ib) for every output index i, where ia and ib index the operands. The
// shorter operand is a trailing-axes suffix, so it repeats in whole tiles.
template <class F>
void for_each_broadcast(std::size_t n, std::size_t na, std::size_t nb, F&& f) {
    if (n == 0) return;
    if (na == n && nb == n) {
        for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    } else if (na == n) {
        for (std::size_t o = 0; o < n; o += nb)
            for (std::size_t j = 0; j < nb; ++j) f(o + j, o + j, j);
    } else {
        for (std::size_t o = 0; o < n; o += na)
            for (std::size_t j = 0; j < na; ++j) f(o + j, j, o + j);
    }
}

// Accumulates a full-size gradient into a (possibly broadcast) input node.
void accumulate_broadcast(Node& target, const std::vector<double>& full, double sign = 1.0) {
    if (!target.requires_grad) return;
    const std::size_t n = target.value.size();
    if (n == 0) return;
    double* g = target.grad.data();
    for (std::size_t o = 0; o < full.size(); o += n)
        for (std::size_t j = 0; j < n; ++j) g[j] += sign * full[o + j];
}

struct AxisView {
    std::size_t outer = 1;
    std::size_t extent = 1;
    std::size_t inner = 1;
};

AxisView split_axis(const Tensor& a, std::size_t axis, const char* op) {
    if (axis >= a.rank()) {
        throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                             shape_string(a.dims()));
    }
    AxisView view;
    for (std::size_t i = 0; i < axis; ++i) view.outer *= a.dims()[i];
    view.extent = a.dims()[axis];
    for (std::size_t i = axis + 1; i < a.rank(); ++i) view.inner *= a.dims()[i];
    return view;
}

template <typename Forward, typename Derivative>
Tensor unary(const char* op, const Tensor& a, Forward f, Derivative df) {
    const auto& x = a.values();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return finish(op, a.dims(), std::move(y), {&a}, [df](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const Node& out = *e.output;
        for (std::size_t i = 0; i < in.value.size(); ++i) {
            in.grad[i] += out.grad[i] * df(in.value[i], out.value[i]);
        }
    });
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

std::ptrdiff_t ext(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

// c[p x r] += a[p x q] * b[q x r]. Every output row is accumulated over q in the same
// order whatever its position, so permuting the rows of a permutes c bit-exactly
// (blocked kernels treat edge rows differently).
void gemm_acc(const double* a, const double* b, double* __restrict c, std::size_t p, std::size_t q, std::size_t r) {
    for (std::size_t i = 0; i < p; ++i) {
        double* __restrict ci = c + i * r;
        const double* ai = a + i * q;
        for (std::size_t k = 0; k < q; ++k) {
            const double aik = ai[k];
            const double* __restrict bk = b + k * r;
            for (std::size_t j = 0; j < r; ++j) ci[j] += aik * bk[j];
        }
    }
}

// c[p x q] += a[p x r] * b[q x r]^T
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t p, std::size_t q, std::size_t r) {
    MutMap(c, ext(p), ext(q)).noalias() += ConstMap(a, ext(p), ext(r)) * ConstMap(b, ext(q), ext(r)).transpose();
}

// c[q x r] += a[p x q]^T * b[p x r]
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t p, std::size_t q, std::size_t r) {
    MutMap(c, ext(q), ext(r)).noalias() += ConstMap(a, ext(p), ext(q)).transpose() * ConstMap(b, ext(p), ext(r));
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: shapes " + shape_string(a.dims()) + " and " + shape_string(b.dims()) +
                             " are incompatible");
    }
    const std::size_t p = a.dim(0), q = a.dim(1), r = b.dim(1);
    std::vector<double> c(p * r, 0.0);
    gemm_acc(a.values().data(), b.values().data(), c.data(), p, q, r);
    return finish("matmul", Shape{p, r}, std::move(c), {&a, &b}, [p, q, r](const Tape::Entry& e) {
        Node& na = *e.inputs[0];
        Node& nb = *e.inputs[1];
        const double* dc = e.output->grad.data();
        if (na.requires_grad) gemm_nt_acc(dc, nb.value.data(), na.grad.data(), p, q, r);
        if (nb.requires_grad) gemm_tn_acc(na.value.data(), dc, nb.grad.data(), p, q, r);
    });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose: expected a matrix, got " + shape_string(a.dims()));
    const std::size_t r = a.dim(0), c = a.dim(1);
    std::vector<double> out(r * c);
    const auto& x = a.values();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
    return finish("transpose", Shape{c, r}, std::move(out), {&a}, [r, c](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& g = e.output->grad;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) in.grad[i * c + j] += g[j * r + i];
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    Shape dims = broadcast_dims("add", a, b);
    const std::size_t n = shape_size(dims);
    std::vector<double> out(n);
    const double* x = a.values().data();
    const double* y = b.values().data();
    for_each_broadcast(n, a.size(), b.size(), [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = x[ia] + y[ib]; });
    return finish("add", std::move(dims), std::move(out), {&a, &b}, [](const Tape::Entry& e) {
        accumulate_broadcast(*e.inputs[0], e.output->grad);
        accumulate_broadcast(*e.inputs[1], e.output->grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Shape dims = broadcast_dims("sub", a, b);
    const std::size_t n = shape_size(dims);
    std::vector<double> out(n);
    const double* x = a.values().data();
    const double* y = b.values().data();
    for_each_broadcast(n, a.size(), b.size(), [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = x[ia] - y[ib]; });
    return finish("sub", std::move(dims), std::move(out), {&a, &b}, [](const Tape::Entry& e) {
        accumulate_broadcast(*e.inputs[0], e.output->grad);
        accumulate_broadcast(*e.inputs[1], e.output->grad, -1.0);
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    Shape dims = broadcast_dims("mul", a, b);
    const std::size_t n = shape_size(dims);
    std::vector<double> out(n);
    const double* x = a.values().data();
    const double* y = b.values().data();
    for_each_broadcast(n, a.size(), b.size(), [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = x[ia] * y[ib]; });
    return finish("mul", std::move(dims), std::move(out), {&a, &b}, [n](const Tape::Entry& e) {
        Node& ka = *e.inputs[0];
        Node& kb = *e.inputs[1];
        const double* g = e.output->grad.data();
        const double* va = ka.value.data();
        const double* vb = kb.value.data();
        double* ga = ka.requires_grad ? ka.grad.data() : nullptr;
        double* gb = kb.requires_grad ? kb.grad.data() : nullptr;
        for_each_broadcast(n, ka.value.size(), kb.value.size(), [&](std::size_t i, std::size_t ia, std::size_t ib) {
            if (ga) ga[ia] += g[i] * vb[ib];
            if (gb) gb[ib] += g[i] * va[ia];
        });
    });
}

Tensor scale(const Tensor& a, double factor) {
    return unary("scale", a, [factor](double x) { return factor * x; },
                 [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
    return unary("add_scalar", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    for (double x : a.values()) {
        if (!(x > 0.0)) throw DomainError("log: nonpositive input " + std::to_string(x));
    }
    return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
    return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sigmoid(const Tensor& a) {
    return unary("sigmoid", a,
                 [](double x) {
                     if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                     const double z = std::exp(x);
                     return z / (1.0 + z);
                 },
                 [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
    const AxisView v = split_axis(a, axis, "softmax");
    const auto& x = a.values();
    std::vector<double> y(x.size());
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t in = 0; in < v.inner; ++in) {
            const std::size_t base = o * v.extent * v.inner + in;
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < v.extent; ++k) peak = std::max(peak, x[base + k * v.inner]);
            double total = 0.0;
            for (std::size_t k = 0; k < v.extent; ++k) {
                const double z = std::exp(x[base + k * v.inner] - peak);
                y[base + k * v.inner] = z;
                total += z;
            }
            for (std::size_t k = 0; k < v.extent; ++k) y[base + k * v.inner] /= total;
        }
    }
    return finish("softmax", a.dims(), std::move(y), {&a}, [v](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& y = e.output->value;
        const auto& g = e.output->grad;
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t i = 0; i < v.inner; ++i) {
                const std::size_t base = o * v.extent * v.inner + i;
                double dot = 0.0;
                for (std::size_t k = 0; k < v.extent; ++k) dot += g[base + k * v.inner] * y[base + k * v.inner];
                for (std::size_t k = 0; k < v.extent; ++k) {
                    const std::size_t idx = base + k * v.inner;
                    in.grad[idx] += y[idx] * (g[idx] - dot);
                }
            }
        }
    });
}

Tensor normalize_sum(const Tensor& a, std::size_t axis, double epsilon) {
    const AxisView v = split_axis(a, axis, "normalize_sum");
    const auto& x = a.values();
    std::vector<double> y(x.size());
    auto totals = std::make_shared<std::vector<double>>(v.outer * v.inner);
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t in = 0; in < v.inner; ++in) {
            const std::size_t base = o * v.extent * v.inner + in;
            double total = epsilon;
            for (std::size_t k = 0; k < v.extent; ++k) total += x[base + k * v.inner];
            (*totals)[o * v.inner + in] = total;
            for (std::size_t k = 0; k < v.extent; ++k) y[base + k * v.inner] = x[base + k * v.inner] / total;
        }
    }
    return finish("normalize_sum", a.dims(), std::move(y), {&a}, [v, totals](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& y = e.output->value;
        const auto& g = e.output->grad;
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t i = 0; i < v.inner; ++i) {
                const std::size_t base = o * v.extent * v.inner + i;
                const double total = (*totals)[o * v.inner + i];
                double dot = 0.0;
                for (std::size_t k = 0; k < v.extent; ++k) dot += g[base + k * v.inner] * y[base + k * v.inner];
                for (std::size_t k = 0; k < v.extent; ++k) {
                    const std::size_t idx = base + k * v.inner;
                    in.grad[idx] += (g[idx] - dot) / total;
                }
            }
        }
    });
}

Tensor sum(const Tensor& a, std::size_t axis) {
    const AxisView v = split_axis(a, axis, "sum");
    Shape dims = a.dims();
    dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(axis));
    const auto& x = a.values();
    std::vector<double> out(v.outer * v.inner, 0.0);
    for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t k = 0; k < v.extent; ++k) {
            const double* src = x.data() + (o * v.extent + k) * v.inner;
            double* dst = out.data() + o * v.inner;
            for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
        }
    return finish("sum", std::move(dims), std::move(out), {&a}, [v](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& g = e.output->grad;
        for (std::size_t o = 0; o < v.outer; ++o)
            for (std::size_t k = 0; k < v.extent; ++k) {
                double* dst = in.grad.data() + (o * v.extent + k) * v.inner;
                const double* src = g.data() + o * v.inner;
                for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
            }
    });
}

Tensor mean(const Tensor& a, std::size_t axis) {
    const std::size_t extent = split_axis(a, axis, "mean").extent;
    return scale(sum(a, axis), 1.0 / static_cast<double>(extent));
}

Tensor sum_all(const Tensor& a) {
    double total = 0.0;
    for (double x : a.values()) total += x;
    return finish("sum_all", Shape{}, std::vector<double>{total}, {&a}, [](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const double g = e.output->grad[0];
        for (double& d : in.grad) d += g;
    });
}

Tensor mean_all(const Tensor& a) {
    return scale(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

Tensor reshape(const Tensor& a, Shape dims) {
    if (shape_size(dims) != a.size()) {
        throw DimensionError("reshape: " + shape_string(a.dims()) + " to " + shape_string(dims));
    }
    std::vector<double> out(a.values().begin(), a.values().end());
    return finish("reshape", std::move(dims), std::move(out), {&a}, [](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        for (std::size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += e.output->grad[i];
    });
}

Tensor expand(const Tensor& a, std::size_t axis, std::size_t count) {
    if (axis > a.rank()) {
        throw DimensionError("expand: axis " + std::to_string(axis) + " out of range for " + shape_string(a.dims()));
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= a.dims()[i];
    for (std::size_t i = axis; i < a.rank(); ++i) inner *= a.dims()[i];
    Shape dims = a.dims();
    dims.insert(dims.begin() + static_cast<std::ptrdiff_t>(axis), count);
    const auto& x = a.values();
    std::vector<double> out(outer * count * inner);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t c = 0; c < count; ++c)
            std::copy_n(x.data() + o * inner, inner, out.data() + (o * count + c) * inner);
    return finish("expand", std::move(dims), std::move(out), {&a}, [outer, count, inner](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& g = e.output->grad;
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = 0; c < count; ++c) {
                const double* src = g.data() + (o * count + c) * inner;
                double* dst = in.grad.data() + o * inner;
                for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
            }
    });
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
    if (a.rank() == 0 || a.rank() != b.rank() ||
        !std::equal(a.dims().begin(), a.dims().end() - 1, b.dims().begin())) {
        throw DimensionError("concat_last: shapes " + shape_string(a.dims()) + " and " + shape_string(b.dims()) +
                             " are incompatible");
    }
    const std::size_t ca = a.dims().back(), cb = b.dims().back();
    const std::size_t rows = ca ? a.size() / ca : (cb ? b.size() / cb : 0);
    Shape dims = a.dims();
    dims.back() = ca + cb;
    std::vector<double> out(rows * (ca + cb));
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.values().data() + r * ca, ca, out.data() + r * (ca + cb));
        std::copy_n(b.values().data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
    }
    return finish("concat_last", std::move(dims), std::move(out), {&a, &b}, [rows, ca, cb](const Tape::Entry& e) {
        Node& na = *e.inputs[0];
        Node& nb = *e.inputs[1];
        const auto& g = e.output->grad;
        for (std::size_t r = 0; r < rows; ++r) {
            if (na.requires_grad)
                for (std::size_t j = 0; j < ca; ++j) na.grad[r * ca + j] += g[r * (ca + cb) + j];
            if (nb.requires_grad)
                for (std::size_t j = 0; j < cb; ++j) nb.grad[r * cb + j] += g[r * (ca + cb) + ca + j];
        }
    });
}

Tensor slice_last(const Tensor& a, std::size_t begin, std::size_t end) {
    if (a.rank() == 0 || begin > end || end > a.dims().back()) {
        throw DimensionError("slice_last: [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") out of range for " + shape_string(a.dims()));
    }
    const std::size_t width = a.dims().back(), take = end - begin;
    const std::size_t rows = width ? a.size() / width : 0;
    Shape dims = a.dims();
    dims.back() = take;
    std::vector<double> out(rows * take);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(a.values().data() + r * width + begin, take, out.data() + r * take);
    return finish("slice_last", std::move(dims), std::move(out), {&a}, [rows, width, begin, take](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& g = e.output->grad;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < take; ++j) in.grad[r * width + begin + j] += g[r * take + j];
    });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
    if (a.rank() != 2) throw DimensionError("gather_rows: expected a matrix, got " + shape_string(a.dims()));
    const std::size_t n = a.dim(0), d = a.dim(1);
    auto index = std::make_shared<std::vector<std::size_t>>(rows.begin(), rows.end());
    std::vector<double> out(index->size() * d);
    for (std::size_t i = 0; i < index->size(); ++i) {
        if ((*index)[i] >= n) throw DimensionError("gather_rows: row " + std::to_string((*index)[i]) + " out of range");
        std::copy_n(a.values().data() + (*index)[i] * d, d, out.data() + i * d);
    }
    return finish("gather_rows", Shape{index->size(), d}, std::move(out), {&a}, [index, d](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& g = e.output->grad;
        for (std::size_t i = 0; i < index->size(); ++i)
            for (std::size_t j = 0; j < d; ++j) in.grad[(*index)[i] * d + j] += g[i * d + j];
    });
}

Tensor segment_mean(const Tensor& a, std::span<const std::size_t> segments, std::size_t count) {
    if (a.rank() != 2 || segments.size() != a.dim(0)) {
        throw DimensionError("segment_mean: " + std::to_string(segments.size()) + " segment ids for " +
                             shape_string(a.dims()));
    }
    const std::size_t n = a.dim(0), d = a.dim(1);
    auto ids = std::make_shared<std::vector<std::size_t>>(segments.begin(), segments.end());
    auto members = std::make_shared<std::vector<double>>(count, 0.0);
    std::vector<double> out(count * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = (*ids)[i];
        if (s >= count) throw DimensionError("segment_mean: segment id " + std::to_string(s) + " >= " + std::to_string(count));
        (*members)[s] += 1.0;
        for (std::size_t j = 0; j < d; ++j) out[s * d + j] += a.values()[i * d + j];
    }
    for (std::size_t s = 0; s < count; ++s) {
        if ((*members)[s] == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) out[s * d + j] /= (*members)[s];
    }
    return finish("segment_mean", Shape{count, d}, std::move(out), {&a}, [ids, members, d](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& g = e.output->grad;
        for (std::size_t i = 0; i < ids->size(); ++i) {
            const std::size_t s = (*ids)[i];
            const double w = 1.0 / (*members)[s];
            for (std::size_t j = 0; j < d; ++j) in.grad[i * d + j] += w * g[s * d + j];
        }
    });
}

Tensor conv2d_same(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    if (input.rank() != 3 || kernels.rank() != 4 || kernels.dim(0) != 3 || kernels.dim(1) != 3) {
        throw DimensionError("conv2d_same: input " + shape_string(input.dims()) + " and kernels " +
                             shape_string(kernels.dims()) + " must be HxWxC and 3x3xCinxCout");
    }
    const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2), cout = kernels.dim(3);
    if (kernels.dim(2) != cin) {
        throw DimensionError("conv2d_same: kernels expect " + std::to_string(kernels.dim(2)) +
                             " input channels, input has " + std::to_string(cin));
    }
    if (bias.size() != cout) {
        throw DimensionError("conv2d_same: bias " + shape_string(bias.dims()) + " for " + std::to_string(cout) +
                             " output channels");
    }
    const std::size_t patch = 9 * cin;
    auto cols = std::make_shared<std::vector<double>>(h * w * patch, 0.0);
    const auto& x = input.values();
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t xx = 0; xx < w; ++xx) {
            double* row = cols->data() + (y * w + xx) * patch;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - 1;
                    if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
                    std::copy_n(x.data() + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * cin,
                                cin, row + (ky * 3 + kx) * cin);
                }
            }
        }
    std::vector<double> out(h * w * cout);
    for (std::size_t p = 0; p < h * w; ++p) std::copy_n(bias.values().data(), cout, out.data() + p * cout);
    gemm_acc(cols->data(), kernels.values().data(), out.data(), h * w, patch, cout);
    return finish("conv2d_same", Shape{h, w, cout}, std::move(out), {&input, &kernels, &bias},
                  [cols, h, w, cin, cout, patch](const Tape::Entry& e) {
                      Node& nin = *e.inputs[0];
                      Node& nk = *e.inputs[1];
                      Node& nb = *e.inputs[2];
                      const auto& g = e.output->grad;
                      if (nk.requires_grad) gemm_tn_acc(cols->data(), g.data(), nk.grad.data(), h * w, patch, cout);
                      if (nb.requires_grad)
                          for (std::size_t p = 0; p < h * w; ++p)
                              for (std::size_t c = 0; c < cout; ++c) nb.grad[c] += g[p * cout + c];
                      if (!nin.requires_grad) return;
                      std::vector<double> dcols(h * w * patch, 0.0);
                      gemm_nt_acc(g.data(), nk.value.data(), dcols.data(), h * w, patch, cout);
                      for (std::size_t y = 0; y < h; ++y)
                          for (std::size_t xx = 0; xx < w; ++xx) {
                              const double* row = dcols.data() + (y * w + xx) * patch;
                              for (std::size_t ky = 0; ky < 3; ++ky) {
                                  const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
                                  if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                                  for (std::size_t kx = 0; kx < 3; ++kx) {
                                      const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - 1;
                                      if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
                                      double* dst = nin.grad.data() +
                                                    (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * cin;
                                      const double* src = row + (ky * 3 + kx) * cin;
                                      for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
                                  }
                              }
                          }
                  });
}

Tensor layer_norm(const Tensor& a, double epsilon) {
    if (a.rank() == 0) throw DimensionError("layer_norm: scalar input");
    const std::size_t width = a.dims().back();
    const std::size_t rows = width ? a.size() / width : 0;
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    std::vector<double> y(a.size());
    const auto& x = a.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = x.data() + r * width;
        double mu = 0.0;
        for (std::size_t j = 0; j < width; ++j) mu += src[j];
        mu /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t j = 0; j < width; ++j) var += (src[j] - mu) * (src[j] - mu);
        var /= static_cast<double>(width);
        const double s = 1.0 / std::sqrt(var + epsilon);
        (*inv_std)[r] = s;
        for (std::size_t j = 0; j < width; ++j) y[r * width + j] = (src[j] - mu) * s;
    }
    return finish("layer_norm", a.dims(), std::move(y), {&a}, [rows, width, inv_std](const Tape::Entry& e) {
        Node& in = *e.inputs[0];
        const auto& y = e.output->value;
        const auto& g = e.output->grad;
        const double n = static_cast<double>(width);
        for (std::size_t r = 0; r < rows; ++r) {
            double mean_g = 0.0, mean_gy = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
                mean_g += g[r * width + j];
                mean_gy += g[r * width + j] * y[r * width + j];
            }
            mean_g /= n;
            mean_gy /= n;
            for (std::size_t j = 0; j < width; ++j) {
                const std::size_t idx = r * width + j;
                in.grad[idx] += (*inv_std)[r] * (g[idx] - mean_g - y[idx] * mean_gy);
            }
        }
    });
}

} // namespace slotseed::num
