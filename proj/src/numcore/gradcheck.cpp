#include "slotseed/numcore/gradcheck.hpp"

#include "slotseed/numcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slotseed::num {

namespace {

double evaluate(const std::function<Tensor()>& loss) {
    Tape::Pause pause;
    const double v = loss().item();
    if (!std::isfinite(v)) throw DomainError("finite_difference_check: function is not finite at a probe point");
    return v;
}

void probe(const std::function<Tensor()>& loss, Tensor& param, const std::vector<double>& analytic,
           const GradCheckOptions& options, GradCheckResult& result, std::size_t offset) {
    const std::size_t n = param.size();
    const std::size_t stride =
        options.max_coordinates == 0 || n <= options.max_coordinates ? 1 : (n + options.max_coordinates - 1) / options.max_coordinates;
    auto values = param.mutable_values();
    const double h = options.step;
    for (std::size_t i = 0; i < n; i += stride) {
        const double saved = values[i];
        const double f0 = evaluate(loss);
        values[i] = saved + h;
        const double fp = evaluate(loss);
        values[i] = saved - h;
        const double fm = evaluate(loss);
        values[i] = saved;

        const double central = (fp - fm) / (2.0 * h);
        const double forward = (fp - f0) / h;
        const double backward = (f0 - fm) / h;
        const double scale = std::max(1.0, std::abs(central));
        if (std::abs(forward - backward) > options.kink_tolerance * scale) {
            result.excluded.push_back(offset + i);
            continue;
        }
        result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic[i] - central) / scale);
        ++result.checked;
    }
}

} // namespace

GradCheckResult finite_difference_check(const std::function<Tensor()>& loss, std::span<Tensor> params,
                                        const GradCheckOptions& options) {
    for (Tensor& p : params) p.zero_grad();
    {
        Tape tape;
        Tape::Scope scope(tape);
        const Tensor value = loss();
        if (!std::isfinite(value.item())) throw DomainError("finite_difference_check: function is not finite");
        tape.backward(value);
    }
    std::vector<std::vector<double>> analytic;
    for (Tensor& p : params) analytic.push_back(p.grad());

    GradCheckResult result;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].requires_grad()) probe(loss, params[k], analytic[k], options, result, offset);
        offset += params[k].size();
    }
    for (Tensor& p : params) p.zero_grad();
    return result;
}

GradCheckResult finite_difference_check(const ScalarFunction& f, const Tensor& point, const GradCheckOptions& options) {
    Tensor x(point.dims(), std::vector<double>(point.values().begin(), point.values().end()), true);
    std::vector<Tensor> params{x};
    return finite_difference_check([&] { return f(x); }, params, options);
}

} // namespace slotseed::num
