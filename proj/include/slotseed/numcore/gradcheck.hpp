#pragma once

#include "slotseed/numcore/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace slotseed::num {

struct GradCheckOptions {
    double step = 1e-5;
    /// One-sided slopes differing by more than this (relative) mark a non-smooth point.
    double kink_tolerance = 1e-2;
    /// Checks at most this many coordinates per tensor (evenly strided); 0 checks all.
    std::size_t max_coordinates = 0;
};

struct GradCheckResult {
    /// max over checked coordinates of |analytic - central| / max(1, |central|)
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    /// Flat coordinates skipped because the function has a kink there.
    std::vector<std::size_t> excluded;

    bool passed(double tolerance) const { return checked > 0 && max_rel_error < tolerance; }
};

using ScalarFunction = std::function<Tensor(const Tensor&)>;

/// Compares the tape gradient of a scalar function with central differences at `point`.
/// Throws DomainError if f is non-finite at any probe point.
GradCheckResult finite_difference_check(const ScalarFunction& f, const Tensor& point,
                                        const GradCheckOptions& options = {});

/// Same check against every requires_grad tensor in `params`; `loss` re-evaluates the
/// function reading the parameters' current values.
GradCheckResult finite_difference_check(const std::function<Tensor()>& loss, std::span<Tensor> params,
                                        const GradCheckOptions& options = {});

} // namespace slotseed::num
