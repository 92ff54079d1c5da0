#pragma once

#include "slotseed/numcore/layers.hpp"
#include "slotseed/numcore/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace slotseed::metrics {

/// Adjusted Rand index of two labelings of the same points, from the contingency
/// table with exact integer pair counts. Returns 1 when the index is undefined
/// (both partitions trivial in the same way, or fewer than two points).
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct AriScore {
    double value = 1.0;
    /// No ground-truth foreground pixels: value is 1 by convention.
    bool empty_foreground = false;
};

/// ARI restricted to pixels where gt != 0.
AriScore foreground_ari(std::span<const std::size_t> pred, std::span<const std::size_t> gt);

inline constexpr double psnr_cap_db = 99.0;

/// 10 log10(1 / MSE) for images in [0, 1], capped at 99 dB.
double psnr(const num::Tensor& a, const num::Tensor& b);

/// Mean SSIM over 8x8 windows at stride 8 of the channel-mean grayscale images.
/// Inputs are H x W x C (or H x W).
double ssim(const num::Tensor& a, const num::Tensor& b);

enum class SymmetryMode { invariance, equivariance };

using SetFunction = std::function<num::Tensor(const num::Tensor&)>;

/// Largest relative deviation of f under row permutations of c (M x D):
/// invariance |f(pc) - f(c)|_inf / (1 + |f(c)|_inf), equivariance compares with p(f(c)).
/// Every permutation is tried when M <= 5, otherwise `trials` random ones.
double permutation_deviation(const SetFunction& f, const num::Tensor& c, SymmetryMode mode, std::size_t trials,
                             num::Rng& rng);

struct SceneScore {
    std::size_t scene = 0;
    double fg_ari = 0.0;
    bool empty_foreground = false;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double mse = 0.0;
    double discovered_k = 0.0;
    std::size_t iterations = 0;
};

struct EvalReport {
    std::vector<SceneScore> scenes;

    /// Mean of every numeric column over the scene rows.
    SceneScore aggregate() const;
    /// Header, one row per scene, then a row whose scene column reads "mean".
    std::string to_csv() const;
    std::string to_json() const;
};

} // namespace slotseed::metrics
