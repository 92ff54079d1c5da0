#pragma once

#include "slotseed/scene/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace slotseed::scene {

struct BandwidthCalibration {
    double sigma = 0.0;
    double epsilon = 0.0;                  // sigma / 2
    std::vector<std::size_t> slot_counts;  // per probe image at the chosen sigma
    bool fluctuates = false;               // false if no grid value met the rule
};

/// Log grid of candidate bandwidths, coarse to fine: 2^(j/2) for j = 4 down to -16.
std::vector<double> bandwidth_grid();

/// Mean-shift bandwidth for a freshly initialized model. Walks bandwidth_grid() and
/// returns the first sigma at which the discovered slot count over `probe` takes at least
/// three distinct values. Without such a sigma, the one with the most distinct counts.
/// The model's own sigma and epsilon are ignored; the query count and seeding are kept.
BandwidthCalibration calibrate_bandwidth(const Model& model, std::span<const Tensor> probe, std::uint64_t seed);

/// Writes sigma and epsilon into both copies of the init config.
void set_bandwidth(Model& model, double sigma, double epsilon);

} // namespace slotseed::scene
