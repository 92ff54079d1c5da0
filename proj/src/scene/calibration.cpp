#include "slotseed/scene/calibration.hpp"

#include "slotseed/numcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace slotseed::scene {

std::vector<double> bandwidth_grid() {
    std::vector<double> grid;
    for (int j = 4; j >= -16; --j) grid.push_back(std::exp2(0.5 * j));
    return grid;
}

BandwidthCalibration calibrate_bandwidth(const Model& model, std::span<const Tensor> probe, std::uint64_t seed) {
    if (model.config.init.method != slots::InitMethod::meanshift) {
        throw std::invalid_argument("bandwidth calibration needs a mean-shift model");
    }
    if (probe.empty()) throw DegenerateInput("bandwidth calibration needs probe images");

    num::Tape::Pause pause;
    std::vector<Tensor> features;
    for (const Tensor& image : probe) features.push_back(encode(image, model.encoder));

    BandwidthCalibration best;
    std::size_t best_distinct = 0;
    slots::SlotInitializer init = model.init;
    for (double sigma : bandwidth_grid()) {
        init.config.meanshift.sigma = sigma;
        init.config.meanshift.epsilon = sigma / 2;
        std::vector<std::size_t> counts;
        for (std::size_t i = 0; i < features.size(); ++i) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(i), 0xca1bu};
            Rng rng(seq);
            counts.push_back(slots::init_slots(features[i], init, rng).slots.slots.dim(0));
        }
        const std::size_t distinct = std::set<std::size_t>(counts.begin(), counts.end()).size();
        if (distinct > best_distinct) {
            best = {sigma, sigma / 2, counts, distinct >= 3};
            best_distinct = distinct;
        }
        if (distinct >= 3) break;
    }
    return best;
}

void set_bandwidth(Model& model, double sigma, double epsilon) {
    for (slots::InitConfig* c : {&model.config.init, &model.init.config}) {
        c->meanshift.sigma = sigma;
        c->meanshift.epsilon = epsilon;
    }
}

} // namespace slotseed::scene
