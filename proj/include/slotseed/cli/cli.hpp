#pragma once

#include "slotseed/datasynth/sprites.hpp"
#include "slotseed/metrics/metrics.hpp"
#include "slotseed/scene/model.hpp"
#include "slotseed/scene/training.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace slotseed::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

/// Bad flags or configuration; maps to exit code 2.
class UsageError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Everything a training run needs, read from one flat JSON object.
struct RunConfig {
    scene::ModelConfig model;
    scene::TrainConfig train;
    std::size_t checkpoint_interval = 1000;
    /// No sigma given: train picks one by calibrate_bandwidth. Epsilon defaults to sigma / 2.
    bool calibrate_bandwidth = true;

    /// Starts from the defaults and applies every key of `j`. Unknown keys, wrong types
    /// and unsupported method/mapping pairs throw UsageError.
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Keys RunConfig::from_json accepts.
const std::vector<std::string>& run_config_keys();

/// Binary PPM (P6) of an H x W x 3 tensor in [0, 1]; values are clamped and rounded.
std::string encode_ppm(const num::Tensor& image);
void write_ppm(const std::filesystem::path& path, const num::Tensor& image);
/// H x W x 3 image with a fixed distinct color per label.
num::Tensor colorize_labels(std::span<const std::size_t> labels, std::size_t height, std::size_t width);

struct EvalOptions {
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> slots;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct SceneOutput {
    metrics::SceneScore score;
    scene::Rendered rendered;
};

/// Runs the model on every scene (in parallel over `threads`); each scene draws its
/// randomness from (seed, index), so results do not depend on the thread count.
std::vector<SceneOutput> evaluate(const scene::Model& model, const std::vector<data::SceneSample>& scenes,
                                  const EvalOptions& options);

/// Thread count for parallel sections: SLOTSEED_THREADS if set and positive, else the
/// hardware concurrency.
std::size_t thread_budget();

struct GradcheckRow {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    double tolerance = 0.0;
    bool passed() const { return checked > 0 && max_rel_error < tolerance; }
};

/// Finite-difference checks of every differentiable op (tolerance 1e-4), the slot
/// mappings and clustering paths (1e-4), and the end-to-end 8x8 pipeline for the
/// k-means, mean-shift and random paths (1e-3), plus `extra` when given.
std::vector<GradcheckRow> gradcheck_suite(std::uint64_t seed, const std::optional<slots::InitConfig>& extra = {});

/// Entry point behind the `slotseed` binary. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace slotseed::cli
