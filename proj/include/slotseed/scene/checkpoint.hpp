#pragma once

#include "slotseed/scene/model.hpp"
#include "slotseed/scene/training.hpp"

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

namespace slotseed::scene {

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Missing keys keep their defaults; unknown method or mapping names throw.
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Raised when a checkpoint directory is incomplete or disagrees with itself.
class CheckpointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    Model model;
    TrainState state;
    /// Whatever the writer passed as its run configuration.
    nlohmann::json run_config;
};

/// Writes manifest.json, one f64 container per parameter under parameters/ and the
/// Adam moments under optimizer/. The directory is assembled next to `dir` and swapped
/// in at the end, so an interrupted save leaves the previous checkpoint intact.
void save_checkpoint(const std::filesystem::path& dir, const Model& model, const TrainState& state,
                     const nlohmann::json& run_config = nlohmann::json::object());

Checkpoint load_checkpoint(const std::filesystem::path& dir);

} // namespace slotseed::scene
