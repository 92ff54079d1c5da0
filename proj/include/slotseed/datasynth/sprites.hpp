#pragma once

#include "slotseed/numcore/layers.hpp"
#include "slotseed/numcore/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace slotseed::data {

using Color = std::array<std::uint8_t, 3>;

enum class SpriteShape { square, circle, triangle, heart };

std::string to_string(SpriteShape shape);
SpriteShape parse_shape(const std::string& name);

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct SceneConfig {
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t min_objects = 2;
    std::size_t max_objects = 3;
    /// Sprite extent in pixels (bounding-box side), drawn uniformly per sprite.
    std::size_t min_size = 7;
    std::size_t max_size = 12;
    std::vector<SpriteShape> shapes{SpriteShape::square, SpriteShape::circle, SpriteShape::triangle, SpriteShape::heart};
    std::vector<Color> palette{{230, 60, 50},  {60, 180, 75},  {255, 225, 25}, {0, 130, 200}, {245, 130, 48},
                               {145, 30, 180}, {70, 240, 240}, {240, 50, 230}, {250, 190, 212}, {170, 110, 40}};
    std::vector<Color> backgrounds{{20, 20, 20}, {60, 60, 60}, {100, 100, 100}};

    void validate() const;
};

void to_json(nlohmann::json& j, const SceneConfig& c);
void from_json(const nlohmann::json& j, SceneConfig& c);

struct SceneSample {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels; // H x W x 3
    std::vector<std::uint8_t> labels; // H x W; 0 background, 1..n in paint order
    std::size_t object_count = 0;
    std::vector<Color> object_colors; // fill color of object id i+1

    /// H x W x 3 tensor with values in [0, 1].
    num::Tensor image() const;
    std::vector<std::size_t> label_map() const { return {labels.begin(), labels.end()}; }
};

/// Uniform background, then n ~ U[min, max] sprites painted back to front. A sprite that
/// would leave an earlier one without visible pixels is resampled, up to 10 attempts,
/// and dropped after that.
SceneSample generate_scene(num::Rng& rng, const SceneConfig& cfg);

/// Generator state for scene `index` of a dataset with the given seed.
num::Rng scene_rng(std::uint64_t seed, std::size_t index);

struct DatasetEntry {
    std::filesystem::path image;
    std::filesystem::path labels;
};

struct DatasetManifest {
    SceneConfig config;
    std::uint64_t seed = 0;
    std::vector<DatasetEntry> scenes; // relative to the dataset directory
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

/// Writes `count` scenes as (image u8 H x W x 3, labels u8 H x W) containers plus
/// manifest.json into out_dir.
DatasetManifest generate_dataset(std::uint64_t seed, const SceneConfig& cfg, std::size_t count,
                                 const std::filesystem::path& out_dir);

DatasetManifest read_manifest(const std::filesystem::path& dir);
SceneSample load_scene(const std::filesystem::path& dir, const DatasetEntry& entry);
std::vector<SceneSample> load_dataset(const std::filesystem::path& dir);

} // namespace slotseed::data
