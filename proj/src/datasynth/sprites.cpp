#include "slotseed/datasynth/sprites.hpp"

#include "slotseed/datasynth/container.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace slotseed::data {

namespace {

constexpr std::size_t max_attempts = 10;

struct Sprite {
    SpriteShape shape;
    Color color;
    double cx, cy, radius; // pixel units
};

// Point (u, v) relative to the sprite center, scaled so the bounding box is [-1, 1]^2;
// v grows downwards.
bool inside(SpriteShape shape, double u, double v) {
    switch (shape) {
    case SpriteShape::square:
        return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
    case SpriteShape::circle:
        return u * u + v * v <= 1.0;
    case SpriteShape::triangle:
        // Apex at the top, base along the bottom edge.
        return v >= -1.0 && v <= 1.0 && std::abs(u) <= (v + 1.0) / 2.0;
    case SpriteShape::heart: {
        // (x^2 + y^2 - 1)^3 - x^2 y^3 <= 0, which spans roughly x in [-1.14, 1.14], y in [-1, 1.25].
        const double x = u * 1.14, y = -(v * 1.125 + 0.125);
        const double a = x * x + y * y - 1.0;
        return a * a * a - x * x * y * y * y <= 0.0;
    }
    }
    return false;
}

template <class T>
const T& pick(const std::vector<T>& items, num::Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
    return items[d(rng)];
}

Sprite sample_sprite(const SceneConfig& cfg, num::Rng& rng) {
    std::uniform_int_distribution<std::size_t> size_dist(cfg.min_size, cfg.max_size);
    const std::size_t size = size_dist(rng);
    std::uniform_int_distribution<std::size_t> x0(0, cfg.width - size), y0(0, cfg.height - size);
    Sprite s;
    s.shape = pick(cfg.shapes, rng);
    s.color = pick(cfg.palette, rng);
    s.radius = static_cast<double>(size) / 2.0;
    s.cx = static_cast<double>(x0(rng)) + s.radius;
    s.cy = static_cast<double>(y0(rng)) + s.radius;
    return s;
}

// Pixel indices covered by the sprite (pixel centers inside the shape).
std::vector<std::size_t> coverage(const Sprite& s, const SceneConfig& cfg) {
    std::vector<std::size_t> out;
    for (std::size_t y = 0; y < cfg.height; ++y)
        for (std::size_t x = 0; x < cfg.width; ++x) {
            const double u = (static_cast<double>(x) + 0.5 - s.cx) / s.radius;
            const double v = (static_cast<double>(y) + 0.5 - s.cy) / s.radius;
            if (inside(s.shape, u, v)) out.push_back(y * cfg.width + x);
        }
    return out;
}

} // namespace

std::string to_string(SpriteShape shape) {
    switch (shape) {
    case SpriteShape::square: return "square";
    case SpriteShape::circle: return "circle";
    case SpriteShape::triangle: return "triangle";
    case SpriteShape::heart: return "heart";
    }
    return "?";
}

SpriteShape parse_shape(const std::string& name) {
    for (SpriteShape s : {SpriteShape::square, SpriteShape::circle, SpriteShape::triangle, SpriteShape::heart})
        if (to_string(s) == name) return s;
    throw ConfigError("unknown sprite shape '" + name + "'");
}

void SceneConfig::validate() const {
    if (min_objects < 1 || max_objects < min_objects) throw ConfigError("need 1 <= min_objects <= max_objects");
    if (max_objects > 255) throw ConfigError("at most 255 objects fit in u8 labels");
    if (min_size < 2 || max_size < min_size) throw ConfigError("need 2 <= min_size <= max_size");
    if (max_size > height || max_size > width) {
        throw ConfigError("sprite size " + std::to_string(max_size) + " does not fit a " + std::to_string(height) + "x" +
                          std::to_string(width) + " frame");
    }
    if (shapes.empty()) throw ConfigError("no sprite shapes configured");
    if (palette.empty() || backgrounds.empty()) throw ConfigError("empty color palette");
}

void to_json(nlohmann::json& j, const SceneConfig& c) {
    std::vector<std::string> shapes;
    for (SpriteShape s : c.shapes) shapes.push_back(to_string(s));
    j = nlohmann::json{{"height", c.height},       {"width", c.width},       {"min_objects", c.min_objects},
                       {"max_objects", c.max_objects}, {"min_size", c.min_size}, {"max_size", c.max_size},
                       {"shapes", shapes},         {"palette", c.palette},   {"backgrounds", c.backgrounds}};
}

void from_json(const nlohmann::json& j, SceneConfig& c) {
    c.height = j.at("height").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.min_objects = j.at("min_objects").get<std::size_t>();
    c.max_objects = j.at("max_objects").get<std::size_t>();
    c.min_size = j.at("min_size").get<std::size_t>();
    c.max_size = j.at("max_size").get<std::size_t>();
    c.shapes.clear();
    for (const auto& s : j.at("shapes")) c.shapes.push_back(parse_shape(s.get<std::string>()));
    c.palette = j.at("palette").get<std::vector<Color>>();
    c.backgrounds = j.at("backgrounds").get<std::vector<Color>>();
}

num::Tensor SceneSample::image() const {
    std::vector<double> v(pixels.size());
    std::transform(pixels.begin(), pixels.end(), v.begin(), [](std::uint8_t p) { return p / 255.0; });
    return num::Tensor({height, width, 3}, std::move(v));
}

SceneSample generate_scene(num::Rng& rng, const SceneConfig& cfg) {
    cfg.validate();
    SceneSample scene;
    scene.height = cfg.height;
    scene.width = cfg.width;
    const std::size_t n_pixels = cfg.height * cfg.width;
    scene.labels.assign(n_pixels, 0);

    const Color background = pick(cfg.backgrounds, rng);
    std::uniform_int_distribution<std::size_t> count_dist(cfg.min_objects, cfg.max_objects);
    const std::size_t wanted = count_dist(rng);

    std::vector<Color> colors;
    for (std::size_t i = 0; i < wanted; ++i) {
        const auto id = static_cast<std::uint8_t>(colors.size() + 1);
        for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
            const Sprite sprite = sample_sprite(cfg, rng);
            std::vector<std::uint8_t> painted = scene.labels;
            for (std::size_t p : coverage(sprite, cfg)) painted[p] = id;
            std::vector<std::size_t> visible(id + 1u, 0);
            for (std::uint8_t l : painted) ++visible[l];
            if (std::all_of(visible.begin() + 1, visible.end(), [](std::size_t c) { return c > 0; })) {
                scene.labels = std::move(painted);
                colors.push_back(sprite.color);
                break;
            }
        }
    }

    scene.object_count = colors.size();
    scene.object_colors = colors;
    scene.pixels.resize(n_pixels * 3);
    for (std::size_t p = 0; p < n_pixels; ++p) {
        const Color& c = scene.labels[p] == 0 ? background : colors[scene.labels[p] - 1];
        std::copy(c.begin(), c.end(), scene.pixels.begin() + static_cast<std::ptrdiff_t>(3 * p));
    }
    return scene;
}

num::Rng scene_rng(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
    return num::Rng(seq);
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
    nlohmann::json scenes = nlohmann::json::array();
    for (const auto& e : m.scenes) scenes.push_back({{"image", e.image.generic_string()}, {"labels", e.labels.generic_string()}});
    j = nlohmann::json{{"config", m.config}, {"seed", m.seed}, {"scenes", scenes}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
    m.config = j.at("config").get<SceneConfig>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.scenes.clear();
    for (const auto& e : j.at("scenes")) {
        m.scenes.push_back({e.at("image").get<std::string>(), e.at("labels").get<std::string>()});
    }
}

DatasetManifest generate_dataset(std::uint64_t seed, const SceneConfig& cfg, std::size_t count,
                                 const std::filesystem::path& out_dir) {
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    DatasetManifest manifest{cfg, seed, {}};
    for (std::size_t i = 0; i < count; ++i) {
        num::Rng rng = scene_rng(seed, i);
        const SceneSample scene = generate_scene(rng, cfg);
        char stem[32];
        std::snprintf(stem, sizeof stem, "scene_%05zu", i);
        DatasetEntry entry{std::string(stem) + "_image.sltc", std::string(stem) + "_labels.sltc"};
        write_tensor(out_dir / entry.image,
                     StoredTensor{DType::u8, {cfg.height, cfg.width, 3}, {scene.pixels.begin(), scene.pixels.end()}});
        write_tensor(out_dir / entry.labels,
                     StoredTensor{DType::u8, {cfg.height, cfg.width}, {scene.labels.begin(), scene.labels.end()}});
        manifest.scenes.push_back(std::move(entry));
    }
    write_text(out_dir / "manifest.json", nlohmann::json(manifest).dump(2) + "\n");
    return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    try {
        return nlohmann::json::parse(read_text(path)).get<DatasetManifest>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

SceneSample load_scene(const std::filesystem::path& dir, const DatasetEntry& entry) {
    const StoredTensor image = read_tensor(dir / entry.image);
    const StoredTensor labels = read_tensor(dir / entry.labels);
    if (image.dims.size() != 3 || image.dims[2] != 3 || labels.dims.size() != 2 || labels.dims[0] != image.dims[0] ||
        labels.dims[1] != image.dims[1]) {
        throw IoError("scene shapes disagree in " + (dir / entry.image).string());
    }
    SceneSample s;
    s.height = image.dims[0];
    s.width = image.dims[1];
    s.pixels.assign(image.values.begin(), image.values.end());
    s.labels.assign(labels.values.begin(), labels.values.end());
    s.object_count = labels.values.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.values.begin(), labels.values.end()));
    s.object_colors.resize(s.object_count);
    for (std::size_t p = 0; p < s.labels.size(); ++p)
        if (s.labels[p]) std::copy_n(s.pixels.begin() + static_cast<std::ptrdiff_t>(3 * p), 3, s.object_colors[s.labels[p] - 1].begin());
    return s;
}

std::vector<SceneSample> load_dataset(const std::filesystem::path& dir) {
    const DatasetManifest m = read_manifest(dir);
    std::vector<SceneSample> out;
    out.reserve(m.scenes.size());
    for (const auto& e : m.scenes) out.push_back(load_scene(dir, e));
    return out;
}

} // namespace slotseed::data
