#include "slotseed/scene/checkpoint.hpp"

#include "slotseed/datasynth/container.hpp"

#include <system_error>

namespace slotseed::scene {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int checkpoint_version = 1;

std::string_view seeding_name(cluster::QuerySeeding s) {
    return s == cluster::QuerySeeding::uniform ? "uniform" : "farthest_point";
}

cluster::QuerySeeding parse_seeding(const std::string& name) {
    if (name == "uniform") return cluster::QuerySeeding::uniform;
    if (name == "farthest_point") return cluster::QuerySeeding::farthest_point;
    throw std::invalid_argument("unknown query seeding '" + name + "'");
}

template <class T> void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

fs::path parameter_file(const std::string& name) { return fs::path("parameters") / (name + ".sltc"); }
fs::path moment_file(const std::string& name, char which) {
    return fs::path("optimizer") / (name + "." + which + ".sltc");
}

void write_vector(const fs::path& path, const num::Shape& dims, const std::vector<double>& values) {
    data::write_tensor(path, data::StoredTensor{data::DType::f64, dims, values});
}

std::vector<double> read_vector(const fs::path& path, const num::Shape& dims) {
    data::StoredTensor t = data::read_tensor(path);
    if (t.dims != dims) {
        throw CheckpointError(path.string() + ": expected shape " + num::shape_string(dims) + ", found " +
                              num::shape_string(t.dims));
    }
    return std::move(t.values);
}

} // namespace

void to_json(json& j, const ModelConfig& c) {
    const auto& ms = c.init.meanshift;
    j = json{{"height", c.height},
             {"width", c.width},
             {"dim", c.dim},
             {"encoder_hidden", c.encoder_hidden},
             {"decoder_hidden", c.decoder_hidden},
             {"decoder_layers", c.decoder_layers},
             {"decoder_frequencies", c.decoder_frequencies},
             {"iterations", c.iterations},
             {"method", slots::to_string(c.init.method)},
             {"mapping", slots::to_string(c.init.mapping)},
             {"gaussian_output", c.init.gaussian_output},
             {"slots", c.init.slots},
             {"kmeans_iterations", c.init.kmeans_iterations},
             {"sigma", ms.sigma},
             {"epsilon", ms.epsilon},
             {"meanshift_queries", ms.initial_centers},
             {"meanshift_max_iterations", ms.max_iterations},
             {"meanshift_tolerance", ms.fixed_point_tolerance},
             {"meanshift_seeding", seeding_name(ms.seeding)},
             {"meanshift_backprop", c.init.meanshift_backprop ? json(*c.init.meanshift_backprop) : json(nullptr)}};
}

void from_json(const json& j, ModelConfig& c) {
    read_if(j, "height", c.height);
    read_if(j, "width", c.width);
    read_if(j, "dim", c.dim);
    read_if(j, "encoder_hidden", c.encoder_hidden);
    read_if(j, "decoder_hidden", c.decoder_hidden);
    read_if(j, "decoder_layers", c.decoder_layers);
    read_if(j, "decoder_frequencies", c.decoder_frequencies);
    read_if(j, "iterations", c.iterations);
    if (j.contains("method")) c.init.method = slots::parse_method(j.at("method").get<std::string>());
    if (j.contains("mapping")) c.init.mapping = slots::parse_mapping(j.at("mapping").get<std::string>());
    read_if(j, "gaussian_output", c.init.gaussian_output);
    read_if(j, "slots", c.init.slots);
    read_if(j, "kmeans_iterations", c.init.kmeans_iterations);
    auto& ms = c.init.meanshift;
    read_if(j, "sigma", ms.sigma);
    read_if(j, "epsilon", ms.epsilon);
    read_if(j, "meanshift_queries", ms.initial_centers);
    read_if(j, "meanshift_max_iterations", ms.max_iterations);
    read_if(j, "meanshift_tolerance", ms.fixed_point_tolerance);
    if (j.contains("meanshift_seeding")) ms.seeding = parse_seeding(j.at("meanshift_seeding").get<std::string>());
    if (j.contains("meanshift_backprop")) {
        const json& b = j.at("meanshift_backprop");
        c.init.meanshift_backprop = b.is_null() ? std::nullopt : std::optional<std::size_t>(b.get<std::size_t>());
    }
}

void save_checkpoint(const fs::path& dir, const Model& model, const TrainState& state, const json& run_config) {
    const num::ParameterList params = model.parameters();
    const bool with_moments = !state.adam.first_moment.empty();
    if (with_moments &&
        (state.adam.first_moment.size() != params.size() || state.adam.second_moment.size() != params.size())) {
        throw CheckpointError("optimizer state does not match the parameter list");
    }

    const fs::path staging = fs::path(dir).concat(".partial");
    fs::remove_all(staging);
    fs::create_directories(staging / "parameters");
    if (with_moments) fs::create_directories(staging / "optimizer");

    json entries = json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [name, tensor] = params[i];
        data::write_tensor(staging / parameter_file(name), data::StoredTensor::from_tensor(tensor));
        entries.push_back({{"name", name}, {"shape", tensor.dims()}, {"file", parameter_file(name).generic_string()}});
        if (with_moments) {
            write_vector(staging / moment_file(name, 'm'), tensor.dims(), state.adam.first_moment[i]);
            write_vector(staging / moment_file(name, 'v'), tensor.dims(), state.adam.second_moment[i]);
        }
    }

    const ModelConfig& cfg = model.config;
    json manifest{{"format", "slotseed-checkpoint"},
                  {"version", checkpoint_version},
                  {"architecture", cfg},
                  {"variant", std::string(slots::to_string(cfg.init.method)) + "+" +
                                  std::string(slots::to_string(cfg.init.mapping))},
                  {"K", cfg.init.slots},
                  {"M", cfg.init.method == slots::InitMethod::meanshift ? json(nullptr)
                                                                         : json(cfg.init.cluster_count())},
                  {"D", cfg.dim},
                  {"step", state.step},
                  {"optimizer", {{"step", state.adam.step}, {"moments", with_moments}}},
                  {"parameters", std::move(entries)},
                  {"config", run_config}};
    data::write_text(staging / "manifest.json", manifest.dump(2) + "\n");

    const fs::path previous = fs::path(dir).concat(".old");
    fs::remove_all(previous);
    if (fs::exists(dir)) fs::rename(dir, previous);
    fs::rename(staging, dir);
    fs::remove_all(previous);
}

Checkpoint load_checkpoint(const fs::path& dir) {
    json manifest;
    try {
        manifest = json::parse(data::read_text(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw CheckpointError((dir / "manifest.json").string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "slotseed-checkpoint") throw CheckpointError(dir.string() + " is not a checkpoint");
    if (manifest.value("version", 0) != checkpoint_version) {
        throw CheckpointError(dir.string() + ": unsupported checkpoint version");
    }

    Checkpoint out;
    const ModelConfig cfg = manifest.at("architecture").get<ModelConfig>();
    cfg.validate();
    num::Rng unused(0);
    out.model = Model::create(cfg, unused);
    out.run_config = manifest.value("config", json::object());

    num::ParameterList params = out.model.parameters();
    const json& entries = manifest.at("parameters");
    if (entries.size() != params.size()) {
        throw CheckpointError(dir.string() + ": manifest lists " + std::to_string(entries.size()) +
                              " parameters, architecture has " + std::to_string(params.size()));
    }
    const bool with_moments = manifest.at("optimizer").at("moments").get<bool>();
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& [name, tensor] = params[i];
        if (entries[i].at("name").get<std::string>() != name) {
            throw CheckpointError(dir.string() + ": parameter " + std::to_string(i) + " is '" +
                                  entries[i].at("name").get<std::string>() + "', expected '" + name + "'");
        }
        const std::vector<double> values = read_vector(dir / entries[i].at("file").get<std::string>(), tensor.dims());
        std::copy(values.begin(), values.end(), tensor.mutable_values().begin());
        if (with_moments) {
            out.state.adam.first_moment.push_back(read_vector(dir / moment_file(name, 'm'), tensor.dims()));
            out.state.adam.second_moment.push_back(read_vector(dir / moment_file(name, 'v'), tensor.dims()));
        }
    }
    out.state.step = manifest.at("step").get<std::size_t>();
    out.state.adam.step = manifest.at("optimizer").at("step").get<std::size_t>();
    return out;
}

} // namespace slotseed::scene
