#include "slotseed/cli/cli.hpp"

#include "slotseed/scene/checkpoint.hpp"

#include <algorithm>

namespace slotseed::cli {

using nlohmann::json;

namespace {

// Run-level keys; the model keys come from the ModelConfig JSON form.
const std::vector<std::string> run_keys{"image_size",  "iterations_train", "learning_rate", "warmup_steps",
                                        "decay_factor", "decay_interval",  "batch_size",    "steps",
                                        "seed",         "checkpoint_interval"};

const std::vector<std::string> model_keys{"dim",
                                          "encoder_hidden",
                                          "decoder_hidden",
                                          "decoder_layers",
                                          "decoder_frequencies",
                                          "method",
                                          "mapping",
                                          "gaussian_output",
                                          "slots",
                                          "kmeans_iterations",
                                          "sigma",
                                          "epsilon",
                                          "meanshift_queries",
                                          "meanshift_max_iterations",
                                          "meanshift_tolerance",
                                          "meanshift_seeding",
                                          "meanshift_backprop"};

template <class T> void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

} // namespace

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> all = [] {
        std::vector<std::string> keys = run_keys;
        keys.insert(keys.end(), model_keys.begin(), model_keys.end());
        return keys;
    }();
    return all;
}

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw UsageError("run config must be a JSON object");
    const auto& keys = run_config_keys();
    for (const auto& item : j.items()) {
        if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
            throw UsageError("unknown config key '" + item.key() + "'");
        }
    }

    RunConfig c;
    try {
        json model = json::object();
        for (const auto& key : model_keys)
            if (j.contains(key)) model[key] = j.at(key);
        if (j.contains("image_size")) model["height"] = model["width"] = j.at("image_size");
        if (j.contains("iterations_train")) model["iterations"] = j.at("iterations_train");
        scene::from_json(model, c.model);
        c.calibrate_bandwidth = !j.contains("sigma");
        if (j.contains("sigma") && !j.contains("epsilon")) c.model.init.meanshift.epsilon = c.model.init.meanshift.sigma / 2;

        auto& adam = c.train.adam;
        take(j, "learning_rate", adam.learning_rate);
        take(j, "warmup_steps", adam.warmup_steps);
        take(j, "decay_factor", adam.decay_factor);
        take(j, "decay_interval", adam.decay_interval);
        take(j, "batch_size", c.train.batch_size);
        take(j, "steps", c.train.steps);
        take(j, "seed", c.train.seed);
        take(j, "checkpoint_interval", c.checkpoint_interval);
    } catch (const json::exception& e) {
        throw UsageError(std::string("bad config value: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    try {
        c.model.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!(c.train.adam.learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
    if (c.train.batch_size == 0) throw UsageError("batch_size must be positive");
    if (c.train.adam.decay_interval == 0) throw UsageError("decay_interval must be positive");
    if (c.checkpoint_interval == 0) throw UsageError("checkpoint_interval must be positive");
    if (c.model.height != c.model.width) throw UsageError("only square images are supported");
    return c;
}

json RunConfig::to_json() const {
    json j = model;
    j.erase("height");
    j.erase("width");
    j.erase("iterations");
    j["image_size"] = model.height;
    j["iterations_train"] = model.iterations;
    j["learning_rate"] = train.adam.learning_rate;
    j["warmup_steps"] = train.adam.warmup_steps;
    j["decay_factor"] = train.adam.decay_factor;
    j["decay_interval"] = train.adam.decay_interval;
    j["batch_size"] = train.batch_size;
    j["steps"] = train.steps;
    j["seed"] = train.seed;
    j["checkpoint_interval"] = checkpoint_interval;
    return j;
}

} // namespace slotseed::cli
