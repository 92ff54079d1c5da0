#include "doctest.h"

#include "slotseed/cli/cli.hpp"
#include "slotseed/datasynth/container.hpp"
#include "slotseed/scene/checkpoint.hpp"

#include <json.hpp>

#include <fstream>
#include <random>
#include <sstream>

using namespace slotseed;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("slotseed_cli_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_config(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(); }

json tiny_config() {
    return {{"image_size", 16}, {"dim", 8},          {"encoder_hidden", 4}, {"decoder_hidden", 8},
            {"slots", 3},       {"steps", 4},        {"warmup_steps", 10},  {"learning_rate", 1e-3},
            {"seed", 3},        {"checkpoint_interval", 2}};
}

} // namespace

TEST_CASE("run config: defaults, overrides and rejected keys") {
    const cli::RunConfig d = cli::RunConfig::from_json(json::object());
    CHECK(d.train.adam.learning_rate == doctest::Approx(4e-4));
    CHECK(d.calibrate_bandwidth);

    const cli::RunConfig s = cli::RunConfig::from_json({{"sigma", 0.8}});
    CHECK_FALSE(s.calibrate_bandwidth);
    CHECK(s.model.init.meanshift.epsilon == doctest::Approx(0.4));

    const cli::RunConfig both = cli::RunConfig::from_json({{"sigma", 0.8}, {"epsilon", 0.1}});
    CHECK(both.model.init.meanshift.epsilon == doctest::Approx(0.1));

    CHECK_THROWS_AS(cli::RunConfig::from_json({{"learning_rat", 1e-3}}), cli::UsageError);
    CHECK_THROWS_AS(cli::RunConfig::from_json({{"learning_rate", "fast"}}), cli::UsageError);
    CHECK_THROWS_AS(cli::RunConfig::from_json({{"method", "meanshift"}, {"mapping", "large_mlp"}}), cli::UsageError);

    // The echo reads back to the same configuration.
    const cli::RunConfig c = cli::RunConfig::from_json(tiny_config());
    CHECK(cli::RunConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("ppm encoding") {
    const num::Tensor img({1, 2, 3}, {0.0, 0.5, 1.0, 2.0, -1.0, 0.25});
    const std::string ppm = cli::encode_ppm(img);
    CHECK(ppm.substr(0, 11) == "P6\n2 1\n255\n");
    REQUIRE(ppm.size() == 17);
    CHECK(static_cast<unsigned char>(ppm[11]) == 0);
    CHECK(static_cast<unsigned char>(ppm[12]) == 128);
    CHECK(static_cast<unsigned char>(ppm[14]) == 255);
    CHECK(static_cast<unsigned char>(ppm[15]) == 0);
    CHECK_THROWS(cli::encode_ppm(num::Tensor({2, 2}, std::vector<double>(4, 0.0))));
}

TEST_CASE("usage errors exit 2") {
    TempDir tmp;
    CHECK(run({}).code == cli::exit_usage);
    CHECK(run({"nonsense"}).code == cli::exit_usage);
    CHECK(run({"synth"}).code == cli::exit_usage);
    CHECK(run({"synth", "--out", (tmp.path / "d").string(), "--min-objects", "5", "--max-objects", "2"}).code ==
          cli::exit_usage);

    write_config(tmp.path / "bad.json", {{"no_such_key", 1}});
    CHECK(run({"train", "--config", (tmp.path / "bad.json").string(), "--data", tmp.path.string(), "--out",
               (tmp.path / "r").string()})
              .code == cli::exit_usage);

    const num::Tensor feats({4, 2}, {0, 0, 0, 1, 5, 5, 5, 6});
    data::write_tensor(tmp.path / "f.sltc", data::StoredTensor::from_tensor(feats));
    CHECK(run({"cluster", "--input", (tmp.path / "f.sltc").string(), "--algo", "kmeans", "--out",
               (tmp.path / "c").string()})
              .code == cli::exit_usage);
}

TEST_CASE("cluster writes centers and memberships") {
    TempDir tmp;
    const num::Tensor feats({4, 2}, {0, 0, 0, 1, 5, 5, 5, 6});
    data::write_tensor(tmp.path / "f.sltc", data::StoredTensor::from_tensor(feats));
    const Result r = run({"cluster", "--input", (tmp.path / "f.sltc").string(), "--algo", "kmeans", "--k", "2", "--out",
                          (tmp.path / "c").string()});
    REQUIRE(r.code == cli::exit_ok);
    const num::Tensor labels = data::read_tensor(tmp.path / "c" / "membership.sltc").to_tensor();
    REQUIRE(labels.size() == 4);
    CHECK(labels[0] == labels[1]);
    CHECK(labels[2] == labels[3]);
    CHECK(labels[0] != labels[2]);
    CHECK(data::read_tensor(tmp.path / "c" / "centers.sltc").dims == num::Shape{2, 2});

    const Result ms = run({"cluster", "--input", (tmp.path / "f.sltc").string(), "--algo", "meanshift", "--sigma",
                           "1", "--queries", "4", "--out", (tmp.path / "m").string()});
    REQUIRE(ms.code == cli::exit_ok);
    CHECK(data::read_tensor(tmp.path / "m" / "centers.sltc").dims == num::Shape{2, 2});
    CHECK(fs::exists(tmp.path / "m" / "query_membership.sltc"));
}

TEST_CASE("gradcheck exits 1 and names the faulty op") {
    const Result ok = run({"gradcheck", "--seed", "5"});
    CHECK(ok.code == cli::exit_ok);
    const Result bad = run({"gradcheck", "--seed", "5", "--fault", "softmax"});
    CHECK(bad.code == cli::exit_failure);
    CHECK(bad.err.find("softmax") != std::string::npos);
}

TEST_CASE("synth, train, resume and eval end to end") {
    TempDir tmp;
    const std::string data = (tmp.path / "data").string(), run_dir = (tmp.path / "run").string();
    REQUIRE(run({"synth", "--out", data, "--count", "4", "--size", "16", "--min-size", "4", "--max-size", "7",
                 "--seed", "9"})
                .code == cli::exit_ok);

    json cfg = tiny_config();
    cfg["method"] = "meanshift";
    cfg["mapping"] = "shared_mlp";
    write_config(tmp.path / "cfg.json", cfg);
    const Result t = run({"train", "--config", (tmp.path / "cfg.json").string(), "--data", data, "--out", run_dir});
    REQUIRE_MESSAGE(t.code == cli::exit_ok, t.err);
    CHECK(t.out.find("calibrated sigma") != std::string::npos);

    // Calibrated bandwidth lands in the echo; the log starts at 1e-3 / warmup.
    const json echo = json::parse(slurp(tmp.path / "run" / "config.json"));
    CHECK(echo.at("epsilon").get<double>() == doctest::Approx(echo.at("sigma").get<double>() / 2));
    std::istringstream log(slurp(tmp.path / "run" / "train_log.csv"));
    std::string header, first;
    std::getline(log, header);
    std::getline(log, first);
    CHECK(header == "step,loss,learning_rate,mean_loss,mean_slots");
    CHECK(first.rfind("1,", 0) == 0);
    CHECK(std::stod(first.substr(first.find(',', 2) + 1)) == doctest::Approx(1e-4));

    // Resuming past the end keeps training from the saved step.
    cfg["steps"] = 6;
    write_config(tmp.path / "cfg.json", cfg);
    const Result r = run({"train", "--config", (tmp.path / "cfg.json").string(), "--data", data, "--out", run_dir,
                          "--resume"});
    REQUIRE_MESSAGE(r.code == cli::exit_ok, r.err);
    CHECK(r.out.find("resumed at step 4") != std::string::npos);
    CHECK(scene::load_checkpoint(tmp.path / "run" / "checkpoint").state.step == 6);

    const std::string ck = (tmp.path / "run" / "checkpoint").string();
    const Result e = run({"eval", "--checkpoint", ck, "--data", data, "--report", (tmp.path / "eval").string(),
                          "--iterations", "1", "--images", "1"});
    REQUIRE_MESSAGE(e.code == cli::exit_ok, e.err);
    const json report = json::parse(slurp(tmp.path / "eval" / "report.json"));
    CHECK(report.at("scenes").size() == 4);
    CHECK(fs::exists(tmp.path / "eval" / "images" / "scene_00000_segments.ppm"));
    CHECK(slurp(tmp.path / "eval" / "images" / "scene_00000_input.ppm").rfind("P6\n16 16\n", 0) == 0);
    CHECK(run({"eval", "--checkpoint", ck, "--data", data, "--report", (tmp.path / "e2").string(), "--iterations",
               "-1"})
              .code == cli::exit_usage);

    const Result rep = run({"report", (tmp.path / "eval").string(), "--out", (tmp.path / "table.md").string()});
    REQUIRE(rep.code == cli::exit_ok);
    CHECK(slurp(tmp.path / "table.md").find("| eval | 4 |") != std::string::npos);
}
