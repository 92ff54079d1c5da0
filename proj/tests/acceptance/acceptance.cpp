// Acceptance gate: one PASS/FAIL line per criterion. `--group fast` runs the property
// criteria, `--group training` the toy-scale training comparisons (hours on one core;
// finished runs are reused from --work).

#include "../unit/metric_oracles.hpp"

#include "slotseed/cli/cli.hpp"
#include "slotseed/clustering/clustering.hpp"
#include "slotseed/datasynth/container.hpp"
#include "slotseed/metrics/metrics.hpp"
#include "slotseed/numcore/tape.hpp"
#include "slotseed/scene/calibration.hpp"
#include "slotseed/scene/checkpoint.hpp"
#include "slotseed/slotinit/slotinit.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

using namespace slotseed;
namespace fs = std::filesystem;
using nlohmann::json;
using num::Rng;
using num::Tensor;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Tensor uniform(num::Shape dims, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(num::shape_size(dims));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& x : v) x = u(rng);
    return Tensor(std::move(dims), std::move(v));
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

int cli(std::vector<std::string> args, std::string* captured = nullptr) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (captured) *captured = out.str() + err.str();
    return code;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> bytes for every regular file under dir.
std::map<std::string, std::string> tree_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = file_bytes(e.path());
    return out;
}

// ------------------------------------------------------------ criterion 1

Outcome symmetry_suite() {
    Rng rng(101);
    double worst_invariance = 0.0, worst_shared = 0.0, worst_direct = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + static_cast<std::size_t>(trial) % 9;
        const std::size_t d = trial % 2 == 0 ? 4 : 32;
        const Tensor c = uniform({m, d}, rng, -2, 2);
        const auto pw = slots::MappingParams::create(slots::Mapping::pseudoweights, d, 5, m, false, rng);
        const auto shared = slots::MappingParams::create(slots::Mapping::shared_mlp, d, m, m, false, rng);
        worst_invariance = std::max(
            worst_invariance,
            metrics::permutation_deviation([&](const Tensor& x) { return slots::map_pseudoweights(x, pw, 5).slots.slots; },
                                           c, metrics::SymmetryMode::invariance, 20, rng));
        worst_shared = std::max(worst_shared, metrics::permutation_deviation(
                                                  [&](const Tensor& x) { return slots::map_shared_mlp(x, shared).slots; },
                                                  c, metrics::SymmetryMode::equivariance, 20, rng));
        worst_direct = std::max(worst_direct, metrics::permutation_deviation(
                                                  [](const Tensor& x) { return slots::map_direct(x).slots; }, c,
                                                  metrics::SymmetryMode::equivariance, 20, rng));
    }
    return {worst_invariance < 1e-6 && worst_shared == 0.0 && worst_direct == 0.0,
            "pseudoweights invariance " + fmt(worst_invariance) + ", shared_mlp equivariance " + fmt(worst_shared) +
                ", direct equivariance " + fmt(worst_direct)};
}

// ------------------------------------------------------------ criterion 2

Outcome pseudoweight_normalization() {
    Rng rng(202);
    double worst_sum = 0.0, worst_hull = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + static_cast<std::size_t>(trial) % 10, k = 1 + static_cast<std::size_t>(trial) % 8;
        const std::size_t d = trial % 3 == 0 ? 32 : 4;
        const Tensor c = uniform({m, d}, rng, -3, 3);
        const auto p = slots::MappingParams::create(slots::Mapping::pseudoweights, d, k, m, false, rng);
        const slots::PseudoweightResult r = slots::map_pseudoweights(c, p, k);
        for (std::size_t s = 0; s < k; ++s)
            for (std::size_t j = 0; j < d; ++j) {
                double total = 0.0, lo = 1e300, hi = -1e300;
                for (std::size_t i = 0; i < m; ++i) {
                    total += r.weights[(s * m + i) * d + j];
                    lo = std::min(lo, c[i * d + j]);
                    hi = std::max(hi, c[i * d + j]);
                }
                worst_sum = std::max(worst_sum, std::abs(total - 1.0));
                const double z = r.slots.slots[s * d + j];
                worst_hull = std::max({worst_hull, lo - z, z - hi});
            }
    }
    // Rounding in the weighted sum can leave the hull by a few ulps of the coordinates.
    return {worst_sum <= 1e-6 && worst_hull <= 1e-12,
            "max |sum_m w - 1| " + fmt(worst_sum) + ", max hull excursion " + fmt(std::max(worst_hull, 0.0))};
}

// ------------------------------------------------------------ criterion 3

std::vector<std::size_t> oracle_assign(const cluster::FeatureGrid& x, const cluster::FeatureGrid& c) {
    std::vector<std::size_t> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double best = 1e300;
        for (std::size_t k = 0; k < c.rows(); ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.cols(); ++j) s += (x.row(i)[j] - c.row(k)[j]) * (x.row(i)[j] - c.row(k)[j]);
            if (s < best) best = s, out[i] = k;
        }
    }
    return out;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t i) { return parent[i] == i ? i : parent[i] = find(parent[i]); }
    void unite(std::size_t a, std::size_t b) {
        a = find(a), b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

Outcome clustering_correctness() {
    Rng rng(303);
    std::ostringstream detail;
    bool ok = true;

    // (a) Lloyd steps from farthest-point seeds, no reinitialization.
    int lloyd_bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> pick_n(20, 80), pick_d(1, 5), pick_k(2, 6);
        const std::size_t n = pick_n(rng), d = pick_d(rng), k = pick_k(rng);
        const cluster::FeatureGrid x = cluster::FeatureGrid::from_tensor(uniform({n, d}, rng, -5, 5));
        cluster::FeatureGrid centers = cluster::kmeanspp_init(x, k, rng);
        double previous = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 15; ++it) {
            const cluster::LloydStep step = cluster::lloyd_step(x, centers);
            if (step.assignments != oracle_assign(x, centers)) ++lloyd_bad;
            if (step.inertia > previous * (1 + 1e-12)) ++lloyd_bad;
            previous = step.inertia;
            centers = step.centers;
        }
    }
    ok &= lloyd_bad == 0;
    detail << "(a) " << lloyd_bad << " violations";

    // (b) Degenerate inputs where plain Lloyd would lose clusters.
    int empty = 0;
    const std::vector<std::pair<cluster::FeatureGrid, std::size_t>> degenerate{
        {cluster::FeatureGrid(6, 2, std::vector<double>(12, 1.5)), 3},
        {cluster::FeatureGrid(6, 1, {0, 0, 0, 5, 5, 5}), 4},
        {cluster::FeatureGrid(5, 1, {0, 0, 0, 0, 100}), 5},
        {cluster::FeatureGrid(8, 2, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 9, 9, 9, 9}), 6},
    };
    for (const auto& [x, k] : degenerate)
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng r(seed);
            const cluster::ClusterSet cs = cluster::kmeans_run(x, {k, 50, 1e-4}, r);
            std::vector<std::size_t> counts(k, 0);
            for (std::size_t a : cs.assignments) ++counts[a];
            empty += static_cast<int>(std::count(counts.begin(), counts.end(), 0));
        }
    ok &= empty == 0;
    detail << "; (b) " << empty << " empty clusters";

    // (c) Mean-shift recovers G well-separated blobs.
    detail << "; (c) recovered";
    for (std::size_t g = 1; g <= 5; ++g) {
        int hits = 0;
        for (int run = 0; run < 100; ++run) {
            const std::size_t per = 30, d = 3;
            std::normal_distribution<double> noise(0.0, 1.0);
            cluster::FeatureGrid x(g * per, d);
            for (std::size_t b = 0; b < g; ++b)
                for (std::size_t i = 0; i < per; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        x.row(b * per + i)[j] = (j == 0 ? 10.0 * static_cast<double>(b) : 0.0) + noise(rng);
            // Bandwidth at twice the blob spread keeps each blob's density unimodal.
            cluster::MeanShiftConfig cfg;
            cfg.sigma = 2.0;
            cfg.epsilon = 1.0;
            cfg.initial_centers = 20;
            cfg.max_iterations = 100;
            hits += cluster::meanshift_run(x, cfg, rng).centers.rows() == g;
        }
        ok &= hits >= 95;
        detail << " G" << g << ":" << hits;
    }

    // (d) Components against union-find.
    int mismatched = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial);
        const cluster::FeatureGrid p = cluster::FeatureGrid::from_tensor(uniform({n, 2}, rng, 0, 10));
        const double eps = 0.4 + 0.01 * trial;
        UnionFind uf(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (std::sqrt(cluster::squared_distance(p.row(i), p.row(j))) <= eps) uf.unite(i, j);
        const cluster::Components got = cluster::connected_components_merge(p, eps);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                mismatched += (got.membership[i] == got.membership[j]) != (uf.find(i) == uf.find(j));
    }
    ok &= mismatched == 0;
    detail << "; (d) " << mismatched << " mismatched pairs";
    return {ok, detail.str()};
}

// ------------------------------------------------------------ criterion 4

Outcome gradient_suite() {
    const auto rows = cli::gradcheck_suite(404);
    std::vector<std::string> failed;
    double worst_op = 0.0, worst_pipeline = 0.0;
    for (const auto& r : rows) {
        if (!r.passed()) failed.push_back(r.name);
        (r.name.starts_with("end_to_end") ? worst_pipeline : worst_op) =
            std::max(r.name.starts_with("end_to_end") ? worst_pipeline : worst_op, r.max_rel_error);
    }
    std::string detail = std::to_string(rows.size()) + " checks, worst op " + fmt(worst_op) + ", worst end-to-end " +
                         fmt(worst_pipeline);
    for (const auto& f : failed) detail += " FAILED:" + f;
    return {failed.empty(), detail};
}

// ------------------------------------------------------------ criterion 5

Outcome metric_oracles() {
    Rng rng(505);
    int ari_bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<std::size_t> size(1, 8), label(0, 4);
        const std::size_t n = size(rng);
        std::vector<std::size_t> pred(n), gt(n);
        for (auto& v : pred) v = label(rng);
        for (auto& v : gt) v = label(rng);
        std::vector<std::size_t> fp, fg;
        for (std::size_t i = 0; i < n; ++i)
            if (gt[i] != 0) fp.push_back(pred[i]), fg.push_back(gt[i]);
        const double expected = fg.empty() ? 1.0 : testing::ari_pair_oracle(fp, fg);
        ari_bad += metrics::foreground_ari(pred, gt).value != expected;
    }
    double psnr_err = 0.0, ssim_err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t h = 8 + 8 * static_cast<std::size_t>(trial % 4), w = 8 + 8 * static_cast<std::size_t>(trial % 3);
        const Tensor a = uniform({h, w, 3}, rng, 0, 1), b = uniform({h, w, 3}, rng, 0, 1);
        psnr_err = std::max(psnr_err, std::abs(metrics::psnr(a, b) - testing::psnr_oracle(a, b)));
        ssim_err = std::max(ssim_err, std::abs(metrics::ssim(a, b) - testing::ssim_oracle(a, b)));
    }
    return {ari_bad == 0 && psnr_err < 1e-9 && ssim_err < 1e-9,
            std::to_string(ari_bad) + "/1000 ARI mismatches, psnr err " + fmt(psnr_err) + ", ssim err " + fmt(ssim_err)};
}

// ------------------------------------------------------------ criterion 8

Outcome variable_k(const fs::path& work) {
    const auto build = [&](slots::Mapping mapping) {
        scene::ModelConfig cfg;
        cfg.init.method = slots::InitMethod::kmeans;
        cfg.init.mapping = mapping;
        cfg.init.slots = 5;
        Rng rng(808);
        return scene::Model::create(cfg, rng);
    };
    data::SceneConfig sc;
    Rng scene_rng(809);
    const Tensor image = data::generate_scene(scene_rng, sc).image();
    num::Tape::Pause pause;

    const fs::path dir = work / "variable_k_checkpoint";
    scene::save_checkpoint(dir, build(slots::Mapping::pseudoweights), {});
    const scene::Checkpoint ck = scene::load_checkpoint(dir);
    std::vector<std::vector<double>> before;
    for (const auto& [name, t] : ck.model.parameters()) before.emplace_back(t.values().begin(), t.values().end());
    Rng rng(810);
    const scene::ForwardResult out = scene::forward(image, ck.model, rng, {std::nullopt, 8});
    bool unchanged = true;
    const auto params = ck.model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i)
        unchanged &= std::equal(before[i].begin(), before[i].end(), params[i].second.values().begin());
    const std::size_t masks = out.rendered.masks.dim(0);

    std::string error;
    bool rejected = false;
    try {
        Rng r(811);
        scene::forward(image, build(slots::Mapping::large_mlp), r, {std::nullopt, 8});
    } catch (const num::DimensionError& e) {
        rejected = true;
        error = e.what();
    }
    return {masks == 8 && unchanged && rejected,
            "pseudoweights K=5 -> " + std::to_string(masks) + " masks, parameters " +
                (unchanged ? "unchanged" : "CHANGED") + "; large_mlp: " + (rejected ? error : "accepted K=8")};
}

// ------------------------------------------------------------ criterion 9

Outcome slot_count_flexibility() {
    scene::ModelConfig cfg;
    cfg.init.method = slots::InitMethod::meanshift;
    cfg.init.mapping = slots::Mapping::shared_mlp;
    data::SceneConfig sc;
    std::vector<Tensor> probe;
    for (std::size_t i = 0; i < 16; ++i) {
        Rng sr = data::scene_rng(908, i);
        probe.push_back(data::generate_scene(sr, sc).image());
    }
    // Calibrate on one batch, count slots on another.
    std::multiset<std::size_t> counts;
    std::string sigmas;
    num::Tape::Pause pause;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Rng rng(900 + seed);
        scene::Model model = scene::Model::create(cfg, rng);
        const scene::BandwidthCalibration c = scene::calibrate_bandwidth(model, probe, seed);
        scene::set_bandwidth(model, c.sigma, c.epsilon);
        sigmas += " " + fmt(c.sigma);
        for (std::size_t i = 0; i < 8; ++i) {
            Rng sr = data::scene_rng(909, seed * 8 + i);
            const Tensor image = data::generate_scene(sr, sc).image();
            counts.insert(scene::forward(image, model, rng).diagnostics.slot_count);
        }
    }
    const std::set<std::size_t> distinct(counts.begin(), counts.end());
    const bool in_range = *counts.begin() >= 1 && *counts.rbegin() <= 20;
    const bool all_one = counts.count(1) == counts.size(), all_twenty = counts.count(20) == counts.size();
    std::string values;
    for (std::size_t v : distinct) values += " " + std::to_string(v) + "x" + std::to_string(counts.count(v));
    return {distinct.size() >= 3 && in_range && !all_one && !all_twenty,
            "sigma" + sigmas + "; K over 32 held-out scenes:" + values};
}

// ----------------------------------------------------------- criterion 10

Outcome format_determinism(const fs::path& work) {
    Rng rng(1010);
    int bad = 0, cases = 0;
    for (data::DType dtype : {data::DType::f32, data::DType::f64, data::DType::u8})
        for (std::size_t rank = 0; rank <= 4; ++rank)
            for (int rep = 0; rep < 5; ++rep) {
                num::Shape dims;
                std::uniform_int_distribution<std::size_t> extent(0, 4);
                for (std::size_t r = 0; r < rank; ++r) dims.push_back(extent(rng) + (rep == 0 ? 1 : 0));
                data::StoredTensor t{dtype, dims, std::vector<double>(num::shape_size(dims))};
                std::uniform_int_distribution<int> byte(0, 255);
                std::normal_distribution<double> normal(0.0, 1e3);
                for (double& v : t.values) {
                    if (dtype == data::DType::u8) v = byte(rng);
                    else if (dtype == data::DType::f32) v = static_cast<float>(normal(rng));
                    else v = normal(rng);
                }
                const fs::path file = work / "roundtrip.sltc";
                data::write_tensor(file, t);
                const data::StoredTensor back = data::read_tensor(file);
                const std::vector<std::uint8_t> again = data::encode_tensor(back);
                ++cases;
                bad += back.dtype != t.dtype || back.dims != t.dims ||
                       std::memcmp(back.values.data(), t.values.data(), t.values.size() * sizeof(double)) != 0 ||
                       again != data::encode_tensor(t);
            }

    std::ostringstream detail;
    detail << bad << "/" << cases << " container round-trips differ";

    const std::vector<std::string> synth{"synth", "--count", "6", "--seed", "77", "--out"};
    fs::remove_all(work / "synth_a");
    fs::remove_all(work / "synth_b");
    auto a = synth, b = synth;
    a.push_back((work / "synth_a").string());
    b.push_back((work / "synth_b").string());
    const bool synth_ok = cli(a) == 0 && cli(b) == 0 && tree_bytes(work / "synth_a") == tree_bytes(work / "synth_b");
    detail << "; synth " << (synth_ok ? "byte-identical" : "DIFFERS");

    scene::ModelConfig cfg;
    cfg.init.method = slots::InitMethod::meanshift;
    cfg.init.mapping = slots::Mapping::shared_mlp;
    Rng mrng(1011);
    scene::save_checkpoint(work / "determinism_checkpoint", scene::Model::create(cfg, mrng), {});
    bool eval_ok = true;
    std::map<std::string, std::string> first;
    for (const char* threads : {"1", "3", "1"}) {
        ::setenv("SLOTSEED_THREADS", threads, 1);
        const fs::path report = work / "eval_report";
        fs::remove_all(report);
        eval_ok &= cli({"eval", "--checkpoint", (work / "determinism_checkpoint").string(), "--data",
                        (work / "synth_a").string(), "--report", report.string(), "--seed", "5"}) == 0;
        auto bytes = tree_bytes(report);
        if (first.empty()) first = std::move(bytes);
        else eval_ok &= bytes == first;
    }
    ::unsetenv("SLOTSEED_THREADS");
    detail << "; eval " << (eval_ok ? "byte-identical across repeats and thread counts" : "DIFFERS");
    return {bad == 0 && synth_ok && eval_ok, detail.str()};
}

// ------------------------------------------------------- criteria 6 and 7

struct Variant {
    std::string name;
    std::string method;
    std::string mapping;
};

const std::vector<Variant> variants{{"random", "random", "direct"},
                                    {"kmeans_pseudoweights", "kmeans", "pseudoweights"},
                                    {"meanshift_shared_mlp", "meanshift", "shared_mlp"}};

struct TrainingSetup {
    fs::path work;
    std::optional<fs::path> config;
    std::size_t seeds = 5;
    std::size_t steps = 20000;
};

struct EvalNumbers {
    bool ok = false;
    double fg_ari = 0.0;
    double mse = 0.0;
};

// Trains (or resumes) one run; returns false if training failed.
bool ensure_trained(const TrainingSetup& setup, const Variant& v, std::size_t seed, const fs::path& run) {
    if (fs::exists(run / "checkpoint" / "manifest.json")) {
        const json m = json::parse(file_bytes(run / "checkpoint" / "manifest.json"));
        if (m.at("step").get<std::size_t>() >= setup.steps) return true;
    }
    const bool resume = fs::exists(run / "checkpoint" / "manifest.json");
    std::vector<std::string> args{"train",         "--data",   (setup.work / "train").string(),
                                  "--out",         run.string(), "--method",
                                  v.method,        "--mapping", v.mapping,
                                  "--steps",       std::to_string(setup.steps), "--seed",
                                  std::to_string(seed), "--checkpoint-every", "1000"};
    if (setup.config) {
        args.push_back("--config");
        args.push_back(setup.config->string());
    }
    if (resume) args.push_back("--resume");
    const auto t0 = std::chrono::steady_clock::now();
    std::string log;
    const int code = cli(args, &log);
    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    std::cout << "  trained " << v.name << " seed " << seed << " in " << fmt(minutes, 3) << " min" << (code ? " FAILED: " + log : "")
              << std::endl;
    return code == 0;
}

EvalNumbers evaluate_run(const TrainingSetup& setup, const fs::path& run, std::size_t iterations) {
    const fs::path report = run / ("eval_iter" + std::to_string(iterations));
    if (!fs::exists(report / "report.json") ||
        fs::last_write_time(report / "report.json") < fs::last_write_time(run / "checkpoint" / "manifest.json")) {
        fs::remove_all(report);
        if (cli({"eval", "--checkpoint", (run / "checkpoint").string(), "--data", (setup.work / "eval").string(), "--report",
                 report.string(), "--iterations", std::to_string(iterations), "--images", "8", "--seed", "0"}) != 0) {
            return {};
        }
    }
    const json j = json::parse(file_bytes(report / "report.json"));
    return {true, j.at("aggregate").at("fg_ari").get<double>(), j.at("aggregate").at("mse").get<double>()};
}

std::pair<Outcome, Outcome> training_criteria(const TrainingSetup& setup) {
    fs::create_directories(setup.work);
    for (const auto& [dir, seed, count] : {std::tuple{"train", "1", "500"}, std::tuple{"eval", "2", "100"}}) {
        if (!fs::exists(setup.work / dir / "manifest.json"))
            cli({"synth", "--count", count, "--seed", seed, "--out", (setup.work / dir).string()});
    }

    // results[variant][seed][iterations]
    std::map<std::string, std::vector<std::map<std::size_t, EvalNumbers>>> results;
    bool trained_all = true;
    for (std::size_t seed = 1; seed <= setup.seeds; ++seed)
        for (const Variant& v : variants) {
            const fs::path run = setup.work / "runs" / (v.name + "_seed" + std::to_string(seed));
            auto& slot = results[v.name];
            slot.resize(setup.seeds);
            if (!ensure_trained(setup, v, seed, run)) {
                trained_all = false;
                continue;
            }
            for (std::size_t it : {1, 3, 7}) slot[seed - 1][it] = evaluate_run(setup, run, it);
            std::cout << "  " << v.name << " seed " << seed << ": fg_ari " << fmt(slot[seed - 1][3].fg_ari) << ", iter-1 mse "
                      << fmt(slot[seed - 1][1].mse) << std::endl;
        }

    const auto& random = results["random"];
    std::ostringstream six, seven;
    bool six_ok = trained_all, seven_ok = trained_all;

    double ms_mean = 0.0;
    for (const auto& r : results["meanshift_shared_mlp"]) ms_mean += r.at(3).fg_ari / static_cast<double>(setup.seeds);
    six_ok &= ms_mean >= 0.7;
    six << "meanshift_shared_mlp mean FG-ARI " << fmt(ms_mean) << " (>= 0.7)";
    for (const char* name : {"kmeans_pseudoweights", "meanshift_shared_mlp"}) {
        std::size_t wins = 0;
        for (std::size_t s = 0; s < setup.seeds; ++s) wins += results[name][s].at(3).fg_ari >= random[s].at(3).fg_ari;
        six_ok &= wins >= 3;
        six << "; " << name << " >= random in " << wins << "/" << setup.seeds;
    }
    double random_mean = 0.0;
    for (const auto& r : random) random_mean += r.at(3).fg_ari / static_cast<double>(setup.seeds);
    six << " (random mean " << fmt(random_mean) << ")";

    bool all_evaluated = true;
    for (const auto& [name, per_seed] : results)
        for (const auto& r : per_seed)
            for (std::size_t it : {1, 3, 7}) all_evaluated &= r.count(it) && r.at(it).ok;
    seven_ok &= all_evaluated;
    seven << "eval at 1/3/7 " << (all_evaluated ? "all succeed" : "FAILED");
    for (const char* name : {"kmeans_pseudoweights", "meanshift_shared_mlp"}) {
        std::size_t wins = 0;
        for (std::size_t s = 0; s < setup.seeds; ++s) wins += results[name][s].at(1).mse <= random[s].at(1).mse;
        seven_ok &= wins >= 3;
        seven << "; " << name << " iter-1 MSE <= random in " << wins << "/" << setup.seeds;
    }
    return {{six_ok, six.str()}, {seven_ok, seven.str()}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::string group = "fast";
    TrainingSetup setup;
    setup.work = "acceptance_work";
    app.add_option("--group", group, "fast | training | all")->check(CLI::IsMember({"fast", "training", "all"}));
    app.add_option("--work", setup.work, "Scratch and training-run directory");
    app.add_option("--seeds", setup.seeds, "Seeds per variant for the training criteria");
    app.add_option("--steps", setup.steps, "Training steps per run");
    app.add_option("--config", setup.config, "Run config for the training criteria");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(setup.work);

    bool all = true;
    const auto report = [&](int id, const std::function<Outcome()>& run) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  [" << fmt(seconds, 3)
                  << " s]" << std::endl;
        all &= o.pass;
    };

    if (group != "training") {
        report(1, symmetry_suite);
        report(2, pseudoweight_normalization);
        report(3, clustering_correctness);
        report(4, gradient_suite);
        report(5, metric_oracles);
        report(8, [&] { return variable_k(setup.work); });
        report(9, slot_count_flexibility);
        report(10, [&] { return format_determinism(setup.work); });
    }
    if (group != "fast") {
        std::pair<Outcome, Outcome> training;
        report(6, [&] {
            training = training_criteria(setup);
            return training.first;
        });
        report(7, [&] { return training.second; });
    }
    return all ? 0 : 1;
}
