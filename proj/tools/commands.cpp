#include "slotseed/cli/cli.hpp"

#include "slotseed/clustering/clustering.hpp"
#include "slotseed/datasynth/container.hpp"
#include "slotseed/numcore/ops.hpp"
#include "slotseed/numcore/tape.hpp"
#include "slotseed/scene/calibration.hpp"
#include "slotseed/scene/checkpoint.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace slotseed::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> interrupted{false};

extern "C" void on_interrupt(int) { interrupted = true; }

// Installs the Ctrl-C handler for the lifetime of a training run.
class InterruptGuard {
  public:
    InterruptGuard() {
        interrupted = false;
        previous_ = std::signal(SIGINT, on_interrupt);
    }
    ~InterruptGuard() { std::signal(SIGINT, previous_); }
    InterruptGuard(const InterruptGuard&) = delete;
    InterruptGuard& operator=(const InterruptGuard&) = delete;

  private:
    void (*previous_)(int) = SIG_DFL;
};

json read_json_file(const fs::path& path) {
    try {
        return json::parse(data::read_text(path));
    } catch (const json::parse_error& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

std::string scene_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%05zu", index);
    return buf;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
    fs::path out;
    std::size_t count = 500;
    std::optional<std::size_t> min_objects, max_objects, size, min_size, max_size;
    std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    data::SceneConfig cfg;
    if (a.size) cfg.height = cfg.width = *a.size;
    if (a.max_objects) {
        cfg.max_objects = *a.max_objects;
        cfg.min_objects = std::min(cfg.min_objects, cfg.max_objects);
    }
    if (a.min_objects) cfg.min_objects = *a.min_objects;
    if (a.max_size) {
        cfg.max_size = *a.max_size;
        cfg.min_size = std::min(cfg.min_size, cfg.max_size);
    }
    if (a.min_size) cfg.min_size = *a.min_size;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const data::DatasetManifest m = data::generate_dataset(a.seed, cfg, a.count, a.out);
    out << "wrote " << m.scenes.size() << " scenes to " << a.out.string() << "\n";
    return exit_ok;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
    std::optional<fs::path> config;
    fs::path data;
    fs::path out;
    bool resume = false;
    json overrides = json::object();
};

RunConfig resolve_config(const std::optional<fs::path>& path, const json& overrides) {
    json merged = path ? read_json_file(*path) : json::object();
    if (!merged.is_object()) throw UsageError("run config must be a JSON object");
    for (const auto& item : overrides.items()) merged[item.key()] = item.value();
    return RunConfig::from_json(merged);
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig cfg = resolve_config(a.config, a.overrides);
    const bool calibrate = cfg.calibrate_bandwidth && cfg.model.init.method == slots::InitMethod::meanshift;

    const std::vector<data::SceneSample> scenes = data::load_dataset(a.data);
    if (scenes.empty()) throw std::runtime_error("dataset " + a.data.string() + " has no scenes");
    std::vector<num::Tensor> images;
    images.reserve(scenes.size());
    for (const auto& s : scenes) {
        if (s.height != cfg.model.height || s.width != cfg.model.width) {
            throw std::runtime_error("dataset images are " + std::to_string(s.height) + "x" + std::to_string(s.width) +
                                     ", config expects " + std::to_string(cfg.model.height) + "x" +
                                     std::to_string(cfg.model.width));
        }
        images.push_back(s.image());
    }

    fs::create_directories(a.out);
    const fs::path checkpoint_dir = a.out / "checkpoint";
    const fs::path log_path = a.out / "train_log.csv";

    scene::Model model;
    scene::TrainState state;
    if (a.resume) {
        scene::Checkpoint ck = scene::load_checkpoint(checkpoint_dir);
        if (calibrate) cfg.model.init.meanshift = ck.model.config.init.meanshift;
        if (json(ck.model.config) != json(cfg.model)) {
            throw UsageError("checkpoint architecture differs from the run config");
        }
        model = std::move(ck.model);
        state = std::move(ck.state);
        out << "resumed at step " << state.step << "\n";
    } else {
        num::Rng rng(cfg.train.seed);
        model = scene::Model::create(cfg.model, rng);
        if (calibrate) {
            const std::size_t n = std::min<std::size_t>(images.size(), 32);
            const scene::BandwidthCalibration c =
                scene::calibrate_bandwidth(model, std::span(images).first(n), cfg.train.seed);
            scene::set_bandwidth(model, c.sigma, c.epsilon);
            cfg.model.init.meanshift = model.config.init.meanshift;
            const auto [lo, hi] = std::minmax_element(c.slot_counts.begin(), c.slot_counts.end());
            out << "calibrated sigma " << c.sigma << " epsilon " << c.epsilon << " (slots " << *lo << ".." << *hi
                << " over " << n << " scenes" << (c.fluctuates ? "" : ", rule not met") << ")\n";
        }
    }
    data::write_text(a.out / "config.json", cfg.to_json().dump(2) + "\n");

    std::ofstream log(log_path, a.resume ? std::ios::app : std::ios::trunc);
    if (!log) throw data::IoError("cannot open " + log_path.string());
    if (!a.resume) log << "step,loss,learning_rate,mean_loss,mean_slots\n";
    log << std::setprecision(10);

    const auto save = [&] { scene::save_checkpoint(checkpoint_dir, model, state, cfg.to_json()); };
    InterruptGuard guard;
    double window_loss = 0.0, window_slots = 0.0;
    std::size_t window = 0;
    while (state.step < cfg.train.steps) {
        const scene::StepStats s = scene::train_step(model, state, cfg.train, images);
        window_loss += s.loss;
        window_slots += s.mean_slots;
        ++window;
        if (s.step == 1 || s.step % 50 == 0 || s.step == cfg.train.steps) {
            log << s.step << ',' << s.loss << ',' << s.learning_rate << ',' << window_loss / window << ','
                << window_slots / window << '\n';
            log.flush();
            window_loss = window_slots = 0.0;
            window = 0;
        }
        if (s.step % cfg.checkpoint_interval == 0) save();
        if (interrupted) {
            save();
            err << "interrupted at step " << state.step << "; checkpoint written to " << checkpoint_dir.string()
                << "\n";
            return exit_failure;
        }
    }
    save();
    out << "trained to step " << state.step << "; checkpoint in " << checkpoint_dir.string() << "\n";
    return exit_ok;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
    fs::path checkpoint;
    fs::path data;
    fs::path report;
    std::optional<long long> iterations;
    std::optional<std::size_t> slots;
    std::optional<std::size_t> limit;
    std::optional<std::size_t> images;
    std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.iterations && *a.iterations < 0) throw UsageError("--iterations must be non-negative");
    if (a.slots && *a.slots == 0) throw UsageError("--slots must be positive");

    const scene::Checkpoint ck = scene::load_checkpoint(a.checkpoint);
    if (!ck.run_config.empty()) {
        const RunConfig echo = RunConfig::from_json(ck.run_config);
        if (json(echo.model) != json(ck.model.config)) {
            throw std::runtime_error("checkpoint architecture does not match its config echo");
        }
    }

    std::vector<data::SceneSample> scenes = data::load_dataset(a.data);
    if (a.limit && *a.limit < scenes.size()) scenes.resize(*a.limit);
    for (const auto& s : scenes) {
        if (s.height != ck.model.config.height || s.width != ck.model.config.width) {
            throw std::runtime_error("dataset image size does not match the checkpoint");
        }
    }

    EvalOptions opts;
    if (a.iterations) opts.iterations = static_cast<std::size_t>(*a.iterations);
    opts.slots = a.slots;
    opts.seed = a.seed;
    opts.threads = thread_budget();
    const std::vector<SceneOutput> results = evaluate(ck.model, scenes, opts);

    metrics::EvalReport report;
    for (const auto& r : results) report.scenes.push_back(r.score);
    fs::create_directories(a.report);
    data::write_text(a.report / "report.csv", report.to_csv());
    data::write_text(a.report / "report.json", report.to_json());

    const std::size_t with_images = std::min(a.images.value_or(scenes.size()), scenes.size());
    if (with_images > 0) fs::create_directories(a.report / "images");
    for (std::size_t i = 0; i < with_images; ++i) {
        const scene::Rendered& r = results[i].rendered;
        const std::size_t h = scenes[i].height, w = scenes[i].width, k = r.masks.dim(0);
        const fs::path stem = a.report / "images" / scene_stem(i);
        write_ppm(fs::path(stem).concat("_input.ppm"), scenes[i].image());
        write_ppm(fs::path(stem).concat("_recon.ppm"), r.reconstruction);
        write_ppm(fs::path(stem).concat("_segments.ppm"), colorize_labels(scene::segment(r.masks), h, w));
        for (std::size_t s = 0; s < k; ++s) {
            std::vector<double> gray(h * w * 3);
            for (std::size_t p = 0; p < h * w; ++p) gray[3 * p] = gray[3 * p + 1] = gray[3 * p + 2] = r.masks[s * h * w + p];
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, "_mask_%02zu.ppm", s);
            write_ppm(fs::path(stem).concat(suffix), num::Tensor({h, w, 3}, std::move(gray)));
        }
    }

    const metrics::SceneScore mean = report.aggregate();
    out << std::fixed << std::setprecision(4) << "scenes " << scenes.size() << "  fg_ari " << mean.fg_ari << "  mse "
        << mean.mse << "  psnr " << mean.psnr_db << "  ssim " << mean.ssim << "  slots " << mean.discovered_k << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
    fs::path input;
    std::string algo;
    std::optional<std::size_t> k;
    std::optional<double> sigma, epsilon;
    std::optional<std::size_t> queries;
    std::size_t max_iterations = 100;
    std::uint64_t seed = 0;
    fs::path out;
};

int cmd_cluster(const ClusterArgs& a, std::ostream& out) {
    if (a.algo == "kmeans" && !a.k) throw UsageError("--algo kmeans needs --k");

    const data::StoredTensor stored = data::read_tensor(a.input);
    std::size_t height = 1, width = 0;
    num::Tensor features;
    if (stored.dims.size() == 2) {
        features = stored.to_tensor();
        width = stored.dims[0];
    } else if (stored.dims.size() == 3) {
        height = stored.dims[0];
        width = stored.dims[1];
        num::Tensor t = stored.to_tensor();
        const double unit = stored.dtype == data::DType::u8 ? 1.0 / 255.0 : 1.0;
        features = num::reshape(t.detach(), {height * width, stored.dims[2]});
        if (unit != 1.0)
            for (double& v : features.mutable_values()) v *= unit;
    } else {
        throw std::runtime_error("cluster input must be an N x D feature matrix or an H x W x C image");
    }

    const cluster::FeatureGrid grid = cluster::FeatureGrid::from_tensor(features);
    num::Rng rng(a.seed);
    cluster::ClusterSet result;
    if (a.algo == "kmeans") {
        result = cluster::kmeans_run(grid, {*a.k, a.max_iterations, 1e-4}, rng);
    } else {
        cluster::MeanShiftConfig cfg;
        if (a.sigma) cfg.sigma = *a.sigma;
        if (a.epsilon) cfg.epsilon = *a.epsilon;
        cfg.initial_centers = std::min(a.queries.value_or(cfg.initial_centers), grid.rows());
        cfg.max_iterations = a.max_iterations;
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        result = cluster::meanshift_run(grid, cfg, rng);
    }

    // Every point is labelled by its nearest center (k-means: its final assignment).
    std::vector<std::size_t> labels = result.assignments;
    if (labels.empty()) {
        labels.resize(grid.rows());
        for (std::size_t n = 0; n < grid.rows(); ++n) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < result.centers.rows(); ++c) {
                const double d = cluster::squared_distance(grid.row(n), result.centers.row(c));
                if (d < best) {
                    best = d;
                    labels[n] = c;
                }
            }
        }
    }

    fs::create_directories(a.out);
    data::write_tensor(a.out / "centers.sltc", data::StoredTensor::from_tensor(result.centers.to_tensor()));
    const auto as_tensor = [](const std::vector<std::size_t>& v) {
        return data::StoredTensor{data::DType::f64, {v.size()}, std::vector<double>(v.begin(), v.end())};
    };
    data::write_tensor(a.out / "membership.sltc", as_tensor(labels));
    if (a.algo == "meanshift") data::write_tensor(a.out / "query_membership.sltc", as_tensor(result.membership));
    write_ppm(a.out / "assignment.ppm", colorize_labels(labels, height, width));

    out << a.algo << ": " << result.centers.rows() << " centers, " << result.iterations_used << " iterations"
        << (result.converged ? ", converged" : "") << "\n";
    return exit_ok;
}

// -------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    std::optional<fs::path> config;
    std::uint64_t seed = 0;
    std::string fault;
    double fault_factor = 1.5;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
    std::optional<slots::InitConfig> extra;
    std::uint64_t seed = a.seed;
    if (a.config) {
        const RunConfig cfg = RunConfig::from_json(read_json_file(*a.config));
        extra = cfg.model.init;
    }

    struct FaultReset {
        ~FaultReset() { num::set_gradient_fault("", 1.0); }
    } reset;
    if (!a.fault.empty()) num::set_gradient_fault(a.fault, a.fault_factor);

    const std::vector<GradcheckRow> rows = gradcheck_suite(seed, extra);
    out << std::left << std::setw(34) << "check" << std::right << std::setw(14) << "max_rel_err" << std::setw(10)
        << "checked" << std::setw(12) << "tolerance" << "  result\n";
    std::vector<std::string> failed;
    for (const auto& r : rows) {
        out << std::left << std::setw(34) << r.name << std::right << std::scientific << std::setprecision(3)
            << std::setw(14) << r.max_rel_error << std::setw(10) << r.checked << std::setw(12) << r.tolerance
            << (r.passed() ? "  PASS\n" : "  FAIL\n");
        if (!r.passed()) failed.push_back(r.name);
    }
    out << std::defaultfloat;
    if (failed.empty()) {
        out << "all " << rows.size() << " checks passed\n";
        return exit_ok;
    }
    err << "gradient check failed:";
    for (const auto& name : failed) err << ' ' << name;
    err << "\n";
    return exit_failure;
}

// ----------------------------------------------------------------- report

struct ReportArgs {
    std::vector<fs::path> inputs;
    fs::path out;
    std::optional<fs::path> csv;
    std::optional<fs::path> figure;
};

struct ReportRow {
    std::string label;
    std::size_t scenes = 0;
    json aggregate;
};

// Horizontal bar per run, bar length proportional to mean FG-ARI in [0, 1].
num::Tensor ari_figure(const std::vector<ReportRow>& rows) {
    const std::size_t bar = 12, gap = 4, width = 256;
    const std::size_t height = gap + rows.size() * (bar + gap);
    std::vector<double> v(height * width * 3, 1.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double ari = std::clamp(rows[i].aggregate.value("fg_ari", 0.0), 0.0, 1.0);
        const auto len = static_cast<std::size_t>(std::lround(ari * static_cast<double>(width - 1)));
        const num::Tensor color = colorize_labels(std::vector<std::size_t>{i + 1}, 1, 1);
        for (std::size_t y = gap + i * (bar + gap); y < gap + i * (bar + gap) + bar; ++y)
            for (std::size_t x = 0; x < width; ++x)
                for (std::size_t c = 0; c < 3; ++c) {
                    const bool tick = x % 64 == 0 || x == width - 1;
                    v[3 * (y * width + x) + c] = x < len ? color[c] : (tick ? 0.6 : 0.92);
                }
    }
    return num::Tensor({height, width, 3}, std::move(v));
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
    std::vector<ReportRow> rows;
    for (const fs::path& in : a.inputs) {
        const fs::path file = fs::is_directory(in) ? in / "report.json" : in;
        const json j = read_json_file(file);
        if (!j.contains("aggregate") || !j.contains("scenes")) throw UsageError(file.string() + " is not an eval report");
        const fs::path named = fs::is_directory(in) ? in : in.parent_path();
        rows.push_back({named.filename().string(), j.at("scenes").size(), j.at("aggregate")});
    }

    std::ostringstream md;
    md << std::fixed << std::setprecision(4);
    md << "| run | scenes | fg_ari | mse | psnr_db | ssim | slots |\n|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        const json& g = r.aggregate;
        md << "| " << r.label << " | " << r.scenes << " | " << g.value("fg_ari", 0.0) << " | " << g.value("mse", 0.0)
           << " | " << g.value("psnr_db", 0.0) << " | " << g.value("ssim", 0.0) << " | " << g.value("discovered_k", 0.0)
           << " |\n";
    }
    data::write_text(a.out, md.str());

    if (a.csv) {
        std::ostringstream csv;
        csv << std::setprecision(17) << "run,scenes,fg_ari,mse,psnr_db,ssim,discovered_k\n";
        for (const auto& r : rows) {
            const json& g = r.aggregate;
            csv << r.label << ',' << r.scenes << ',' << g.value("fg_ari", 0.0) << ',' << g.value("mse", 0.0) << ','
                << g.value("psnr_db", 0.0) << ',' << g.value("ssim", 0.0) << ',' << g.value("discovered_k", 0.0) << '\n';
        }
        data::write_text(*a.csv, csv.str());
    }
    if (a.figure) write_ppm(*a.figure, ari_figure(rows));
    out << md.str();
    return exit_ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Conditional slot initialization for object-centric scene models", "slotseed"};
    app.require_subcommand(1);

    SynthArgs synth;
    CLI::App* s = app.add_subcommand("synth", "Generate a synthetic sprite dataset");
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--count", synth.count, "Number of scenes")->check(CLI::PositiveNumber);
    s->add_option("--min-objects", synth.min_objects, "Fewest sprites per scene");
    s->add_option("--max-objects", synth.max_objects, "Most sprites per scene");
    s->add_option("--size", synth.size, "Image side in pixels")->check(CLI::PositiveNumber);
    s->add_option("--min-size", synth.min_size, "Smallest sprite extent");
    s->add_option("--max-size", synth.max_size, "Largest sprite extent");
    s->add_option("--seed", synth.seed, "Dataset seed");

    TrainArgs train;
    std::optional<std::string> method, mapping;
    std::optional<std::size_t> t_slots, t_dim, t_steps, t_batch, t_warmup, t_iterations, t_interval;
    std::optional<double> t_lr, t_sigma, t_epsilon;
    std::optional<std::uint64_t> t_seed;
    CLI::App* t = app.add_subcommand("train", "Train a scene model");
    t->add_option("--config", train.config, "Flat JSON run config");
    t->add_option("--data", train.data, "Dataset directory")->required();
    t->add_option("--out", train.out, "Run directory (checkpoint, log)")->required();
    t->add_flag("--resume", train.resume, "Continue from <out>/checkpoint");
    t->add_option("--method", method, "random | kmeans | meanshift");
    t->add_option("--mapping", mapping, "direct | shared_mlp | large_mlp | pseudoweights");
    t->add_option("--slots", t_slots, "K");
    t->add_option("--dim", t_dim, "D");
    t->add_option("--steps", t_steps, "Total steps");
    t->add_option("--batch-size", t_batch, "Images per step");
    t->add_option("--lr", t_lr, "Base learning rate");
    t->add_option("--warmup", t_warmup, "Warm-up steps");
    t->add_option("--iterations", t_iterations, "Refinement iterations");
    t->add_option("--sigma", t_sigma, "Mean-shift bandwidth");
    t->add_option("--epsilon", t_epsilon, "Mean-shift merge radius");
    t->add_option("--checkpoint-every", t_interval, "Steps between checkpoints");
    t->add_option("--seed", t_seed, "Training seed");

    EvalArgs eval;
    CLI::App* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    e->add_option("--checkpoint", eval.checkpoint, "Checkpoint directory")->required();
    e->add_option("--data", eval.data, "Dataset directory")->required();
    e->add_option("--report", eval.report, "Report directory")->required();
    e->add_option("--iterations", eval.iterations, "Refinement iterations (default: trained count)");
    e->add_option("--slots", eval.slots, "Override K");
    e->add_option("--limit", eval.limit, "Evaluate only the first N scenes");
    e->add_option("--images", eval.images, "Write images for the first N scenes (default all)");
    e->add_option("--seed", eval.seed, "Evaluation seed");

    ClusterArgs clus;
    CLI::App* c = app.add_subcommand("cluster", "Cluster a feature matrix or image");
    c->add_option("--input", clus.input, "Tensor container (N x D or H x W x C)")->required();
    c->add_option("--algo", clus.algo, "kmeans | meanshift")->required()->check(CLI::IsMember({"kmeans", "meanshift"}));
    c->add_option("--k", clus.k, "Cluster count (kmeans)")->check(CLI::PositiveNumber);
    c->add_option("--sigma", clus.sigma, "Kernel bandwidth (meanshift)");
    c->add_option("--epsilon", clus.epsilon, "Merge radius (meanshift)");
    c->add_option("--queries", clus.queries, "Mean-shift starting points");
    c->add_option("--max-iterations", clus.max_iterations, "Iteration cap");
    c->add_option("--seed", clus.seed, "Seed");
    c->add_option("--out", clus.out, "Output directory")->required();

    GradcheckArgs grad;
    CLI::App* g = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    g->add_option("--config", grad.config, "Run config whose variant gets an extra end-to-end row");
    g->add_option("--seed", grad.seed, "Seed");
    g->add_option("--fault", grad.fault, "Corrupt the gradient of this op (test hook)");
    g->add_option("--fault-factor", grad.fault_factor, "Gradient scale for --fault");

    ReportArgs rep;
    CLI::App* r = app.add_subcommand("report", "Summarize eval reports");
    r->add_option("inputs", rep.inputs, "Eval report directories or report.json files")->required();
    r->add_option("--out", rep.out, "Markdown table")->required();
    r->add_option("--csv", rep.csv, "Also write CSV");
    r->add_option("--figure", rep.figure, "FG-ARI bar chart (PPM)");

    std::vector<std::string> argv_store{"slotseed"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (s->parsed()) return cmd_synth(synth, out);
        if (t->parsed()) {
            json& o = train.overrides;
            if (method) o["method"] = *method;
            if (mapping) o["mapping"] = *mapping;
            if (t_slots) o["slots"] = *t_slots;
            if (t_dim) o["dim"] = *t_dim;
            if (t_steps) o["steps"] = *t_steps;
            if (t_batch) o["batch_size"] = *t_batch;
            if (t_lr) o["learning_rate"] = *t_lr;
            if (t_warmup) o["warmup_steps"] = *t_warmup;
            if (t_iterations) o["iterations_train"] = *t_iterations;
            if (t_sigma) o["sigma"] = *t_sigma;
            if (t_epsilon) o["epsilon"] = *t_epsilon;
            if (t_interval) o["checkpoint_interval"] = *t_interval;
            if (t_seed) o["seed"] = *t_seed;
            return cmd_train(train, out, err);
        }
        if (e->parsed()) return cmd_eval(eval, out);
        if (c->parsed()) return cmd_cluster(clus, out);
        if (g->parsed()) return cmd_gradcheck(grad, out, err);
        if (r->parsed()) return cmd_report(rep, out);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_usage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

} // namespace slotseed::cli
