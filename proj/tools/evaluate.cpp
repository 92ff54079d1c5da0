#include "slotseed/cli/cli.hpp"

#include "slotseed/datasynth/container.hpp"
#include "slotseed/numcore/tape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace slotseed::cli {

std::string encode_ppm(const num::Tensor& image) {
    if (image.rank() != 3 || image.dim(2) != 3) throw num::DimensionError("PPM output needs an H x W x 3 image");
    std::string out = "P6\n" + std::to_string(image.dim(1)) + " " + std::to_string(image.dim(0)) + "\n255\n";
    out.reserve(out.size() + image.size());
    for (double v : image.values()) {
        const double c = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    return out;
}

void write_ppm(const std::filesystem::path& path, const num::Tensor& image) { data::write_text(path, encode_ppm(image)); }

num::Tensor colorize_labels(std::span<const std::size_t> labels, std::size_t height, std::size_t width) {
    if (labels.size() != height * width) throw num::DimensionError("label count does not match the image size");
    // Hues spaced by the golden angle stay distinct for any label count.
    std::vector<double> v(labels.size() * 3);
    for (std::size_t p = 0; p < labels.size(); ++p) {
        const double hue = std::fmod(static_cast<double>(labels[p]) * 0.381966, 1.0) * 6.0;
        const double x = 1.0 - std::abs(std::fmod(hue, 2.0) - 1.0);
        const int sector = static_cast<int>(hue);
        const double rgb[6][3] = {{1, x, 0}, {x, 1, 0}, {0, 1, x}, {0, x, 1}, {x, 0, 1}, {1, 0, x}};
        for (std::size_t c = 0; c < 3; ++c) v[3 * p + c] = 0.15 + 0.8 * rgb[sector][c];
    }
    return num::Tensor({height, width, 3}, std::move(v));
}

std::size_t thread_budget() {
    if (const char* env = std::getenv("SLOTSEED_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<std::size_t>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SceneOutput> evaluate(const scene::Model& model, const std::vector<data::SceneSample>& scenes,
                                  const EvalOptions& options) {
    std::vector<SceneOutput> results(scenes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;

    const auto worker = [&] {
        num::Tape::Pause pause;
        for (std::size_t i = next++; i < scenes.size(); i = next++) {
            try {
                const data::SceneSample& sample = scenes[i];
                std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                                  static_cast<std::uint32_t>(i), 0xe7a1u};
                num::Rng rng(seq);
                const num::Tensor image = sample.image();
                scene::ForwardResult out = scene::forward(image, model, rng, {options.iterations, options.slots});
                const metrics::AriScore ari =
                    metrics::foreground_ari(scene::segment(out.rendered.masks), sample.label_map());
                metrics::SceneScore& s = results[i].score;
                s.scene = i;
                s.fg_ari = ari.value;
                s.empty_foreground = ari.empty_foreground;
                s.psnr_db = metrics::psnr(out.rendered.reconstruction, image);
                s.ssim = metrics::ssim(out.rendered.reconstruction, image);
                s.mse = scene::reconstruction_loss(out.rendered.reconstruction, image).item();
                s.discovered_k = static_cast<double>(out.diagnostics.slot_count);
                s.iterations = options.iterations.value_or(model.config.iterations);
                results[i].rendered = std::move(out.rendered);
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failure) failure = std::current_exception();
                next = scenes.size();
            }
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(scenes.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

} // namespace slotseed::cli
