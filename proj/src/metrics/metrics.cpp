#include "slotseed/metrics/metrics.hpp"

#include "slotseed/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace slotseed::metrics {

namespace {

using Count = std::int64_t;

Count pairs(Count n) { return n * (n - 1) / 2; }

void require_same_dims(const num::Tensor& a, const num::Tensor& b, const char* what) {
    if (a.dims() != b.dims()) {
        throw num::DimensionError(std::string(what) + ": shapes differ, " + num::shape_string(a.dims()) + " vs " +
                                  num::shape_string(b.dims()));
    }
}

std::vector<double> grayscale(const num::Tensor& t, std::size_t& h, std::size_t& w) {
    if (t.rank() != 2 && t.rank() != 3) throw num::DimensionError("ssim expects H x W or H x W x C images");
    h = t.dim(0);
    w = t.dim(1);
    const std::size_t c = t.rank() == 3 ? t.dim(2) : 1;
    std::vector<double> g(h * w, 0.0);
    for (std::size_t p = 0; p < h * w; ++p) {
        for (std::size_t ch = 0; ch < c; ++ch) g[p] += t[p * c + ch];
        g[p] /= static_cast<double>(c);
    }
    return g;
}

double relative_inf(const num::Tensor& x, const num::Tensor& ref) {
    if (x.dims() != ref.dims()) throw num::DimensionError("permuted output changed shape");
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        diff = std::max(diff, std::abs(x[i] - ref[i]));
        scale = std::max(scale, std::abs(ref[i]));
    }
    return diff / (1.0 + scale);
}

} // namespace

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) throw num::DimensionError("label maps differ in size");
    std::map<std::pair<std::size_t, std::size_t>, Count> joint;
    std::map<std::size_t, Count> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++joint[{a[i], b[i]}];
        ++rows[a[i]];
        ++cols[b[i]];
    }
    Count index = 0, sum_a = 0, sum_b = 0;
    for (const auto& [key, n] : joint) index += pairs(n);
    for (const auto& [key, n] : rows) sum_a += pairs(n);
    for (const auto& [key, n] : cols) sum_b += pairs(n);
    const Count total = pairs(static_cast<Count>(a.size()));
    // ARI = (index - E) / (max - E) with E = sum_a sum_b / total and max = (sum_a + sum_b) / 2,
    // scaled by 2 * total to stay in integers.
    const Count numerator = 2 * total * index - 2 * sum_a * sum_b;
    const Count denominator = total * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if (denominator == 0) return 1.0;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

AriScore foreground_ari(std::span<const std::size_t> pred, std::span<const std::size_t> gt) {
    if (pred.size() != gt.size()) throw num::DimensionError("label maps differ in size");
    std::vector<std::size_t> p, g;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] != 0) {
            p.push_back(pred[i]);
            g.push_back(gt[i]);
        }
    }
    if (g.empty()) return {1.0, true};
    return {adjusted_rand_index(p, g), false};
}

double psnr(const num::Tensor& a, const num::Tensor& b) {
    require_same_dims(a, b, "psnr");
    if (a.size() == 0) throw num::DimensionError("psnr of empty images");
    double sse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sse += (a[i] - b[i]) * (a[i] - b[i]);
    const double mse = sse / static_cast<double>(a.size());
    if (mse == 0.0) return psnr_cap_db;
    return std::min(psnr_cap_db, 10.0 * std::log10(1.0 / mse));
}

double ssim(const num::Tensor& a, const num::Tensor& b) {
    require_same_dims(a, b, "ssim");
    constexpr std::size_t window = 8;
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    std::size_t h, w;
    const auto ga = grayscale(a, h, w);
    const auto gb = grayscale(b, h, w);
    if (h < window || w < window) throw num::DimensionError("ssim needs images of at least 8x8 pixels");
    const double n = window * window;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t y0 = 0; y0 + window <= h; y0 += window) {
        for (std::size_t x0 = 0; x0 + window <= w; x0 += window) {
            double ma = 0, mb = 0;
            for (std::size_t y = y0; y < y0 + window; ++y)
                for (std::size_t x = x0; x < x0 + window; ++x) {
                    ma += ga[y * w + x];
                    mb += gb[y * w + x];
                }
            ma /= n;
            mb /= n;
            double va = 0, vb = 0, cov = 0;
            for (std::size_t y = y0; y < y0 + window; ++y)
                for (std::size_t x = x0; x < x0 + window; ++x) {
                    const double da = ga[y * w + x] - ma, db = gb[y * w + x] - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            va /= n;
            vb /= n;
            cov /= n;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double permutation_deviation(const SetFunction& f, const num::Tensor& c, SymmetryMode mode, std::size_t trials,
                             num::Rng& rng) {
    if (trials == 0) throw std::invalid_argument("permutation_deviation needs trials >= 1");
    if (c.rank() != 2) throw num::DimensionError("permutation_deviation expects M x D centers");
    const std::size_t m = c.dim(0);
    const num::Tensor base = f(c);
    if (mode == SymmetryMode::equivariance && (base.rank() == 0 || base.dim(0) != m)) {
        throw num::DimensionError("equivariance needs as many outputs as inputs");
    }
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    double worst = 0.0;
    const auto probe = [&](const std::vector<std::size_t>& p) {
        const num::Tensor out = f(num::gather_rows(c, p));
        const num::Tensor ref = mode == SymmetryMode::invariance ? base : num::gather_rows(base, p);
        worst = std::max(worst, relative_inf(out, ref));
    };
    if (m <= 5) {
        do probe(perm);
        while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        for (std::size_t t = 0; t < trials; ++t) {
            std::shuffle(perm.begin(), perm.end(), rng);
            probe(perm);
        }
    }
    return worst;
}

SceneScore EvalReport::aggregate() const {
    SceneScore mean;
    if (scenes.empty()) return mean;
    const double n = static_cast<double>(scenes.size());
    double iterations = 0.0;
    for (const SceneScore& s : scenes) {
        mean.fg_ari += s.fg_ari / n;
        mean.psnr_db += s.psnr_db / n;
        mean.ssim += s.ssim / n;
        mean.mse += s.mse / n;
        mean.discovered_k += s.discovered_k / n;
        iterations += static_cast<double>(s.iterations) / n;
        mean.empty_foreground = mean.empty_foreground || s.empty_foreground;
    }
    mean.iterations = static_cast<std::size_t>(std::lround(iterations));
    return mean;
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "scene,fg_ari,empty_foreground,psnr_db,ssim,mse,discovered_k,iterations\n";
    const auto row = [&](const std::string& name, const SceneScore& s) {
        out << name << ',' << s.fg_ari << ',' << (s.empty_foreground ? 1 : 0) << ',' << s.psnr_db << ',' << s.ssim << ','
            << s.mse << ',' << s.discovered_k << ',' << s.iterations << '\n';
    };
    for (const SceneScore& s : scenes) row(std::to_string(s.scene), s);
    row("mean", aggregate());
    return out.str();
}

std::string EvalReport::to_json() const {
    const auto encode = [](const SceneScore& s) {
        return nlohmann::json{{"fg_ari", s.fg_ari}, {"empty_foreground", s.empty_foreground}, {"psnr_db", s.psnr_db},
                              {"ssim", s.ssim},     {"mse", s.mse},                         {"discovered_k", s.discovered_k},
                              {"iterations", s.iterations}};
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const SceneScore& s : scenes) {
        nlohmann::json r = encode(s);
        r["scene"] = s.scene;
        rows.push_back(std::move(r));
    }
    return nlohmann::json{{"scenes", rows}, {"aggregate", encode(aggregate())}}.dump(2) + "\n";
}

} // namespace slotseed::metrics
