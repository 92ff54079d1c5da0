#include "doctest.h"

#include "fixtures.hpp"

#include "slotseed/numcore/gradcheck.hpp"
#include "slotseed/numcore/ops.hpp"
#include "slotseed/slotinit/slotinit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

using namespace slotseed;
using namespace slotseed::slots;
using slotseed::testing::random_tensor;

namespace {

Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& perm) { return num::gather_rows(t, perm); }

double max_abs(const Tensor& t) {
    double m = 0;
    for (double v : t.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.dims() == b.dims());
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

MappingParams zero_weights(MappingParams p, double bias) {
    for (auto& layer : p.net.layers) {
        std::fill(layer.weight.mutable_values().begin(), layer.weight.mutable_values().end(), 0.0);
        std::fill(layer.bias.mutable_values().begin(), layer.bias.mutable_values().end(), 0.0);
    }
    auto& last = p.net.layers.back().bias;
    for (std::size_t i = 0; i < last.size(); ++i) last.mutable_values()[i] = bias + static_cast<double>(i);
    return p;
}

} // namespace

TEST_CASE("positional_encoding: table entries") {
    const Tensor row = positional_encoding(1, 4);
    CHECK(row[0] == doctest::Approx(1.0));
    CHECK(std::abs(row[1]) < 1e-15);
    CHECK(std::abs(row[2]) < 1e-15);
    CHECK(row[3] == doctest::Approx(-1.0));

    const Tensor table = positional_encoding(8, 16);
    for (std::size_t k = 0; k < 8; ++k) {
        for (std::size_t j = 0; j < 8; ++j) {
            const double s = table.at({k, 2 * j}), c = table.at({k, 2 * j + 1});
            CHECK(std::abs(s * s + c * c - 1.0) < 1e-9);
            CHECK(std::abs(s - std::sin(std::numbers::pi * double((j + 1) * (k + 1)) / 8.0)) < 1e-15);
        }
        for (std::size_t other = 0; other < k; ++other) {
            double diff = 0;
            for (std::size_t d = 0; d < 16; ++d) diff = std::max(diff, std::abs(table.at({k, d}) - table.at({other, d})));
            CHECK(diff > 1e-3);
        }
    }
    CHECK_THROWS_AS(positional_encoding(3, 5), num::DimensionError);
    CHECK_THROWS_AS(positional_encoding(3, 0), num::DimensionError);
}

TEST_CASE("map_direct and map_shared_mlp are exactly equivariant") {
    Rng rng(1);
    const Tensor c = random_tensor({7, 6}, rng);
    const SlotSet direct = map_direct(c);
    CHECK(direct.count() == 7);
    CHECK(std::equal(direct.slots.values().begin(), direct.slots.values().end(), c.values().begin()));

    const MappingParams shared = MappingParams::create(Mapping::shared_mlp, 6, 7, 7, false, rng);
    const Tensor z = map_shared_mlp(c, shared).slots;
    for (int trial = 0; trial < 20; ++trial) {
        const auto perm = random_permutation(7, rng);
        CHECK(max_abs_diff(map_direct(permute_rows(c, perm)).slots, permute_rows(c, perm)) == 0.0);
        CHECK(max_abs_diff(map_shared_mlp(permute_rows(c, perm), shared).slots, permute_rows(z, perm)) == 0.0);
    }

    Tensor dup = random_tensor({3, 6}, rng);
    for (std::size_t j = 0; j < 6; ++j) dup.mutable_values()[6 + j] = dup[j];
    const Tensor zd = map_shared_mlp(dup, shared).slots;
    for (std::size_t j = 0; j < 6; ++j) CHECK(zd[j] == zd[6 + j]);

    const MappingParams constant = zero_weights(shared, 0.25);
    const Tensor zc = map_shared_mlp(c, constant).slots;
    for (std::size_t k = 0; k < 7; ++k)
        for (std::size_t j = 0; j < 6; ++j) CHECK(zc.at({k, j}) == 0.25 + double(j));
}

TEST_CASE("map_large_mlp: fixed M, bias passthrough, not symmetric") {
    Rng rng(2);
    const MappingParams p = MappingParams::create(Mapping::large_mlp, 4, 7, 14, false, rng);
    CHECK(p.net.in_features() == 14 * 4);
    CHECK(p.net.out_features() == 7 * 4);
    const Tensor c = random_tensor({14, 4}, rng);
    CHECK(map_large_mlp(c, p, 7).slots.dims() == num::Shape{7, 4});
    CHECK_THROWS_AS(map_large_mlp(random_tensor({13, 4}, rng), p, 7), num::DimensionError);
    CHECK_THROWS_AS(map_large_mlp(c, p, 8), num::DimensionError);

    const Tensor zb = map_large_mlp(c, zero_weights(p, 1.0), 7).slots;
    for (std::size_t i = 0; i < zb.size(); ++i) CHECK(zb[i] == 1.0 + double(i));

    int asymmetric = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng r(seed);
        const MappingParams q = MappingParams::create(Mapping::large_mlp, 4, 3, 6, false, r);
        const Tensor cc = random_tensor({6, 4}, r);
        const Tensor z = map_large_mlp(cc, q, 3).slots;
        asymmetric += max_abs_diff(map_large_mlp(permute_rows(cc, random_permutation(6, r)), q, 3).slots, z) > 1e-3;
    }
    CHECK(asymmetric >= 95);
}

TEST_CASE("map_pseudoweights: normalization, invariance, convex hull, K generalization") {
    Rng rng(3);
    for (std::size_t d : {4, 32}) {
        for (std::size_t m = 1; m <= 10; ++m) {
            const MappingParams p = MappingParams::create(Mapping::pseudoweights, d, 5, 2 * 5, false, rng);
            const Tensor c = random_tensor({m, d}, rng, -3, 3);
            const auto base = map_pseudoweights(c, p, 5);
            REQUIRE(base.weights.dims() == num::Shape{5, m, d});
            for (std::size_t k = 0; k < 5; ++k)
                for (std::size_t j = 0; j < d; ++j) {
                    double total = 0, lo = 1e300, hi = -1e300;
                    for (std::size_t i = 0; i < m; ++i) {
                        total += base.weights.at({k, i, j});
                        lo = std::min(lo, c.at({i, j}));
                        hi = std::max(hi, c.at({i, j}));
                    }
                    CHECK(std::abs(total - 1.0) < 1e-6);
                    const double z = base.slots.slots.at({k, j});
                    CHECK(z >= lo - 1e-12);
                    CHECK(z <= hi + 1e-12);
                }
            for (int trial = 0; trial < 10; ++trial) {
                const Tensor moved = map_pseudoweights(permute_rows(c, random_permutation(m, rng)), p, 5).slots.slots;
                CHECK(max_abs_diff(moved, base.slots.slots) / (1 + max_abs(base.slots.slots)) < 1e-6);
            }
            if (m == 1) {
                for (double w : base.weights.values()) CHECK(w == doctest::Approx(1.0));
                for (std::size_t k = 0; k < 5; ++k)
                    for (std::size_t j = 0; j < d; ++j) CHECK(base.slots.slots.at({k, j}) == doctest::Approx(c.at({0, j})));
            }
        }
    }
    const MappingParams p = MappingParams::create(Mapping::pseudoweights, 8, 5, 10, false, rng);
    num::ParameterList before;
    p.collect("pw", before);
    const auto eight = map_pseudoweights(random_tensor({10, 8}, rng), p, 8);
    CHECK(eight.slots.slots.dims() == num::Shape{8, 8});
    num::ParameterList after;
    p.collect("pw", after);
    CHECK(before.size() == after.size());
}

TEST_CASE("map_to_gaussian_and_sample: collapse, determinism, Monte Carlo mean") {
    Rng rng(4);
    CHECK_THROWS_AS(MappingParams::create(Mapping::direct, 4, 3, 3, true, rng), UnsupportedVariant);
    MappingParams p = MappingParams::create(Mapping::shared_mlp, 4, 3, 3, true, rng);
    CHECK(p.net.out_features() == 8);
    CHECK_THROWS_AS(map_shared_mlp(random_tensor({3, 4}, rng), p), UnsupportedVariant);

    // Final layer bias fixes mu = 0.5 + j and log sigma = log(1e-8).
    auto& last = p.net.layers.back();
    std::fill(last.weight.mutable_values().begin(), last.weight.mutable_values().end(), 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
        last.bias.mutable_values()[j] = 0.5 + double(j);
        last.bias.mutable_values()[4 + j] = std::log(1e-8);
    }
    const Tensor c = random_tensor({3, 4}, rng);
    const Tensor z = map_to_gaussian_and_sample(c, p, 3, rng).slots;
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(z.at({k, j}) - (0.5 + double(j))) < 1e-6);

    for (std::size_t j = 0; j < 4; ++j) last.bias.mutable_values()[4 + j] = std::log(0.3);
    Rng a(9), b(9);
    CHECK(max_abs_diff(map_to_gaussian_and_sample(c, p, 3, a).slots, map_to_gaussian_and_sample(c, p, 3, b).slots) == 0.0);

    const Tensor single = random_tensor({1, 4}, rng);
    const std::size_t draws = 100000;
    std::vector<double> mean(4, 0.0);
    for (std::size_t i = 0; i < draws; ++i) {
        const Tensor s = map_to_gaussian_and_sample(single, p, 1, rng).slots;
        for (std::size_t j = 0; j < 4; ++j) mean[j] += s[j] / double(draws);
    }
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(mean[j] - (0.5 + double(j))) < 3 * 0.3 / std::sqrt(double(draws)) * 1.5);

    for (Mapping m : {Mapping::large_mlp, Mapping::pseudoweights}) {
        const MappingParams g = MappingParams::create(m, 4, 3, 6, true, rng);
        CHECK(map_to_gaussian_and_sample(random_tensor({6, 4}, rng), g, 3, rng).slots.dims() == num::Shape{3, 4});
    }
}

TEST_CASE("init_slots: compatibility table and cluster counts") {
    InitConfig cfg;
    cfg.method = InitMethod::meanshift;
    cfg.mapping = Mapping::large_mlp;
    CHECK_THROWS_AS(cfg.validate(), UnsupportedVariant);
    cfg.method = InitMethod::kmeans;
    cfg.mapping = Mapping::direct;
    cfg.gaussian_output = true;
    CHECK_THROWS_AS(cfg.validate(), UnsupportedVariant);
    cfg.method = InitMethod::random;
    CHECK_NOTHROW(cfg.validate());

    cfg = InitConfig{};
    cfg.slots = 5;
    for (auto [mapping, m] : std::vector<std::pair<Mapping, std::size_t>>{
             {Mapping::direct, 5}, {Mapping::shared_mlp, 5}, {Mapping::large_mlp, 10}, {Mapping::pseudoweights, 10}}) {
        cfg.mapping = mapping;
        CHECK(cfg.cluster_count() == m);
    }

    Rng rng(5);
    const auto blobs = slotseed::testing::make_blobs(4, 40, 6, 10.0, 0.5, rng);
    const Tensor features = blobs.points.to_tensor();
    cfg.method = InitMethod::kmeans;
    cfg.mapping = Mapping::pseudoweights;
    const SlotInitializer pw = SlotInitializer::create(cfg, 6, rng);
    const InitResult r = init_slots(features, pw, rng);
    CHECK(r.clusters.centers.rows() == 10);
    CHECK(r.slots.count() == 5);
    CHECK(r.pseudoweights.dims() == num::Shape{5, 10, 6});
    CHECK(init_slots(features, pw, rng, 8).slots.count() == 8);

    cfg.mapping = Mapping::large_mlp;
    const SlotInitializer large = SlotInitializer::create(cfg, 6, rng);
    CHECK(init_slots(features, large, rng).slots.count() == 5);
    CHECK_THROWS_AS(init_slots(features, large, rng, 8), num::DimensionError);

    cfg.method = InitMethod::meanshift;
    cfg.mapping = Mapping::shared_mlp;
    cfg.meanshift.sigma = 1.0;
    cfg.meanshift.epsilon = 0.5;
    const auto three = slotseed::testing::make_blobs(3, 50, 6, 10.0, 0.3, rng);
    const SlotInitializer ms = SlotInitializer::create(cfg, 6, rng);
    CHECK(init_slots(three.points.to_tensor(), ms, rng, 9).slots.count() == 3);

    cfg.method = InitMethod::random;
    const SlotInitializer rnd = SlotInitializer::create(cfg, 6, rng);
    const InitResult rr = init_slots(features, rnd, rng);
    CHECK(rr.slots.count() == 5);
    num::ParameterList params;
    rnd.collect("init", params);
    CHECK(params.size() == 2);
}

TEST_CASE("mapping gradients pass finite-difference checks") {
    Rng rng(6);
    const Tensor c = random_tensor({6, 4}, rng);
    const Tensor weights3 = random_tensor({3, 4}, rng);
    const Tensor weights6 = random_tensor({6, 4}, rng);
    const auto check = [&](const MappingParams& p, auto&& fn) {
        num::ParameterList list;
        p.collect("m", list);
        auto tensors = num::tensors_of(list);
        Tensor point = c.clone();
        point.set_requires_grad(true);
        tensors.push_back(point);
        const auto loss = [&] { return fn(point); };
        const auto result = num::finite_difference_check(loss, tensors);
        CHECK(result.max_rel_error < 1e-4);
        CHECK(result.checked > 0);
    };
    const MappingParams shared = MappingParams::create(Mapping::shared_mlp, 4, 6, 6, false, rng);
    check(shared, [&](const Tensor& x) { return num::sum_all(num::mul(map_shared_mlp(x, shared).slots, weights6)); });
    const MappingParams large = MappingParams::create(Mapping::large_mlp, 4, 3, 6, false, rng);
    check(large, [&](const Tensor& x) { return num::sum_all(num::mul(map_large_mlp(x, large, 3).slots, weights3)); });
    const MappingParams pw = MappingParams::create(Mapping::pseudoweights, 4, 3, 6, false, rng);
    check(pw, [&](const Tensor& x) { return num::sum_all(num::mul(map_pseudoweights(x, pw, 3).slots.slots, weights3)); });
    const MappingParams gauss = MappingParams::create(Mapping::pseudoweights, 4, 3, 6, true, rng);
    check(gauss, [&](const Tensor& x) {
        Rng fixed(11);
        return num::sum_all(num::mul(map_to_gaussian_and_sample(x, gauss, 3, fixed).slots, weights3));
    });
    check(MappingParams{}, [&](const Tensor& x) { return num::sum_all(num::mul(map_direct(x).slots, weights6)); });
}
