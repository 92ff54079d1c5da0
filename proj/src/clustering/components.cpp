#include "slotseed/clustering/clustering.hpp"

#include <numeric>
#include <stdexcept>

namespace slotseed::cluster {

namespace {

class DisjointSet {
  public:
    explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

  private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

} // namespace

Components connected_components_merge(const FeatureGrid& points, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("connected components: epsilon must be positive");
    const std::size_t n = points.rows();
    Components out;
    if (n == 0) {
        out.representatives = FeatureGrid(0, points.cols());
        return out;
    }
    const double radius = epsilon * epsilon;
    DisjointSet sets(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (squared_distance(points.row(i), points.row(j)) <= radius) sets.unite(i, j);

    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> label_of_root(n, unset);
    std::vector<std::size_t> counts;
    out.membership.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = sets.find(i);
        if (label_of_root[root] == unset) {
            label_of_root[root] = counts.size();
            counts.push_back(0);
        }
        out.membership[i] = label_of_root[root];
        ++counts[out.membership[i]];
    }

    out.representatives = FeatureGrid(counts.size(), points.cols());
    for (std::size_t i = 0; i < n; ++i) {
        auto dst = out.representatives.row(out.membership[i]);
        const auto src = points.row(i);
        for (std::size_t j = 0; j < points.cols(); ++j) dst[j] += src[j];
    }
    for (std::size_t c = 0; c < counts.size(); ++c)
        for (double& v : out.representatives.row(c)) v /= static_cast<double>(counts[c]);
    return out;
}

} // namespace slotseed::cluster
