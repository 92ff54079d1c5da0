#pragma once

#include "slotseed/numcore/layers.hpp"
#include "slotseed/numcore/tensor.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace slotseed::cluster {

using num::Rng;

/// N x D matrix of per-pixel features, row-major.
class FeatureGrid {
  public:
    FeatureGrid() = default;
    FeatureGrid(std::size_t rows, std::size_t cols);
    FeatureGrid(std::size_t rows, std::size_t cols, std::vector<double> values);
    static FeatureGrid from_tensor(const num::Tensor& t);
    num::Tensor to_tensor() const;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Raised when more clusters are requested than there are points.
class CapacityError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

struct ClusterSet {
    FeatureGrid centers;
    /// Per-point center index (k-means only).
    std::vector<std::size_t> assignments;
    std::size_t iterations_used = 0;
    bool converged = false;

    // Mean-shift diagnostics: data indices the queries started from, their converged
    // positions before merging, and the component each query was merged into.
    std::vector<std::size_t> initial_indices;
    FeatureGrid query_points;
    std::vector<std::size_t> membership;
};

// ---------------------------------------------------------------- k-means

/// Farthest-point seeding: the first center is the point at `first`, every further
/// center is the point maximizing its squared distance to the nearest chosen center
/// (ties to the lowest index).
FeatureGrid kmeanspp_init(const FeatureGrid& x, std::size_t count, std::size_t first);
/// Same with the first pick drawn uniformly from rng.
FeatureGrid kmeanspp_init(const FeatureGrid& x, std::size_t count, Rng& rng);

/// Index of the point farthest from every center (squared distance to its nearest
/// center; ties to the lowest index).
std::size_t farthest_point(const FeatureGrid& x, const FeatureGrid& centers);

struct LloydStep {
    FeatureGrid centers;
    std::vector<std::size_t> assignments;
    /// Sum of squared distances from each point to its cluster's updated center.
    double inertia = 0.0;
    /// Clusters that received no points; their centers are left unchanged.
    std::vector<std::size_t> empty;
};

/// Assigns each point to its nearest center (ties to the lowest index) and moves
/// every nonempty cluster to the mean of its members.
LloydStep lloyd_step(const FeatureGrid& x, const FeatureGrid& centers);

struct KMeansConfig {
    std::size_t clusters = 2;
    std::size_t max_iterations = 100;
    double tolerance = 1e-4;
};

/// Lloyd iterations from farthest-point seeding with cluster dying prevention: an
/// empty cluster is reseeded at the point farthest from all current centers, and that
/// point is moved into it. On return every cluster has at least one member and
/// `centers` are the member means of `assignments`. `converged` is set only when a
/// step left every assignment unchanged.
ClusterSet kmeans_run(const FeatureGrid& x, const KMeansConfig& config, Rng& rng);
ClusterSet kmeans_run(const FeatureGrid& x, const KMeansConfig& config, std::size_t first);

// ------------------------------------------------------------- mean-shift

enum class QuerySeeding { farthest_point, uniform };

struct MeanShiftConfig {
    double sigma = 1.0;
    double epsilon = 0.5;
    std::size_t initial_centers = 20;
    std::size_t max_iterations = 50;
    double fixed_point_tolerance = 1e-4;
    QuerySeeding seeding = QuerySeeding::farthest_point;

    void validate() const;
};

/// Normalized Gaussian kernel weights p(n | query) proportional to
/// exp(-0.5 * |query - x_n|^2 / sigma^2), computed with max-exponent subtraction.
std::vector<double> gaussian_kernel_weights(std::span<const double> query, const FeatureGrid& x, double sigma);

struct Components {
    FeatureGrid representatives;
    /// Component index of every input point; components are numbered by their
    /// lowest-index member.
    std::vector<std::size_t> membership;
};

/// Collapses the epsilon-graph (edge when distance <= epsilon) into connected
/// components, each represented by the mean of its members.
Components connected_components_merge(const FeatureGrid& points, double epsilon);

/// Non-blurring mean-shift from `initial_centers` distinct data points: a uniformly drawn
/// first point followed by farthest-point picks, or a uniform sample without replacement
/// (config.seeding). All queries move together until the largest displacement falls below
/// the tolerance; converged queries are merged by connected components and the
/// component means become the centers.
ClusterSet meanshift_run(const FeatureGrid& x, const MeanShiftConfig& config, Rng& rng);
/// Same with the starting data indices pinned.
ClusterSet meanshift_run(const FeatureGrid& x, const MeanShiftConfig& config,
                         std::span<const std::size_t> initial_indices);

/// Starting data indices for the rng overload of meanshift_run.
std::vector<std::size_t> select_query_indices(const FeatureGrid& x, const MeanShiftConfig& config, Rng& rng);

/// Uniform sample of `count` distinct indices from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

/// `count` distinct indices: `first`, then repeatedly the unchosen point farthest from
/// every chosen one (ties to the lowest index).
std::vector<std::size_t> farthest_point_indices(const FeatureGrid& x, std::size_t count, std::size_t first);

// ------------------------------------------------------ differentiable paths

/// Cluster centers as member means of `features` under the (constant) k-means
/// assignments, so gradients flow straight through the hard assignment.
num::Tensor kmeans_centers(const num::Tensor& features, const ClusterSet& clusters);

struct DifferentiableMeanShift {
    num::Tensor centers;
    ClusterSet clusters;
};

/// Mean-shift whose final `backprop_iterations` steps are recorded on the active tape
/// (all of them when nullopt, including the starting rows). Earlier steps run on
/// detached values. Iteration counts and merge membership match meanshift_run.
DifferentiableMeanShift meanshift_differentiable(const num::Tensor& features, const MeanShiftConfig& config,
                                                 std::span<const std::size_t> initial_indices,
                                                 std::optional<std::size_t> backprop_iterations);

} // namespace slotseed::cluster
