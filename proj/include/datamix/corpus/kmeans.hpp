#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::corpus {

// Dense row-major matrix of embeddings.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct KMeansOptions {
    std::size_t k = 8;
    std::uint64_t seed = 0;
    std::size_t max_iters = 100;
};

struct ClusterResult {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;
    Matrix centroids;
    double inertia = 0.0;
    // Inertia after every assignment pass, first entry from the seeding.
    std::vector<double> inertia_history;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t reseeded_clusters = 0;
};

// k-means++ seeding followed by Lloyd iterations. Nearest-centroid ties go
// to the lowest index; an emptied cluster is reseeded at the point farthest
// from its current centroid. The returned assignments are always computed
// from the returned centroids.
//
// Errors: "invalid_k" when k == 0 or k > n, "non_finite" on NaN/Inf input,
// "empty_input" when there are no rows or no columns.
ClusterResult kmeans_cluster(const Matrix& vectors, const KMeansOptions& options);

// Index of the nearest centroid with lowest-index tie-break.
std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids, double* distance = nullptr);

struct NearDupResult {
    // Each group ascending; groups ordered by first member.
    std::vector<std::vector<std::size_t>> groups;
    // Zero-norm rows, excluded from grouping.
    std::vector<std::size_t> zero_norm;
};

// Within each cluster, the transitive closure of pairs whose cosine
// similarity is >= cos_threshold. Singletons are omitted.
NearDupResult near_dup_groups(const Matrix& vectors, const ClusterResult& result, double cos_threshold);

}  // namespace datamix::corpus
