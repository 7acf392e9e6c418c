#include "datamix/corpus/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "datamix/common/error.hpp"
#include "datamix/common/rng.hpp"
#include "datamix/simd/kernels.hpp"

namespace datamix::corpus {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw Error("bad_matrix", "matrix data size does not match shape");
}

std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids, double* distance) {
    const auto& k = simd::active();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = k.squared_l2(point.data(), centroids.row(c).data(), point.size());
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (distance) *distance = best_d;
    return best;
}

namespace {

// k-means++: first center uniform, the rest by D^2 weighting.
Matrix seed_centroids(const Matrix& x, std::size_t k, Rng& rng) {
    const auto& kern = simd::active();
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    Matrix centroids(k, d);
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());

    std::size_t pick = static_cast<std::size_t>(rng.below(n));
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(x.row(pick).data(), d, centroids.row(c).data());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = std::min(dist[i], kern.squared_l2(x.row(i).data(), centroids.row(c).data(), d));
            total += dist[i];
        }
        if (c + 1 == k) break;
        if (total <= 0.0) {
            // Every point coincides with a chosen center; fall back to uniform.
            pick = static_cast<std::size_t>(rng.below(n));
            continue;
        }
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += dist[i];
            if (acc > target && dist[i] > 0.0) {
                pick = i;
                break;
            }
        }
    }
    return centroids;
}

double assign_all(const Matrix& x, const Matrix& centroids, std::vector<std::size_t>& assign,
                  std::vector<double>& dist) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        assign[i] = nearest_centroid(x.row(i), centroids, &dist[i]);
        inertia += dist[i];
    }
    return inertia;
}

// Means of assigned points; returns the number of empty clusters reseeded.
std::size_t update_centroids(const Matrix& x, const std::vector<std::size_t>& assign,
                             const std::vector<double>& dist, Matrix& centroids) {
    const std::size_t k = centroids.rows();
    const std::size_t d = x.cols();
    const auto& kern = simd::active();
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        kern.accumulate_f64(sums.row(assign[i]).data(), x.row(i).data(), d);
        ++counts[assign[i]];
    }
    std::vector<bool> taken(x.rows(), false);
    std::size_t reseeded = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
            kern.divide_f64(centroids.row(c).data(), sums.row(c).data(), static_cast<double>(counts[c]), d);
            continue;
        }
        // Farthest point from its own centroid, lowest index on ties.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (!taken[i] && dist[i] > far_d) {
                far_d = dist[i];
                far = i;
            }
        }
        taken[far] = true;
        std::copy_n(x.row(far).data(), d, centroids.row(c).data());
        ++reseeded;
    }
    return reseeded;
}

}  // namespace

ClusterResult kmeans_cluster(const Matrix& vectors, const KMeansOptions& options) {
    const std::size_t n = vectors.rows();
    if (n == 0 || vectors.cols() == 0) throw Error("empty_input", "k-means needs at least one row and column");
    if (options.k == 0 || options.k > n) {
        throw Error("invalid_k", "k=" + std::to_string(options.k) + " must be in [1, n=" + std::to_string(n) + "]");
    }
    if (options.max_iters == 0) throw ValidationError("max_iters", "must be positive");
    for (double v : vectors.data()) {
        if (!std::isfinite(v)) throw Error("non_finite", "embedding matrix contains a non-finite value");
    }

    Rng rng(options.seed);
    ClusterResult result;
    result.k = options.k;
    result.centroids = seed_centroids(vectors, options.k, rng);

    std::vector<std::size_t> assign(n);
    std::vector<double> dist(n);
    double inertia = assign_all(vectors, result.centroids, assign, dist);
    result.inertia_history.push_back(inertia);

    std::vector<std::size_t> next_assign(n);
    std::vector<double> next_dist(n);
    for (std::size_t it = 0; it < options.max_iters; ++it) {
        result.reseeded_clusters += update_centroids(vectors, assign, dist, result.centroids);
        inertia = assign_all(vectors, result.centroids, next_assign, next_dist);
        result.inertia_history.push_back(inertia);
        ++result.iterations;
        const bool stable = next_assign == assign;
        assign.swap(next_assign);
        dist.swap(next_dist);
        if (stable) {
            result.converged = true;
            break;
        }
    }
    result.assignments = std::move(assign);
    result.inertia = inertia;
    return result;
}

NearDupResult near_dup_groups(const Matrix& vectors, const ClusterResult& result, double cos_threshold) {
    if (!(cos_threshold > 0.0 && cos_threshold <= 1.0)) {
        throw ValidationError("cos_threshold", "must lie in (0, 1]");
    }
    const std::size_t n = vectors.rows();
    if (result.assignments.size() != n) {
        throw Error("bad_cluster_result", "cluster result does not match the vector count");
    }
    const auto& kern = simd::active();
    const std::size_t d = vectors.cols();

    NearDupResult out;
    std::vector<double> norms(n);
    std::vector<std::vector<std::size_t>> members(result.k);
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = std::sqrt(kern.dot(vectors.row(i).data(), vectors.row(i).data(), d));
        if (norms[i] == 0.0) {
            out.zero_norm.push_back(i);
            continue;
        }
        if (result.assignments[i] >= result.k) throw Error("bad_cluster_result", "assignment out of range");
        members[result.assignments[i]].push_back(i);
    }

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    for (const auto& m : members) {
        for (std::size_t a = 0; a < m.size(); ++a) {
            for (std::size_t b = a + 1; b < m.size(); ++b) {
                const std::size_t i = m[a];
                const std::size_t j = m[b];
                const double cos = kern.dot(vectors.row(i).data(), vectors.row(j).data(), d) / (norms[i] * norms[j]);
                if (cos >= cos_threshold) {
                    const std::size_t ri = find(i);
                    const std::size_t rj = find(j);
                    if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
                }
            }
        }
    }
    std::vector<std::vector<std::size_t>> by_root(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (norms[i] != 0.0) by_root[find(i)].push_back(i);
    }
    for (auto& g : by_root) {
        if (g.size() > 1) out.groups.push_back(std::move(g));
    }
    std::sort(out.groups.begin(), out.groups.end());
    return out;
}

}  // namespace datamix::corpus
