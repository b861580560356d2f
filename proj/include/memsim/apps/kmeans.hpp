#pragma once

#include "memsim/dpe.hpp"

namespace memsim::apps {

struct KMeansState {
    Matrix centers;                       // k x d, full precision
    std::vector<std::size_t> assignments;
    std::size_t iterations = 0;
    std::size_t tail_length = 10;         // n in the augmented encoding
    bool converged = false;
};

struct KMeansOptions {
    std::size_t max_iter = 50;
    std::size_t tail_length = 10;
    bool single_center_update = false;  // update only the most-changed center per iteration
    std::uint64_t seed = 0;
};

// Augmented encoding: rows [x, -1/2 * n copies] against centers
// [y, |y|^2/n * n copies]; the dot product gives x.y - |y|^2/2, and
// -2 * that is the Euclidean-distance score -2x.y + |y|^2.
Matrix augment_points(const Matrix& points, std::size_t tail_length);
Matrix augment_centers(const Matrix& centers, std::size_t tail_length);

// Hardware k-means: distance scores on the engine, argmin assignment,
// full-precision center update, centers re-programmed every iteration.
// Features must be scaled to [-1, 1] by the caller.
KMeansState kmeans_hw(const Matrix& points, std::size_t k, const EngineConfig& engine,
                      const KMeansOptions& opt);

// Full-precision counterpart with identical seeding and update policy.
KMeansState kmeans_exact(const Matrix& points, std::size_t k, const KMeansOptions& opt);

// Fraction of identically-assigned points under the best label permutation
// is not needed here: both runs share the same seeding, so labels align.
double assignment_agreement(const std::vector<std::size_t>& a,
                            const std::vector<std::size_t>& b);

// 3-Gaussian synthetic fallback when no IRIS CSV is supplied, features
// already in [-1, 1].
Matrix make_gaussian_clusters(std::size_t points_per_cluster, std::size_t dims,
                              std::uint64_t seed);

// Feature scaling helper: per-column affine map onto [-1, 1].
Matrix scale_to_unit(const Matrix& points);

}  // namespace memsim::apps
