#include "memsim/apps/kmeans.hpp"

#include <cmath>
#include <functional>

#include "memsim/linalg.hpp"
#include "memsim/rng.hpp"

namespace memsim::apps {

Matrix augment_points(const Matrix& points, std::size_t tail_length) {
    if (tail_length < 1) throw std::invalid_argument("kmeans: tail length must be >= 1");
    Matrix out(points.rows(), points.cols() + tail_length);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t j = 0; j < points.cols(); ++j) out(i, j) = points(i, j);
        for (std::size_t t = 0; t < tail_length; ++t) out(i, points.cols() + t) = -0.5;
    }
    return out;
}

Matrix augment_centers(const Matrix& centers, std::size_t tail_length) {
    Matrix out(centers.rows(), centers.cols() + tail_length);
    for (std::size_t i = 0; i < centers.rows(); ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < centers.cols(); ++j) {
            out(i, j) = centers(i, j);
            sq += centers(i, j) * centers(i, j);
        }
        for (std::size_t t = 0; t < tail_length; ++t)
            out(i, centers.cols() + t) = sq / static_cast<double>(tail_length);
    }
    return out;
}

namespace {

double sq_dist(const Matrix& points, std::size_t i, const Matrix& centers, std::size_t c) {
    double d = 0.0;
    for (std::size_t j = 0; j < points.cols(); ++j) {
        const double t = points(i, j) - centers(c, j);
        d += t * t;
    }
    return d;
}

Matrix kmeanspp_init(const Matrix& points, std::size_t k, std::uint64_t seed) {
    SeededRng rng(seed, StreamPurpose::seeding);
    Matrix centers(k, points.cols());
    std::size_t first = rng.below(points.rows());
    for (std::size_t j = 0; j < points.cols(); ++j) centers(0, j) = points(first, j);
    Vector d2(points.rows());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            double best = sq_dist(points, i, centers, 0);
            for (std::size_t cc = 1; cc < c; ++cc)
                best = std::min(best, sq_dist(points, i, centers, cc));
            d2[i] = best;
            total += best;
        }
        double target = rng.uniform() * total;
        std::size_t pick = points.rows() - 1;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            target -= d2[i];
            if (target <= 0.0) { pick = i; break; }
        }
        for (std::size_t j = 0; j < points.cols(); ++j) centers(c, j) = points(pick, j);
    }
    return centers;
}

using ScoreFn = std::function<Matrix(const Matrix& centers, std::size_t iteration)>;

KMeansState kmeans_loop(const Matrix& points, std::size_t k, const KMeansOptions& opt,
                        const ScoreFn& scores_for) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (points.rows() < k) throw std::invalid_argument("kmeans: fewer points than centers");
    for (double v : points.values())
        if (!std::isfinite(v)) throw std::invalid_argument("kmeans: non-finite point");

    KMeansState st;
    st.tail_length = opt.tail_length;
    st.centers = kmeanspp_init(points, k, opt.seed);
    st.assignments.assign(points.rows(), 0);

    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        st.iterations = it + 1;
        // score[i][c] = -2 x.y + |y|^2; argmin matches Euclidean argmin
        const Matrix sc = scores_for(st.centers, it);
        bool changed = false;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < k; ++c)
                if (sc(i, c) < sc(i, best)) best = c;
            if (best != st.assignments[i]) changed = true;
            st.assignments[i] = best;
        }
        if (!changed && it > 0) { st.converged = true; break; }

        Matrix means(k, points.cols());
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.rows(); ++i) {
            ++counts[st.assignments[i]];
            for (std::size_t j = 0; j < points.cols(); ++j)
                means(st.assignments[i], j) += points(i, j);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // reseed an empty cluster from the farthest point
                std::size_t far = 0;
                double best = -1.0;
                for (std::size_t i = 0; i < points.rows(); ++i) {
                    const double d = sq_dist(points, i, st.centers, st.assignments[i]);
                    if (d > best) { best = d; far = i; }
                }
                for (std::size_t j = 0; j < points.cols(); ++j) means(c, j) = points(far, j);
                counts[c] = 1;
            }
            for (std::size_t j = 0; j < points.cols(); ++j)
                means(c, j) /= static_cast<double>(counts[c]);
        }
        if (opt.single_center_update) {
            // move only the center with the largest shift
            std::size_t pick = 0;
            double best = -1.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(means, c, st.centers, c);
                if (d > best) { best = d; pick = c; }
            }
            for (std::size_t j = 0; j < points.cols(); ++j)
                st.centers(pick, j) = means(pick, j);
        } else {
            st.centers = std::move(means);
        }
    }
    return st;
}

}  // namespace

KMeansState kmeans_hw(const Matrix& points, std::size_t k, const EngineConfig& engine,
                      const KMeansOptions& opt) {
    const Matrix x_aug = augment_points(points, opt.tail_length);
    return kmeans_loop(points, k, opt, [&](const Matrix& centers, std::size_t it) {
        const Matrix y_aug = augment_centers(centers, opt.tail_length);
        ProgrammedWeights prog = program_weights(y_aug.transposed(), engine, it);
        Matrix sc = matmul(x_aug, prog, engine).result;
        for (double& v : sc.values()) v *= -2.0;
        return sc;
    });
}

KMeansState kmeans_exact(const Matrix& points, std::size_t k, const KMeansOptions& opt) {
    const Matrix x_aug = augment_points(points, opt.tail_length);
    return kmeans_loop(points, k, opt, [&](const Matrix& centers, std::size_t) {
        const Matrix y_aug = augment_centers(centers, opt.tail_length);
        Matrix sc = matmul_exact(x_aug, y_aug.transposed());
        for (double& v : sc.values()) v *= -2.0;
        return sc;
    });
}

double assignment_agreement(const std::vector<std::size_t>& a,
                            const std::vector<std::size_t>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("assignment_agreement: length mismatch");
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++same;
    return static_cast<double>(same) / static_cast<double>(a.size());
}

Matrix make_gaussian_clusters(std::size_t points_per_cluster, std::size_t dims,
                              std::uint64_t seed) {
    const std::size_t k = 3;
    Matrix pts(points_per_cluster * k, dims);
    SeededRng rng(seed, StreamPurpose::data, 55);
    Matrix centers(k, dims);
    // redraw until the clusters are well separated
    for (bool ok = false; !ok;) {
        for (double& v : centers.values()) v = rng.uniform(-0.7, 0.7);
        ok = true;
        for (std::size_t a = 0; a < k && ok; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                if (sq_dist(centers, a, centers, b) < 1.0) { ok = false; break; }
    }
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < points_per_cluster; ++i)
            for (std::size_t j = 0; j < dims; ++j) {
                double v = centers(c, j) + 0.12 * rng.normal();
                if (v < -1.0) v = -1.0;
                if (v > 1.0) v = 1.0;
                pts(c * points_per_cluster + i, j) = v;
            }
    return pts;
}

Matrix scale_to_unit(const Matrix& points) {
    Matrix out(points.rows(), points.cols());
    for (std::size_t j = 0; j < points.cols(); ++j) {
        double lo = points(0, j), hi = points(0, j);
        for (std::size_t i = 1; i < points.rows(); ++i) {
            lo = std::min(lo, points(i, j));
            hi = std::max(hi, points(i, j));
        }
        const double span = hi - lo;
        for (std::size_t i = 0; i < points.rows(); ++i)
            out(i, j) = span == 0.0 ? 0.0 : 2.0 * (points(i, j) - lo) / span - 1.0;
    }
    return out;
}

}  // namespace memsim::apps
