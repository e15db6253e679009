#include "pushmix/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace pushmix {

namespace {

double assign(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& centroids, std::vector<int>& assignment) {
    double inertia = 0.0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            double d = (rows.row(r) - centroids.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        assignment[static_cast<std::size_t>(r)] = best;
        inertia += best_d;
    }
    return inertia;
}

}  // namespace

std::size_t distinct_rows(const Eigen::MatrixXd& rows) {
    std::set<std::vector<double>> seen;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        std::vector<double> v(rows.cols());
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            v[c] = rows(r, c);
        }
        seen.insert(std::move(v));
    }
    return seen.size();
}

KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, std::uint64_t seed, int max_iter) {
    if (k < 1) {
        throw std::invalid_argument("kmeans: k must be at least 1");
    }
    if (static_cast<std::size_t>(k) > distinct_rows(rows)) {
        throw std::invalid_argument("kmeans: k exceeds the number of distinct rows");
    }
    const auto n = rows.rows();
    std::mt19937_64 rng(seed);

    // k-means++ seeding; duplicates of chosen centres have zero weight.
    Eigen::MatrixXd centroids(k, rows.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centroids.row(0) = rows.row(first(rng));
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        d2[r] = (rows.row(r) - centroids.row(0)).squaredNorm();
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : d2) {
            total += d;
        }
        double target = unit(rng) * total;
        Eigen::Index pick = -1;
        double acc = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (d2[r] <= 0.0) {
                continue;
            }
            acc += d2[r];
            pick = r;
            if (acc >= target) {
                break;
            }
        }
        centroids.row(c) = rows.row(pick);
        for (Eigen::Index r = 0; r < n; ++r) {
            d2[r] = std::min(d2[r], (rows.row(r) - centroids.row(c)).squaredNorm());
        }
    }

    KMeansResult result;
    result.assignment.assign(static_cast<std::size_t>(n), 0);
    result.inertia_history.push_back(assign(rows, centroids, result.assignment));
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index r = 0; r < n; ++r) {
            int c = result.assignment[r];
            sums.row(c) += rows.row(r);
            ++counts[c];
        }
        for (int c = 0; c < k; ++c) {
            // empty clusters keep their centre
            if (counts[c] > 0) {
                centroids.row(c) = sums.row(c) / counts[c];
            }
        }
        auto previous = result.assignment;
        double inertia = assign(rows, centroids, result.assignment);
        result.inertia_history.push_back(inertia);
        result.iterations = it + 1;
        if (previous == result.assignment) {
            break;
        }
    }
    result.centroids = std::move(centroids);
    return result;
}

}  // namespace pushmix
