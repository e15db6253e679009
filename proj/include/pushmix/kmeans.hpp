#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace pushmix {

struct KMeansResult {
    std::vector<int> assignment;          // cluster per row
    Eigen::MatrixXd centroids;            // k x dims
    std::vector<double> inertia_history;  // after seeding, then after every Lloyd step
    int iterations = 0;

    double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

// Number of distinct rows (exact comparison).
std::size_t distinct_rows(const Eigen::MatrixXd& rows);

// Lloyd iterations from k-means++ seeding. Deterministic for a given seed.
// Throws std::invalid_argument when k < 1 or k exceeds the distinct rows.
KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, std::uint64_t seed, int max_iter = 100);

}  // namespace pushmix
