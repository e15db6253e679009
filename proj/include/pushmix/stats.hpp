#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace pushmix {

// Standard normal upper tail, P(Z > z).
double normal_upper_tail(double z);

struct ZTest {
    double z = 0.0;
    double p_value = 1.0;  // two-sided
};

// Pooled two-proportion z-test of successes_a / trials_a vs successes_b / trials_b.
ZTest two_proportion_z_test(std::size_t successes_a, std::size_t trials_a, std::size_t successes_b,
                            std::size_t trials_b);

// Kolmogorov-Smirnov distance between the empirical distribution of `values`
// and Uniform(0, 1).
double ks_uniform_statistic(std::span<const double> values);

// Asymptotic critical value of the one-sample KS statistic at level 0.01.
double ks_critical_value_1pct(std::size_t n);

// Spearman rank correlation with average ranks for ties. Zero when either
// side has no variance.
double spearman(std::span<const double> a, std::span<const double> b);

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace pushmix
