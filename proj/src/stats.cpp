#include "pushmix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace pushmix {

double normal_upper_tail(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

ZTest two_proportion_z_test(std::size_t successes_a, std::size_t trials_a, std::size_t successes_b,
                            std::size_t trials_b) {
    if (trials_a == 0 || trials_b == 0 || successes_a > trials_a || successes_b > trials_b) {
        throw std::invalid_argument("two_proportion_z_test: bad counts");
    }
    const double na = static_cast<double>(trials_a);
    const double nb = static_cast<double>(trials_b);
    const double pa = static_cast<double>(successes_a) / na;
    const double pb = static_cast<double>(successes_b) / nb;
    const double pooled = static_cast<double>(successes_a + successes_b) / (na + nb);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb));
    ZTest out;
    if (se == 0.0) {
        return out;  // both proportions are 0 or both are 1
    }
    out.z = (pa - pb) / se;
    out.p_value = std::min(1.0, 2.0 * normal_upper_tail(std::abs(out.z)));
    return out;
}

double ks_uniform_statistic(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("ks_uniform_statistic: no values");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double f = std::clamp(sorted[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_critical_value_1pct(std::size_t n) {
    return 1.628 / std::sqrt(static_cast<double>(n));
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("spearman: length mismatch");
    }
    if (a.size() < 2) {
        return 0.0;
    }
    auto ra = average_ranks(a);
    auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine_similarity: length mismatch");
    }
    double denom = a.norm() * b.norm();
    return denom == 0.0 ? 0.0 : a.dot(b) / denom;
}

}  // namespace pushmix
