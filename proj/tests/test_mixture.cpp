#include "pushmix/mixture.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace pushmix {
namespace {

const double kLn3 = std::log(3.0);

MixtureParams random_params(std::mt19937_64& rng, int contexts, Eigen::Index m, Eigen::Index n, double sd = 1.0) {
    MixtureParams p;
    p.theta = oracle::gaussian_matrix(contexts - 1, m, rng, sd);
    p.psi = oracle::gaussian_matrix(contexts, n, rng, sd);
    return p;
}

// Labels drawn from the mixture itself so every context matters.
Dataset sample_dataset(std::mt19937_64& rng, const MixtureParams& truth, Eigen::Index rows) {
    Dataset d;
    d.x_hat = oracle::gaussian_matrix(rows, truth.m(), rng);
    d.x = oracle::gaussian_matrix(rows, truth.n(), rng);
    d.x_hat.col(truth.m() - 1).setOnes();
    d.x.col(truth.n() - 1).setOnes();
    d.y.resize(rows);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < rows; ++i) {
        d.y[i] = u(rng) < predict_open_rate(truth, d.x_hat.row(i).transpose(), d.x.row(i).transpose()) ? 1.0 : 0.0;
    }
    return d;
}

TEST(AssignmentProbs, ClosedForms) {
    Eigen::VectorXd x_hat(1);
    x_hat << 1.0;
    Eigen::MatrixXd theta(1, 1);
    theta << 0.0;
    auto p = assignment_probs(theta, x_hat);
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
    theta << kLn3;
    p = assignment_probs(theta, x_hat);
    EXPECT_NEAR(p[0], 0.75, 1e-15);
    EXPECT_NEAR(p[1], 0.25, 1e-15);
    p = assignment_probs(Eigen::MatrixXd(0, 1), x_hat);
    ASSERT_EQ(p.size(), 1);
    EXPECT_EQ(p[0], 1.0);
    EXPECT_THROW(assignment_probs(Eigen::MatrixXd::Zero(1, 2), x_hat), std::invalid_argument);
}

TEST(AssignmentProbs, SimplexPropertyAndOracle) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        int contexts = 1 + trial % 5;
        Eigen::MatrixXd theta = oracle::gaussian_matrix(contexts - 1, 4, rng, 3.0);
        Eigen::VectorXd x_hat = oracle::gaussian_matrix(4, 1, rng);
        auto p = assignment_probs(theta, x_hat);
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        EXPECT_GT(p.minCoeff(), 0.0);
        auto ref = oracle::assignment(theta, x_hat);
        for (int k = 0; k < contexts; ++k) {
            EXPECT_LT(oracle::relative_error(p[k], ref[static_cast<std::size_t>(k)]), 1e-10);
        }
    }
}

// Softmax over M free logit vectors: shifting them all by c leaves it unchanged,
// and re-pinning (subtracting the last row) gives the pinned parameterization.
TEST(AssignmentProbs, MatchesShiftedFullSoftmax) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const int contexts = 3;
        Eigen::MatrixXd full = oracle::gaussian_matrix(contexts, 3, rng);
        Eigen::RowVectorXd shift = oracle::gaussian_matrix(1, 3, rng, 5.0);
        Eigen::VectorXd x_hat = oracle::gaussian_matrix(3, 1, rng);
        Eigen::VectorXd logits = (full.rowwise() + shift) * x_hat;
        Eigen::VectorXd ref = (logits.array() - logits.maxCoeff()).exp();
        ref /= ref.sum();
        Eigen::MatrixXd pinned = full.topRows(contexts - 1).rowwise() - full.row(contexts - 1);
        auto p = assignment_probs(pinned, x_hat);
        for (int k = 0; k < contexts; ++k) {
            EXPECT_NEAR(p[k], ref[k], 1e-12);
        }
    }
}

TEST(OpenProbability, SignConvention) {
    Eigen::VectorXd psi(1), x(1);
    x << 1.0;
    psi << 0.0;
    EXPECT_DOUBLE_EQ(open_probability(psi, x), 0.5);
    psi << kLn3;
    EXPECT_NEAR(open_probability(psi, x), 0.25, 1e-15);
    psi << -kLn3;
    EXPECT_NEAR(open_probability(psi, x), 0.75, 1e-15);
    Eigen::VectorXd wrong(2);
    EXPECT_THROW(open_probability(wrong, x), std::invalid_argument);
}

TEST(OpenProbability, ClampKeepsProbabilitiesInsideTheOpenInterval) {
    Eigen::VectorXd psi(1), x(1);
    x << 1.0;
    psi << 1e6;
    double p = open_probability(psi, x);
    EXPECT_GT(p, 0.0);
    psi << -1e6;
    p = open_probability(psi, x);
    EXPECT_LT(p, 1.0);
}

TEST(PredictOpenRate, Reductions) {
    std::mt19937_64 rng(3);
    auto one = random_params(rng, 1, 3, 4);
    Eigen::VectorXd x_hat = oracle::gaussian_matrix(3, 1, rng);
    Eigen::VectorXd x = oracle::gaussian_matrix(4, 1, rng);
    EXPECT_EQ(predict_open_rate(one, x_hat, x), open_probability(one.psi.row(0).transpose(), x));

    MixtureParams two = MixtureParams::zeros(2, 1, 1);
    Eigen::VectorXd xh1(1), x1(1);
    xh1 << 1.0;
    x1 << 1.0;
    two.psi(0, 0) = std::log(4.0);   // opens 0.2
    two.psi(1, 0) = -std::log(4.0);  // opens 0.8
    EXPECT_NEAR(predict_open_rate(two, xh1, x1), 0.5, 1e-15);

    auto same = random_params(rng, 3, 3, 4);
    same.psi.row(1) = same.psi.row(0);
    same.psi.row(2) = same.psi.row(0);
    double base = predict_open_rate(same, x_hat, x);
    same.theta = oracle::gaussian_matrix(2, 3, rng, 4.0);
    EXPECT_NEAR(predict_open_rate(same, x_hat, x), base, 1e-15);
}

TEST(PredictOpenRate, InvariantUnderContextPermutation) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const int contexts = 3;
        auto p = random_params(rng, contexts, 3, 3);
        Eigen::MatrixXd full(contexts, 3);
        full.topRows(contexts - 1) = p.theta;
        full.row(contexts - 1).setZero();
        std::vector<int> perm{2, 0, 1};
        MixtureParams q;
        Eigen::MatrixXd permuted(contexts, 3);
        q.psi.resize(contexts, 3);
        for (int k = 0; k < contexts; ++k) {
            permuted.row(k) = full.row(perm[static_cast<std::size_t>(k)]);
            q.psi.row(k) = p.psi.row(perm[static_cast<std::size_t>(k)]);
        }
        q.theta = permuted.topRows(contexts - 1).rowwise() - permuted.row(contexts - 1);
        Eigen::VectorXd x_hat = oracle::gaussian_matrix(3, 1, rng);
        Eigen::VectorXd x = oracle::gaussian_matrix(3, 1, rng);
        EXPECT_NEAR(predict_open_rate(p, x_hat, x), predict_open_rate(q, x_hat, x), 1e-9);
    }
}

TEST(LogLikelihood, CoinFlipModel) {
    std::mt19937_64 rng(5);
    auto truth = random_params(rng, 2, 2, 3);
    auto data = sample_dataset(rng, truth, 40);
    auto flat = MixtureParams::zeros(1, 2, 3);
    EXPECT_NEAR(log_likelihood(flat, data), std::log(0.5), 1e-15);
    Dataset empty{Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 3), Eigen::VectorXd(0)};
    EXPECT_THROW(log_likelihood(flat, empty), std::invalid_argument);
}

TEST(LogLikelihood, ConfidentCorrectModelApproachesZero) {
    Dataset d{Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)};
    auto p = MixtureParams::zeros(1, 1, 1);
    p.psi(0, 0) = -30.0;
    double ll = log_likelihood(p, d);
    EXPECT_LT(ll, 0.0);
    EXPECT_GT(ll, -1e-12);
}

TEST(LogLikelihood, MatchesBruteForce) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 60; ++trial) {
        int contexts = 1 + trial % 4;
        auto params = random_params(rng, contexts, 3, 4);
        auto data = sample_dataset(rng, params, 1 + trial % 100);
        double lib = log_likelihood(params, data);
        double ref = oracle::mean_log_likelihood(params.theta, params.psi, data.x_hat, data.x, data.y);
        EXPECT_LT(oracle::relative_error(lib, ref), 1e-10);
    }
}

TEST(EStep, FlatLikelihoodGivesPrior) {
    std::mt19937_64 rng(7);
    auto params = random_params(rng, 3, 3, 2);
    params.psi.setZero();
    auto data = sample_dataset(rng, params, 20);
    auto r = e_step(params, data);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        auto prior = assignment_probs(params.theta, data.x_hat.row(i).transpose());
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(r(i, k), prior[k], 1e-14);
    }
}

TEST(EStep, SingleContextAndBruteForce) {
    std::mt19937_64 rng(8);
    auto one = random_params(rng, 1, 2, 2);
    auto data = sample_dataset(rng, one, 15);
    EXPECT_EQ(e_step(one, data), Eigen::MatrixXd::Ones(15, 1));
    for (int trial = 0; trial < 60; ++trial) {
        int contexts = 2 + trial % 3;
        auto params = random_params(rng, contexts, 3, 3);
        auto d = sample_dataset(rng, params, 50);
        auto r = e_step(params, d);
        auto ref = oracle::posterior(params.theta, params.psi, d.x_hat, d.x, d.y);
        for (Eigen::Index i = 0; i < r.rows(); ++i) {
            EXPECT_NEAR(r.row(i).sum(), 1.0, 1e-9);
            for (Eigen::Index k = 0; k < r.cols(); ++k) {
                EXPECT_GE(r(i, k), 0.0);
                EXPECT_LE(r(i, k), 1.0);
                EXPECT_LT(oracle::relative_error(r(i, k), ref(i, k)), 1e-10);
            }
        }
    }
}

TEST(QValue, SingleContextIsLogisticLikelihood) {
    std::mt19937_64 rng(9);
    auto params = random_params(rng, 1, 2, 3);
    auto data = sample_dataset(rng, params, 30);
    double q = q_value(params, Eigen::MatrixXd::Ones(30, 1), data, 0.0);
    EXPECT_NEAR(q, 30.0 * log_likelihood(params, data), 1e-10);
}

TEST(QValue, JensenBound) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 40; ++trial) {
        auto params = random_params(rng, 2 + trial % 3, 3, 3);
        auto data = sample_dataset(rng, params, 25);
        auto r = e_step(params, data);
        EXPECT_LE(q_value(params, r, data, 0.0), static_cast<double>(data.size()) * log_likelihood(params, data) + 1e-9);
    }
}

TEST(QValue, UniformResponsibilitiesAssignmentTerm) {
    std::mt19937_64 rng(11);
    const int contexts = 4;
    Eigen::MatrixXd x_hat = oracle::gaussian_matrix(12, 3, rng);
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(12, contexts, 1.0 / contexts);
    double value = assignment_objective(Eigen::MatrixXd::Zero(contexts - 1, 3), r, x_hat, 0.0);
    EXPECT_NEAR(value, -12.0 * std::log(static_cast<double>(contexts)), 1e-12);
}

FitConfig quiet_config(int contexts, double l2) {
    FitConfig c;
    c.contexts = contexts;
    c.l2 = l2;
    return c;
}

TEST(MStepTheta, UniformTargetsGiveZero) {
    std::mt19937_64 rng(12);
    Eigen::MatrixXd x_hat = oracle::gaussian_matrix(40, 3, rng);
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(40, 3, 1.0 / 3.0);
    auto out = m_step_theta(r, x_hat, quiet_config(3, 1e-3), oracle::gaussian_matrix(2, 3, rng));
    EXPECT_LT(out.value.lpNorm<Eigen::Infinity>(), 1e-7);
}

TEST(MStepTheta, RecoversMarginalLogit) {
    const int n = 100;
    Eigen::MatrixXd x_hat = Eigen::MatrixXd::Ones(n, 1);
    Eigen::MatrixXd r(n, 2);
    for (int i = 0; i < n; ++i) {
        r(i, 0) = i % 2 ? 1.0 : 0.5;  // mean 0.75
        r(i, 1) = 1.0 - r(i, 0);
    }
    const double l2 = 1e-6;
    auto out = m_step_theta(r, x_hat, quiet_config(2, l2), Eigen::MatrixXd::Zero(1, 1));
    // stationarity: N (0.75 - sigma(t)) - 2 l2 t = 0
    double t = oracle::bisect([&](double v) { return n * (0.75 - 1.0 / (1.0 + std::exp(-v))) - 2.0 * l2 * v; }, -10, 10);
    EXPECT_NEAR(out.value(0, 0), t, 1e-6);
    EXPECT_NEAR(out.value(0, 0), kLn3, 1e-5);
}

TEST(MStepTheta, SeparableAssignmentBoundedByPenalty) {
    std::mt19937_64 rng(13);
    Eigen::MatrixXd x_hat(10, 2);
    Eigen::MatrixXd r(10, 2);
    for (int i = 0; i < 10; ++i) {
        double coord = i < 5 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i;
        x_hat(i, 0) = coord;
        x_hat(i, 1) = 1.0;
        r(i, 0) = coord > 0 ? 1.0 : 0.0;
        r(i, 1) = 1.0 - r(i, 0);
    }
    const double l2 = 1e-2;
    FitConfig config = quiet_config(2, l2);
    config.solver.max_iterations = 1000;
    auto out = m_step_theta(r, x_hat, config, Eigen::MatrixXd::Zero(1, 2));
    // P(k=1) = sigma(theta . x) equals P(y=1) under the expert convention with psi = -theta
    Eigen::VectorXd ref = -oracle::newton_logistic(x_hat, r.col(0), Eigen::VectorXd::Ones(10), l2);
    EXPECT_LT((out.value.row(0).transpose() - ref).lpNorm<Eigen::Infinity>(), 1e-5);
    EXPECT_GT(out.value(0, 0), 1.0);
    EXPECT_TRUE(out.value.allFinite());
}

TEST(MStepPsi, ZeroWeightsGiveZero) {
    std::mt19937_64 rng(14);
    Eigen::MatrixXd x = oracle::gaussian_matrix(30, 3, rng);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(30);
    auto out = m_step_psi(Eigen::VectorXd::Zero(30), x, y, quiet_config(1, 1e-6), oracle::gaussian_matrix(3, 1, rng));
    EXPECT_LT(out.value.lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(MStepPsi, BalancedLabelsGiveZero) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(50, 1);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y[i] = i % 2;
    auto out = m_step_psi(Eigen::VectorXd::Ones(50), x, y, quiet_config(1, 1e-6), Eigen::VectorXd::Ones(1));
    EXPECT_NEAR(out.value[0], 0.0, 1e-7);
}

TEST(MStepPsi, SeventyFivePercentOpensGivesNegativeLogThree) {
    const int n = 80;
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = i % 4 ? 1.0 : 0.0;
    const double l2 = 1e-6;
    auto out = m_step_psi(Eigen::VectorXd::Ones(n), x, y, quiet_config(1, l2), Eigen::VectorXd::Zero(1));
    // stationarity under P(y=1) = 1/(1+e^v): N (0.25 - sigma(v)) - 2 l2 v = 0
    double v = oracle::bisect([&](double t) { return n * (0.25 - 1.0 / (1.0 + std::exp(-t))) - 2.0 * l2 * t; }, -10, 10);
    EXPECT_NEAR(out.value[0], v, 1e-6);
    EXPECT_NEAR(out.value[0], -kLn3, 1e-5);
    EXPECT_THROW(m_step_psi(Eigen::VectorXd::Constant(n, 1.5), x, y, quiet_config(1, l2), Eigen::VectorXd::Zero(1)),
                 std::invalid_argument);
}

TEST(GradientCheck, RandomPointsAllBlocks) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        int contexts = 2 + trial % 3;
        auto truth = random_params(rng, contexts, 4, 5);
        auto data = sample_dataset(rng, truth, 20);
        auto point = random_params(rng, contexts, 4, 5, 0.5);
        auto resp = e_step(truth, data);
        for (auto block : {GradientBlock::Assignment, GradientBlock::Prediction, GradientBlock::Joint}) {
            EXPECT_LT(gradient_check(block, point, data, 1e-3, &resp), 1e-5);
        }
        EXPECT_LT(gradient_check(GradientBlock::Joint, point, data, 0.0), 1e-5);
    }
}

TEST(GradientCheck, SymmetricContextsShareGradients) {
    std::mt19937_64 rng(16);
    Dataset d;
    d.x_hat = oracle::gaussian_matrix(20, 3, rng);
    d.x = oracle::gaussian_matrix(20, 2, rng);
    d.y = Eigen::VectorXd::Zero(20);
    auto point = MixtureParams::zeros(3, 3, 2);
    Eigen::MatrixXd r(20, 3);
    std::uniform_real_distribution<double> u(0.1, 0.4);
    for (int i = 0; i < 20; ++i) {
        r(i, 0) = r(i, 1) = u(rng);
        r(i, 2) = 1.0 - 2.0 * r(i, 0);
    }
    auto g = q_gradient(point, r, d, 0.0);
    EXPECT_LT((g.theta.row(0) - g.theta.row(1)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(GradientCheck, LargePenaltyDominates) {
    std::mt19937_64 rng(17);
    auto truth = random_params(rng, 2, 3, 3);
    auto data = sample_dataset(rng, truth, 20);
    auto point = MixtureParams::zeros(2, 3, 3);
    point.theta.setConstant(1.0);
    point.psi.setConstant(-1.0);
    const double l2 = 1e4;
    auto g = q_gradient(point, e_step(point, data), data, l2);
    Eigen::MatrixXd want_theta = -2.0 * l2 * point.theta;
    Eigen::MatrixXd want_psi = -2.0 * l2 * point.psi;
    for (Eigen::Index k = 0; k < g.theta.size(); ++k) {
        EXPECT_LT(std::abs(g.theta.data()[k] - want_theta.data()[k]), 0.01 * std::abs(want_theta.data()[k]));
    }
    for (Eigen::Index k = 0; k < g.psi.size(); ++k) {
        EXPECT_LT(std::abs(g.psi.data()[k] - want_psi.data()[k]), 0.01 * std::abs(want_psi.data()[k]));
    }
}

TEST(EmFit, SingleContextMatchesLogisticRegression) {
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 5; ++trial) {
        auto truth = random_params(rng, 1, 2, 4);
        auto data = sample_dataset(rng, truth, 300);
        FitConfig config = quiet_config(1, 1e-3);
        config.restarts = 2;
        config.seed = static_cast<std::uint64_t>(trial);
        auto fit = em_fit(data, config);
        Eigen::VectorXd ref = oracle::newton_logistic(data.x, data.y, Eigen::VectorXd::Ones(data.size()), 1e-3);
        MixtureParams ref_params = MixtureParams::zeros(1, 2, 4);
        ref_params.psi.row(0) = ref.transpose();
        EXPECT_NEAR(fit.final_log_likelihood, log_likelihood(ref_params, data), 1e-6);
        EXPECT_LT((fit.params.psi.row(0).transpose() - ref).lpNorm<Eigen::Infinity>(), 1e-4);
        EXPECT_EQ(fit.params.theta.rows(), 0);
    }
}

TEST(EmFit, CoinFlipLabelsReachEntropyFloor) {
    std::mt19937_64 rng(19);
    Dataset d;
    d.x_hat = oracle::gaussian_matrix(4000, 3, rng);
    d.x = oracle::gaussian_matrix(4000, 3, rng);
    d.y.resize(4000);
    std::bernoulli_distribution coin(0.5);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.y[i] = coin(rng) ? 1.0 : 0.0;
    FitConfig config = quiet_config(2, 1e-6);
    config.restarts = 2;
    auto fit = em_fit(d, config);
    EXPECT_NEAR(fit.final_log_likelihood, std::log(0.5), 0.01);
}

// With l2 = 0 the penalized objective is N times the mean log-likelihood, so
// both are monotone; with l2 > 0 only the penalized objective is guaranteed.
TEST(EmFit, MonotoneTraceAndDeterminism) {
    std::mt19937_64 rng(20);
    for (int trial = 0; trial < 12; ++trial) {
        int contexts = 2 + trial % 3;
        double l2 = trial % 2 ? 0.0 : 1e-6;
        auto truth = random_params(rng, contexts, 3, 4, 2.0);
        auto data = sample_dataset(rng, truth, 1000);
        FitConfig config = quiet_config(contexts, l2);
        config.restarts = 2;
        config.seed = static_cast<std::uint64_t>(trial);
        auto fit = em_fit(data, config);
        for (const auto& trace : fit.restart_traces) {
            const auto& its = trace.iterations;
            ASSERT_FALSE(its.empty());
            for (std::size_t k = 1; k < its.size(); ++k) {
                EXPECT_GE(its[k].penalized_objective, its[k - 1].penalized_objective - 1e-9);
                if (l2 == 0.0) {
                    EXPECT_GE(its[k].mean_log_likelihood, its[k - 1].mean_log_likelihood - 1e-9);
                }
            }
        }
        EXPECT_TRUE(fit.trace.converged);
        EXPECT_EQ(fit.restart_log_likelihoods.size(), 2u);
        EXPECT_EQ(fit.final_log_likelihood, fit.restart_log_likelihoods[static_cast<std::size_t>(fit.best_restart)]);

        config.threads = 2;
        auto parallel = em_fit(data, config);
        EXPECT_EQ(parallel.params.theta, fit.params.theta);
        EXPECT_EQ(parallel.params.psi, fit.params.psi);
    }
}

TEST(EmFit, PlainEmIsMonotoneWithoutOverrelaxation) {
    std::mt19937_64 rng(23);
    auto truth = random_params(rng, 3, 3, 3, 2.0);
    auto data = sample_dataset(rng, truth, 600);
    FitConfig config = quiet_config(3, 1e-6);
    config.restarts = 1;
    config.overrelax = false;
    config.max_iterations = 60;
    auto fit = em_fit(data, config);
    const auto& its = fit.trace.iterations;
    for (std::size_t k = 1; k < its.size(); ++k) {
        EXPECT_GE(its[k].penalized_objective, its[k - 1].penalized_objective - 1e-9);
    }
}

TEST(EmFit, RejectsBadInputs) {
    Dataset tiny{Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Ones(2)};
    EXPECT_THROW(em_fit(tiny, quiet_config(3, 1e-6)), std::invalid_argument);
    Dataset empty{Eigen::MatrixXd(0, 1), Eigen::MatrixXd(0, 1), Eigen::VectorXd(0)};
    EXPECT_THROW(em_fit(empty, quiet_config(1, 1e-6)), std::invalid_argument);
    FitConfig bad = quiet_config(1, 1e-6);
    bad.tolerance = 0.0;
    EXPECT_THROW(em_fit(tiny, bad), std::invalid_argument);
}

}  // namespace
}  // namespace pushmix
