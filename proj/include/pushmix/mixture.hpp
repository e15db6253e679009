#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pushmix/features.hpp"
#include "pushmix/solvers.hpp"

namespace pushmix {

// Logits are clamped to this range so that no probability rounds to 0 or 1.
inline constexpr double kLogitClamp = 35.0;

// Feature matrices for N examples.
struct Dataset {
    Eigen::MatrixXd x_hat;  // N x m, assignment features
    Eigen::MatrixXd x;      // N x n, prediction features
    Eigen::VectorXd y;      // N labels in {0, 1}

    Eigen::Index size() const noexcept { return y.size(); }
    Eigen::Index m() const noexcept { return x_hat.cols(); }
    Eigen::Index n() const noexcept { return x.cols(); }

    static Dataset from_examples(std::span<const Example> examples);
    Dataset subset(std::span<const Eigen::Index> rows) const;
    Dataset with_assignment_columns(std::span<const std::size_t> columns) const;
    void validate() const;
};

// Mixture of logistic experts.
//
//   P(y | x_hat, x) = sum_k P(k | x_hat, theta) P(y | x, psi_k)
//   P(k | x_hat)    = exp(theta_k . x_hat) / (1 + sum_{j<M} exp(theta_j . x_hat)),  theta_M = 0
//   P(y = 1 | x, k) = 1 / (1 + exp(psi_k . x))
//
// Note the sign of the expert: a larger psi_k . x means a LOWER open
// probability. Negative prediction weights raise the open rate.
struct MixtureParams {
    Eigen::MatrixXd theta;  // (M-1) x m; the last context is pinned at zero
    Eigen::MatrixXd psi;    // M x n
    std::uint64_t schema_hash = 0;

    int contexts() const noexcept { return static_cast<int>(psi.rows()); }
    Eigen::Index m() const noexcept { return theta.cols(); }
    Eigen::Index n() const noexcept { return psi.cols(); }

    static MixtureParams zeros(int contexts, Eigen::Index m, Eigen::Index n);
    void validate() const;
};

Eigen::VectorXd assignment_probs(const Eigen::MatrixXd& theta, const Eigen::Ref<const Eigen::VectorXd>& x_hat);
double open_probability(const Eigen::Ref<const Eigen::VectorXd>& psi_k, const Eigen::Ref<const Eigen::VectorXd>& x);
double predict_open_rate(const MixtureParams& params, const Eigen::Ref<const Eigen::VectorXd>& x_hat,
                         const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd predict_open_rates(const MixtureParams& params, const Dataset& data);

// Mean per-example observed log-likelihood.
double log_likelihood(const MixtureParams& params, const Dataset& data);

// N x M posterior context probabilities.
Eigen::MatrixXd e_step(const MixtureParams& params, const Dataset& data);

// E-step and mean log-likelihood from one pass.
struct Posterior {
    Eigen::MatrixXd responsibilities;
    double mean_log_likelihood = 0.0;
};
Posterior posterior(const MixtureParams& params, const Dataset& data);

// Expected complete-data log-likelihood minus l2 * (|theta|^2 + |psi|^2).
double q_value(const MixtureParams& params_new, const Eigen::MatrixXd& responsibilities, const Dataset& data,
               double l2);

// Assignment block of Q: sum_ik r_ik log P(k | x_hat_i) - l2 |theta|^2.
double assignment_objective(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& responsibilities,
                            const Eigen::MatrixXd& x_hat, double l2, Eigen::MatrixXd* gradient = nullptr);

// Weighted expert log-likelihood: sum_i w_i log P(y_i | x_i, psi_k) - l2 |psi_k|^2.
double prediction_objective(const Eigen::Ref<const Eigen::VectorXd>& psi_k, const Eigen::Ref<const Eigen::VectorXd>& weights,
                            const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2,
                            Eigen::VectorXd* gradient = nullptr);

struct FitConfig {
    int contexts = 2;
    double tolerance = 1e-5;  // relative change of the mean log-likelihood
    int max_iterations = 200;
    int restarts = 5;
    std::uint64_t seed = 0;
    double l2 = 1e-6;
    SolverOptions solver{};
    int threads = 1;  // restarts run concurrently when > 1
    // Adaptive over-relaxation: after each EM step, try a longer step along
    // the same direction and keep it when it improves both the likelihood and
    // the penalized objective. Monotonicity is unaffected.
    bool overrelax = true;

    void validate() const;
};

template <class T>
struct MStepResult {
    T value;
    SolverReport report;
};

// Weighted multinomial logistic regression with soft targets.
MStepResult<Eigen::MatrixXd> m_step_theta(const Eigen::MatrixXd& responsibilities, const Eigen::MatrixXd& x_hat,
                                          const FitConfig& config, const Eigen::MatrixXd& start);

// Weighted binary logistic regression under the expert's sign convention.
MStepResult<Eigen::VectorXd> m_step_psi(const Eigen::Ref<const Eigen::VectorXd>& weights, const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& y, const FitConfig& config,
                                        const Eigen::Ref<const Eigen::VectorXd>& start);

struct EmIteration {
    int iteration = 0;
    double mean_log_likelihood = 0.0;
    double penalized_objective = 0.0;  // N * mean_log_likelihood - l2 * |params|^2
    double max_param_delta = 0.0;
    double seconds = 0.0;
    int degraded_solves = 0;
};

struct EmTrace {
    std::vector<EmIteration> iterations;
    bool converged = false;
};

struct FitResult {
    MixtureParams params;
    EmTrace trace;                       // trace of the selected restart
    std::vector<EmTrace> restart_traces;
    std::vector<double> restart_log_likelihoods;
    int best_restart = 0;
    double final_log_likelihood = 0.0;
};

// EM with Dirichlet(1) initial responsibilities per restart. The restart with
// the highest final likelihood wins; ties go to the lowest index.
FitResult em_fit(const Dataset& data, const FitConfig& config);

// One EM run from explicit initial responsibilities.
FitResult em_run(const Dataset& data, const FitConfig& config, const Eigen::MatrixXd& initial_responsibilities);

enum class GradientBlock { Assignment, Prediction, Joint };

// Max relative difference between analytic Q gradients and central finite
// differences (step 1e-5), relative to max(1, |analytic|). Responsibilities
// default to the E-step at `point`.
double gradient_check(GradientBlock block, const MixtureParams& point, const Dataset& data, double l2,
                      const Eigen::MatrixXd* responsibilities = nullptr);

// Gradient of q_value with respect to theta and psi.
struct QGradient {
    Eigen::MatrixXd theta;
    Eigen::MatrixXd psi;
};
QGradient q_gradient(const MixtureParams& params_new, const Eigen::MatrixXd& responsibilities, const Dataset& data,
                     double l2);

}  // namespace pushmix
