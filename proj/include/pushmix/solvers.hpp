#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace pushmix {

enum class SolverMethod { Newton, Lbfgs };

const char* to_string(SolverMethod method);
SolverMethod parse_solver_method(const std::string& text);

struct SolverOptions {
    SolverMethod method = SolverMethod::Newton;  // used by the EM M-steps
    double gradient_tolerance = 1e-8;            // on the max-norm of the gradient
    int max_iterations = 100;
    int history = 8;                             // L-BFGS only
};

enum class SolverStatus { Converged, MaxIterations, LineSearchFailed };

const char* to_string(SolverStatus status);

struct SolverReport {
    SolverStatus status = SolverStatus::Converged;
    int iterations = 0;
    int evaluations = 0;
    double value = 0.0;
    double gradient_norm = 0.0;

    bool degraded() const noexcept { return status != SolverStatus::Converged; }
};

// Objective returns f(x) and writes the gradient into the second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Limited-memory BFGS with a backtracking Armijo line search. On return `x`
// holds the best iterate found, so f(x) never exceeds f(x0).
SolverReport minimize_lbfgs(const Objective& f, Eigen::VectorXd& x, const SolverOptions& options = {});

// As Objective, and also writes the Hessian when the pointer is non-null.
using TwiceDifferentiable = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*)>;

// Damped Newton for convex objectives: the Hessian is ridged until its LDLT
// factorization is positive definite, steps backtrack under Armijo. Same
// best-iterate guarantee as minimize_lbfgs.
SolverReport minimize_newton(const TwiceDifferentiable& f, Eigen::VectorXd& x, const SolverOptions& options = {});

}  // namespace pushmix
