#include "pushmix/solvers.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace pushmix {

const char* to_string(SolverStatus status) {
    switch (status) {
        case SolverStatus::Converged: return "converged";
        case SolverStatus::MaxIterations: return "max_iterations";
        case SolverStatus::LineSearchFailed: return "line_search_failed";
    }
    return "?";
}

const char* to_string(SolverMethod method) {
    return method == SolverMethod::Newton ? "newton" : "lbfgs";
}

SolverMethod parse_solver_method(const std::string& text) {
    if (text == "newton") {
        return SolverMethod::Newton;
    }
    if (text == "lbfgs") {
        return SolverMethod::Lbfgs;
    }
    throw std::invalid_argument("unknown solver: " + text);
}

SolverReport minimize_lbfgs(const Objective& f, Eigen::VectorXd& x, const SolverOptions& options) {
    if (options.history < 1 || options.max_iterations < 0) {
        throw std::invalid_argument("minimize_lbfgs: bad options");
    }
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxBacktracks = 50;

    SolverReport report;
    Eigen::VectorXd grad(x.size());
    double value = f(x, grad);
    ++report.evaluations;
    if (!std::isfinite(value)) {
        throw std::invalid_argument("minimize_lbfgs: objective is not finite at the starting point");
    }

    struct Pair {
        Eigen::VectorXd s;
        Eigen::VectorXd y;
        double rho;
    };
    std::deque<Pair> memory;
    std::vector<double> alpha(static_cast<std::size_t>(options.history));
    Eigen::VectorXd trial(x.size());
    Eigen::VectorXd trial_grad(x.size());

    report.status = SolverStatus::MaxIterations;
    for (int it = 0;; ++it) {
        report.gradient_norm = grad.size() == 0 ? 0.0 : grad.lpNorm<Eigen::Infinity>();
        if (report.gradient_norm <= options.gradient_tolerance) {
            report.status = SolverStatus::Converged;
            break;
        }
        if (it >= options.max_iterations) {
            report.status = SolverStatus::MaxIterations;
            break;
        }

        // two-loop recursion
        Eigen::VectorXd dir = -grad;
        for (std::size_t k = memory.size(); k-- > 0;) {
            alpha[k] = memory[k].rho * memory[k].s.dot(dir);
            dir -= alpha[k] * memory[k].y;
        }
        if (!memory.empty()) {
            const auto& last = memory.back();
            dir *= last.s.dot(last.y) / last.y.squaredNorm();
        } else {
            dir /= std::max(1.0, grad.norm());
        }
        for (std::size_t k = 0; k < memory.size(); ++k) {
            double beta = memory[k].rho * memory[k].y.dot(dir);
            dir += (alpha[k] - beta) * memory[k].s;
        }
        double slope = grad.dot(dir);
        if (!(slope < 0.0)) {
            memory.clear();
            dir = -grad / std::max(1.0, grad.norm());
            slope = grad.dot(dir);
        }

        double step = 1.0;
        bool accepted = false;
        double trial_value = value;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            trial = x + step * dir;
            trial_value = f(trial, trial_grad);
            ++report.evaluations;
            if (std::isfinite(trial_value) && trial_value <= value + kArmijo * step * slope) {
                accepted = trial_value < value || (trial_value == value && trial_grad.squaredNorm() < grad.squaredNorm());
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            report.status = SolverStatus::LineSearchFailed;
            break;
        }

        Pair pair{trial - x, trial_grad - grad, 0.0};
        double sy = pair.s.dot(pair.y);
        if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
            pair.rho = 1.0 / sy;
            memory.push_back(std::move(pair));
            if (memory.size() > static_cast<std::size_t>(options.history)) {
                memory.pop_front();
            }
        }
        x = trial;
        grad = trial_grad;
        value = trial_value;
        report.iterations = it + 1;
    }
    report.value = value;
    return report;
}

}  // namespace pushmix

namespace pushmix {

SolverReport minimize_newton(const TwiceDifferentiable& f, Eigen::VectorXd& x, const SolverOptions& options) {
    if (options.max_iterations < 0) {
        throw std::invalid_argument("minimize_newton: bad options");
    }
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxBacktracks = 50;

    SolverReport report;
    const Eigen::Index dim = x.size();
    Eigen::VectorXd grad(dim);
    Eigen::MatrixXd hess(dim, dim);
    double value = f(x, grad, &hess);
    ++report.evaluations;
    if (!std::isfinite(value)) {
        throw std::invalid_argument("minimize_newton: objective is not finite at the starting point");
    }
    Eigen::VectorXd trial(dim);
    Eigen::VectorXd trial_grad(dim);
    Eigen::MatrixXd trial_hess(dim, dim);

    for (int it = 0;; ++it) {
        report.gradient_norm = dim == 0 ? 0.0 : grad.lpNorm<Eigen::Infinity>();
        if (report.gradient_norm <= options.gradient_tolerance) {
            report.status = SolverStatus::Converged;
            break;
        }
        if (it >= options.max_iterations) {
            report.status = SolverStatus::MaxIterations;
            break;
        }

        double scale = std::max(hess.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        double ridge = 0.0;
        Eigen::VectorXd dir;
        for (int attempt = 0; attempt < 20; ++attempt) {
            Eigen::MatrixXd h = hess;
            h.diagonal().array() += ridge;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all()) {
                dir = ldlt.solve(-grad);
                if (dir.allFinite() && dir.dot(grad) < 0.0) {
                    break;
                }
            }
            dir.resize(0);
            ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 100.0;
        }
        if (dir.size() == 0) {
            dir = -grad;
        }

        const double slope = grad.dot(dir);
        double step = 1.0;
        bool accepted = false;
        for (int b = 0; b < kMaxBacktracks; ++b) {
            trial = x + step * dir;
            // the full step is usually taken, so ask for its Hessian up front
            double v = f(trial, trial_grad, b == 0 ? &trial_hess : nullptr);
            ++report.evaluations;
            if (std::isfinite(v) && v <= value + kArmijo * step * slope) {
                if (b != 0) {
                    v = f(trial, trial_grad, &trial_hess);
                    ++report.evaluations;
                }
                x = trial;
                value = v;
                grad = trial_grad;
                hess = trial_hess;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++report.iterations;
        if (!accepted) {
            report.status = SolverStatus::LineSearchFailed;
            break;
        }
    }
    report.value = value;
    return report;
}

}  // namespace pushmix
