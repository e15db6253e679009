#include "pushmix/mixture.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace pushmix {

namespace {

double softplus(double u) {
    return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

double sigmoid(double u) {
    return 1.0 / (1.0 + std::exp(-u));
}

double clamp_logit(double v) {
    return std::clamp(v, -kLogitClamp, kLogitClamp);
}

bool is_clamped(double v) {
    return v <= -kLogitClamp || v >= kLogitClamp;
}

// log P(y | x, k) for the expert convention P(y=1) = 1 / (1 + exp(u)).
double log_label_prob(double u, double y) {
    return y > 0.5 ? -softplus(u) : -softplus(-u);
}

// N x M log assignment probabilities; `raw` receives the unclamped logits.
Eigen::MatrixXd log_assignment(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& x_hat,
                               Eigen::MatrixXd* raw = nullptr) {
    const Eigen::Index n = x_hat.rows();
    const Eigen::Index contexts = theta.rows() + 1;
    Eigen::MatrixXd logits(n, contexts);
    if (contexts > 1) {
        logits.leftCols(contexts - 1).noalias() = x_hat * theta.transpose();
    }
    logits.col(contexts - 1).setZero();
    if (raw != nullptr) {
        *raw = logits;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < contexts; ++k) {
            logits(i, k) = clamp_logit(logits(i, k));
            mx = std::max(mx, logits(i, k));
        }
        double sum = 0.0;
        for (Eigen::Index k = 0; k < contexts; ++k) {
            sum += std::exp(logits(i, k) - mx);
        }
        double lse = mx + std::log(sum);
        for (Eigen::Index k = 0; k < contexts; ++k) {
            logits(i, k) -= lse;
        }
    }
    return logits;
}

// N x M log P(y_i | x_i, k).
Eigen::MatrixXd log_label(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::MatrixXd u = x * psi.transpose();
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            u(i, k) = log_label_prob(clamp_logit(u(i, k)), y[i]);
        }
    }
    return u;
}

void check_dims(const MixtureParams& params, const Dataset& data) {
    if (params.m() != data.m() || params.n() != data.n()) {
        throw std::invalid_argument("parameter dimensions do not match the data (m=" + std::to_string(params.m()) +
                                    ", n=" + std::to_string(params.n()) + " vs m=" + std::to_string(data.m()) +
                                    ", n=" + std::to_string(data.n()) + ")");
    }
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double params_sq_norm(const MixtureParams& p) {
    return p.theta.squaredNorm() + p.psi.squaredNorm();
}

constexpr double kOverrelaxStart = 1.5;
constexpr double kOverrelaxGrowth = 1.5;
constexpr double kOverrelaxMax = 16.0;
constexpr double kAccelerationRatio = 2.0;

double max_abs_delta(const MixtureParams& a, const MixtureParams& b) {
    double d = 0.0;
    if (a.theta.size() > 0) {
        d = (a.theta - b.theta).lpNorm<Eigen::Infinity>();
    }
    return std::max(d, (a.psi - b.psi).lpNorm<Eigen::Infinity>());
}

}  // namespace

// ---------------------------------------------------------------------------

Dataset Dataset::from_examples(std::span<const Example> examples) {
    Dataset d;
    if (examples.empty()) {
        return d;
    }
    const auto m = examples.front().x_hat.size();
    const auto n = examples.front().x.size();
    const auto count = static_cast<Eigen::Index>(examples.size());
    d.x_hat.resize(count, m);
    d.x.resize(count, n);
    d.y.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        const auto& ex = examples[static_cast<std::size_t>(i)];
        if (ex.x_hat.size() != m || ex.x.size() != n) {
            throw std::invalid_argument("examples have inconsistent feature dimensions");
        }
        d.x_hat.row(i) = ex.x_hat.transpose();
        d.x.row(i) = ex.x.transpose();
        d.y[i] = ex.y;
    }
    return d;
}

Dataset Dataset::subset(std::span<const Eigen::Index> rows) const {
    Dataset d;
    const auto count = static_cast<Eigen::Index>(rows.size());
    d.x_hat.resize(count, m());
    d.x.resize(count, n());
    d.y.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        auto r = rows[static_cast<std::size_t>(i)];
        d.x_hat.row(i) = x_hat.row(r);
        d.x.row(i) = x.row(r);
        d.y[i] = y[r];
    }
    return d;
}

Dataset Dataset::with_assignment_columns(std::span<const std::size_t> columns) const {
    Dataset d;
    d.x_hat.resize(size(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        d.x_hat.col(static_cast<Eigen::Index>(c)) = x_hat.col(static_cast<Eigen::Index>(columns[c]));
    }
    d.x = x;
    d.y = y;
    return d;
}

void Dataset::validate() const {
    if (x_hat.rows() != y.size() || x.rows() != y.size()) {
        throw std::invalid_argument("dataset row counts disagree");
    }
    if (!x_hat.allFinite() || !x.allFinite()) {
        throw std::invalid_argument("dataset has non-finite features");
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) {
            throw std::invalid_argument("labels must be 0 or 1");
        }
    }
}

MixtureParams MixtureParams::zeros(int contexts, Eigen::Index m, Eigen::Index n) {
    if (contexts < 1) {
        throw std::invalid_argument("a mixture needs at least one context");
    }
    MixtureParams p;
    p.theta = Eigen::MatrixXd::Zero(contexts - 1, m);
    p.psi = Eigen::MatrixXd::Zero(contexts, n);
    return p;
}

void MixtureParams::validate() const {
    if (psi.rows() < 1) {
        throw std::invalid_argument("a mixture needs at least one context");
    }
    if (theta.rows() != psi.rows() - 1) {
        throw std::invalid_argument("theta must have one row fewer than psi");
    }
    if (!theta.allFinite() || !psi.allFinite()) {
        throw std::invalid_argument("mixture parameters must be finite");
    }
}

// ---------------------------------------------------------------------------
// Prediction path

Eigen::VectorXd assignment_probs(const Eigen::MatrixXd& theta, const Eigen::Ref<const Eigen::VectorXd>& x_hat) {
    if (theta.cols() != x_hat.size()) {
        throw std::invalid_argument("assignment_probs: x_hat has length " + std::to_string(x_hat.size()) +
                                    ", expected " + std::to_string(theta.cols()));
    }
    const Eigen::Index contexts = theta.rows() + 1;
    Eigen::VectorXd logits(contexts);
    for (Eigen::Index k = 0; k + 1 < contexts; ++k) {
        logits[k] = clamp_logit(theta.row(k).dot(x_hat));
    }
    logits[contexts - 1] = 0.0;
    double mx = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - mx).exp().matrix();
    return p / p.sum();
}

double open_probability(const Eigen::Ref<const Eigen::VectorXd>& psi_k, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (psi_k.size() != x.size()) {
        throw std::invalid_argument("open_probability: x has length " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(psi_k.size()));
    }
    return sigmoid(-clamp_logit(psi_k.dot(x)));
}

double predict_open_rate(const MixtureParams& params, const Eigen::Ref<const Eigen::VectorXd>& x_hat,
                         const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (params.n() != x.size()) {
        throw std::invalid_argument("predict_open_rate: x has length " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(params.n()));
    }
    Eigen::VectorXd weights = assignment_probs(params.theta, x_hat);
    double rate = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
        rate += weights[k] * open_probability(params.psi.row(k).transpose(), x);
    }
    return rate;
}

Eigen::VectorXd predict_open_rates(const MixtureParams& params, const Dataset& data) {
    check_dims(params, data);
    Eigen::MatrixXd log_a = log_assignment(params.theta, data.x_hat);
    Eigen::MatrixXd u = data.x * params.psi.transpose();
    Eigen::VectorXd out(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        double rate = 0.0;
        for (Eigen::Index k = 0; k < u.cols(); ++k) {
            rate += std::exp(log_a(i, k)) * sigmoid(-clamp_logit(u(i, k)));
        }
        out[i] = rate;
    }
    return out;
}

Posterior posterior(const MixtureParams& params, const Dataset& data) {
    check_dims(params, data);
    Eigen::MatrixXd joint = log_assignment(params.theta, data.x_hat) + log_label(params.psi, data.x, data.y);
    Posterior post;
    post.responsibilities.resize(joint.rows(), joint.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < joint.rows(); ++i) {
        double mx = joint.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index k = 0; k < joint.cols(); ++k) {
            sum += std::exp(joint(i, k) - mx);
        }
        double lse = mx + std::log(sum);
        for (Eigen::Index k = 0; k < joint.cols(); ++k) {
            post.responsibilities(i, k) = std::exp(joint(i, k) - lse);
        }
        total += lse;
    }
    post.mean_log_likelihood = joint.rows() > 0 ? total / static_cast<double>(joint.rows()) : 0.0;
    return post;
}

double log_likelihood(const MixtureParams& params, const Dataset& data) {
    if (data.size() == 0) {
        throw std::invalid_argument("log_likelihood: empty dataset");
    }
    return posterior(params, data).mean_log_likelihood;
}

Eigen::MatrixXd e_step(const MixtureParams& params, const Dataset& data) {
    return posterior(params, data).responsibilities;
}

// ---------------------------------------------------------------------------
// Q function

double assignment_objective(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& responsibilities,
                            const Eigen::MatrixXd& x_hat, double l2, Eigen::MatrixXd* gradient) {
    if (responsibilities.rows() != x_hat.rows() || responsibilities.cols() != theta.rows() + 1 ||
        theta.cols() != x_hat.cols()) {
        throw std::invalid_argument("assignment_objective: shape mismatch");
    }
    Eigen::MatrixXd raw;
    Eigen::MatrixXd log_a = log_assignment(theta, x_hat, gradient != nullptr ? &raw : nullptr);
    double value = (responsibilities.array() * log_a.array()).sum() - l2 * theta.squaredNorm();
    if (gradient != nullptr) {
        const Eigen::Index free = theta.rows();
        Eigen::MatrixXd g(x_hat.rows(), free);
        for (Eigen::Index i = 0; i < x_hat.rows(); ++i) {
            double total = responsibilities.row(i).sum();
            for (Eigen::Index k = 0; k < free; ++k) {
                g(i, k) = is_clamped(raw(i, k)) ? 0.0 : responsibilities(i, k) - std::exp(log_a(i, k)) * total;
            }
        }
        *gradient = g.transpose() * x_hat - 2.0 * l2 * theta;
    }
    return value;
}

double prediction_objective(const Eigen::Ref<const Eigen::VectorXd>& psi_k, const Eigen::Ref<const Eigen::VectorXd>& weights,
                            const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2,
                            Eigen::VectorXd* gradient) {
    if (weights.size() != x.rows() || y.size() != x.rows() || psi_k.size() != x.cols()) {
        throw std::invalid_argument("prediction_objective: shape mismatch");
    }
    Eigen::VectorXd u = x * psi_k;
    double value = 0.0;
    Eigen::VectorXd g(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        double uc = clamp_logit(u[i]);
        value += weights[i] * log_label_prob(uc, y[i]);
        g[i] = is_clamped(u[i]) ? 0.0 : weights[i] * ((1.0 - y[i]) - sigmoid(uc));
    }
    value -= l2 * psi_k.squaredNorm();
    if (gradient != nullptr) {
        *gradient = x.transpose() * g - 2.0 * l2 * psi_k;
    }
    return value;
}

double q_value(const MixtureParams& params_new, const Eigen::MatrixXd& responsibilities, const Dataset& data,
               double l2) {
    check_dims(params_new, data);
    if (responsibilities.rows() != data.size() || responsibilities.cols() != params_new.contexts()) {
        throw std::invalid_argument("q_value: responsibilities shape mismatch");
    }
    double value = assignment_objective(params_new.theta, responsibilities, data.x_hat, l2);
    for (int k = 0; k < params_new.contexts(); ++k) {
        value += prediction_objective(params_new.psi.row(k).transpose(), responsibilities.col(k), data.x, data.y, l2);
    }
    return value;
}

QGradient q_gradient(const MixtureParams& params_new, const Eigen::MatrixXd& responsibilities, const Dataset& data,
                     double l2) {
    check_dims(params_new, data);
    QGradient g;
    assignment_objective(params_new.theta, responsibilities, data.x_hat, l2, &g.theta);
    g.psi.resize(params_new.psi.rows(), params_new.psi.cols());
    Eigen::VectorXd row;
    for (int k = 0; k < params_new.contexts(); ++k) {
        prediction_objective(params_new.psi.row(k).transpose(), responsibilities.col(k), data.x, data.y, l2, &row);
        g.psi.row(k) = row.transpose();
    }
    return g;
}

// ---------------------------------------------------------------------------
// M-steps

void FitConfig::validate() const {
    if (contexts < 1) {
        throw std::invalid_argument("contexts must be at least 1");
    }
    if (!(tolerance > 0.0)) {
        throw std::invalid_argument("tolerance must be positive");
    }
    if (restarts < 1) {
        throw std::invalid_argument("restarts must be at least 1");
    }
    if (max_iterations < 0) {
        throw std::invalid_argument("max_iterations must be non-negative");
    }
    if (!(l2 >= 0.0)) {
        throw std::invalid_argument("l2 must be non-negative");
    }
}

MStepResult<Eigen::MatrixXd> m_step_theta(const Eigen::MatrixXd& responsibilities, const Eigen::MatrixXd& x_hat,
                                          const FitConfig& config, const Eigen::MatrixXd& start) {
    const Eigen::Index free = responsibilities.cols() - 1;
    if (start.rows() != free || start.cols() != x_hat.cols()) {
        throw std::invalid_argument("m_step_theta: starting point has the wrong shape");
    }
    MStepResult<Eigen::MatrixXd> result{start, {}};
    if (free == 0) {
        return result;
    }
    const double scale = 1.0 / std::max<double>(1.0, static_cast<double>(x_hat.rows()));
    const Eigen::Index m = x_hat.cols();
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(start.data(), start.size());
    if (config.solver.method == SolverMethod::Lbfgs) {
        Objective f = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
            Eigen::Map<const Eigen::MatrixXd> theta(v.data(), free, m);
            Eigen::MatrixXd g;
            double value = assignment_objective(theta, responsibilities, x_hat, config.l2, &g);
            grad = -scale * Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
            return -scale * value;
        };
        result.report = minimize_lbfgs(f, w, config.solver);
    } else {
        const Eigen::VectorXd totals = responsibilities.rowwise().sum();
        TwiceDifferentiable f = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad, Eigen::MatrixXd* hess) {
            Eigen::Map<const Eigen::MatrixXd> theta(v.data(), free, m);
            Eigen::MatrixXd g;
            double value = assignment_objective(theta, responsibilities, x_hat, config.l2, &g);
            grad = -scale * Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
            if (hess != nullptr) {
                // block (k, l) = sum_i t_i (a_ik [k = l] - a_ik a_il) x_i x_i^T, entry (k, j) at k + free * j
                Eigen::MatrixXd a = log_assignment(theta, x_hat).array().exp().matrix();
                hess->setZero(free * m, free * m);
                Eigen::VectorXd c(x_hat.rows());
                for (Eigen::Index k = 0; k < free; ++k) {
                    for (Eigen::Index l = k; l < free; ++l) {
                        c = totals.array() * a.col(k).array() * ((k == l ? 1.0 : 0.0) - a.col(l).array());
                        Eigen::MatrixXd block = x_hat.transpose() * c.asDiagonal() * x_hat;
                        for (Eigen::Index j = 0; j < m; ++j) {
                            for (Eigen::Index jj = 0; jj < m; ++jj) {
                                (*hess)(k + free * j, l + free * jj) = scale * block(j, jj);
                                (*hess)(l + free * jj, k + free * j) = scale * block(j, jj);
                            }
                        }
                    }
                }
                hess->diagonal().array() += scale * 2.0 * config.l2;
            }
            return -scale * value;
        };
        result.report = minimize_newton(f, w, config.solver);
    }
    result.value = Eigen::Map<const Eigen::MatrixXd>(w.data(), free, m);
    return result;
}

MStepResult<Eigen::VectorXd> m_step_psi(const Eigen::Ref<const Eigen::VectorXd>& weights, const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& y, const FitConfig& config,
                                        const Eigen::Ref<const Eigen::VectorXd>& start) {
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0 && weights[i] <= 1.0)) {
            throw std::invalid_argument("m_step_psi: weights must lie in [0, 1]");
        }
    }
    const double scale = 1.0 / std::max<double>(1.0, static_cast<double>(x.rows()));
    MStepResult<Eigen::VectorXd> result{start, {}};
    if (config.solver.method == SolverMethod::Lbfgs) {
        Objective f = [&](const Eigen::VectorXd& psi, Eigen::VectorXd& grad) {
            Eigen::VectorXd g;
            double value = prediction_objective(psi, weights, x, y, config.l2, &g);
            grad = -scale * g;
            return -scale * value;
        };
        result.report = minimize_lbfgs(f, result.value, config.solver);
        return result;
    }
    TwiceDifferentiable f = [&](const Eigen::VectorXd& psi, Eigen::VectorXd& grad, Eigen::MatrixXd* hess) {
        Eigen::VectorXd g;
        double value = prediction_objective(psi, weights, x, y, config.l2, &g);
        grad = -scale * g;
        if (hess != nullptr) {
            Eigen::VectorXd u = x * psi;
            Eigen::VectorXd c(u.size());
            for (Eigen::Index i = 0; i < u.size(); ++i) {
                double s = sigmoid(clamp_logit(u[i]));
                c[i] = is_clamped(u[i]) ? 0.0 : weights[i] * s * (1.0 - s);
            }
            *hess = scale * (x.transpose() * c.asDiagonal() * x);
            hess->diagonal().array() += scale * 2.0 * config.l2;
        }
        return -scale * value;
    };
    result.report = minimize_newton(f, result.value, config.solver);
    return result;
}

// ---------------------------------------------------------------------------
// EM

namespace {

struct MStepOutcome {
    MixtureParams params;
    int degraded = 0;
};

MStepOutcome m_step(const Eigen::MatrixXd& responsibilities, const Dataset& data, const FitConfig& config,
                    const MixtureParams& start) {
    MStepOutcome out;
    out.params = start;
    auto theta = m_step_theta(responsibilities, data.x_hat, config, start.theta);
    out.params.theta = std::move(theta.value);
    out.degraded += theta.report.degraded() ? 1 : 0;
    for (int k = 0; k < start.contexts(); ++k) {
        auto psi = m_step_psi(responsibilities.col(k), data.x, data.y, config, start.psi.row(k).transpose());
        out.params.psi.row(k) = psi.value.transpose();
        out.degraded += psi.report.degraded() ? 1 : 0;
    }
    return out;
}

Eigen::MatrixXd dirichlet_responsibilities(Eigen::Index rows, int contexts, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd r(rows, contexts);
    for (Eigen::Index i = 0; i < rows; ++i) {
        double total = 0.0;
        for (int k = 0; k < contexts; ++k) {
            r(i, k) = -std::log1p(-unit(rng));  // Exp(1) draws
            total += r(i, k);
        }
        r.row(i) /= total;
    }
    return r;
}

void check_fit_inputs(const Dataset& data, const FitConfig& config) {
    config.validate();
    data.validate();
    if (data.size() == 0) {
        throw std::invalid_argument("em_fit: empty dataset");
    }
    if (config.contexts > data.size()) {
        throw std::invalid_argument("em_fit: more contexts than examples");
    }
}

}  // namespace

FitResult em_run(const Dataset& data, const FitConfig& config, const Eigen::MatrixXd& initial_responsibilities) {
    check_fit_inputs(data, config);
    if (initial_responsibilities.rows() != data.size() || initial_responsibilities.cols() != config.contexts) {
        throw std::invalid_argument("em_run: initial responsibilities have the wrong shape");
    }
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const double n = static_cast<double>(data.size());

    auto zero = MixtureParams::zeros(config.contexts, data.m(), data.n());
    auto first = m_step(initial_responsibilities, data, config, zero);
    MixtureParams params = std::move(first.params);
    Posterior post = posterior(params, data);

    FitResult result;
    auto record = [&](int iteration, double delta, int degraded) {
        EmIteration rec;
        rec.iteration = iteration;
        rec.mean_log_likelihood = post.mean_log_likelihood;
        rec.penalized_objective = n * post.mean_log_likelihood - config.l2 * params_sq_norm(params);
        rec.max_param_delta = delta;
        rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        rec.degraded_solves = degraded;
        result.trace.iterations.push_back(rec);
    };
    record(0, max_abs_delta(params, zero), first.degraded);

    auto penalized = [&](const MixtureParams& p, const Posterior& q) {
        return n * q.mean_log_likelihood - config.l2 * params_sq_norm(p);
    };
    double previous = post.mean_log_likelihood;
    double previous_gain = 0.0;
    double eta = kOverrelaxStart;
    for (int it = 1; it <= config.max_iterations; ++it) {
        auto step = m_step(post.responsibilities, data, config, params);
        Posterior next = posterior(step.params, data);
        if (config.overrelax) {
            // Extrapolate along the EM step; keep it only if it beats the plain step.
            MixtureParams trial = step.params;
            trial.theta = params.theta + eta * (step.params.theta - params.theta);
            trial.psi = params.psi + eta * (step.params.psi - params.psi);
            Posterior trial_post = posterior(trial, data);
            if (trial_post.mean_log_likelihood > next.mean_log_likelihood &&
                penalized(trial, trial_post) >= penalized(step.params, next)) {
                step.params = std::move(trial);
                next = std::move(trial_post);
                eta = std::min(eta * kOverrelaxGrowth, kOverrelaxMax);
            } else {
                eta = kOverrelaxStart;
            }
        }
        double delta = max_abs_delta(step.params, params);
        params = std::move(step.params);
        post = std::move(next);
        record(it, delta, step.degraded);
        double gain = post.mean_log_likelihood - previous;
        double change = std::abs(gain) / std::max(std::abs(previous), std::numeric_limits<double>::min());
        previous = post.mean_log_likelihood;
        // Near the symmetric start the gains are tiny but growing; stopping
        // there would return a saddle.
        bool accelerating = it == 1 || gain > kAccelerationRatio * previous_gain;
        previous_gain = gain;
        if (change < config.tolerance && !accelerating) {
            result.trace.converged = true;
            break;
        }
    }
    result.params = std::move(params);
    result.final_log_likelihood = post.mean_log_likelihood;
    result.restart_traces = {result.trace};
    result.restart_log_likelihoods = {result.final_log_likelihood};
    return result;
}

FitResult em_fit(const Dataset& data, const FitConfig& config) {
    check_fit_inputs(data, config);
    std::vector<FitResult> runs(static_cast<std::size_t>(config.restarts));
    auto run_one = [&](int r) {
        auto seed = splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(r) + 1));
        runs[static_cast<std::size_t>(r)] =
            em_run(data, config, dirichlet_responsibilities(data.size(), config.contexts, seed));
    };
    const int threads = std::clamp(config.threads, 1, config.restarts);
    if (threads == 1) {
        for (int r = 0; r < config.restarts; ++r) {
            run_one(r);
        }
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (int r = t; r < config.restarts; r += threads) {
                    run_one(r);
                }
            });
        }
    }

    int best = 0;
    for (int r = 1; r < config.restarts; ++r) {
        if (runs[static_cast<std::size_t>(r)].final_log_likelihood > runs[static_cast<std::size_t>(best)].final_log_likelihood) {
            best = r;
        }
    }
    FitResult result = std::move(runs[static_cast<std::size_t>(best)]);
    result.best_restart = best;
    result.restart_traces.clear();
    result.restart_log_likelihoods.clear();
    for (int r = 0; r < config.restarts; ++r) {
        auto& run = r == best ? result : runs[static_cast<std::size_t>(r)];
        result.restart_traces.push_back(run.trace);
        result.restart_log_likelihoods.push_back(run.final_log_likelihood);
    }
    return result;
}

// ---------------------------------------------------------------------------

double gradient_check(GradientBlock block, const MixtureParams& point, const Dataset& data, double l2,
                      const Eigen::MatrixXd* responsibilities) {
    constexpr double kStep = 1e-5;
    Eigen::MatrixXd resp = responsibilities != nullptr ? *responsibilities : e_step(point, data);
    QGradient analytic = q_gradient(point, resp, data, l2);

    double worst = 0.0;
    auto probe = [&](Eigen::MatrixXd MixtureParams::*member, const Eigen::MatrixXd& grad) {
        MixtureParams p = point;
        auto& values = p.*member;
        for (Eigen::Index idx = 0; idx < values.size(); ++idx) {
            double original = values.data()[idx];
            values.data()[idx] = original + kStep;
            double up = q_value(p, resp, data, l2);
            values.data()[idx] = original - kStep;
            double down = q_value(p, resp, data, l2);
            values.data()[idx] = original;
            double fd = (up - down) / (2.0 * kStep);
            double a = grad.data()[idx];
            worst = std::max(worst, std::abs(a - fd) / std::max(1.0, std::abs(a)));
        }
    };
    if (block == GradientBlock::Assignment || block == GradientBlock::Joint) {
        probe(&MixtureParams::theta, analytic.theta);
    }
    if (block == GradientBlock::Prediction || block == GradientBlock::Joint) {
        probe(&MixtureParams::psi, analytic.psi);
    }
    return worst;
}

}  // namespace pushmix
