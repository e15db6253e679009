// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pushmix/evaluation.hpp"
#include "pushmix/graph_scoring.hpp"
#include "pushmix/mixture.hpp"
#include "pushmix/model_io.hpp"
#include "pushmix/ranker.hpp"
#include "pushmix/stats.hpp"
#include "pushmix/synthetic.hpp"

using namespace pushmix;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Clock {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// |a - b| relative to |b|; exact zeros compare as zero error.
double rel(double a, double b) {
    if (a == b) {
        return 0.0;
    }
    return std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min());
}

MixtureParams random_params(std::mt19937_64& rng, int contexts, Eigen::Index m, Eigen::Index n, double sd) {
    MixtureParams p;
    p.theta = oracle::gaussian_matrix(contexts - 1, m, rng, sd);
    p.psi = oracle::gaussian_matrix(contexts, n, rng, sd);
    return p;
}

Dataset sample(std::mt19937_64& rng, const MixtureParams& truth, Eigen::Index rows) {
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

std::vector<InteractionEvent> random_log(std::mt19937_64& rng, int users, int items, int events) {
    std::uniform_int_distribution<int> pick_user(0, users - 1);
    std::uniform_int_distribution<int> pick_item(0, items - 1);
    std::uniform_int_distribution<int> pick_time(1, 30);
    std::bernoulli_distribution is_view(0.5);
    std::vector<InteractionEvent> log;
    for (int k = 0; k < events; ++k) {
        int item = pick_item(rng);
        log.push_back({"u" + std::to_string(pick_user(rng)), "i" + std::to_string(item), "c" + std::to_string(item % 3),
                       is_view(rng) ? EventKind::View : EventKind::Purchase, pick_time(rng)});
    }
    return log;
}

Outcome formula_oracles() {
    Clock clock;
    std::mt19937_64 rng(101);
    double worst = 0.0;
    const int instances = 60;
    for (int t = 0; t < instances; ++t) {
        int contexts = 1 + t % 4;
        Eigen::Index m = 2 + t % 4;
        Eigen::Index n = 2 + (t / 4) % 4;
        auto params = random_params(rng, contexts, m, n, 1.0);
        auto data = sample(rng, params, 20 + 80 * (t % 2));

        worst = std::max(worst, rel(log_likelihood(params, data),
                                    oracle::mean_log_likelihood(params.theta, params.psi, data.x_hat, data.x, data.y)));
        auto r = e_step(params, data);
        auto r_ref = oracle::posterior(params.theta, params.psi, data.x_hat, data.x, data.y);
        for (Eigen::Index i = 0; i < data.size(); ++i) {
            Eigen::VectorXd xh = data.x_hat.row(i).transpose();
            Eigen::VectorXd x = data.x.row(i).transpose();
            auto gate = assignment_probs(params.theta, xh);
            auto gate_ref = oracle::assignment(params.theta, xh);
            for (int k = 0; k < contexts; ++k) {
                worst = std::max(worst, rel(gate[k], gate_ref[static_cast<std::size_t>(k)]));
                worst = std::max(worst, rel(open_probability(params.psi.row(k).transpose(), x),
                                            oracle::label_prob(params.psi, k, x, 1.0)));
                worst = std::max(worst, rel(r(i, k), r_ref(i, k)));
            }
        }

        auto log = random_log(rng, 8 + t % 5, 5, 30 + t % 40);
        auto scores = score_pairs(log, NodeKind::Product);
        for (int a = 0; a < 5; ++a) {
            for (int b = 0; b < 5; ++b) {
                auto i = "i" + std::to_string(a);
                auto j = "i" + std::to_string(b);
                double p = oracle::co_purchase(log, i, j);
                double q = oracle::substitutivity(log, i, j);
                worst = std::max(worst, rel(scores.co_purchase.get(i, j), p));
                worst = std::max(worst, rel(scores.substitutivity.get(i, j), q));
                worst = std::max(worst, rel(scores.complementarity.get(i, j), p - q));
            }
        }
    }
    double secs = clock.seconds();
    Outcome o;
    o.pass = worst <= 1e-10 && secs < 10.0;
    o.detail = std::to_string(instances) + " instances, max rel err " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s";
    return o;
}

Outcome gradients() {
    Clock clock;
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        int contexts = 2 + t % 3;
        auto truth = random_params(rng, contexts, 4, 5, 1.0);
        auto data = sample(rng, truth, 20);
        auto point = random_params(rng, contexts, 4, 5, 0.5);
        auto resp = e_step(truth, data);
        for (auto block : {GradientBlock::Assignment, GradientBlock::Prediction}) {
            worst = std::max(worst, gradient_check(block, point, data, 1e-3, &resp));
        }
    }
    double secs = clock.seconds();
    Outcome o;
    o.pass = worst < 1e-5 && secs < 5.0;
    o.detail = "20 instances, max rel err " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s";
    return o;
}

Outcome monotonicity() {
    Clock clock;
    int decreases = 0;
    int unconverged = 0;
    int max_iterations = 0;
    double worst_drop = 0.0;
    for (int run = 0; run < 100; ++run) {
        std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(run));
        int contexts = 2 + run % 3;
        auto truth = random_params(rng, contexts, 3, 4, 3.0);
        auto data = sample(rng, truth, 2000);
        FitConfig config;
        config.contexts = contexts;
        config.restarts = 1;
        config.seed = static_cast<std::uint64_t>(run);
        config.l2 = 0.0;
        auto fit = em_fit(data, config);
        const auto& its = fit.trace.iterations;
        for (std::size_t k = 1; k < its.size(); ++k) {
            double drop = its[k - 1].mean_log_likelihood - its[k].mean_log_likelihood;
            worst_drop = std::max(worst_drop, drop);
            decreases += drop > 1e-9 ? 1 : 0;
        }
        unconverged += fit.trace.converged ? 0 : 1;
        max_iterations = std::max(max_iterations, static_cast<int>(its.size()) - 1);
    }
    double secs = clock.seconds();
    Outcome o;
    o.pass = decreases == 0 && unconverged == 0 && max_iterations <= 200 && secs < 120.0;
    o.detail = "100 runs, " + std::to_string(decreases) + " decreases (worst " + fmt("%.3g", worst_drop) + "), " +
               std::to_string(unconverged) + " unconverged, max " + std::to_string(max_iterations) + " iterations, " +
               fmt("%.1f", secs) + " s";
    return o;
}

Outcome single_context() {
    std::mt19937_64 rng(404);
    double ll_gap = 0.0;
    double param_gap = 0.0;
    for (int t = 0; t < 20; ++t) {
        Eigen::Index n = 2 + t % 5;
        auto truth = random_params(rng, 1, 2, n, 1.0);
        auto data = sample(rng, truth, 200 + 50 * t);
        FitConfig config;
        config.contexts = 1;
        config.restarts = 1;
        config.seed = static_cast<std::uint64_t>(t);
        auto fit = em_fit(data, config);
        Eigen::VectorXd ref = oracle::newton_logistic(data.x, data.y, Eigen::VectorXd::Ones(data.size()), config.l2);
        MixtureParams ref_params = MixtureParams::zeros(1, 2, n);
        ref_params.psi.row(0) = ref.transpose();
        ll_gap = std::max(ll_gap, std::abs(fit.final_log_likelihood - log_likelihood(ref_params, data)));
        param_gap = std::max(param_gap, (fit.params.psi.row(0).transpose() - ref).lpNorm<Eigen::Infinity>());
    }
    Outcome o;
    o.pass = ll_gap < 1e-6 && param_gap < 1e-4;
    o.detail = "20 datasets, max ll gap " + fmt("%.3g", ll_gap) + ", max param gap " + fmt("%.3g", param_gap);
    return o;
}

Outcome planted_recovery() {
    Clock clock;
    SyntheticSpec spec;
    spec.mode = SyntheticMode::Direct;
    spec.seed = 1;
    spec.contexts = 2;
    spec.direct.examples = 60000;
    auto s = generate_direct(spec);
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> held_rows;
    for (Eigen::Index i = 0; i < s.data.size(); ++i) {
        (i < 50000 ? train_rows : held_rows).push_back(i);
    }
    auto train = s.data.subset(train_rows);
    auto held = s.data.subset(held_rows);
    FitConfig config;
    config.contexts = 2;
    config.restarts = 5;
    config.seed = 3;
    auto fit = em_fit(train, config);
    auto cos = [&](int a, int b) {
        return cosine_similarity(fit.params.psi.row(a).transpose(), s.truth.psi.row(b).transpose());
    };
    double straight = std::min(cos(0, 0), cos(1, 1));
    double swapped = std::min(cos(0, 1), cos(1, 0));
    double best = std::max(straight, swapped);
    double gap = std::abs(log_likelihood(fit.params, held) - log_likelihood(s.truth, held));
    double secs = clock.seconds();
    Outcome o;
    o.pass = best > 0.95 && gap < 0.01 && secs < 180.0;
    o.detail = "min cosine " + fmt("%.4f", best) + ", held-out gap " + fmt("%.4f", gap) + " nats, " + fmt("%.1f", secs) +
               " s";
    return o;
}

struct WorldRun {
    SyntheticWorld world;
    FeatureStore store;
    ContextCurve curve;
    int k_hat = 1;
};

WorldRun& world_run() {
    static WorldRun run = [] {
        SyntheticSpec spec;
        spec.seed = 1;
        spec.contexts = 2;
        spec.world.impressions = 20000;
        WorldRun r{generate_world(spec), {}, {}, 1};
        const auto& w = r.world;
        r.store = FeatureStore::build(w.events, w.ref_time, w.feature_config, w.catalog, w.demographics);
        auto data = Dataset::from_examples(assemble_examples(w.impressions, r.store, w.schema).examples);
        CurveOptions options;
        options.k_max = 3;
        options.fit.restarts = 3;
        options.fit.seed = 5;
        r.curve = context_curve(data, w.schema, options);
        r.k_hat = select_k(r.curve, FeatureSet::Full);
        return r;
    }();
    return run;
}

double best_validation(const ContextCurve& curve, FeatureSet set) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : curve.cells) {
        if (c.set == set) {
            best = std::max(best, c.validation_log_likelihood);
        }
    }
    return best;
}

Outcome context_plateau() {
    Clock clock;
    const auto& run = world_run();
    const auto& curve = run.curve;
    auto v = [&](int k) { return curve.cell(FeatureSet::Full, k).validation_log_likelihood; };
    double gain12 = v(2) - v(1);
    double gain23 = v(3) - v(2);
    double margin = best_validation(curve, FeatureSet::Full) - best_validation(curve, FeatureSet::ProductOnly);
    Outcome o;
    o.pass = gain12 > 0.02 && gain23 < 0.002 && margin > 0.01;
    o.detail = "gain k1->k2 " + fmt("%.4f", gain12) + ", k2->k3 " + fmt("%.4f", gain23) + ", full over product-only " +
               fmt("%.4f", margin) + ", selected k " + std::to_string(run.k_hat) + ", " + fmt("%.1f", clock.seconds()) +
               " s";
    return o;
}

Outcome policy_ordering() {
    const auto& run = world_run();
    const auto& w = run.world;
    auto expand = [&](const MixtureParams& restricted, FeatureSet set) {
        auto cols = feature_set_columns(w.schema, set);
        MixtureParams full = MixtureParams::zeros(restricted.contexts(), static_cast<Eigen::Index>(w.schema.assignment_dims()),
                                                  restricted.n());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            full.theta.col(static_cast<Eigen::Index>(cols[j])) = restricted.theta.col(static_cast<Eigen::Index>(j));
        }
        full.psi = restricted.psi;
        full.schema_hash = w.schema.hash();
        return full;
    };
    auto one = expand(run.curve.cell(FeatureSet::Full, 1).params, FeatureSet::Full);
    auto selected = expand(run.curve.cell(FeatureSet::Full, run.k_hat).params, FeatureSet::Full);
    PolicyOptions options;  // 100,000 sends per policy
    auto report = policy_compare(w, run.store, one, selected, options);
    const auto& mmk = report.row(Policy::CprMixtureSelected);
    const auto& mm1 = report.row(Policy::CprMixtureOne);
    const auto& rule = report.row(Policy::CprRule);
    const auto& pop = report.row(Policy::Popularity);
    bool ordered = mmk.open_rate >= mm1.open_rate && mm1.open_rate >= rule.open_rate && rule.open_rate >= pop.open_rate;
    bool aa_clean = report.aa_p_value >= 0.05 && report.aa_ks_statistic < report.aa_ks_critical;
    Outcome o;
    o.pass = ordered && mmk.p_value < 0.05 && aa_clean && mmk.sends == 100000;
    o.detail = "open rates mm-k " + fmt("%.4f", mmk.open_rate) + " >= mm-1 " + fmt("%.4f", mm1.open_rate) + " >= rule " +
               fmt("%.4f", rule.open_rate) + " >= popularity " + fmt("%.4f", pop.open_rate) + ", top p " +
               fmt("%.3g", mmk.p_value) + ", A/A p " + fmt("%.3f", report.aa_p_value) + ", A/A KS " +
               fmt("%.4f", report.aa_ks_statistic) + " < " + fmt("%.4f", report.aa_ks_critical);
    return o;
}

Outcome score_bounds() {
    std::mt19937_64 rng(808);
    int violations = 0;
    for (int t = 0; t < 100; ++t) {
        auto log = random_log(rng, 12, 6, 60);
        auto scores = score_pairs(log, NodeKind::Product);
        for (const auto& [key, p] : scores.co_purchase.scores) {
            violations += p < 0.0 || p > 1.0 ? 1 : 0;
        }
        for (const auto& [key, q] : scores.substitutivity.scores) {
            violations += q < 0.0 || q > 1.0 ? 1 : 0;
        }
        for (const auto& [key, s] : scores.complementarity.scores) {
            violations += s < -1.0 || s > 1.0 ? 1 : 0;
        }
    }

    // Equal timestamps: a buys both at once, b views and buys at once.
    std::vector<InteractionEvent> ties{{"a", "i", "c", EventKind::Purchase, 5},
                                       {"a", "j", "c", EventKind::Purchase, 5},
                                       {"b", "i", "c", EventKind::View, 7},
                                       {"b", "j", "c", EventKind::Purchase, 7}};
    auto tied = score_pairs(ties, NodeKind::Product);
    bool zero = tied.co_purchase.get("i", "j") == 0.0 && tied.co_purchase.get("j", "i") == 0.0 &&
                tied.substitutivity.get("i", "j") == 0.0;

    int mismatches = 0;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        auto log = random_log(rng, 10, 7, 50);
        auto scores = score_pairs(log, NodeKind::Product);
        if (scores.complementarity.size() > 50) {
            ++mismatches;
            continue;
        }
        CandidateFilter filter{u(rng), std::abs(u(rng)), static_cast<std::size_t>(1 + t % 6)};
        for (int a = 0; a < 7; ++a) {
            auto anchor = "i" + std::to_string(a);
            std::vector<std::pair<double, std::string>> expected;
            for (const auto& [key, s] : scores.complementarity.scores) {
                if (key.first == anchor && s >= filter.min_s &&
                    scores.substitutivity.get(key.first, key.second) <= filter.max_q) {
                    expected.emplace_back(-s, key.second);
                }
            }
            std::sort(expected.begin(), expected.end());
            if (expected.size() > filter.top_n) {
                expected.resize(filter.top_n);
            }
            auto got = select_candidates(scores, anchor, filter);
            if (got.size() != expected.size()) {
                ++mismatches;
                continue;
            }
            for (std::size_t k = 0; k < got.size(); ++k) {
                mismatches += got[k].candidate != expected[k].second ? 1 : 0;
            }
        }
    }
    Outcome o;
    o.pass = violations == 0 && zero && mismatches == 0;
    o.detail = "100 logs, " + std::to_string(violations) + " bound violations, tie fixture " + (zero ? "zero" : "nonzero") +
               ", " + std::to_string(mismatches) + " candidate mismatches";
    return o;
}

Outcome determinism() {
    SyntheticSpec spec;
    spec.seed = 9;
    spec.world.users = 800;
    spec.world.items = 60;
    spec.world.impressions = 2000;

    struct Artifacts {
        std::string model;
        std::string model_parallel;
        std::string rankings;
        std::string curve;
    };
    auto produce = [&] {
        auto w = generate_world(spec);
        auto store = FeatureStore::build(w.events, w.ref_time, w.feature_config, w.catalog, w.demographics);
        auto data = Dataset::from_examples(assemble_examples(w.impressions, store, w.schema).examples);
        FitConfig config;
        config.contexts = 2;
        config.restarts = 3;
        config.seed = 4;
        config.max_iterations = 80;
        auto fit = em_fit(data, config);
        fit.params.schema_hash = w.schema.hash();
        Artifacts a;
        a.model = model_to_json({fit.params, config, fit.final_log_likelihood});
        config.threads = 2;
        auto parallel = em_fit(data, config);
        parallel.params.schema_hash = w.schema.hash();
        a.model_parallel = model_to_json({parallel.params, FitConfig{fit.params.contexts()}, parallel.final_log_likelihood});
        std::vector<RankPair> pairs;
        for (std::size_t i = 0; i < 300; ++i) {
            pairs.push_back({w.impressions[i].user_id, w.impressions[i].anchor_item_id});
        }
        RankOptions ro;
        ro.candidates = {0.0, 0.1, 20};
        ro.top_n = 5;
        std::ostringstream ranks;
        auto rows = batch_rank(pairs, fit.params, store, w.schema, ro);
        write_rankings(ranks, rows);
        a.rankings = ranks.str();
        CurveOptions co;
        co.k_max = 2;
        co.sets = {FeatureSet::Full, FeatureSet::UserOnly};
        co.fit.restarts = 2;
        co.fit.max_iterations = 60;
        co.jobs = 2;
        std::ostringstream curve;
        write_curve_csv(curve, context_curve(data, w.schema, co));
        a.curve = curve.str();
        return a;
    };
    auto first = produce();
    auto second = produce();
    // The parallel fit must land on the same parameters as the serial one.
    auto serial_params = model_from_json(first.model).params;
    auto parallel_params = model_from_json(first.model_parallel).params;
    bool same_model = first.model == second.model;
    bool same_parallel = serial_params.theta == parallel_params.theta && serial_params.psi == parallel_params.psi &&
                         first.model_parallel == second.model_parallel;
    bool same_ranks = first.rankings == second.rankings && !first.rankings.empty();
    bool same_curve = first.curve == second.curve;
    Outcome o;
    o.pass = same_model && same_parallel && same_ranks && same_curve;
    o.detail = std::string("model ") + (same_model ? "identical" : "differs") + ", threaded fit " +
               (same_parallel ? "identical" : "differs") + ", rankings " + (same_ranks ? "identical" : "differs") +
               ", parallel curve " + (same_curve ? "identical" : "differs");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"formula oracles", formula_oracles},   {"gradient check", gradients},
        {"EM monotonicity", monotonicity},      {"single-context reduction", single_context},
        {"planted recovery", planted_recovery}, {"context-count plateau", context_plateau},
        {"policy ordering", policy_ordering},   {"score bounds", score_bounds},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %zu %s: %s (%s)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
