#include "pushmix/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pushmix/ranker.hpp"
#include "pushmix/stats.hpp"

namespace pushmix {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(a), hi(a), lo(b), hi(b)};
    return std::mt19937_64(seq);
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Context-count curve

const char* to_string(FeatureSet set) {
    switch (set) {
        case FeatureSet::Full:
            return "full";
        case FeatureSet::UserOnly:
            return "user-only";
        case FeatureSet::ProductOnly:
            return "product-only";
    }
    return "?";
}

FeatureSet parse_feature_set(const std::string& text) {
    for (auto s : {FeatureSet::Full, FeatureSet::UserOnly, FeatureSet::ProductOnly}) {
        if (text == to_string(s)) {
            return s;
        }
    }
    throw std::invalid_argument("unknown feature set: " + text);
}

std::vector<std::size_t> feature_set_columns(const FeatureSchema& schema, FeatureSet set) {
    std::vector<FeatureFamily> families;
    switch (set) {
        case FeatureSet::Full:
            families = {FeatureFamily::User, FeatureFamily::Product};
            break;
        case FeatureSet::UserOnly:
            families = {FeatureFamily::User};
            break;
        case FeatureSet::ProductOnly:
            families = {FeatureFamily::Product};
            break;
    }
    return schema.assignment_columns(families, true);
}

Split split_rows(Eigen::Index rows, double validation_fraction, std::uint64_t seed) {
    if (rows < 2 || !(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw std::invalid_argument("split_rows: need >= 2 rows and a fraction in (0, 1)");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    auto rng = stream(seed, 0x5b117);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(rows)));
    n_val = std::clamp<std::size_t>(n_val, 1, order.size() - 1);
    Split out;
    out.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

const CurveCell& ContextCurve::cell(FeatureSet set, int k) const {
    for (const auto& c : cells) {
        if (c.set == set && c.k == k) {
            return c;
        }
    }
    throw std::out_of_range(std::string("no curve cell for ") + to_string(set) + " k=" + std::to_string(k));
}

ContextCurve context_curve(const Dataset& data, const FeatureSchema& schema, const CurveOptions& options) {
    if (options.k_max < 1 || options.sets.empty()) {
        throw std::invalid_argument("context_curve: need k_max >= 1 and at least one feature set");
    }
    if (data.m() != static_cast<Eigen::Index>(schema.assignment_dims())) {
        throw std::invalid_argument("context_curve: examples do not match the schema");
    }
    ContextCurve curve;
    curve.split = split_rows(data.size(), options.validation_fraction, options.split_seed);
    const Dataset train = data.subset(curve.split.train);
    const Dataset validation = data.subset(curve.split.validation);

    for (auto set : options.sets) {
        for (int k = 1; k <= options.k_max; ++k) {
            CurveCell cell;
            cell.set = set;
            cell.k = k;
            curve.cells.push_back(std::move(cell));
        }
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < curve.cells.size(); i = next++) {
            auto& cell = curve.cells[i];
            try {
                auto cols = feature_set_columns(schema, cell.set);
                Dataset tr = train.with_assignment_columns(cols);
                Dataset va = validation.with_assignment_columns(cols);
                FitConfig config = options.fit;
                config.contexts = cell.k;
                auto fit = em_fit(tr, config);
                cell.train_log_likelihood = fit.final_log_likelihood;
                cell.validation_log_likelihood = log_likelihood(fit.params, va);
                cell.iterations = static_cast<int>(fit.trace.iterations.size()) - 1;
                cell.converged = fit.trace.converged;
                cell.params = std::move(fit.params);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(curve.cells.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return curve;
}

int select_k(const ContextCurve& curve, FeatureSet set, double slack) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : curve.cells) {
        if (c.set == set) {
            best = std::max(best, c.validation_log_likelihood);
        }
    }
    int chosen = 0;
    for (const auto& c : curve.cells) {
        if (c.set == set && c.validation_log_likelihood >= best - slack && (chosen == 0 || c.k < chosen)) {
            chosen = c.k;
        }
    }
    if (chosen == 0) {
        throw std::invalid_argument(std::string("select_k: no cells for ") + to_string(set));
    }
    return chosen;
}

void write_curve_csv(std::ostream& out, const ContextCurve& curve) {
    out << "set,k,train_ll,validation_ll,iterations,converged\n";
    char buf[160];
    for (const auto& c : curve.cells) {
        std::snprintf(buf, sizeof buf, "%s,%d,%.10f,%.10f,%d,%d\n", to_string(c.set), c.k, c.train_log_likelihood,
                      c.validation_log_likelihood, c.iterations, c.converged ? 1 : 0);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Weight analysis

WeightReport weight_analysis(const MixtureParams& params, const FeatureSchema& schema) {
    params.validate();
    if (params.m() != static_cast<Eigen::Index>(schema.assignment_dims()) ||
        params.n() != static_cast<Eigen::Index>(schema.prediction_dims())) {
        throw std::invalid_argument("weight_analysis: parameters do not match the schema");
    }
    WeightReport report;
    if (params.contexts() < 2) {
        report.notice = "single context: no per-context weights to compare";
        return report;
    }
    auto active = schema.assignment_column({FeatureKind::UserActiveScore, Window::None, 0, {}});
    if (!active) {
        report.notice = "schema has no active-score slot";
        return report;
    }
    const FeatureFamily up[] = {FeatureFamily::UserProduct};
    const FeatureFamily pp[] = {FeatureFamily::ProductProduct};
    auto up_cols = schema.prediction_columns(up, false);
    auto pp_cols = schema.prediction_columns(pp, false);
    auto mean_of = [&](int k, const std::vector<std::size_t>& cols) {
        if (cols.empty()) {
            return 0.0;
        }
        double sum = 0.0;
        for (auto c : cols) {
            sum += params.psi(k, static_cast<Eigen::Index>(c));
        }
        return sum / static_cast<double>(cols.size());
    };
    for (int k = 0; k < params.contexts(); ++k) {
        ContextWeights row;
        row.context = k;
        row.active_weight = k + 1 < params.contexts() ? params.theta(k, static_cast<Eigen::Index>(*active)) : 0.0;
        row.mean_psi_user_product = mean_of(k, up_cols);
        row.mean_psi_product_product = mean_of(k, pp_cols);
        report.rows.push_back(row);
    }
    return report;
}

double active_preference_correlation(const WeightReport& report) {
    std::vector<double> active;
    std::vector<double> preference;
    for (const auto& r : report.rows) {
        active.push_back(r.active_weight);
        preference.push_back(-r.mean_psi_user_product);
    }
    return spearman(active, preference);
}

void write_weights_csv(std::ostream& out, const WeightReport& report) {
    out << "context,active_weight,mean_psi_user_product,mean_psi_product_product\n";
    for (const auto& r : report.rows) {
        out << r.context << ',' << fmt6(r.active_weight) << ',' << fmt6(r.mean_psi_user_product) << ','
            << fmt6(r.mean_psi_product_product) << '\n';
    }
}

WeightReport read_weights_csv(std::istream& in) {
    WeightReport report;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("weights csv: missing header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string cell;
        std::vector<std::string> cols;
        while (std::getline(fields, cell, ',')) {
            cols.push_back(cell);
        }
        if (cols.size() != 4) {
            throw std::invalid_argument("weights csv: expected 4 columns: " + line);
        }
        ContextWeights r;
        r.context = std::stoi(cols[0]);
        r.active_weight = std::stod(cols[1]);
        r.mean_psi_user_product = std::stod(cols[2]);
        r.mean_psi_product_product = std::stod(cols[3]);
        report.rows.push_back(r);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Policy comparison

const char* to_string(Policy policy) {
    switch (policy) {
        case Policy::Popularity:
            return "popularity";
        case Policy::PprProxy:
            return "ppr-proxy";
        case Policy::CprRule:
            return "cpr-rule";
        case Policy::CprMixtureOne:
            return "cpr-mm-1";
        case Policy::CprMixtureSelected:
            return "cpr-mm-k";
        case Policy::Oracle:
            return "oracle";
    }
    return "?";
}

const PolicyRow& PolicyReport::row(Policy policy) const {
    for (const auto& r : rows) {
        if (r.policy == policy) {
            return r;
        }
    }
    throw std::out_of_range(std::string("no row for ") + to_string(policy));
}

namespace {

constexpr Policy kPolicies[] = {Policy::Popularity,    Policy::PprProxy,           Policy::CprRule,
                                Policy::CprMixtureOne, Policy::CprMixtureSelected, Policy::Oracle};
constexpr std::size_t kPolicyCount = std::size(kPolicies);

std::size_t simulate_arm(const std::vector<double>& probs, std::size_t sends, std::mt19937_64 rng) {
    std::uniform_int_distribution<std::size_t> member(0, probs.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t opens = 0;
    for (std::size_t s = 0; s < sends; ++s) {
        double p = probs[member(rng)];
        opens += unit(rng) < p ? 1 : 0;
    }
    return opens;
}

}  // namespace

PolicyReport policy_compare(const SyntheticWorld& world, const FeatureStore& store, const MixtureParams& single_context,
                            const MixtureParams& selected, const PolicyOptions& options) {
    const auto& schema = world.schema;
    for (const auto* p : {&single_context, &selected}) {
        if (p->m() != static_cast<Eigen::Index>(schema.assignment_dims()) ||
            p->n() != static_cast<Eigen::Index>(schema.prediction_dims())) {
            throw std::invalid_argument("policy_compare: model does not match the world schema");
        }
    }
    if (options.sends == 0 || options.population == 0) {
        throw std::invalid_argument("policy_compare: sends and population must be positive");
    }

    // Items by 28-day sales, best first.
    std::vector<std::string> by_sales;
    for (const auto& [id, agg] : store.items()) {
        by_sales.push_back(id);
    }
    std::stable_sort(by_sales.begin(), by_sales.end(), [&](const std::string& a, const std::string& b) {
        return store.item(a)->sales[3] > store.item(b)->sales[3];
    });

    std::map<std::string, std::vector<std::string>> bought;
    for (const auto& e : world.events) {
        if (e.kind == EventKind::Purchase && e.timestamp < store.ref_time() && store.item(e.item_id)) {
            bought[e.user_id].push_back(e.item_id);
        }
    }
    std::vector<std::string> buyers;
    for (const auto& [u, items] : bought) {
        buyers.push_back(u);
    }
    if (buyers.empty()) {
        throw std::invalid_argument("policy_compare: the world has no purchases");
    }

    Eigen::VectorXd xh(static_cast<Eigen::Index>(schema.assignment_dims()));
    Eigen::VectorXd x(static_cast<Eigen::Index>(schema.prediction_dims()));
    auto truth = [&](const std::string& user, const std::string& anchor, const std::string& item) {
        fill_features(store, schema, user, anchor, item, xh, x);
        return predict_open_rate(world.truth, xh, x);
    };

    // Each member of the population gets one pick per policy.
    std::array<std::vector<double>, kPolicyCount> probs;
    std::map<std::string, std::vector<std::string>> pool_cache;
    auto rng = stream(options.seed, 0x909);
    std::size_t attempts = 0;
    while (probs[0].size() < options.population) {
        if (++attempts > 100 * options.population) {
            throw std::runtime_error("policy_compare: too few anchors with complementary candidates");
        }
        const auto& user = buyers[rng() % buyers.size()];
        const auto& items = bought[user];
        const auto& anchor = items[rng() % items.size()];
        auto it = pool_cache.find(anchor);
        if (it == pool_cache.end()) {
            std::vector<std::string> ids;
            for (const auto& c : select_candidates(store.item_scores(), anchor, options.candidates)) {
                if (c.candidate != anchor && store.item(c.candidate)) {
                    ids.push_back(c.candidate);
                }
            }
            it = pool_cache.emplace(anchor, std::move(ids)).first;
        }
        const auto& pool = it->second;
        if (pool.empty()) {
            continue;
        }

        std::string popular = by_sales[0] != anchor ? by_sales[0] : by_sales.at(1);
        std::string personal = popular;
        double best_pref = 0.0;
        for (const auto& id : by_sales) {
            double pref = id == anchor ? 0.0 : store.user_item_preference(user, id, Window::Day28);
            if (pref > best_pref) {
                best_pref = pref;
                personal = id;
            }
        }
        std::string rule;
        double best_rule = -std::numeric_limits<double>::infinity();
        double best_s = -std::numeric_limits<double>::infinity();
        for (const auto& id : pool) {
            auto cat = store.category_of(id);
            double pref = cat ? store.user_category_preference(user, *cat, Window::Day28) : 0.0;
            double s = store.item_scores().complementarity.get(anchor, id);
            double score = pref * s;
            if (score > best_rule || (score == best_rule && s > best_s)) {
                best_rule = score;
                best_s = s;
                rule = id;
            }
        }
        auto mm1 = rank_items(user, anchor, pool, single_context, store, schema, 1);
        auto mmk = rank_items(user, anchor, pool, selected, store, schema, 1);

        double p_pop = truth(user, anchor, popular);
        double p_ppr = truth(user, anchor, personal);
        double p_rule = truth(user, anchor, rule);
        double p_mm1 = truth(user, anchor, mm1.ranked.at(0).item_id);
        double p_mmk = truth(user, anchor, mmk.ranked.at(0).item_id);
        double p_oracle = std::max(p_pop, p_ppr);
        for (const auto& id : pool) {
            p_oracle = std::max(p_oracle, truth(user, anchor, id));
        }
        const double picked[kPolicyCount] = {p_pop, p_ppr, p_rule, p_mm1, p_mmk, p_oracle};
        for (std::size_t a = 0; a < kPolicyCount; ++a) {
            probs[a].push_back(picked[a]);
        }
    }

    PolicyReport report;
    report.population = options.population;
    for (std::size_t a = 0; a < kPolicyCount; ++a) {
        PolicyRow row;
        row.policy = kPolicies[a];
        row.sends = options.sends;
        row.opens = simulate_arm(probs[a], options.sends, stream(options.seed, 1, a));
        row.open_rate = static_cast<double>(row.opens) / static_cast<double>(row.sends);
        double sum = 0.0;
        for (double p : probs[a]) {
            sum += p;
        }
        row.expected_open_rate = sum / static_cast<double>(probs[a].size());
        if (!report.rows.empty()) {
            const auto& prev = report.rows.back();
            row.p_value = two_proportion_z_test(row.opens, row.sends, prev.opens, prev.sends).p_value;
        }
        report.rows.push_back(row);
    }
    const double base = report.rows[0].open_rate;
    for (auto& row : report.rows) {
        row.relative = base > 0.0 ? row.open_rate / base : 0.0;
    }

    // A/A: a second popularity arm against the first, then repeated pairs of
    // fresh popularity arms for the uniformity check.
    std::size_t aa_opens = simulate_arm(probs[0], options.sends, stream(options.seed, 2, 0));
    report.aa_relative = base > 0.0 ? static_cast<double>(aa_opens) / static_cast<double>(options.sends) / base : 0.0;
    report.aa_p_value = two_proportion_z_test(aa_opens, options.sends, report.rows[0].opens, options.sends).p_value;
    for (std::size_t r = 0; r < options.aa_repeats; ++r) {
        std::size_t a = simulate_arm(probs[0], options.sends, stream(options.seed, 3, 2 * r));
        std::size_t b = simulate_arm(probs[0], options.sends, stream(options.seed, 3, 2 * r + 1));
        report.aa_p_values.push_back(two_proportion_z_test(a, options.sends, b, options.sends).p_value);
    }
    if (!report.aa_p_values.empty()) {
        report.aa_ks_statistic = ks_uniform_statistic(report.aa_p_values);
        report.aa_ks_critical = ks_critical_value_1pct(report.aa_p_values.size());
    }
    return report;
}

void write_policy_csv(std::ostream& out, const PolicyReport& report) {
    out << "policy,sends,opens,open_rate,expected_open_rate,relative,p_value\n";
    for (const auto& r : report.rows) {
        out << to_string(r.policy) << ',' << r.sends << ',' << r.opens << ',' << fmt6(r.open_rate) << ','
            << fmt6(r.expected_open_rate) << ',' << fmt6(r.relative) << ',' << fmt6(r.p_value) << '\n';
    }
}

}  // namespace pushmix
