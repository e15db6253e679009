#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pushmix/features.hpp"
#include "pushmix/graph_scoring.hpp"
#include "pushmix/mixture.hpp"
#include "pushmix/synthetic.hpp"

namespace pushmix {

// ---------------------------------------------------------------------------
// Context-count curve

// Which assignment slots the mixture may use. The bias is always kept.
enum class FeatureSet { Full, UserOnly, ProductOnly };

const char* to_string(FeatureSet set);
FeatureSet parse_feature_set(const std::string& text);
std::vector<std::size_t> feature_set_columns(const FeatureSchema& schema, FeatureSet set);

struct Split {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> validation;
};

// Seeded shuffle; both halves come back sorted.
Split split_rows(Eigen::Index rows, double validation_fraction, std::uint64_t seed);

struct CurveCell {
    FeatureSet set = FeatureSet::Full;
    int k = 1;
    double train_log_likelihood = 0.0;
    double validation_log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    MixtureParams params;  // over the restricted assignment columns
};

struct CurveOptions {
    int k_max = 8;
    std::vector<FeatureSet> sets{FeatureSet::Full, FeatureSet::UserOnly, FeatureSet::ProductOnly};
    FitConfig fit{};  // contexts is overwritten per cell
    double validation_fraction = 0.3;
    std::uint64_t split_seed = 1;
    int jobs = 1;  // cells trained concurrently
};

struct ContextCurve {
    Split split;
    std::vector<CurveCell> cells;  // ordered by set (as requested), then k

    const CurveCell& cell(FeatureSet set, int k) const;
};

ContextCurve context_curve(const Dataset& data, const FeatureSchema& schema, const CurveOptions& options);

// Smallest k whose validation likelihood is within `slack` nats of the best k
// for that feature set.
int select_k(const ContextCurve& curve, FeatureSet set, double slack = 0.002);

// set,k,train_ll,validation_ll,iterations,converged
void write_curve_csv(std::ostream& out, const ContextCurve& curve);

// ---------------------------------------------------------------------------
// Weight analysis

struct ContextWeights {
    int context = 0;
    double active_weight = 0.0;             // theta on the active score; 0 for the pinned context
    double mean_psi_user_product = 0.0;     // mean over user-product slots
    double mean_psi_product_product = 0.0;  // mean over product-product slots
};

struct WeightReport {
    std::vector<ContextWeights> rows;
    std::string notice;  // set when the table is empty
};

// `params` must use the schema's full assignment vector.
WeightReport weight_analysis(const MixtureParams& params, const FeatureSchema& schema);

// Spearman correlation across contexts between the active-score weight and
// the user-product preference strength (-mean psi, since negative prediction
// weights raise the open rate).
double active_preference_correlation(const WeightReport& report);

// context,active_weight,mean_psi_user_product,mean_psi_product_product at 6
// significant digits.
void write_weights_csv(std::ostream& out, const WeightReport& report);
WeightReport read_weights_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Policy comparison

enum class Policy { Popularity, PprProxy, CprRule, CprMixtureOne, CprMixtureSelected, Oracle };

const char* to_string(Policy policy);

struct PolicyOptions {
    std::size_t sends = 100000;      // per policy
    std::size_t population = 4000;   // (user, anchor) pairs sends are drawn from
    CandidateFilter candidates{0.0, 0.1, 20};
    std::uint64_t seed = 11;
    std::size_t aa_repeats = 200;    // A/A runs for the uniformity check
};

struct PolicyRow {
    Policy policy = Policy::Popularity;
    std::size_t sends = 0;
    std::size_t opens = 0;
    double open_rate = 0.0;
    double expected_open_rate = 0.0;  // mean true open probability of the picks
    double relative = 0.0;            // open rate / popularity open rate
    double p_value = 1.0;             // vs the previous row; 1 for the first
};

struct PolicyReport {
    std::vector<PolicyRow> rows;  // popularity, ppr, cpr-rule, mm(1), mm(k), oracle
    std::size_t population = 0;
    double aa_relative = 1.0;     // second popularity arm vs the first
    double aa_p_value = 1.0;
    std::vector<double> aa_p_values;
    double aa_ks_statistic = 0.0;
    double aa_ks_critical = 0.0;  // 1% level

    const PolicyRow& row(Policy policy) const;
};

// Simulates sends for every policy against the world's planted truth. Both
// models must use `world.schema` with the full assignment vector.
PolicyReport policy_compare(const SyntheticWorld& world, const FeatureStore& store, const MixtureParams& single_context,
                            const MixtureParams& selected, const PolicyOptions& options);

// policy,sends,opens,open_rate,expected_open_rate,relative,p_value
void write_policy_csv(std::ostream& out, const PolicyReport& report);

}  // namespace pushmix
