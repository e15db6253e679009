#include "pushmix/ranker.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pushmix {
namespace {

// Schema with one user slot, one item-complementarity slot and the user-item
// preference; small enough to set parameters by hand.
FeatureSchema tiny_schema() {
    return FeatureSchema({{FeatureKind::UserActiveScore, Window::None, 0, {}},
                          {FeatureKind::UserItemPreference, Window::Day28, 0, {}},
                          {FeatureKind::ItemComplementarity, Window::None, 0, {}}});
}

// Anchor "a" with complements "b" (s = 1) and "c" (s = 0.5).
std::vector<InteractionEvent> fixture_log() {
    std::vector<InteractionEvent> log;
    auto buy = [&](const std::string& u, const std::string& i, std::int64_t t) {
        log.push_back({u, i, "cat_" + i, EventKind::Purchase, t});
    };
    buy("u1", "a", 1);
    buy("u1", "b", 2);
    buy("u1", "c", 3);
    buy("u2", "a", 4);
    buy("u2", "b", 5);
    buy("u3", "c", 6);
    log.push_back({"u3", "b", "cat_b", EventKind::View, 7});
    return log;
}

constexpr std::int64_t kRef = 100;

MixtureParams one_context(const FeatureSchema& schema, double complementarity_weight) {
    auto p = MixtureParams::zeros(1, static_cast<Eigen::Index>(schema.assignment_dims()),
                                  static_cast<Eigen::Index>(schema.prediction_dims()));
    auto col = schema.prediction_column({FeatureKind::ItemComplementarity, Window::None, 0, {}});
    p.psi(0, static_cast<Eigen::Index>(*col)) = complementarity_weight;
    p.schema_hash = schema.hash();
    return p;
}

TEST(Rank, SingleCandidateIsFirst) {
    auto schema = tiny_schema();
    auto store = FeatureStore::build(fixture_log(), kRef);
    std::vector<std::string> ids{"c"};
    auto out = rank_items("u1", "a", ids, one_context(schema, 2.0), store, schema, 5);
    ASSERT_EQ(out.ranked.size(), 1u);
    EXPECT_EQ(out.ranked[0].rank, 1);
    EXPECT_FALSE(out.cold_user);
}

TEST(Rank, NegativeComplementarityWeightPrefersHigherScore) {
    auto schema = tiny_schema();
    auto store = FeatureStore::build(fixture_log(), kRef);
    RankOptions options;
    options.candidates = {-1.0, 1.0, 100};
    options.top_n = 2;
    auto out = rank("u2", "a", one_context(schema, -3.0), store, schema, options);
    ASSERT_EQ(out.ranked.size(), 2u);
    EXPECT_EQ(out.ranked[0].item_id, "b");
    EXPECT_GT(out.ranked[0].complementarity, out.ranked[1].complementarity);
    EXPECT_GT(out.ranked[0].open_rate, out.ranked[1].open_rate);
    // positive weight flips the order under the expert sign convention
    auto flipped = rank("u2", "a", one_context(schema, 3.0), store, schema, options);
    EXPECT_EQ(flipped.ranked[0].item_id, "c");
}

TEST(Rank, ConstantModelOrdersById) {
    auto schema = tiny_schema();
    auto store = FeatureStore::build(fixture_log(), kRef);
    std::vector<std::string> ids{"c", "a", "b"};
    auto out = rank_items("u1", "a", ids, one_context(schema, 0.0), store, schema, 10);
    ASSERT_EQ(out.ranked.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(out.ranked[k].open_rate, 0.5);
        EXPECT_EQ(out.ranked[k].rank, static_cast<int>(k) + 1);
    }
    EXPECT_EQ(out.ranked[0].item_id, "a");
    EXPECT_EQ(out.ranked[1].item_id, "b");
    EXPECT_EQ(out.ranked[2].item_id, "c");
}

TEST(Rank, ColdUserIsFlaggedNotDropped) {
    auto schema = tiny_schema();
    auto store = FeatureStore::build(fixture_log(), kRef);
    RankOptions options;
    options.candidates = {-1.0, 1.0, 100};
    auto out = rank("stranger", "a", one_context(schema, -1.0), store, schema, options);
    EXPECT_TRUE(out.cold_user);
    EXPECT_EQ(out.ranked.size(), 1u);
}

TEST(Rank, SchemaMismatchIsRejected) {
    auto schema = tiny_schema();
    auto store = FeatureStore::build(fixture_log(), kRef);
    auto params = one_context(schema, 1.0);
    params.schema_hash ^= 1;
    std::vector<std::string> ids{"b"};
    EXPECT_THROW(rank_items("u1", "a", ids, params, store, schema, 1), std::invalid_argument);
    auto wrong = MixtureParams::zeros(1, 2, 2);
    EXPECT_THROW(rank_items("u1", "a", ids, wrong, store, schema, 1), std::invalid_argument);
}

TEST(RankProperties, Top1IsArgmaxAndPermutationInvariant) {
    auto schema = FeatureSchema::standard(2);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    std::vector<InteractionEvent> log;
    std::uniform_int_distribution<int> item(0, 7);
    std::uniform_int_distribution<int> user(0, 9);
    for (int k = 0; k < 200; ++k) {
        int it = item(rng);
        log.push_back({"u" + std::to_string(user(rng)), "i" + std::to_string(it), "c" + std::to_string(it % 3),
                       k % 3 ? EventKind::View : EventKind::Purchase, 1 + k});
    }
    auto store = FeatureStore::build(log, 1000);
    for (int trial = 0; trial < 30; ++trial) {
        MixtureParams params;
        params.theta = Eigen::MatrixXd(1, static_cast<Eigen::Index>(schema.assignment_dims()));
        params.psi = Eigen::MatrixXd(2, static_cast<Eigen::Index>(schema.prediction_dims()));
        for (Eigen::Index k = 0; k < params.theta.size(); ++k) params.theta.data()[k] = n(rng);
        for (Eigen::Index k = 0; k < params.psi.size(); ++k) params.psi.data()[k] = n(rng);
        std::vector<std::string> ids;
        for (int k = 0; k < 8; ++k) ids.push_back("i" + std::to_string(k));
        std::shuffle(ids.begin(), ids.end(), rng);
        auto user_id = "u" + std::to_string(trial % 10);
        auto out = rank_items(user_id, "i0", ids, params, store, schema, ids.size());
        std::reverse(ids.begin(), ids.end());
        auto again = rank_items(user_id, "i0", ids, params, store, schema, ids.size());
        ASSERT_EQ(out.ranked.size(), again.ranked.size());
        for (std::size_t k = 0; k < out.ranked.size(); ++k) {
            EXPECT_EQ(out.ranked[k].item_id, again.ranked[k].item_id);
        }
        // exhaustive argmax by direct scoring
        std::string best;
        double best_rate = -1.0;
        Eigen::VectorXd x_hat(static_cast<Eigen::Index>(schema.assignment_dims()));
        Eigen::VectorXd x(static_cast<Eigen::Index>(schema.prediction_dims()));
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) {
            fill_features(store, schema, user_id, "i0", id, x_hat, x);
            double rate = predict_open_rate(params, x_hat, x);
            if (rate > best_rate) {
                best_rate = rate;
                best = id;
            }
        }
        EXPECT_EQ(out.ranked[0].item_id, best);
        EXPECT_EQ(out.ranked[0].open_rate, best_rate);
    }
}

TEST(RankProperties, MonotoneTransformKeepsOrder) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RankedCandidate> scored;
        for (int k = 0; k < 6; ++k) scored.push_back({"i" + std::to_string(k), u(rng), 0.0, 0});
        auto transformed = scored;
        for (auto& c : transformed) c.open_rate = std::log(c.open_rate / (1.0 - c.open_rate)) * 3.0 + 1.0;
        order_candidates(scored, 6);
        order_candidates(transformed, 6);
        for (std::size_t k = 0; k < scored.size(); ++k) EXPECT_EQ(scored[k].item_id, transformed[k].item_id);
    }
}

TEST(BatchRank, EmptyAndOrder) {
    auto schema = tiny_schema();
    auto store = FeatureStore::build(fixture_log(), kRef);
    auto params = one_context(schema, -1.0);
    RankOptions options;
    options.candidates = {-1.0, 1.0, 100};
    EXPECT_TRUE(batch_rank({}, params, store, schema, options).empty());
    std::vector<RankPair> pairs{{"u2", "a"}, {"u1", "a"}};
    auto rows = batch_rank(pairs, params, store, schema, options);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].pair.user_id, "u2");
    EXPECT_EQ(rows[1].pair.user_id, "u1");
    std::stringstream out;
    write_rankings(out, rows);
    std::string line;
    int lines = 0;
    while (std::getline(out, line)) {
        auto obj = nlohmann::json::parse(line);
        EXPECT_EQ(obj.at("rank").get<int>(), 1);
        EXPECT_TRUE(obj.contains("predicted_open_rate"));
        EXPECT_TRUE(obj.contains("s"));
        ++lines;
    }
    EXPECT_EQ(lines, 2);
}

TEST(BatchRank, ErrorsAreIsolated) {
    auto schema = tiny_schema();
    auto store = FeatureStore::build(fixture_log(), kRef);
    auto params = one_context(schema, -1.0);
    RankOptions options;
    options.candidates = {-1.0, 1.0, 100};
    std::vector<RankPair> pairs{{"u1", "nothing"}, {"u1", "a"}};
    auto rows = batch_rank(pairs, params, store, schema, options);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_FALSE(rows[0].error.empty());
    EXPECT_TRUE(rows[1].error.empty());
    auto capped = cap_per_user(rows, 0);
    ASSERT_EQ(capped.size(), 1u);  // failed rows pass through so they stay reported
}

TEST(BatchRank, MatchesManualScoringOnThreeUsers) {
    auto schema = tiny_schema();
    auto store = FeatureStore::build(fixture_log(), kRef);
    MixtureParams params;
    params.theta = Eigen::MatrixXd(1, static_cast<Eigen::Index>(schema.assignment_dims()));
    params.theta << 2.0, -1.0;
    params.psi = Eigen::MatrixXd(2, static_cast<Eigen::Index>(schema.prediction_dims()));
    params.psi << -2.0, 1.0, 0.3, 1.5, -2.0, -0.2;
    params.schema_hash = schema.hash();
    RankOptions options;
    options.candidates = {-1.0, 1.0, 100};
    options.top_n = 2;
    std::vector<RankPair> pairs{{"u1", "a"}, {"u2", "a"}, {"u3", "a"}};
    auto rows = batch_rank(pairs, params, store, schema, options);
    for (const auto& row : rows) {
        ASSERT_EQ(row.ranked.size(), 2u);
        for (const auto& c : row.ranked) {
            // direct evaluation of the mixture for this (user, candidate)
            double active = store.profile(row.pair.user_id)->active_score;
            double pref = store.user_item_preference(row.pair.user_id, c.item_id, Window::Day28);
            double s = store.item_scores().complementarity.get("a", c.item_id);
            double a0 = 1.0 / (1.0 + std::exp(-(2.0 * active - 1.0)));
            double open0 = 1.0 / (1.0 + std::exp(-2.0 * pref + 1.0 * s + 0.3));
            double open1 = 1.0 / (1.0 + std::exp(1.5 * pref - 2.0 * s - 0.2));
            EXPECT_NEAR(c.open_rate, a0 * open0 + (1.0 - a0) * open1, 1e-14);
        }
        EXPECT_GE(row.ranked[0].open_rate, row.ranked[1].open_rate);
    }
}

TEST(RankPairs, ReadJsonLines) {
    std::istringstream in("{\"user_id\":\"u\",\"anchor_item_id\":\"a\"}\n\n{\"user_id\":\"v\",\"anchor_item_id\":\"b\"}\n");
    auto pairs = read_rank_pairs(in);
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_EQ(pairs[1].anchor_item_id, "b");
}

}  // namespace
}  // namespace pushmix
