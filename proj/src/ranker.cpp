#include "pushmix/ranker.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pushmix {

void order_candidates(std::vector<RankedCandidate>& scored, std::size_t top_n) {
    std::sort(scored.begin(), scored.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.open_rate != b.open_rate) {
            return a.open_rate > b.open_rate;
        }
        return a.item_id < b.item_id;
    });
    if (scored.size() > top_n) {
        scored.resize(top_n);
    }
    for (std::size_t k = 0; k < scored.size(); ++k) {
        scored[k].rank = static_cast<int>(k) + 1;
    }
}

RankOutcome rank_items(const std::string& user_id, const std::string& anchor_item_id,
                       std::span<const std::string> candidates, const MixtureParams& params, const FeatureStore& store,
                       const FeatureSchema& schema, std::size_t top_n) {
    if (top_n < 1) {
        throw std::invalid_argument("rank: top_n must be at least 1");
    }
    if (params.schema_hash != 0 && params.schema_hash != schema.hash()) {
        throw std::invalid_argument("rank: model was trained on a different feature schema");
    }
    if (static_cast<std::size_t>(params.m()) != schema.assignment_dims() ||
        static_cast<std::size_t>(params.n()) != schema.prediction_dims()) {
        throw std::invalid_argument("rank: model dimensions do not match the schema");
    }
    RankOutcome out;
    out.cold_user = store.profile(user_id) == nullptr;
    Eigen::VectorXd x_hat(static_cast<Eigen::Index>(schema.assignment_dims()));
    Eigen::VectorXd x(static_cast<Eigen::Index>(schema.prediction_dims()));
    std::vector<std::string> unique(candidates.begin(), candidates.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (const auto& item : unique) {
        if (store.item(item) == nullptr) {
            continue;
        }
        fill_features(store, schema, user_id, anchor_item_id, item, x_hat, x);
        out.ranked.push_back({item, predict_open_rate(params, x_hat, x),
                              store.item_scores().complementarity.get(anchor_item_id, item), 0});
    }
    order_candidates(out.ranked, top_n);
    return out;
}

RankOutcome rank(const std::string& user_id, const std::string& anchor_item_id, const MixtureParams& params,
                 const FeatureStore& store, const FeatureSchema& schema, const RankOptions& options) {
    auto pool = select_candidates(store.item_scores(), anchor_item_id, options.candidates);
    std::vector<std::string> ids;
    ids.reserve(pool.size());
    for (const auto& c : pool) {
        ids.push_back(c.candidate);
    }
    return rank_items(user_id, anchor_item_id, ids, params, store, schema, options.top_n);
}

std::vector<BatchRow> batch_rank(std::span<const RankPair> pairs, const MixtureParams& params,
                                 const FeatureStore& store, const FeatureSchema& schema, const RankOptions& options) {
    std::vector<BatchRow> rows;
    rows.reserve(pairs.size());
    for (const auto& pair : pairs) {
        BatchRow row;
        row.pair = pair;
        try {
            auto outcome = rank(pair.user_id, pair.anchor_item_id, params, store, schema, options);
            row.ranked = std::move(outcome.ranked);
            row.cold_user = outcome.cold_user;
            if (row.ranked.empty()) {
                row.error = "no candidates";
            }
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<BatchRow> cap_per_user(std::vector<BatchRow> rows, std::size_t max_per_user) {
    std::map<std::string, std::size_t> sent;
    std::vector<BatchRow> kept;
    for (auto& row : rows) {
        if (!row.error.empty()) {
            kept.push_back(std::move(row));
            continue;
        }
        if (sent[row.pair.user_id]++ < max_per_user) {
            kept.push_back(std::move(row));
        }
    }
    return kept;
}

void write_rankings(std::ostream& out, std::span<const BatchRow> rows) {
    for (const auto& row : rows) {
        for (const auto& c : row.ranked) {
            nlohmann::json obj = {{"user_id", row.pair.user_id},
                                  {"anchor_item_id", row.pair.anchor_item_id},
                                  {"pushed_item_id", c.item_id},
                                  {"predicted_open_rate", c.open_rate},
                                  {"s", c.complementarity},
                                  {"rank", c.rank}};
            out << obj.dump() << '\n';
        }
    }
}

std::vector<RankPair> read_rank_pairs(std::istream& in) {
    std::vector<RankPair> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto obj = nlohmann::json::parse(line);
        pairs.push_back({obj.at("user_id").get<std::string>(), obj.at("anchor_item_id").get<std::string>()});
    }
    return pairs;
}

}  // namespace pushmix
