#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pushmix/features.hpp"
#include "pushmix/graph_scoring.hpp"
#include "pushmix/mixture.hpp"

namespace pushmix {

struct RankedCandidate {
    std::string item_id;
    double open_rate = 0.0;
    double complementarity = 0.0;
    int rank = 0;  // 1-based
};

struct RankOutcome {
    std::vector<RankedCandidate> ranked;
    bool cold_user = false;
};

struct RankOptions {
    CandidateFilter candidates{};  // pool drawn from the complementarity table
    std::size_t top_n = 1;
};

// Orders scored candidates by open rate descending, then item id ascending,
// truncates to top_n and assigns ranks.
void order_candidates(std::vector<RankedCandidate>& scored, std::size_t top_n);

// Scores the complementary candidates of `anchor_item_id` for one user. The
// user-slot part of the assignment logits is computed once and shared across
// candidates. Unknown users are scored with zeroed user slots and flagged.
RankOutcome rank(const std::string& user_id, const std::string& anchor_item_id, const MixtureParams& params,
                 const FeatureStore& store, const FeatureSchema& schema, const RankOptions& options);

// Same, over an explicit candidate list (ids absent from the store are skipped).
RankOutcome rank_items(const std::string& user_id, const std::string& anchor_item_id,
                       std::span<const std::string> candidates, const MixtureParams& params, const FeatureStore& store,
                       const FeatureSchema& schema, std::size_t top_n);

struct RankPair {
    std::string user_id;
    std::string anchor_item_id;
};

struct BatchRow {
    RankPair pair;
    std::vector<RankedCandidate> ranked;
    bool cold_user = false;
    std::string error;  // non-empty when the pair failed
};

std::vector<BatchRow> batch_rank(std::span<const RankPair> pairs, const MixtureParams& params,
                                 const FeatureStore& store, const FeatureSchema& schema, const RankOptions& options);

// Keeps at most `max_per_user` rows per user, in input order.
std::vector<BatchRow> cap_per_user(std::vector<BatchRow> rows, std::size_t max_per_user);

// One line per ranked candidate:
// {user_id, anchor_item_id, pushed_item_id, predicted_open_rate, s, rank}
void write_rankings(std::ostream& out, std::span<const BatchRow> rows);

std::vector<RankPair> read_rank_pairs(std::istream& in);

}  // namespace pushmix
