#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pushmix/ingestion.hpp"

namespace pushmix {

enum class NodeKind { Product, Category };

// Binarized user-node graph. Each (user, node) pair keeps the timestamp of
// its earliest matching event.
class BipartiteGraph {
public:
    using NodeTimes = std::map<std::string, std::int64_t>;

    BipartiteGraph(NodeKind node_kind, EventKind edge_kind) : node_kind_(node_kind), edge_kind_(edge_kind) {}

    NodeKind node_kind() const noexcept { return node_kind_; }
    EventKind edge_kind() const noexcept { return edge_kind_; }

    void add(const std::string& user, const std::string& node, std::int64_t timestamp);

    std::optional<std::int64_t> timestamp(const std::string& user, const std::string& node) const;
    // Number of distinct users connected to the node.
    std::size_t degree(const std::string& node) const;
    std::size_t entry_count() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_ == 0; }

    const std::map<std::string, NodeTimes>& users() const noexcept { return by_user_; }
    const std::map<std::string, std::size_t>& degrees() const noexcept { return degree_; }

private:
    NodeKind node_kind_;
    EventKind edge_kind_;
    std::map<std::string, NodeTimes> by_user_;
    std::map<std::string, std::size_t> degree_;
    std::size_t entries_ = 0;
};

BipartiteGraph build_graph(std::span<const InteractionEvent> events, EventKind edge_kind, NodeKind node_kind);

enum class ScoreKind { CoPurchase, Substitutivity, Complementarity };

// Sparse directional pair scores. Absent pairs read as 0.
struct ScoreTable {
    using Key = std::pair<std::string, std::string>;

    ScoreKind kind = ScoreKind::CoPurchase;
    NodeKind node_kind = NodeKind::Product;
    std::map<Key, double> scores;

    double get(const std::string& i, const std::string& j) const;
    std::size_t size() const noexcept { return scores.size(); }
    bool empty() const noexcept { return scores.empty(); }
};

// p_ij = #{u : t(A_uj) > t(A_ui)} / sqrt(deg(i) deg(j))
ScoreTable co_purchase_scores(const BipartiteGraph& purchases);

// q_ij = #{u : viewed i, bought j, t(A_uj) > t(B_ui)} / sqrt(viewdeg(i) buydeg(j))
ScoreTable substitutivity_scores(const BipartiteGraph& views, const BipartiteGraph& purchases);

// s_ij = p_ij - q_ij over the union of keys.
ScoreTable complementarity_scores(const ScoreTable& co_purchase, const ScoreTable& substitutivity);

struct PairScores {
    ScoreTable co_purchase;
    ScoreTable substitutivity;
    ScoreTable complementarity;

    NodeKind node_kind() const noexcept { return complementarity.node_kind; }
};

// Builds both graphs at the requested level and computes p, q and s.
PairScores score_pairs(std::span<const InteractionEvent> events, NodeKind node_kind);

struct CandidatePair {
    std::string anchor;
    std::string candidate;
    double complementarity = 0.0;
    double co_purchase = 0.0;
    double substitutivity = 0.0;
};

struct CandidateFilter {
    double min_s = 0.0;
    double max_q = 0.1;
    std::size_t top_n = std::numeric_limits<std::size_t>::max();
};

// Pairs (anchor, j) with s >= min_s and q <= max_q, ordered by s descending
// then candidate id ascending. Unknown anchors give an empty list.
std::vector<CandidatePair> select_candidates(const PairScores& scores, const std::string& anchor,
                                             const CandidateFilter& filter);

// CSV with header `i,j,p,q,s`, rows sorted by (i, j), 6 significant digits.
void write_scores_csv(std::ostream& out, const PairScores& scores);
PairScores read_scores_csv(std::istream& in, NodeKind node_kind);

}  // namespace pushmix
