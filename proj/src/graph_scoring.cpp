#include "pushmix/graph_scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace pushmix {

void BipartiteGraph::add(const std::string& user, const std::string& node, std::int64_t timestamp) {
    if (timestamp <= 0) {
        throw std::invalid_argument("graph timestamps must be positive");
    }
    auto& nodes = by_user_[user];
    auto [it, inserted] = nodes.try_emplace(node, timestamp);
    if (inserted) {
        ++degree_[node];
        ++entries_;
    } else if (timestamp < it->second) {
        it->second = timestamp;
    }
}

std::optional<std::int64_t> BipartiteGraph::timestamp(const std::string& user, const std::string& node) const {
    auto u = by_user_.find(user);
    if (u == by_user_.end()) {
        return std::nullopt;
    }
    auto n = u->second.find(node);
    if (n == u->second.end()) {
        return std::nullopt;
    }
    return n->second;
}

std::size_t BipartiteGraph::degree(const std::string& node) const {
    auto it = degree_.find(node);
    return it == degree_.end() ? 0 : it->second;
}

BipartiteGraph build_graph(std::span<const InteractionEvent> events, EventKind edge_kind, NodeKind node_kind) {
    BipartiteGraph graph(node_kind, edge_kind);
    for (const auto& e : events) {
        if (e.kind != edge_kind) {
            continue;
        }
        graph.add(e.user_id, node_kind == NodeKind::Product ? e.item_id : e.category_id, e.timestamp);
    }
    return graph;
}

double ScoreTable::get(const std::string& i, const std::string& j) const {
    auto it = scores.find({i, j});
    return it == scores.end() ? 0.0 : it->second;
}

namespace {

// Dense ids in lexicographic order, so (id_i, id_j) order matches (i, j).
class NodeIndex {
public:
    explicit NodeIndex(const std::set<std::string>& names) : names_(names.begin(), names.end()) {
        ids_.reserve(names_.size());
        for (std::size_t k = 0; k < names_.size(); ++k) {
            ids_.emplace(names_[k], static_cast<std::uint32_t>(k));
        }
    }
    std::uint32_t id(const std::string& name) const { return ids_.at(name); }
    const std::string& name(std::uint32_t id) const { return names_[id]; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

using PairCounts = std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t>;

struct TimedNode {
    std::uint32_t id;
    std::int64_t t;
};

std::vector<TimedNode> timed_nodes(const BipartiteGraph::NodeTimes& nodes, const NodeIndex& index) {
    std::vector<TimedNode> out;
    out.reserve(nodes.size());
    for (const auto& [name, t] : nodes) {
        out.push_back({index.id(name), t});
    }
    return out;
}

ScoreTable normalize(const PairCounts& counts, const NodeIndex& index, const BipartiteGraph& left,
                     const BipartiteGraph& right, ScoreKind kind, NodeKind node_kind) {
    ScoreTable table;
    table.kind = kind;
    table.node_kind = node_kind;
    for (const auto& [key, count] : counts) {
        const auto& i = index.name(key.first);
        const auto& j = index.name(key.second);
        double denom = std::sqrt(static_cast<double>(left.degree(i)) * static_cast<double>(right.degree(j)));
        table.scores.emplace_hint(table.scores.end(), ScoreTable::Key{i, j}, static_cast<double>(count) / denom);
    }
    return table;
}

std::set<std::string> node_names(const BipartiteGraph& a, const BipartiteGraph& b) {
    std::set<std::string> names;
    for (const auto& [node, deg] : a.degrees()) {
        names.insert(node);
    }
    for (const auto& [node, deg] : b.degrees()) {
        names.insert(node);
    }
    return names;
}

void check_csv_id(const std::string& id) {
    if (id.find_first_of(",\"\r\n") != std::string::npos) {
        throw std::invalid_argument("node id not representable in CSV: " + id);
    }
}

double parse_real(const std::string& field) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw std::invalid_argument("bad number in score CSV: " + field);
    }
    return value;
}

}  // namespace

ScoreTable co_purchase_scores(const BipartiteGraph& purchases) {
    if (purchases.edge_kind() != EventKind::Purchase) {
        throw std::invalid_argument("co_purchase_scores needs a purchase graph");
    }
    NodeIndex index(node_names(purchases, purchases));
    PairCounts counts;
    for (const auto& [user, nodes] : purchases.users()) {
        auto timed = timed_nodes(nodes, index);
        for (const auto& a : timed) {
            for (const auto& b : timed) {
                if (b.t > a.t) {
                    ++counts[{a.id, b.id}];
                }
            }
        }
    }
    return normalize(counts, index, purchases, purchases, ScoreKind::CoPurchase, purchases.node_kind());
}

ScoreTable substitutivity_scores(const BipartiteGraph& views, const BipartiteGraph& purchases) {
    if (views.edge_kind() != EventKind::View || purchases.edge_kind() != EventKind::Purchase) {
        throw std::invalid_argument("substitutivity_scores needs a view graph and a purchase graph");
    }
    if (views.node_kind() != purchases.node_kind()) {
        throw std::invalid_argument("substitutivity_scores: graphs have different node kinds");
    }
    NodeIndex index(node_names(views, purchases));
    PairCounts counts;
    for (const auto& [user, viewed] : views.users()) {
        auto bought = purchases.users().find(user);
        if (bought == purchases.users().end()) {
            continue;
        }
        auto timed_views = timed_nodes(viewed, index);
        auto timed_buys = timed_nodes(bought->second, index);
        for (const auto& v : timed_views) {
            for (const auto& b : timed_buys) {
                if (b.t > v.t) {
                    ++counts[{v.id, b.id}];
                }
            }
        }
    }
    return normalize(counts, index, views, purchases, ScoreKind::Substitutivity, views.node_kind());
}

ScoreTable complementarity_scores(const ScoreTable& co_purchase, const ScoreTable& substitutivity) {
    if (co_purchase.kind != ScoreKind::CoPurchase || substitutivity.kind != ScoreKind::Substitutivity) {
        throw std::invalid_argument("complementarity_scores expects a co-purchase and a substitutivity table");
    }
    if (co_purchase.node_kind != substitutivity.node_kind) {
        throw std::invalid_argument("complementarity_scores: mismatched node kinds");
    }
    ScoreTable s;
    s.kind = ScoreKind::Complementarity;
    s.node_kind = co_purchase.node_kind;
    for (const auto& [key, p] : co_purchase.scores) {
        s.scores.emplace(key, p);
    }
    for (const auto& [key, q] : substitutivity.scores) {
        s.scores[key] -= q;
    }
    return s;
}

PairScores score_pairs(std::span<const InteractionEvent> events, NodeKind node_kind) {
    auto purchases = build_graph(events, EventKind::Purchase, node_kind);
    auto views = build_graph(events, EventKind::View, node_kind);
    PairScores out;
    out.co_purchase = co_purchase_scores(purchases);
    out.substitutivity = substitutivity_scores(views, purchases);
    out.complementarity = complementarity_scores(out.co_purchase, out.substitutivity);
    return out;
}

std::vector<CandidatePair> select_candidates(const PairScores& scores, const std::string& anchor,
                                             const CandidateFilter& filter) {
    if (filter.top_n < 1) {
        throw std::invalid_argument("select_candidates: top_n must be at least 1");
    }
    std::vector<CandidatePair> out;
    const auto& table = scores.complementarity.scores;
    for (auto it = table.lower_bound({anchor, std::string()}); it != table.end() && it->first.first == anchor; ++it) {
        const auto& candidate = it->first.second;
        double q = scores.substitutivity.get(anchor, candidate);
        if (it->second >= filter.min_s && q <= filter.max_q) {
            out.push_back({anchor, candidate, it->second, scores.co_purchase.get(anchor, candidate), q});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const CandidatePair& a, const CandidatePair& b) {
        if (a.complementarity != b.complementarity) {
            return a.complementarity > b.complementarity;
        }
        return a.candidate < b.candidate;
    });
    if (out.size() > filter.top_n) {
        out.resize(filter.top_n);
    }
    return out;
}

void write_scores_csv(std::ostream& out, const PairScores& scores) {
    std::set<ScoreTable::Key> keys;
    for (const auto* table : {&scores.co_purchase, &scores.substitutivity, &scores.complementarity}) {
        for (const auto& [key, value] : table->scores) {
            keys.insert(key);
        }
    }
    out << "i,j,p,q,s\n";
    char buf[96];
    for (const auto& key : keys) {
        check_csv_id(key.first);
        check_csv_id(key.second);
        double p = scores.co_purchase.get(key.first, key.second);
        double q = scores.substitutivity.get(key.first, key.second);
        double s = scores.complementarity.get(key.first, key.second);
        std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g", p, q, s);
        out << key.first << ',' << key.second << ',' << buf << '\n';
    }
}

PairScores read_scores_csv(std::istream& in, NodeKind node_kind) {
    PairScores scores;
    scores.co_purchase.kind = ScoreKind::CoPurchase;
    scores.substitutivity.kind = ScoreKind::Substitutivity;
    scores.complementarity.kind = ScoreKind::Complementarity;
    scores.co_purchase.node_kind = scores.substitutivity.node_kind = scores.complementarity.node_kind = node_kind;

    std::string line;
    if (!std::getline(in, line) || (line != "i,j,p,q,s" && line != "i,j,p,q,s\r")) {
        throw std::runtime_error("score CSV must start with header i,j,p,q,s");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 5) {
            throw std::runtime_error("score CSV line " + std::to_string(lineno) + ": expected 5 fields");
        }
        ScoreTable::Key key{fields[0], fields[1]};
        double p = parse_real(fields[2]);
        double q = parse_real(fields[3]);
        double s = parse_real(fields[4]);
        if (p != 0.0) {
            scores.co_purchase.scores[key] = p;
        }
        if (q != 0.0) {
            scores.substitutivity.scores[key] = q;
        }
        scores.complementarity.scores[key] = s;
    }
    return scores;
}

}  // namespace pushmix
