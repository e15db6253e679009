#include "pushmix/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pushmix/kmeans.hpp"

namespace pushmix {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enumerations

const char* to_string(FeatureFamily family) {
    switch (family) {
        case FeatureFamily::User: return "user";
        case FeatureFamily::Product: return "product";
        case FeatureFamily::UserProduct: return "user_product";
        case FeatureFamily::ProductProduct: return "product_product";
    }
    return "?";
}

const char* to_string(Window window) {
    switch (window) {
        case Window::Day1: return "1d";
        case Window::Day2: return "2d";
        case Window::Day7: return "7d";
        case Window::Day28: return "28d";
        case Window::None: return "none";
    }
    return "?";
}

FeatureFamily parse_family(const std::string& text) {
    for (auto f : {FeatureFamily::User, FeatureFamily::Product, FeatureFamily::UserProduct,
                   FeatureFamily::ProductProduct}) {
        if (text == to_string(f)) {
            return f;
        }
    }
    throw std::invalid_argument("unknown feature family '" + text + "'");
}

Window parse_window(const std::string& text) {
    for (auto w : {Window::Day1, Window::Day2, Window::Day7, Window::Day28, Window::None}) {
        if (text == to_string(w)) {
            return w;
        }
    }
    throw std::invalid_argument("unknown window '" + text + "'");
}

int window_index(Window window) {
    switch (window) {
        case Window::Day1: return 0;
        case Window::Day2: return 1;
        case Window::Day7: return 2;
        case Window::Day28: return 3;
        case Window::None: break;
    }
    throw std::invalid_argument("window 'none' has no index");
}

namespace {

constexpr std::array<FeatureKind, 12> kAllKinds{
    FeatureKind::UserCluster,         FeatureKind::UserActiveScore,      FeatureKind::UserDemographic,
    FeatureKind::UserColdStart,       FeatureKind::ProductSales,         FeatureKind::ProductViews,
    FeatureKind::ProductPrice,        FeatureKind::ProductPriceMissing,  FeatureKind::UserItemPreference,
    FeatureKind::UserCategoryPreference, FeatureKind::ItemComplementarity, FeatureKind::CategoryComplementarity,
};

}  // namespace

const char* to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::UserCluster: return "user_cluster";
        case FeatureKind::UserActiveScore: return "user_active_score";
        case FeatureKind::UserDemographic: return "user_demographic";
        case FeatureKind::UserColdStart: return "user_cold_start";
        case FeatureKind::ProductSales: return "product_sales";
        case FeatureKind::ProductViews: return "product_views";
        case FeatureKind::ProductPrice: return "product_price";
        case FeatureKind::ProductPriceMissing: return "product_price_missing";
        case FeatureKind::UserItemPreference: return "user_item_preference";
        case FeatureKind::UserCategoryPreference: return "user_category_preference";
        case FeatureKind::ItemComplementarity: return "item_complementarity";
        case FeatureKind::CategoryComplementarity: return "category_complementarity";
    }
    return "?";
}

FeatureKind parse_feature_kind(const std::string& text) {
    for (auto k : kAllKinds) {
        if (text == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown feature '" + text + "'");
}

FeatureFamily family_of(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::UserCluster:
        case FeatureKind::UserActiveScore:
        case FeatureKind::UserDemographic:
        case FeatureKind::UserColdStart:
            return FeatureFamily::User;
        case FeatureKind::ProductSales:
        case FeatureKind::ProductViews:
        case FeatureKind::ProductPrice:
        case FeatureKind::ProductPriceMissing:
            return FeatureFamily::Product;
        case FeatureKind::UserItemPreference:
        case FeatureKind::UserCategoryPreference:
            return FeatureFamily::UserProduct;
        case FeatureKind::ItemComplementarity:
        case FeatureKind::CategoryComplementarity:
            return FeatureFamily::ProductProduct;
    }
    return FeatureFamily::User;
}

bool is_windowed(FeatureKind kind) {
    return kind == FeatureKind::ProductSales || kind == FeatureKind::ProductViews ||
           kind == FeatureKind::UserItemPreference || kind == FeatureKind::UserCategoryPreference;
}

std::string FeatureSlot::name() const {
    std::string out = to_string(kind);
    if (kind == FeatureKind::UserCluster) {
        out += "[" + std::to_string(index) + "]";
    } else if (kind == FeatureKind::UserDemographic) {
        out += "[" + group + "=" + std::to_string(index) + "]";
    } else if (window != Window::None) {
        out += "[" + std::string(to_string(window)) + "]";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Schema

FeatureSchema::FeatureSchema(std::vector<FeatureSlot> slots) : slots_(std::move(slots)) {
    std::set<std::string> names;
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& slot = slots_[k];
        if (is_windowed(slot.kind) == (slot.window == Window::None)) {
            throw std::invalid_argument("slot " + slot.name() + ": window tag does not match the feature");
        }
        if ((slot.kind == FeatureKind::UserCluster || slot.kind == FeatureKind::UserDemographic) && slot.index < 0) {
            throw std::invalid_argument("slot " + slot.name() + ": negative index");
        }
        if (slot.kind == FeatureKind::UserDemographic && slot.group.empty()) {
            throw std::invalid_argument("demographic slot needs a group");
        }
        if (!names.insert(slot.name()).second) {
            throw std::invalid_argument("duplicate slot " + slot.name());
        }
        auto family = slot.family();
        if (family == FeatureFamily::User || family == FeatureFamily::Product) {
            assignment_.push_back(k);
        }
        if (family != FeatureFamily::User) {
            prediction_.push_back(k);
        }
    }
}

FeatureSchema FeatureSchema::standard(int cluster_count,
                                      const std::vector<std::pair<std::string, int>>& demographic_groups) {
    std::vector<FeatureSlot> slots;
    for (int c = 0; c < cluster_count; ++c) {
        slots.push_back({FeatureKind::UserCluster, Window::None, c, {}});
    }
    slots.push_back({FeatureKind::UserActiveScore, Window::None, 0, {}});
    for (const auto& [group, buckets] : demographic_groups) {
        for (int b = 0; b < buckets; ++b) {
            slots.push_back({FeatureKind::UserDemographic, Window::None, b, group});
        }
    }
    slots.push_back({FeatureKind::UserColdStart, Window::None, 0, {}});
    for (auto w : kWindows) {
        slots.push_back({FeatureKind::ProductSales, w, 0, {}});
    }
    for (auto w : kWindows) {
        slots.push_back({FeatureKind::ProductViews, w, 0, {}});
    }
    slots.push_back({FeatureKind::ProductPrice, Window::None, 0, {}});
    slots.push_back({FeatureKind::ProductPriceMissing, Window::None, 0, {}});
    for (auto w : kWindows) {
        slots.push_back({FeatureKind::UserItemPreference, w, 0, {}});
    }
    for (auto w : kWindows) {
        slots.push_back({FeatureKind::UserCategoryPreference, w, 0, {}});
    }
    slots.push_back({FeatureKind::ItemComplementarity, Window::None, 0, {}});
    slots.push_back({FeatureKind::CategoryComplementarity, Window::None, 0, {}});
    return FeatureSchema(std::move(slots));
}

namespace {

std::vector<std::size_t> columns_for(const std::vector<FeatureSlot>& slots, const std::vector<std::size_t>& members,
                                     std::span<const FeatureFamily> families, bool with_bias) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto fam = slots[members[c]].family();
        if (std::find(families.begin(), families.end(), fam) != families.end()) {
            cols.push_back(c);
        }
    }
    if (with_bias) {
        cols.push_back(members.size());
    }
    return cols;
}

std::optional<std::size_t> column_of(const std::vector<FeatureSlot>& slots, const std::vector<std::size_t>& members,
                                     const FeatureSlot& slot) {
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (slots[members[c]] == slot) {
            return c;
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<std::size_t> FeatureSchema::assignment_columns(std::span<const FeatureFamily> families,
                                                           bool with_bias) const {
    return columns_for(slots_, assignment_, families, with_bias);
}

std::vector<std::size_t> FeatureSchema::prediction_columns(std::span<const FeatureFamily> families,
                                                           bool with_bias) const {
    return columns_for(slots_, prediction_, families, with_bias);
}

std::optional<std::size_t> FeatureSchema::assignment_column(const FeatureSlot& slot) const {
    return column_of(slots_, assignment_, slot);
}

std::optional<std::size_t> FeatureSchema::prediction_column(const FeatureSlot& slot) const {
    return column_of(slots_, prediction_, slot);
}

std::vector<std::string> FeatureSchema::assignment_names() const {
    std::vector<std::string> names;
    for (auto k : assignment_) {
        names.push_back(slots_[k].name());
    }
    names.emplace_back("bias");
    return names;
}

std::vector<std::string> FeatureSchema::prediction_names() const {
    std::vector<std::string> names;
    for (auto k : prediction_) {
        names.push_back(slots_[k].name());
    }
    names.emplace_back("bias");
    return names;
}

std::uint64_t FeatureSchema::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& text) {
        for (unsigned char ch : text) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& slot : slots_) {
        mix(slot.name());
        mix("|");
        mix(to_string(slot.family()));
        mix(";");
    }
    return h;
}

std::string FeatureSchema::to_json() const {
    json slots = json::array();
    for (const auto& slot : slots_) {
        json obj = {{"name", to_string(slot.kind)},
                    {"family", to_string(slot.family())},
                    {"window", to_string(slot.window)}};
        if (slot.kind == FeatureKind::UserCluster || slot.kind == FeatureKind::UserDemographic) {
            obj["index"] = slot.index;
        }
        if (slot.kind == FeatureKind::UserDemographic) {
            obj["group"] = slot.group;
        }
        slots.push_back(std::move(obj));
    }
    json doc = {{"slots", std::move(slots)}, {"hash", format_schema_hash(hash())}};
    return doc.dump(2);
}

FeatureSchema FeatureSchema::from_json(const std::string& text) {
    auto doc = json::parse(text);
    std::vector<FeatureSlot> slots;
    for (const auto& obj : doc.at("slots")) {
        FeatureSlot slot;
        slot.kind = parse_feature_kind(obj.at("name").get<std::string>());
        if (obj.contains("family") && parse_family(obj.at("family").get<std::string>()) != family_of(slot.kind)) {
            throw std::invalid_argument("slot " + std::string(to_string(slot.kind)) + " has the wrong family tag");
        }
        slot.window = parse_window(obj.value("window", std::string("none")));
        slot.index = obj.value("index", 0);
        slot.group = obj.value("group", std::string());
        slots.push_back(std::move(slot));
    }
    return FeatureSchema(std::move(slots));
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open schema " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string format_schema_hash(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::uint64_t parse_schema_hash(const std::string& text) {
    std::size_t used = 0;
    auto value = std::stoull(text, &used, 16);
    if (used != text.size()) {
        throw std::invalid_argument("bad schema hash '" + text + "'");
    }
    return value;
}

// ---------------------------------------------------------------------------
// Feature sources

Eigen::MatrixXd user_category_matrix(std::span<const InteractionEvent> events, std::int64_t start, std::int64_t end,
                                     const std::vector<std::string>& users,
                                     const std::vector<std::string>& categories) {
    std::unordered_map<std::string, Eigen::Index> user_row;
    std::unordered_map<std::string, Eigen::Index> category_col;
    for (std::size_t k = 0; k < users.size(); ++k) {
        user_row.emplace(users[k], static_cast<Eigen::Index>(k));
    }
    for (std::size_t k = 0; k < categories.size(); ++k) {
        category_col.emplace(categories[k], static_cast<Eigen::Index>(k));
    }
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(users.size()),
                                                   static_cast<Eigen::Index>(categories.size()));
    for (const auto& e : events) {
        if (e.kind != EventKind::Purchase || e.timestamp < start || e.timestamp >= end) {
            continue;
        }
        auto u = user_row.find(e.user_id);
        auto c = category_col.find(e.category_id);
        if (u != user_row.end() && c != category_col.end()) {
            counts(u->second, c->second) += 1.0;
        }
    }
    for (Eigen::Index r = 0; r < counts.rows(); ++r) {
        double norm = counts.row(r).norm();
        if (norm > 0.0) {
            counts.row(r) /= norm;
        }
    }
    return counts;
}

std::map<std::string, double> active_scores(std::span<const InteractionEvent> events, std::int64_t start,
                                            std::int64_t end) {
    std::map<std::string, std::size_t> counts;
    for (const auto& e : events) {
        if (e.timestamp >= start && e.timestamp < end) {
            ++counts[e.user_id];
        }
    }
    std::vector<std::pair<std::size_t, std::string>> order;
    order.reserve(counts.size());
    for (const auto& [user, count] : counts) {
        order.emplace_back(count, user);
    }
    std::sort(order.begin(), order.end());
    std::map<std::string, double> scores;
    const double n = static_cast<double>(order.size());
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo;
        while (hi < order.size() && order[hi].first == order[lo].first) {
            ++hi;
        }
        // ranks lo+1..hi share their average
        double rank = (static_cast<double>(lo + 1) + static_cast<double>(hi)) / 2.0;
        for (std::size_t k = lo; k < hi; ++k) {
            scores[order[k].second] = rank / n;
        }
        lo = hi;
    }
    return scores;
}

double active_score(std::span<const InteractionEvent> events, const std::string& user_id, std::int64_t start,
                    std::int64_t end) {
    if (start >= end) {
        throw std::invalid_argument("active_score: empty period");
    }
    auto scores = active_scores(events, start, end);
    auto it = scores.find(user_id);
    return it == scores.end() ? 0.0 : it->second;
}

namespace {

double event_weight(EventKind kind) {
    return kind == EventKind::Purchase ? kPurchaseWeight : kViewWeight;
}

// Adds `amount` to every window containing the timestamp.
template <class Array>
void add_windowed(Array& slots, std::int64_t timestamp, std::int64_t ref_time, double amount) {
    if (timestamp >= ref_time) {
        return;
    }
    for (std::size_t w = 0; w < kWindowDays.size(); ++w) {
        if (timestamp >= ref_time - kWindowDays[w] * kSecondsPerDay) {
            slots[w] += amount;
        }
    }
}

double log_normalized(double value, double max) {
    if (value <= 0.0 || max <= 0.0) {
        return 0.0;
    }
    return std::log1p(value) / std::log1p(max);
}

std::string pair_key(const std::string& a, const std::string& b) {
    std::string key;
    key.reserve(a.size() + b.size() + 1);
    key += a;
    key += '\x1f';
    key += b;
    return key;
}

}  // namespace

std::array<double, 4> preference_scores(std::span<const InteractionEvent> events, const std::string& user_id,
                                        const std::string& node_id, PreferenceLevel level, std::int64_t ref_time) {
    std::map<std::pair<std::string, std::string>, std::array<double, 4>> weighted;
    for (const auto& e : events) {
        const auto& node = level == PreferenceLevel::Item ? e.item_id : e.category_id;
        add_windowed(weighted[{e.user_id, node}], e.timestamp, ref_time, event_weight(e.kind));
    }
    std::array<double, 4> max{};
    for (const auto& [key, counts] : weighted) {
        for (std::size_t w = 0; w < 4; ++w) {
            max[w] = std::max(max[w], counts[w]);
        }
    }
    std::array<double, 4> out{};
    auto it = weighted.find({user_id, node_id});
    if (it != weighted.end()) {
        for (std::size_t w = 0; w < 4; ++w) {
            out[w] = log_normalized(it->second[w], max[w]);
        }
    }
    return out;
}

std::map<std::string, ItemAggregates> product_aggregates(std::span<const InteractionEvent> events,
                                                         std::int64_t ref_time,
                                                         const std::map<std::string, double>& prices) {
    std::map<std::string, std::array<double, 4>> sales;
    std::map<std::string, std::array<double, 4>> views;
    for (const auto& e : events) {
        if (e.timestamp >= ref_time) {
            continue;
        }
        // register the item even when it falls outside every window
        sales.try_emplace(e.item_id);
        views.try_emplace(e.item_id);
        add_windowed(e.kind == EventKind::Purchase ? sales[e.item_id] : views[e.item_id], e.timestamp, ref_time, 1.0);
    }
    for (const auto& [item, price] : prices) {
        sales.try_emplace(item);
        views.try_emplace(item);
    }
    std::array<double, 4> max_sales{};
    std::array<double, 4> max_views{};
    for (const auto& [item, counts] : sales) {
        for (std::size_t w = 0; w < 4; ++w) {
            max_sales[w] = std::max(max_sales[w], counts[w]);
            max_views[w] = std::max(max_views[w], views[item][w]);
        }
    }
    double max_price = 0.0;
    for (const auto& [item, price] : prices) {
        if (!(price >= 0.0) || !std::isfinite(price)) {
            throw std::invalid_argument("price for " + item + " must be finite and non-negative");
        }
        max_price = std::max(max_price, price);
    }
    std::map<std::string, ItemAggregates> out;
    for (const auto& [item, counts] : sales) {
        ItemAggregates agg;
        for (std::size_t w = 0; w < 4; ++w) {
            agg.sales[w] = log_normalized(counts[w], max_sales[w]);
            agg.views[w] = log_normalized(views[item][w], max_views[w]);
        }
        auto p = prices.find(item);
        if (p != prices.end()) {
            agg.price = log_normalized(p->second, max_price);
            agg.price_missing = 0.0;
        }
        out.emplace(item, agg);
    }
    return out;
}

Catalog read_catalog(std::istream& in) {
    Catalog catalog;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto obj = json::parse(line);
        auto item = obj.at("item_id").get<std::string>();
        if (obj.contains("price") && !obj["price"].is_null()) {
            catalog.prices[item] = obj["price"].get<double>();
        }
        if (obj.contains("category_id")) {
            catalog.categories[item] = obj["category_id"].get<std::string>();
        }
    }
    return catalog;
}

DemographicTable read_demographics(std::istream& in) {
    DemographicTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto obj = json::parse(line);
        auto user = obj.at("user_id").get<std::string>();
        auto& groups = table[user];
        for (const auto& [key, value] : obj.items()) {
            if (key != "user_id") {
                groups[key] = value.get<int>();
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// FeatureStore

FeatureStore FeatureStore::build(std::span<const InteractionEvent> events, std::int64_t ref_time,
                                 const FeatureConfig& config, const Catalog& catalog,
                                 const DemographicTable& demographics) {
    std::vector<InteractionEvent> history;
    for (const auto& e : events) {
        if (e.timestamp < ref_time) {
            history.push_back(e);
        }
    }
    auto item_scores = score_pairs(history, NodeKind::Product);
    return build(history, ref_time, config, catalog, demographics, std::move(item_scores));
}

FeatureStore FeatureStore::build(std::span<const InteractionEvent> events, std::int64_t ref_time,
                                 const FeatureConfig& config, const Catalog& catalog,
                                 const DemographicTable& demographics, PairScores item_scores) {
    if (config.cluster_count < 1) {
        throw std::invalid_argument("cluster_count must be at least 1");
    }
    std::vector<InteractionEvent> history;
    for (const auto& e : events) {
        if (e.timestamp < ref_time) {
            history.push_back(e);
        }
    }

    FeatureStore store;
    store.ref_time_ = ref_time;
    store.item_scores_ = std::move(item_scores);
    store.category_scores_ = score_pairs(history, NodeKind::Category);

    std::set<std::string> users;
    std::set<std::string> categories;
    for (const auto& e : history) {
        users.insert(e.user_id);
        categories.insert(e.category_id);
        store.item_category_.try_emplace(e.item_id, e.category_id);
    }
    for (const auto& [item, category] : catalog.categories) {
        store.item_category_.try_emplace(item, category);
    }

    // User profiles: k-means clusters over the 28-day category mix.
    const std::int64_t period_start = ref_time - kWindowDays.back() * kSecondsPerDay;
    std::vector<std::string> user_list(users.begin(), users.end());
    std::vector<std::string> category_list(categories.begin(), categories.end());
    auto activity = active_scores(history, period_start, ref_time);
    std::vector<int> clusters(user_list.size(), -1);
    if (!user_list.empty()) {
        auto matrix = user_category_matrix(history, period_start, ref_time, user_list, category_list);
        int k = static_cast<int>(std::min<std::size_t>(config.cluster_count, distinct_rows(matrix)));
        auto fit = kmeans(matrix, k, config.seed, config.kmeans_max_iter);
        clusters = fit.assignment;
        store.cluster_count_ = k;
    }
    for (std::size_t u = 0; u < user_list.size(); ++u) {
        UserProfile profile;
        profile.cluster_id = clusters[u];
        auto a = activity.find(user_list[u]);
        profile.active_score = a == activity.end() ? 0.0 : a->second;
        auto d = demographics.find(user_list[u]);
        if (d != demographics.end()) {
            profile.demographics = d->second;
        }
        store.profiles_.emplace(user_list[u], std::move(profile));
    }

    store.items_ = product_aggregates(history, ref_time, catalog.prices);
    for (const auto& [item, category] : catalog.categories) {
        store.items_.try_emplace(item);
    }

    for (const auto& e : history) {
        auto w = event_weight(e.kind);
        add_windowed(store.item_pref_.weighted[pair_key(e.user_id, e.item_id)], e.timestamp, ref_time, w);
        add_windowed(store.category_pref_.weighted[pair_key(e.user_id, e.category_id)], e.timestamp, ref_time, w);
    }
    for (auto* counts : {&store.item_pref_, &store.category_pref_}) {
        for (const auto& [key, values] : counts->weighted) {
            for (std::size_t w = 0; w < 4; ++w) {
                counts->max[w] = std::max(counts->max[w], values[w]);
            }
        }
    }
    return store;
}

const UserProfile* FeatureStore::profile(const std::string& user_id) const {
    auto it = profiles_.find(user_id);
    return it == profiles_.end() ? nullptr : &it->second;
}

const ItemAggregates* FeatureStore::item(const std::string& item_id) const {
    auto it = items_.find(item_id);
    return it == items_.end() ? nullptr : &it->second;
}

std::optional<std::string> FeatureStore::category_of(const std::string& item_id) const {
    auto it = item_category_.find(item_id);
    if (it == item_category_.end()) {
        return std::nullopt;
    }
    return it->second;
}

double FeatureStore::preference(const WindowedCounts& counts, const std::string& user_id, const std::string& node,
                                Window window) const {
    auto w = static_cast<std::size_t>(window_index(window));
    auto it = counts.weighted.find(pair_key(user_id, node));
    if (it == counts.weighted.end()) {
        return 0.0;
    }
    return log_normalized(it->second[w], counts.max[w]);
}

double FeatureStore::user_item_preference(const std::string& user_id, const std::string& item_id,
                                          Window window) const {
    return preference(item_pref_, user_id, item_id, window);
}

double FeatureStore::user_category_preference(const std::string& user_id, const std::string& category_id,
                                              Window window) const {
    return preference(category_pref_, user_id, category_id, window);
}

// ---------------------------------------------------------------------------
// Examples

void fill_features(const FeatureStore& store, const FeatureSchema& schema, const std::string& user_id,
                   const std::string& anchor_item_id, const std::string& pushed_item_id, Eigen::Ref<Eigen::VectorXd> x_hat,
                   Eigen::Ref<Eigen::VectorXd> x, bool* cold) {
    if (static_cast<std::size_t>(x_hat.size()) != schema.assignment_dims() ||
        static_cast<std::size_t>(x.size()) != schema.prediction_dims()) {
        throw std::invalid_argument("fill_features: output vectors do not match the schema");
    }
    const UserProfile* profile = store.profile(user_id);
    if (cold != nullptr) {
        *cold = profile == nullptr;
    }
    const ItemAggregates* pushed = store.item(pushed_item_id);
    static const ItemAggregates kEmptyItem{};
    const ItemAggregates& agg = pushed != nullptr ? *pushed : kEmptyItem;
    auto pushed_category = store.category_of(pushed_item_id);
    auto anchor_category = store.category_of(anchor_item_id);

    auto value_of = [&](const FeatureSlot& slot) -> double {
        switch (slot.kind) {
            case FeatureKind::UserCluster:
                return profile != nullptr && profile->cluster_id == slot.index ? 1.0 : 0.0;
            case FeatureKind::UserActiveScore:
                return profile != nullptr ? profile->active_score : 0.0;
            case FeatureKind::UserDemographic: {
                if (profile == nullptr) {
                    return 0.0;
                }
                auto it = profile->demographics.find(slot.group);
                return it != profile->demographics.end() && it->second == slot.index ? 1.0 : 0.0;
            }
            case FeatureKind::UserColdStart:
                return profile == nullptr ? 1.0 : 0.0;
            case FeatureKind::ProductSales:
                return agg.sales[window_index(slot.window)];
            case FeatureKind::ProductViews:
                return agg.views[window_index(slot.window)];
            case FeatureKind::ProductPrice:
                return agg.price;
            case FeatureKind::ProductPriceMissing:
                return agg.price_missing;
            case FeatureKind::UserItemPreference:
                return store.user_item_preference(user_id, pushed_item_id, slot.window);
            case FeatureKind::UserCategoryPreference:
                return pushed_category ? store.user_category_preference(user_id, *pushed_category, slot.window)
                                       : 0.0;
            case FeatureKind::ItemComplementarity:
                return store.item_scores().complementarity.get(anchor_item_id, pushed_item_id);
            case FeatureKind::CategoryComplementarity:
                return anchor_category && pushed_category
                           ? store.category_scores().complementarity.get(*anchor_category, *pushed_category)
                           : 0.0;
        }
        return 0.0;
    };

    const auto& slots = schema.slots();
    const auto& a_cols = schema.assignment_slots();
    const auto& p_cols = schema.prediction_slots();
    for (std::size_t c = 0; c < a_cols.size(); ++c) {
        x_hat[static_cast<Eigen::Index>(c)] = value_of(slots[a_cols[c]]);
    }
    for (std::size_t c = 0; c < p_cols.size(); ++c) {
        x[static_cast<Eigen::Index>(c)] = value_of(slots[p_cols[c]]);
    }
    x_hat[x_hat.size() - 1] = 1.0;
    x[x.size() - 1] = 1.0;
}

std::optional<Example> assemble_example(const PushImpression& impression, const FeatureStore& store,
                                        const FeatureSchema& schema) {
    if (impression.timestamp <= store.ref_time()) {
        return std::nullopt;
    }
    if (store.profile(impression.user_id) == nullptr || store.item(impression.pushed_item_id) == nullptr ||
        store.item(impression.anchor_item_id) == nullptr) {
        return std::nullopt;
    }
    Example ex;
    ex.x_hat.resize(static_cast<Eigen::Index>(schema.assignment_dims()));
    ex.x.resize(static_cast<Eigen::Index>(schema.prediction_dims()));
    fill_features(store, schema, impression.user_id, impression.anchor_item_id, impression.pushed_item_id, ex.x_hat,
                  ex.x);
    ex.y = impression.opened;
    ex.user_id = impression.user_id;
    ex.anchor_item_id = impression.anchor_item_id;
    ex.pushed_item_id = impression.pushed_item_id;
    return ex;
}

AssembledExamples assemble_examples(std::span<const PushImpression> impressions, const FeatureStore& store,
                                    const FeatureSchema& schema) {
    AssembledExamples out;
    out.examples.reserve(impressions.size());
    for (const auto& imp : impressions) {
        if (auto ex = assemble_example(imp, store, schema)) {
            out.examples.push_back(std::move(*ex));
        } else {
            ++out.dropped;
        }
    }
    return out;
}

namespace {

json vector_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        arr.push_back(v[k]);
    }
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t k = 0; k < arr.size(); ++k) {
        v[static_cast<Eigen::Index>(k)] = arr[k].get<double>();
        if (!std::isfinite(v[static_cast<Eigen::Index>(k)])) {
            throw std::invalid_argument("non-finite feature value");
        }
    }
    return v;
}

}  // namespace

std::string to_json_line(const Example& ex, std::uint64_t schema_hash) {
    json obj = {{"user_id", ex.user_id},
                {"anchor_item_id", ex.anchor_item_id},
                {"pushed_item_id", ex.pushed_item_id},
                {"x_hat", vector_json(ex.x_hat)},
                {"x", vector_json(ex.x)},
                {"y", ex.y},
                {"schema_hash", format_schema_hash(schema_hash)}};
    return obj.dump();
}

Example example_from_json(const std::string& line) {
    auto obj = json::parse(line);
    Example ex;
    ex.user_id = obj.value("user_id", std::string());
    ex.anchor_item_id = obj.value("anchor_item_id", std::string());
    ex.pushed_item_id = obj.value("pushed_item_id", std::string());
    ex.x_hat = vector_from_json(obj.at("x_hat"));
    ex.x = vector_from_json(obj.at("x"));
    ex.y = obj.at("y").get<int>();
    if (ex.y != 0 && ex.y != 1) {
        throw std::invalid_argument("label must be 0 or 1");
    }
    return ex;
}

std::vector<Example> read_examples(std::istream& in, std::uint64_t* schema_hash) {
    std::vector<Example> out;
    std::string line;
    std::optional<std::uint64_t> hash;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        out.push_back(example_from_json(line));
        auto obj = json::parse(line);
        if (obj.contains("schema_hash")) {
            auto h = parse_schema_hash(obj["schema_hash"].get<std::string>());
            if (hash && *hash != h) {
                throw std::invalid_argument("examples mix different schema hashes");
            }
            hash = h;
        }
        if (out.size() > 1 && (out.back().x_hat.size() != out.front().x_hat.size() ||
                               out.back().x.size() != out.front().x.size())) {
            throw std::invalid_argument("examples have inconsistent feature dimensions");
        }
    }
    if (schema_hash != nullptr) {
        *schema_hash = hash.value_or(0);
    }
    return out;
}

}  // namespace pushmix
