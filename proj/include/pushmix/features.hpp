#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pushmix/graph_scoring.hpp"
#include "pushmix/ingestion.hpp"

namespace pushmix {

inline constexpr std::int64_t kSecondsPerDay = 86400;

enum class FeatureFamily { User, Product, UserProduct, ProductProduct };

// Look-back windows. Windows nest: 1d inside 2d inside 7d inside 28d.
enum class Window { Day1, Day2, Day7, Day28, None };

inline constexpr std::array<Window, 4> kWindows{Window::Day1, Window::Day2, Window::Day7, Window::Day28};
inline constexpr std::array<int, 4> kWindowDays{1, 2, 7, 28};

const char* to_string(FeatureFamily family);
const char* to_string(Window window);
FeatureFamily parse_family(const std::string& text);
Window parse_window(const std::string& text);
int window_index(Window window);  // 0..3, throws for Window::None

// What a slot measures. The family of each feature is fixed.
enum class FeatureKind {
    UserCluster,             // one-hot, index = cluster id
    UserActiveScore,
    UserDemographic,         // one-hot, group + index = bucket
    UserColdStart,
    ProductSales,            // windowed
    ProductViews,            // windowed
    ProductPrice,
    ProductPriceMissing,
    UserItemPreference,      // windowed
    UserCategoryPreference,  // windowed
    ItemComplementarity,
    CategoryComplementarity,
};

const char* to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& text);
FeatureFamily family_of(FeatureKind kind);
bool is_windowed(FeatureKind kind);

struct FeatureSlot {
    FeatureKind kind = FeatureKind::UserActiveScore;
    Window window = Window::None;
    int index = 0;      // cluster id or demographic bucket
    std::string group;  // demographic group name

    FeatureFamily family() const { return family_of(kind); }
    std::string name() const;
    bool operator==(const FeatureSlot&) const = default;
};

// Ordered slot list. The assignment vector holds the User and Product slots
// in schema order, the prediction vector the Product, UserProduct and
// ProductProduct slots; both end with a constant bias slot.
class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<FeatureSlot> slots);

    // Default layout: clusters, active score, demographics, cold-start flag,
    // product sales/views per window, price; user-item and user-category
    // preference per window; item and category complementarity.
    static FeatureSchema standard(int cluster_count,
                                  const std::vector<std::pair<std::string, int>>& demographic_groups = {});

    const std::vector<FeatureSlot>& slots() const noexcept { return slots_; }
    // Indices into slots(), excluding the bias.
    const std::vector<std::size_t>& assignment_slots() const noexcept { return assignment_; }
    const std::vector<std::size_t>& prediction_slots() const noexcept { return prediction_; }

    std::size_t assignment_dims() const noexcept { return assignment_.size() + 1; }
    std::size_t prediction_dims() const noexcept { return prediction_.size() + 1; }

    // Columns of the assignment vector whose slot has the given family; the
    // bias column is always included when `with_bias` is set.
    std::vector<std::size_t> assignment_columns(std::span<const FeatureFamily> families, bool with_bias = true) const;
    std::vector<std::size_t> prediction_columns(std::span<const FeatureFamily> families, bool with_bias = true) const;
    std::optional<std::size_t> assignment_column(const FeatureSlot& slot) const;
    std::optional<std::size_t> prediction_column(const FeatureSlot& slot) const;

    std::vector<std::string> assignment_names() const;
    std::vector<std::string> prediction_names() const;

    // FNV-1a over the canonical slot listing.
    std::uint64_t hash() const;

    std::string to_json() const;
    static FeatureSchema from_json(const std::string& text);
    static FeatureSchema load(const std::filesystem::path& path);

private:
    std::vector<FeatureSlot> slots_;
    std::vector<std::size_t> assignment_;
    std::vector<std::size_t> prediction_;
};

std::string format_schema_hash(std::uint64_t hash);
std::uint64_t parse_schema_hash(const std::string& text);

// ---------------------------------------------------------------------------
// Feature sources

// Rows follow `users`, columns follow `categories`; counts of purchases in
// [start, end), each row scaled to unit L2 norm (zero rows stay zero).
Eigen::MatrixXd user_category_matrix(std::span<const InteractionEvent> events, std::int64_t start, std::int64_t end,
                                     const std::vector<std::string>& users,
                                     const std::vector<std::string>& categories);

// Ascending rank of every active user's event count in [start, end),
// ties averaged, divided by the number of active users.
std::map<std::string, double> active_scores(std::span<const InteractionEvent> events, std::int64_t start,
                                            std::int64_t end);
double active_score(std::span<const InteractionEvent> events, const std::string& user_id, std::int64_t start,
                    std::int64_t end);

inline constexpr double kViewWeight = 1.0;
inline constexpr double kPurchaseWeight = 5.0;

enum class PreferenceLevel { Item, Category };

// log(1 + weighted count) / log(1 + max weighted count over all user-node
// pairs of the window), for the four windows ending at ref_time.
std::array<double, 4> preference_scores(std::span<const InteractionEvent> events, const std::string& user_id,
                                        const std::string& node_id, PreferenceLevel level, std::int64_t ref_time);

struct ItemAggregates {
    std::array<double, 4> sales{};  // normalized, per window
    std::array<double, 4> views{};
    double price = 0.0;              // log(1 + price) / log(1 + max price)
    double price_missing = 1.0;
};

// Per-window counts as log(1 + count) / log(1 + max count over items).
// `prices` may omit items; those get the missingness flag.
std::map<std::string, ItemAggregates> product_aggregates(std::span<const InteractionEvent> events,
                                                         std::int64_t ref_time,
                                                         const std::map<std::string, double>& prices = {});

struct UserProfile {
    int cluster_id = -1;  // -1 when clustering was not possible
    double active_score = 0.0;
    std::map<std::string, int> demographics;  // group -> bucket
};

struct FeatureConfig {
    int cluster_count = 8;
    std::uint64_t seed = 1;
    int kmeans_max_iter = 100;
};

struct Catalog {
    std::map<std::string, double> prices;
    std::map<std::string, std::string> categories;  // item -> category
};

using DemographicTable = std::map<std::string, std::map<std::string, int>>;

Catalog read_catalog(std::istream& in);            // JSON-lines {item_id, category_id?, price?}
DemographicTable read_demographics(std::istream& in);  // JSON-lines {user_id, <group>: bucket, ...}

// Every feature source computed once at a reference time from the events
// strictly before it. Immutable after build.
class FeatureStore {
public:
    static FeatureStore build(std::span<const InteractionEvent> events, std::int64_t ref_time,
                              const FeatureConfig& config = {}, const Catalog& catalog = {},
                              const DemographicTable& demographics = {});

    // Uses externally computed item-level scores instead of recomputing them.
    static FeatureStore build(std::span<const InteractionEvent> events, std::int64_t ref_time,
                              const FeatureConfig& config, const Catalog& catalog,
                              const DemographicTable& demographics, PairScores item_scores);

    std::int64_t ref_time() const noexcept { return ref_time_; }
    int cluster_count() const noexcept { return cluster_count_; }

    const UserProfile* profile(const std::string& user_id) const;
    const ItemAggregates* item(const std::string& item_id) const;
    std::optional<std::string> category_of(const std::string& item_id) const;

    double user_item_preference(const std::string& user_id, const std::string& item_id, Window window) const;
    double user_category_preference(const std::string& user_id, const std::string& category_id,
                                    Window window) const;

    const PairScores& item_scores() const noexcept { return item_scores_; }
    const PairScores& category_scores() const noexcept { return category_scores_; }

    const std::map<std::string, UserProfile>& profiles() const noexcept { return profiles_; }
    const std::map<std::string, ItemAggregates>& items() const noexcept { return items_; }

private:
    struct WindowedCounts {
        std::unordered_map<std::string, std::array<double, 4>> weighted;  // key user + '\x1f' + node
        std::array<double, 4> max{};
    };
    double preference(const WindowedCounts& counts, const std::string& user_id, const std::string& node,
                      Window window) const;

    std::int64_t ref_time_ = 0;
    int cluster_count_ = 0;
    std::map<std::string, UserProfile> profiles_;
    std::map<std::string, ItemAggregates> items_;
    std::map<std::string, std::string> item_category_;
    WindowedCounts item_pref_;
    WindowedCounts category_pref_;
    PairScores item_scores_;
    PairScores category_scores_;
};

struct Example {
    Eigen::VectorXd x_hat;  // assignment features, length m
    Eigen::VectorXd x;      // prediction features, length n
    int y = 0;
    std::string user_id;
    std::string anchor_item_id;
    std::string pushed_item_id;
};

// Fills both feature vectors for a (user, anchor, pushed) triple. A missing
// profile gives zero user slots with the cold-start flag set; `cold` reports it.
void fill_features(const FeatureStore& store, const FeatureSchema& schema, const std::string& user_id,
                   const std::string& anchor_item_id, const std::string& pushed_item_id, Eigen::Ref<Eigen::VectorXd> x_hat,
                   Eigen::Ref<Eigen::VectorXd> x, bool* cold = nullptr);

// nullopt when the user or either item is unknown to the store.
std::optional<Example> assemble_example(const PushImpression& impression, const FeatureStore& store,
                                        const FeatureSchema& schema);

struct AssembledExamples {
    std::vector<Example> examples;
    std::size_t dropped = 0;
};

AssembledExamples assemble_examples(std::span<const PushImpression> impressions, const FeatureStore& store,
                                    const FeatureSchema& schema);

std::string to_json_line(const Example& example, std::uint64_t schema_hash);
Example example_from_json(const std::string& line);
std::vector<Example> read_examples(std::istream& in, std::uint64_t* schema_hash = nullptr);

}  // namespace pushmix
