#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pushmix/features.hpp"
#include "pushmix/ingestion.hpp"
#include "pushmix/mixture.hpp"

namespace pushmix {

enum class SyntheticMode {
    World,   // event log + impressions; labels drawn on pipeline features
    Direct,  // Gaussian feature matrices, no events
};

// Simulated shop. Users browse and buy in sessions; categories come in
// complementary pairs (2c, 2c+1) and a purchase in one often triggers a later
// purchase in its partner.
struct WorldSpec {
    std::size_t users = 3000;
    std::size_t items = 120;
    int categories = 12;
    int history_days = 35;
    std::int64_t ref_time = 1'700'006'400;  // midnight UTC
    double sessions_per_user = 10.0;        // mean, scaled by the user's activity
    double purchase_prob = 0.4;  // share of sessions that end in a purchase
    double complement_prob = 0.6;
    double missing_price_rate = 0.1;
    std::size_t impressions = 20000;
    int cluster_count = 4;
    bool demographics = true;  // age (4 buckets) and income (3 buckets)
};

struct DirectSpec {
    std::size_t examples = 50000;
    Eigen::Index m = 30;  // including the bias column
    Eigen::Index n = 30;
    double theta_scale = 1.0;  // sd of the planted theta entries
    double psi_scale = 1.0;    // sd of the planted psi entries
    bool binary = false;       // 0/1 coin-flip features instead of standard normals
};

// Weights of the default planted pattern in world mode. Context k has an
// activity centre c_k spread evenly over [0, 1] (the pinned last context sits
// at 0); its assignment logit is sharpness * (c_k * active - c_k^2 / 2), so
// users land in the context whose centre is nearest their active score.
// Active contexts weight the user-product slots, inactive ones the
// product-product slots. All weights are negative: they raise the open rate.
struct PlantedPattern {
    double sharpness = 12.0;
    double user_product = -2.0;     // per user-product slot, scaled by c_k
    double product_product = -8.0;  // per product-product slot, scaled by 1 - c_k
    double product_sales = -0.5;    // 7d sales, every context
    double bias = 1.5;
};

struct SyntheticSpec {
    SyntheticMode mode = SyntheticMode::World;
    std::uint64_t seed = 1;
    int contexts = 2;  // M*
    // Sd of Gaussian noise added to the features labels are drawn from; the
    // emitted features stay clean. 0 realizes the mixture exactly.
    double feature_noise = 0.0;
    // Explicit planted parameters; the default pattern (world) or random
    // Gaussian parameters (direct) otherwise.
    std::optional<MixtureParams> planted;
    PlantedPattern pattern;
    WorldSpec world;
    DirectSpec direct;

    void validate() const;
    std::string to_json() const;
    static SyntheticSpec from_json(const std::string& text);
};

struct DirectSample {
    Dataset data;
    MixtureParams truth;
    std::vector<int> contexts;  // sampled z per row
};

DirectSample generate_direct(const SyntheticSpec& spec);

struct SyntheticWorld {
    std::vector<InteractionEvent> events;     // all strictly before ref_time
    std::vector<PushImpression> impressions;  // all strictly after ref_time
    Catalog catalog;
    DemographicTable demographics;
    FeatureSchema schema;
    FeatureConfig feature_config;
    std::int64_t ref_time = 0;
    MixtureParams truth;
    std::vector<int> contexts;  // sampled z per impression
};

SyntheticWorld generate_world(const SyntheticSpec& spec);

// Default planted parameters for a schema.
MixtureParams planted_pattern(const FeatureSchema& schema, int contexts, const PlantedPattern& pattern);

// Writes events.jsonl, impressions.jsonl, catalog.jsonl, demographics.jsonl,
// schema.json, truth.json (a model file holding the planted parameters) and
// world.json (reference time and feature config).
void write_world(const std::filesystem::path& dir, const SyntheticWorld& world);

// Reads a directory written by write_world. Sampled contexts are not stored,
// so `contexts` comes back empty.
SyntheticWorld load_world(const std::filesystem::path& dir);

}  // namespace pushmix
