#include "pushmix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pushmix/graph_scoring.hpp"
#include "pushmix/model_io.hpp"

namespace pushmix {

using json = nlohmann::json;

namespace {

const char* mode_name(SyntheticMode mode) {
    return mode == SyntheticMode::World ? "world" : "direct";
}

SyntheticMode parse_mode(const std::string& text) {
    if (text == "world") {
        return SyntheticMode::World;
    }
    if (text == "direct") {
        return SyntheticMode::Direct;
    }
    throw std::invalid_argument("unknown synthetic mode: " + text);
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index cols_if_empty) {
    Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    Eigen::Index c = r == 0 ? cols_if_empty : static_cast<Eigen::Index>(rows[0].size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != c) {
            throw std::invalid_argument("planted matrix rows differ in length");
        }
        for (Eigen::Index j = 0; j < c; ++j) {
            m(i, j) = rows[i][j].get<double>();
        }
    }
    return m;
}

template <class T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        out = obj.at(key).get<T>();
    }
}

std::string padded(const char* prefix, std::size_t value, int width) {
    std::string digits_text = std::to_string(value);
    if (static_cast<int>(digits_text.size()) < width) {
        digits_text.insert(0, static_cast<std::size_t>(width) - digits_text.size(), '0');
    }
    return prefix + digits_text;
}

int digits(std::size_t n) {
    int d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

constexpr double kMatchedComplement = 0.7;

// One labelled draw from the mixture. `noise` perturbs the features the label
// sees, never the bias column.
int sample_label(const MixtureParams& truth, const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x, double noise,
                 std::mt19937_64& rng, int* context) {
    Eigen::VectorXd xh = x_hat;
    Eigen::VectorXd xp = x;
    if (noise > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise);
        for (Eigen::Index j = 0; j + 1 < xh.size(); ++j) {
            xh[j] += gauss(rng);
        }
        for (Eigen::Index j = 0; j + 1 < xp.size(); ++j) {
            xp[j] += gauss(rng);
        }
    }
    Eigen::VectorXd probs = assignment_probs(truth.theta, xh);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    int z = truth.contexts() - 1;
    double acc = 0.0;
    for (int k = 0; k < truth.contexts(); ++k) {
        acc += probs[k];
        if (u < acc) {
            z = k;
            break;
        }
    }
    *context = z;
    return unit(rng) < open_probability(truth.psi.row(z).transpose(), xp) ? 1 : 0;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (contexts < 1) {
        throw std::invalid_argument("synthetic spec: contexts must be >= 1");
    }
    if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) {
        throw std::invalid_argument("synthetic spec: feature_noise must be finite and >= 0");
    }
    if (planted) {
        planted->validate();
        if (planted->contexts() != contexts) {
            throw std::invalid_argument("synthetic spec: planted parameters disagree with contexts");
        }
    }
    if (mode == SyntheticMode::Direct) {
        if (direct.examples == 0 || direct.m < 1 || direct.n < 1) {
            throw std::invalid_argument("synthetic spec: direct mode needs examples, m and n");
        }
        if (planted && (planted->m() != direct.m || planted->n() != direct.n)) {
            throw std::invalid_argument("synthetic spec: planted dimensions disagree with m, n");
        }
    } else {
        if (world.users == 0 || world.items < 2 || world.categories < 2 || world.history_days < 1) {
            throw std::invalid_argument("synthetic spec: world needs users, >= 2 items, >= 2 categories");
        }
        if (world.ref_time <= static_cast<std::int64_t>(world.history_days) * kSecondsPerDay) {
            throw std::invalid_argument("synthetic spec: ref_time too small for the history window");
        }
        if (world.cluster_count < 1) {
            throw std::invalid_argument("synthetic spec: cluster_count must be >= 1");
        }
    }
}

std::string SyntheticSpec::to_json() const {
    json j;
    j["mode"] = mode_name(mode);
    j["seed"] = seed;
    j["contexts"] = contexts;
    j["feature_noise"] = feature_noise;
    if (planted) {
        j["planted"] = {{"theta", matrix_json(planted->theta)}, {"psi", matrix_json(planted->psi)}};
    }
    j["pattern"] = {{"sharpness", pattern.sharpness},
                    {"user_product", pattern.user_product},
                    {"product_product", pattern.product_product},
                    {"product_sales", pattern.product_sales},
                    {"bias", pattern.bias}};
    j["world"] = {{"users", world.users},
                  {"items", world.items},
                  {"categories", world.categories},
                  {"history_days", world.history_days},
                  {"ref_time", world.ref_time},
                  {"sessions_per_user", world.sessions_per_user},
                  {"purchase_prob", world.purchase_prob},
                  {"complement_prob", world.complement_prob},
                  {"missing_price_rate", world.missing_price_rate},
                  {"impressions", world.impressions},
                  {"cluster_count", world.cluster_count},
                  {"demographics", world.demographics}};
    j["direct"] = {{"examples", direct.examples},
                   {"m", direct.m},
                   {"n", direct.n},
                   {"theta_scale", direct.theta_scale},
                   {"psi_scale", direct.psi_scale},
                   {"binary", direct.binary}};
    return j.dump(2) + "\n";
}

SyntheticSpec SyntheticSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    SyntheticSpec spec;
    if (j.contains("mode")) {
        spec.mode = parse_mode(j["mode"].get<std::string>());
    }
    read_field(j, "seed", spec.seed);
    read_field(j, "contexts", spec.contexts);
    read_field(j, "feature_noise", spec.feature_noise);
    if (j.contains("pattern")) {
        const auto& p = j["pattern"];
        read_field(p, "sharpness", spec.pattern.sharpness);
        read_field(p, "user_product", spec.pattern.user_product);
        read_field(p, "product_product", spec.pattern.product_product);
        read_field(p, "product_sales", spec.pattern.product_sales);
        read_field(p, "bias", spec.pattern.bias);
    }
    if (j.contains("world")) {
        const auto& w = j["world"];
        read_field(w, "users", spec.world.users);
        read_field(w, "items", spec.world.items);
        read_field(w, "categories", spec.world.categories);
        read_field(w, "history_days", spec.world.history_days);
        read_field(w, "ref_time", spec.world.ref_time);
        read_field(w, "sessions_per_user", spec.world.sessions_per_user);
        read_field(w, "purchase_prob", spec.world.purchase_prob);
        read_field(w, "complement_prob", spec.world.complement_prob);
        read_field(w, "missing_price_rate", spec.world.missing_price_rate);
        read_field(w, "impressions", spec.world.impressions);
        read_field(w, "cluster_count", spec.world.cluster_count);
        read_field(w, "demographics", spec.world.demographics);
    }
    if (j.contains("direct")) {
        const auto& d = j["direct"];
        read_field(d, "examples", spec.direct.examples);
        read_field(d, "m", spec.direct.m);
        read_field(d, "n", spec.direct.n);
        read_field(d, "theta_scale", spec.direct.theta_scale);
        read_field(d, "psi_scale", spec.direct.psi_scale);
        read_field(d, "binary", spec.direct.binary);
    }
    if (j.contains("planted")) {
        const auto& p = j["planted"];
        MixtureParams params;
        params.psi = matrix_from_json(p.at("psi"), 0);
        // M* = 1 has no assignment rows; world mode fixes the width from the schema
        params.theta = matrix_from_json(p.at("theta"), spec.mode == SyntheticMode::Direct ? spec.direct.m : 0);
        spec.planted = params;
    }
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// Direct mode

DirectSample generate_direct(const SyntheticSpec& spec) {
    spec.validate();
    if (spec.mode != SyntheticMode::Direct) {
        throw std::invalid_argument("generate_direct: spec is not in direct mode");
    }
    const auto& d = spec.direct;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    DirectSample out;
    if (spec.planted) {
        out.truth = *spec.planted;
    } else {
        out.truth = MixtureParams::zeros(spec.contexts, d.m, d.n);
        for (Eigen::Index i = 0; i < out.truth.theta.size(); ++i) {
            out.truth.theta.data()[i] = d.theta_scale * gauss(rng);
        }
        for (Eigen::Index i = 0; i < out.truth.psi.size(); ++i) {
            out.truth.psi.data()[i] = d.psi_scale * gauss(rng);
        }
    }

    const auto n_rows = static_cast<Eigen::Index>(d.examples);
    out.data.x_hat.resize(n_rows, d.m);
    out.data.x.resize(n_rows, d.n);
    out.data.y.resize(n_rows);
    out.contexts.resize(d.examples);
    Eigen::VectorXd xh(d.m);
    Eigen::VectorXd x(d.n);
    auto draw = [&] { return d.binary ? static_cast<double>(rng() & 1U) : gauss(rng); };
    for (Eigen::Index i = 0; i < n_rows; ++i) {
        for (Eigen::Index j = 0; j + 1 < d.m; ++j) {
            xh[j] = draw();
        }
        xh[d.m - 1] = 1.0;
        for (Eigen::Index j = 0; j + 1 < d.n; ++j) {
            x[j] = draw();
        }
        x[d.n - 1] = 1.0;
        int z = 0;
        out.data.y[i] = sample_label(out.truth, xh, x, spec.feature_noise, rng, &z);
        out.contexts[static_cast<std::size_t>(i)] = z;
        out.data.x_hat.row(i) = xh.transpose();
        out.data.x.row(i) = x.transpose();
    }
    return out;
}

// ---------------------------------------------------------------------------
// World mode

MixtureParams planted_pattern(const FeatureSchema& schema, int contexts, const PlantedPattern& pattern) {
    if (contexts < 1) {
        throw std::invalid_argument("planted_pattern: contexts must be >= 1");
    }
    auto m = static_cast<Eigen::Index>(schema.assignment_dims());
    auto n = static_cast<Eigen::Index>(schema.prediction_dims());
    MixtureParams p = MixtureParams::zeros(contexts, m, n);
    p.schema_hash = schema.hash();

    std::vector<double> centre(static_cast<std::size_t>(contexts), 0.5);
    if (contexts > 1) {
        for (int k = 0; k < contexts; ++k) {
            centre[static_cast<std::size_t>(k)] = 1.0 - static_cast<double>(k) / (contexts - 1);
        }
        auto active = schema.assignment_column({FeatureKind::UserActiveScore, Window::None, 0, {}});
        if (!active) {
            throw std::invalid_argument("planted_pattern: schema has no active-score slot");
        }
        for (int k = 0; k + 1 < contexts; ++k) {
            double c = centre[static_cast<std::size_t>(k)];
            p.theta(k, static_cast<Eigen::Index>(*active)) = pattern.sharpness * c;
            p.theta(k, m - 1) = -pattern.sharpness * c * c / 2.0;
        }
    }

    const auto& pred = schema.prediction_slots();
    for (int k = 0; k < contexts; ++k) {
        double c = centre[static_cast<std::size_t>(k)];
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const auto& slot = schema.slots()[pred[j]];
            double w = 0.0;
            switch (slot.family()) {
                case FeatureFamily::UserProduct:
                    w = c * pattern.user_product;
                    break;
                case FeatureFamily::ProductProduct:
                    w = (1.0 - c) * pattern.product_product;
                    break;
                default:
                    if (slot.kind == FeatureKind::ProductSales && slot.window == Window::Day7) {
                        w = pattern.product_sales;
                    }
                    break;
            }
            p.psi(k, static_cast<Eigen::Index>(j)) = w;
        }
        p.psi(k, n - 1) = pattern.bias;
    }
    return p;
}

SyntheticWorld generate_world(const SyntheticSpec& spec) {
    spec.validate();
    if (spec.mode != SyntheticMode::World) {
        throw std::invalid_argument("generate_world: spec is not in world mode");
    }
    const auto& w = spec.world;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SyntheticWorld out;
    out.ref_time = w.ref_time;
    out.feature_config.cluster_count = w.cluster_count;
    out.feature_config.seed = spec.seed;

    // Catalog: item i sits in category i mod C, popularity falls with its rank
    // inside the category.
    const int cats = w.categories;
    std::vector<std::string> category_ids;
    for (int c = 0; c < cats; ++c) {
        category_ids.push_back(padded("c", static_cast<std::size_t>(c), digits(static_cast<std::size_t>(cats - 1))));
    }
    std::vector<std::string> item_ids;
    std::vector<int> item_category;
    std::vector<std::vector<std::size_t>> items_in(static_cast<std::size_t>(cats));
    std::vector<std::vector<double>> popularity_in(static_cast<std::size_t>(cats));
    std::vector<double> popularity;
    std::lognormal_distribution<double> price_dist(3.0, 0.6);
    for (std::size_t i = 0; i < w.items; ++i) {
        item_ids.push_back(padded("p", i, digits(w.items - 1)));
        int c = static_cast<int>(i % static_cast<std::size_t>(cats));
        item_category.push_back(c);
        double pop = 1.0 / std::pow(static_cast<double>(i / static_cast<std::size_t>(cats)) + 1.0, 0.7);
        items_in[static_cast<std::size_t>(c)].push_back(i);
        popularity_in[static_cast<std::size_t>(c)].push_back(pop);
        popularity.push_back(pop);
        double price = price_dist(rng);
        out.catalog.categories[item_ids.back()] = category_ids[static_cast<std::size_t>(c)];
        if (unit(rng) >= w.missing_price_rate) {
            out.catalog.prices[item_ids.back()] = std::round(price * 100.0) / 100.0;
        }
    }
    std::vector<std::discrete_distribution<std::size_t>> pick_in;
    for (int c = 0; c < cats; ++c) {
        pick_in.emplace_back(popularity_in[static_cast<std::size_t>(c)].begin(),
                             popularity_in[static_cast<std::size_t>(c)].end());
    }
    std::discrete_distribution<std::size_t> pick_any(popularity.begin(), popularity.end());
    auto partner = [cats](int c) { return (c % 2 == 0) ? (c + 1) % cats : c - 1; };

    // Users and their sessions.
    const std::int64_t start = w.ref_time - static_cast<std::int64_t>(w.history_days) * kSecondsPerDay;
    std::uniform_int_distribution<std::int64_t> when(start, w.ref_time - 3600);
    std::uniform_int_distribution<int> any_cat(0, cats - 1);
    std::lognormal_distribution<double> activity(0.0, 0.8);
    std::poisson_distribution<int> browse_views(1.5);
    std::poisson_distribution<int> compare_views(1.0);
    std::exponential_distribution<double> gap(1.0 / (2.0 * kSecondsPerDay));
    std::vector<std::string> user_ids;
    std::map<std::string, std::vector<std::size_t>> purchases;  // user -> item indices
    auto add = [&](const std::string& u, std::size_t item, EventKind kind, std::int64_t t) {
        if (t >= w.ref_time) {
            return;
        }
        out.events.push_back({u, item_ids[item], category_ids[static_cast<std::size_t>(item_category[item])], kind, t});
        if (kind == EventKind::Purchase) {
            purchases[u].push_back(item);
        }
    };
    for (std::size_t u = 0; u < w.users; ++u) {
        std::string uid = padded("u", u, digits(w.users - 1));
        user_ids.push_back(uid);
        if (w.demographics) {
            out.demographics[uid] = {{"age", static_cast<int>(rng() % 4)}, {"income", static_cast<int>(rng() % 3)}};
        }
        double a = activity(rng);
        std::poisson_distribution<int> sessions(w.sessions_per_user * a);
        // Categories the user will buy in, each at most once.
        std::vector<int> needs(static_cast<std::size_t>(cats));
        std::iota(needs.begin(), needs.end(), 0);
        std::shuffle(needs.begin(), needs.end(), rng);
        std::size_t next_need = 0;
        int count = sessions(rng);
        for (int s = 0; s < count; ++s) {
            std::int64_t t = when(rng);
            if (unit(rng) >= w.purchase_prob || next_need == needs.size()) {
                // browsing: a random category, nothing bought
                int c = any_cat(rng);
                int views = 1 + browse_views(rng);
                for (int v = 0; v < views; ++v) {
                    add(uid, items_in[static_cast<std::size_t>(c)][pick_in[static_cast<std::size_t>(c)](rng)],
                        EventKind::View, t + 60 * v);
                }
                continue;
            }
            // buying: look at a few alternatives, then buy straight away
            int c = needs[next_need++];
            const auto& pool = items_in[static_cast<std::size_t>(c)];
            std::size_t bought = pool[pick_in[static_cast<std::size_t>(c)](rng)];
            int views = compare_views(rng);
            for (int v = 0; v < views; ++v) {
                std::size_t item = pool[pick_in[static_cast<std::size_t>(c)](rng)];
                if (item != bought) {
                    add(uid, item, EventKind::View, t + 60 * v);
                }
            }
            std::int64_t tb = t + 60 * views + 300;
            add(uid, bought, EventKind::Purchase, tb);
            if (unit(rng) < w.complement_prob) {
                // usually the matching item of the partner category
                int pc = partner(c);
                std::size_t comp = bought - static_cast<std::size_t>(c) + static_cast<std::size_t>(pc);
                if (comp >= w.items || unit(rng) >= kMatchedComplement) {
                    comp = items_in[static_cast<std::size_t>(pc)][pick_in[static_cast<std::size_t>(pc)](rng)];
                }
                auto tc = tb + 600 + static_cast<std::int64_t>(gap(rng));
                add(uid, comp, EventKind::Purchase, tc);
            }
        }
    }
    std::stable_sort(out.events.begin(), out.events.end(), [](const InteractionEvent& a, const InteractionEvent& b) {
        if (a.timestamp != b.timestamp) {
            return a.timestamp < b.timestamp;
        }
        if (a.user_id != b.user_id) {
            return a.user_id < b.user_id;
        }
        return a.item_id < b.item_id;
    });

    std::vector<std::pair<std::string, int>> groups;
    if (w.demographics) {
        groups = {{"age", 4}, {"income", 3}};
    }
    out.schema = FeatureSchema::standard(w.cluster_count, groups);
    out.truth = spec.planted ? *spec.planted : planted_pattern(out.schema, spec.contexts, spec.pattern);
    if (out.truth.theta.rows() == 0) {
        out.truth.theta.resize(0, static_cast<Eigen::Index>(out.schema.assignment_dims()));
    }
    out.truth.schema_hash = out.schema.hash();
    if (out.truth.m() != static_cast<Eigen::Index>(out.schema.assignment_dims()) ||
        out.truth.n() != static_cast<Eigen::Index>(out.schema.prediction_dims())) {
        throw std::invalid_argument("generate_world: planted dimensions disagree with the schema");
    }

    // Impressions after the reference time, labelled on pipeline features.
    FeatureStore store = FeatureStore::build(out.events, w.ref_time, out.feature_config, out.catalog, out.demographics);
    std::vector<std::string> buyers;
    for (const auto& [u, items] : purchases) {
        buyers.push_back(u);
    }
    if (buyers.empty() && w.impressions > 0) {
        throw std::runtime_error("generate_world: no purchases to anchor impressions on");
    }
    std::map<std::string, std::vector<std::string>> candidate_cache;
    const CandidateFilter filter{0.0, 0.1, 20};
    std::uniform_int_distribution<std::int64_t> push_time(w.ref_time + 3600, w.ref_time + 3 * kSecondsPerDay);
    Eigen::VectorXd xh(out.truth.m());
    Eigen::VectorXd x(out.truth.n());
    while (out.impressions.size() < w.impressions) {
        const auto& uid = buyers[rng() % buyers.size()];
        const auto& bought = purchases[uid];
        const auto& anchor = item_ids[bought[rng() % bought.size()]];
        auto it = candidate_cache.find(anchor);
        if (it == candidate_cache.end()) {
            std::vector<std::string> ids;
            for (const auto& c : select_candidates(store.item_scores(), anchor, filter)) {
                if (c.candidate != anchor) {
                    ids.push_back(c.candidate);
                }
            }
            it = candidate_cache.emplace(anchor, std::move(ids)).first;
        }
        std::string pushed;
        if (!it->second.empty() && unit(rng) < 0.5) {
            pushed = it->second[rng() % it->second.size()];
        } else {
            do {
                pushed = item_ids[pick_any(rng)];
            } while (pushed == anchor);
        }
        if (!store.item(pushed)) {
            continue;  // never sold or viewed before the reference time
        }
        fill_features(store, out.schema, uid, anchor, pushed, xh, x);
        int z = 0;
        int y = sample_label(out.truth, xh, x, spec.feature_noise, rng, &z);
        out.impressions.push_back({uid, anchor, pushed, y, push_time(rng)});
        out.contexts.push_back(z);
    }
    return out;
}

void write_world(const std::filesystem::path& dir, const SyntheticWorld& world) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) {
            throw std::runtime_error(std::string("cannot write ") + (dir / name).string());
        }
        return f;
    };
    {
        auto f = open("events.jsonl");
        write_events(f, world.events);
    }
    {
        auto f = open("impressions.jsonl");
        write_impressions(f, world.impressions);
    }
    {
        auto f = open("catalog.jsonl");
        for (const auto& [item, cat] : world.catalog.categories) {
            json line{{"item_id", item}, {"category_id", cat}};
            auto p = world.catalog.prices.find(item);
            if (p != world.catalog.prices.end()) {
                line["price"] = p->second;
            }
            f << line.dump() << '\n';
        }
    }
    {
        auto f = open("demographics.jsonl");
        for (const auto& [user, groups] : world.demographics) {
            json line{{"user_id", user}};
            for (const auto& [g, b] : groups) {
                line[g] = b;
            }
            f << line.dump() << '\n';
        }
    }
    {
        auto f = open("schema.json");
        f << world.schema.to_json();
    }
    ModelFile truth;
    truth.params = world.truth;
    truth.config.contexts = world.truth.contexts();
    save_model(dir / "truth.json", truth);
    {
        auto f = open("world.json");
        json meta{{"ref_time", world.ref_time},
                  {"cluster_count", world.feature_config.cluster_count},
                  {"feature_seed", world.feature_config.seed},
                  {"kmeans_max_iter", world.feature_config.kmeans_max_iter}};
        f << meta.dump(2) << '\n';
    }
}

SyntheticWorld load_world(const std::filesystem::path& dir) {
    auto open = [&](const char* name) {
        std::ifstream f(dir / name);
        if (!f) {
            throw std::runtime_error(std::string("cannot read ") + (dir / name).string());
        }
        return f;
    };
    SyntheticWorld out;
    {
        auto f = open("world.json");
        json meta = json::parse(f);
        out.ref_time = meta.at("ref_time").get<std::int64_t>();
        out.feature_config.cluster_count = meta.at("cluster_count").get<int>();
        out.feature_config.seed = meta.at("feature_seed").get<std::uint64_t>();
        out.feature_config.kmeans_max_iter = meta.at("kmeans_max_iter").get<int>();
    }
    out.events = parse_events_file(dir / "events.jsonl", true).records;
    out.impressions = parse_impressions_file(dir / "impressions.jsonl", true).records;
    {
        auto f = open("catalog.jsonl");
        out.catalog = read_catalog(f);
    }
    {
        auto f = open("demographics.jsonl");
        out.demographics = read_demographics(f);
    }
    out.schema = FeatureSchema::load(dir / "schema.json");
    out.truth = load_model(dir / "truth.json").params;
    if (out.truth.schema_hash != out.schema.hash()) {
        throw std::invalid_argument("load_world: truth.json does not match schema.json");
    }
    return out;
}

}  // namespace pushmix
