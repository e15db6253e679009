#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushmix/evaluation.hpp"
#include "pushmix/features.hpp"
#include "pushmix/graph_scoring.hpp"
#include "pushmix/ingestion.hpp"
#include "pushmix/mixture.hpp"
#include "pushmix/model_io.hpp"
#include "pushmix/ranker.hpp"
#include "pushmix/synthetic.hpp"

namespace fs = std::filesystem;
using namespace pushmix;

namespace {

// Exit codes: 0 ok, 1 an embedded check failed, 2 bad input or I/O.
constexpr int kCheckFailed = 1;

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("cannot read " + path);
    }
    return f;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return f;
}

std::string read_text(const std::string& path) {
    auto f = open_in(path);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int cluster_slots(const FeatureSchema& schema) {
    int n = 0;
    for (const auto& slot : schema.slots()) {
        n += slot.kind == FeatureKind::UserCluster ? 1 : 0;
    }
    return n;
}

// Inputs every feature-building command shares.
struct StoreArgs {
    std::string events;
    std::string catalog;
    std::string demographics;
    std::int64_t ref_time = 0;
    std::uint64_t seed = 1;

    void add(CLI::App* app) {
        app->add_option("--events", events, "event log (JSON-lines)")->required();
        app->add_option("--ref-time", ref_time, "reference time, epoch seconds")->required();
        app->add_option("--catalog", catalog, "catalog JSON-lines {item_id, category_id, price}");
        app->add_option("--demographics", demographics, "demographics JSON-lines {user_id, group: bucket}");
        app->add_option("--kmeans-seed", seed, "k-means seed")->capture_default_str();
    }

    FeatureStore build(const FeatureSchema& schema, const PairScores* item_scores = nullptr) const {
        auto log = parse_events_file(events).records;
        Catalog cat;
        DemographicTable demo;
        if (!catalog.empty()) {
            auto f = open_in(catalog);
            cat = read_catalog(f);
        }
        if (!demographics.empty()) {
            auto f = open_in(demographics);
            demo = read_demographics(f);
        }
        FeatureConfig config;
        config.cluster_count = std::max(1, cluster_slots(schema));
        config.seed = seed;
        if (item_scores) {
            return FeatureStore::build(log, ref_time, config, cat, demo, *item_scores);
        }
        return FeatureStore::build(log, ref_time, config, cat, demo);
    }
};

void check_hash(std::uint64_t model_hash, std::uint64_t schema_hash, const std::string& what) {
    if (model_hash != 0 && schema_hash != 0 && model_hash != schema_hash) {
        throw std::invalid_argument(what + ": schema hash " + format_schema_hash(model_hash) + " does not match " +
                                    format_schema_hash(schema_hash));
    }
}

PairScores filtered(const PairScores& scores, double min_s, double max_q) {
    PairScores out;
    out.co_purchase.kind = scores.co_purchase.kind;
    out.substitutivity.kind = scores.substitutivity.kind;
    out.complementarity.kind = scores.complementarity.kind;
    out.co_purchase.node_kind = out.substitutivity.node_kind = out.complementarity.node_kind = scores.node_kind();
    for (const auto& [key, s] : scores.complementarity.scores) {
        double q = scores.substitutivity.get(key.first, key.second);
        if (s >= min_s && q <= max_q) {
            out.complementarity.scores[key] = s;
            out.co_purchase.scores[key] = scores.co_purchase.get(key.first, key.second);
            out.substitutivity.scores[key] = q;
        }
    }
    return out;
}

struct Check {
    std::string name;
    bool pass = true;
};

// Prints and saves the summary; returns the exit code.
int finish(const fs::path& dir, const std::string& body, const std::vector<Check>& checks) {
    std::ostringstream text;
    text << body;
    bool ok = true;
    for (const auto& c : checks) {
        text << "check " << c.name << ": " << (c.pass ? "PASS" : "FAIL") << '\n';
        ok = ok && c.pass;
    }
    std::cout << text.str();
    auto f = open_out(dir / "summary.txt");
    f << text.str();
    return ok ? 0 : kCheckFailed;
}

// ---------------------------------------------------------------------------

int run_ingest(const std::string& events, const std::string& impressions, bool strict) {
    auto report = [](const char* what, std::size_t parsed, const std::vector<LineError>& errors) {
        std::cout << what << ": " << parsed << " parsed, " << errors.size() << " skipped\n";
        for (std::size_t i = 0; i < std::min<std::size_t>(errors.size(), 5); ++i) {
            std::cout << "  line " << errors[i].line << ": " << errors[i].message << '\n';
        }
    };
    if (!events.empty()) {
        auto r = parse_events_file(events, strict);
        report("events", r.records.size(), r.errors);
    }
    if (!impressions.empty()) {
        auto r = parse_impressions_file(impressions, strict);
        report("impressions", r.records.size(), r.errors);
    }
    return 0;
}

int run_score(const std::string& events, const std::string& level, const std::string& out, double min_s,
              double max_q, std::int64_t start, std::int64_t end) {
    NodeKind kind = level == "category" ? NodeKind::Category : NodeKind::Product;
    auto log = filter_window(parse_events_file(events).records, start, end);
    auto scores = filtered(score_pairs(log, kind), min_s, max_q);
    auto f = open_out(out);
    write_scores_csv(f, scores);
    std::cout << scores.complementarity.size() << " " << level << " pairs written to " << out << '\n';
    return 0;
}

int run_schema(int clusters, const std::vector<std::string>& groups, const std::string& out) {
    std::vector<std::pair<std::string, int>> demo;
    for (const auto& g : groups) {
        auto colon = g.find(':');
        if (colon == std::string::npos) {
            throw std::invalid_argument("demographic group must look like name:buckets, got " + g);
        }
        demo.emplace_back(g.substr(0, colon), std::stoi(g.substr(colon + 1)));
    }
    auto schema = FeatureSchema::standard(clusters, demo);
    auto f = open_out(out);
    f << schema.to_json();
    std::cout << "schema " << format_schema_hash(schema.hash()) << ": m=" << schema.assignment_dims()
              << " n=" << schema.prediction_dims() << '\n';
    return 0;
}

int run_featurize(const StoreArgs& store_args, const std::string& impressions, const std::string& schema_path,
                  const std::string& out) {
    auto schema = FeatureSchema::load(schema_path);
    auto store = store_args.build(schema);
    auto imps = parse_impressions_file(impressions).records;
    auto assembled = assemble_examples(imps, store, schema);
    auto f = open_out(out);
    for (const auto& ex : assembled.examples) {
        f << to_json_line(ex, schema.hash()) << '\n';
    }
    std::cout << assembled.examples.size() << " examples written, " << assembled.dropped
              << " impressions dropped (unknown user or item)\n";
    return 0;
}

std::vector<Example> load_examples(const std::string& path, std::uint64_t* hash) {
    auto f = open_in(path);
    return read_examples(f, hash);
}

int run_train(const std::string& examples, FitConfig config, const std::string& solver, bool no_overrelax,
              const std::string& out) {
    config.solver.method = parse_solver_method(solver);
    config.overrelax = !no_overrelax;
    std::uint64_t hash = 0;
    auto data = Dataset::from_examples(load_examples(examples, &hash));
    auto fit = em_fit(data, config);
    fit.params.schema_hash = hash;
    save_model(out, {fit.params, config, fit.final_log_likelihood});
    for (std::size_t r = 0; r < fit.restart_traces.size(); ++r) {
        const auto& t = fit.restart_traces[r];
        std::cout << "restart " << r << ": loglik " << fmt("%.6f", fit.restart_log_likelihoods[r]) << ", "
                  << t.iterations.size() - 1 << " iterations" << (t.converged ? "" : " (not converged)")
                  << (static_cast<int>(r) == fit.best_restart ? " *" : "") << '\n';
    }
    std::cout << "model written to " << out << '\n';
    if (!fit.trace.converged) {
        std::cerr << "warning: the selected restart hit the iteration cap\n";
    }
    return 0;
}

int run_predict(const std::string& model_path, const std::string& examples, const std::string& out) {
    auto model = load_model(model_path);
    std::uint64_t hash = 0;
    auto exs = load_examples(examples, &hash);
    check_hash(model.params.schema_hash, hash, "examples");
    auto f = open_out(out);
    for (const auto& ex : exs) {
        nlohmann::json line{{"user_id", ex.user_id},
                            {"anchor_item_id", ex.anchor_item_id},
                            {"pushed_item_id", ex.pushed_item_id},
                            {"predicted_open_rate", predict_open_rate(model.params, ex.x_hat, ex.x)},
                            {"opened", ex.y}};
        f << line.dump() << '\n';
    }
    std::cout << exs.size() << " predictions written to " << out << '\n';
    return 0;
}

int run_rank(const std::string& model_path, const std::string& scores_path, const std::string& pairs_path,
             const std::string& schema_path, const StoreArgs& store_args, RankOptions options,
             std::size_t max_per_user, const std::string& out) {
    auto model = load_model(model_path);
    auto schema = FeatureSchema::load(schema_path);
    check_hash(model.params.schema_hash, schema.hash(), "model");
    auto sf = open_in(scores_path);
    auto scores = read_scores_csv(sf, NodeKind::Product);
    auto store = store_args.build(schema, &scores);
    auto pf = open_in(pairs_path);
    auto rows = batch_rank(read_rank_pairs(pf), model.params, store, schema, options);
    if (max_per_user > 0) {
        rows = cap_per_user(std::move(rows), max_per_user);
    }
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            ++failed;
            std::cerr << r.pair.user_id << " / " << r.pair.anchor_item_id << ": " << r.error << '\n';
        }
    }
    if (out.empty() || out == "-") {
        write_rankings(std::cout, rows);
    } else {
        auto f = open_out(out);
        write_rankings(f, rows);
        std::cout << rows.size() << " pairs ranked, " << failed << " failed\n";
    }
    return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir, const std::optional<std::uint64_t>& seed) {
    SyntheticSpec spec = spec_path.empty() ? SyntheticSpec{} : SyntheticSpec::from_json(read_text(spec_path));
    if (seed) {
        spec.seed = *seed;
    }
    fs::path dir(out_dir);
    fs::create_directories(dir);
    {
        auto f = open_out(dir / "spec.json");
        f << spec.to_json() << '\n';
    }
    if (spec.mode == SyntheticMode::World) {
        auto world = generate_world(spec);
        write_world(dir, world);
        std::cout << "world: " << world.events.size() << " events, " << world.impressions.size()
                  << " impressions, schema " << format_schema_hash(world.schema.hash()) << " -> " << dir.string()
                  << '\n';
        return 0;
    }
    auto sample = generate_direct(spec);
    auto f = open_out(dir / "examples.jsonl");
    for (Eigen::Index i = 0; i < sample.data.size(); ++i) {
        Example ex;
        ex.x_hat = sample.data.x_hat.row(i).transpose();
        ex.x = sample.data.x.row(i).transpose();
        ex.y = static_cast<int>(sample.data.y[i]);
        ex.user_id = "r" + std::to_string(i);
        f << to_json_line(ex, 0) << '\n';
    }
    save_model(dir / "truth.json", {sample.truth, FitConfig{sample.truth.contexts()}, 0.0});
    std::cout << "direct: " << sample.data.size() << " examples -> " << dir.string() << '\n';
    return 0;
}

int run_curve(const std::string& examples, const std::string& schema_path, CurveOptions options,
              const std::vector<std::string>& set_names, double slack, const std::string& out_dir) {
    auto schema = FeatureSchema::load(schema_path);
    std::uint64_t hash = 0;
    auto data = Dataset::from_examples(load_examples(examples, &hash));
    check_hash(hash, schema.hash(), "examples");
    options.sets.clear();
    for (const auto& name : set_names) {
        options.sets.push_back(parse_feature_set(name));
    }
    auto curve = context_curve(data, schema, options);
    fs::path dir(out_dir);
    {
        auto f = open_out(dir / "curve.csv");
        write_curve_csv(f, curve);
    }

    std::ostringstream body;
    body << "context curve: " << curve.split.train.size() << " train, " << curve.split.validation.size()
         << " validation examples\n";
    std::vector<Check> checks;
    bool finite = true;
    int unconverged = 0;
    for (const auto& c : curve.cells) {
        finite = finite && std::isfinite(c.train_log_likelihood) && std::isfinite(c.validation_log_likelihood);
        unconverged += c.converged ? 0 : 1;
    }
    checks.push_back({"finite log-likelihoods", finite});
    double spread = 0.0;
    for (auto set : options.sets) {
        spread = std::max(spread, std::abs(curve.cell(set, 1).validation_log_likelihood -
                                           curve.cell(options.sets.front(), 1).validation_log_likelihood));
    }
    checks.push_back({"k=1 identical across feature sets (spread " + fmt("%.2g", spread) + ")", spread <= 1e-6});
    for (auto set : options.sets) {
        int k = select_k(curve, set, slack);
        body << to_string(set) << ": selected k=" << k << ", validation loglik "
             << fmt("%.5f", curve.cell(set, k).validation_log_likelihood) << '\n';
    }
    if (unconverged > 0) {
        body << unconverged << " cells hit the iteration cap\n";
    }
    bool has_full = std::find(options.sets.begin(), options.sets.end(), FeatureSet::Full) != options.sets.end();
    if (has_full) {
        int k = select_k(curve, FeatureSet::Full, slack);
        for (auto [name, kk] : {std::pair{"model_k1.json", 1}, std::pair{"model_selected.json", k}}) {
            auto params = curve.cell(FeatureSet::Full, kk).params;
            params.schema_hash = schema.hash();
            FitConfig config = options.fit;
            config.contexts = kk;
            save_model(dir / name, {params, config, curve.cell(FeatureSet::Full, kk).train_log_likelihood});
        }
        body << "full-set models written for k=1 and k=" << k << '\n';
    }
    return finish(dir, body.str(), checks);
}

int run_weights(const std::string& model_path, const std::string& schema_path, const std::string& out) {
    auto model = load_model(model_path);
    auto schema = FeatureSchema::load(schema_path);
    check_hash(model.params.schema_hash, schema.hash(), "model");
    auto report = weight_analysis(model.params, schema);
    auto f = open_out(out);
    write_weights_csv(f, report);
    if (!report.notice.empty()) {
        std::cout << report.notice << '\n';
        return 0;
    }
    write_weights_csv(std::cout, report);
    std::cout << "rank correlation (active weight vs user-product preference): "
              << fmt("%.3f", active_preference_correlation(report)) << '\n';
    return 0;
}

int run_policies(const std::string& world_dir, const std::string& single, const std::string& selected,
                 const PolicyOptions& options, const std::string& out_dir) {
    auto world = load_world(world_dir);
    auto store = FeatureStore::build(world.events, world.ref_time, world.feature_config, world.catalog,
                                     world.demographics);
    auto one = load_model(single).params;
    auto chosen = load_model(selected).params;
    check_hash(one.schema_hash, world.schema.hash(), single);
    check_hash(chosen.schema_hash, world.schema.hash(), selected);
    auto report = policy_compare(world, store, one, chosen, options);
    fs::path dir(out_dir);
    {
        auto f = open_out(dir / "policies.csv");
        write_policy_csv(f, report);
    }
    std::ostringstream body;
    body << "policy comparison: " << options.sends << " sends per policy, population " << report.population << '\n';
    for (const auto& r : report.rows) {
        body << "  " << to_string(r.policy) << ": open rate " << fmt("%.4f", r.open_rate) << ", relative "
             << fmt("%.3f", r.relative) << ", p " << fmt("%.3g", r.p_value) << '\n';
    }
    body << "A/A: relative " << fmt("%.4f", report.aa_relative) << ", p " << fmt("%.3f", report.aa_p_value) << '\n';

    std::vector<Check> checks;
    bool p_ok = report.aa_p_value >= 0.0 && report.aa_p_value <= 1.0;
    for (const auto& r : report.rows) {
        p_ok = p_ok && r.p_value >= 0.0 && r.p_value <= 1.0;
    }
    for (double p : report.aa_p_values) {
        p_ok = p_ok && p >= 0.0 && p <= 1.0;
    }
    checks.push_back({"p-values in [0, 1]", p_ok});
    const double oracle = report.row(Policy::Oracle).expected_open_rate;
    bool oracle_ok = true;
    for (const auto& r : report.rows) {
        oracle_ok = oracle_ok && r.expected_open_rate <= oracle + 1e-12;
    }
    checks.push_back({"oracle expected open rate is the highest", oracle_ok});
    if (!report.aa_p_values.empty()) {
        checks.push_back({"A/A p-values uniform (KS " + fmt("%.4f", report.aa_ks_statistic) + " < " +
                              fmt("%.4f", report.aa_ks_critical) + ")",
                          report.aa_ks_statistic < report.aa_ks_critical});
    }
    return finish(dir, body.str(), checks);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complementary push recommendations with a mixture of logistic experts"};
    app.require_subcommand(1);
    std::function<int()> action;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate event and impression logs and print counts");
    std::string ingest_events;
    std::string ingest_impressions;
    bool strict = false;
    ingest->add_option("--events", ingest_events, "event log (JSON-lines)");
    ingest->add_option("--impressions", ingest_impressions, "impression log (JSON-lines)");
    ingest->add_flag("--strict", strict, "fail on the first malformed line");
    ingest->callback([&] { action = [&] { return run_ingest(ingest_events, ingest_impressions, strict); }; });

    // score
    auto* score = app.add_subcommand("score", "co-purchase, substitutivity and complementarity scores");
    std::string score_events;
    std::string level = "product";
    std::string score_out;
    double min_s = -1.0;
    double max_q = 1.0;
    std::int64_t start = std::numeric_limits<std::int64_t>::min();
    std::int64_t end = std::numeric_limits<std::int64_t>::max();
    score->add_option("--events", score_events)->required();
    score->add_option("--level", level)->check(CLI::IsMember({"product", "category"}))->capture_default_str();
    score->add_option("--out", score_out)->required();
    score->add_option("--min-s", min_s, "drop pairs with s below this")->capture_default_str();
    score->add_option("--max-q", max_q, "drop pairs with q above this")->capture_default_str();
    score->add_option("--start", start, "only events at or after this time");
    score->add_option("--end", end, "only events before this time");
    score->callback(
        [&] { action = [&] { return run_score(score_events, level, score_out, min_s, max_q, start, end); }; });

    // schema
    auto* schema_cmd = app.add_subcommand("schema", "write the standard feature schema");
    int clusters = 8;
    std::vector<std::string> groups;
    std::string schema_out;
    schema_cmd->add_option("--clusters", clusters)->capture_default_str();
    schema_cmd->add_option("--demographic", groups, "group as name:buckets, repeatable");
    schema_cmd->add_option("--out", schema_out)->required();
    schema_cmd->callback([&] { action = [&] { return run_schema(clusters, groups, schema_out); }; });

    // featurize
    auto* featurize = app.add_subcommand("featurize", "assemble examples from impressions");
    StoreArgs feat_store;
    std::string feat_impressions;
    std::string feat_schema;
    std::string feat_out;
    feat_store.add(featurize);
    featurize->add_option("--impressions", feat_impressions)->required();
    featurize->add_option("--schema", feat_schema)->required();
    featurize->add_option("--out", feat_out)->required();
    featurize->callback(
        [&] { action = [&] { return run_featurize(feat_store, feat_impressions, feat_schema, feat_out); }; });

    // train
    auto* train = app.add_subcommand("train", "fit the mixture with EM");
    std::string train_examples;
    std::string train_out;
    std::string solver = "newton";
    bool no_overrelax = false;
    FitConfig fit;
    train->add_option("--examples", train_examples)->required();
    train->add_option("--contexts", fit.contexts)->capture_default_str();
    train->add_option("--tol", fit.tolerance)->capture_default_str();
    train->add_option("--max-iter", fit.max_iterations)->capture_default_str();
    train->add_option("--restarts", fit.restarts)->capture_default_str();
    train->add_option("--seed", fit.seed)->capture_default_str();
    train->add_option("--l2", fit.l2)->capture_default_str();
    train->add_option("--threads", fit.threads)->capture_default_str();
    train->add_option("--solver", solver)->check(CLI::IsMember({"newton", "lbfgs"}))->capture_default_str();
    train->add_flag("--no-overrelax", no_overrelax, "plain EM steps");
    train->add_option("--out", train_out)->required();
    train->callback([&] { action = [&] { return run_train(train_examples, fit, solver, no_overrelax, train_out); }; });

    // predict
    auto* predict = app.add_subcommand("predict", "predicted open rates for examples");
    std::string pred_model;
    std::string pred_examples;
    std::string pred_out;
    predict->add_option("--model", pred_model)->required();
    predict->add_option("--examples", pred_examples)->required();
    predict->add_option("--out", pred_out)->required();
    predict->callback([&] { action = [&] { return run_predict(pred_model, pred_examples, pred_out); }; });

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "rank complementary candidates for (user, anchor) pairs");
    StoreArgs rank_store;
    std::string rank_model;
    std::string rank_scores;
    std::string rank_pairs;
    std::string rank_schema;
    std::string rank_out;
    RankOptions rank_options;
    rank_options.candidates.max_q = 0.1;
    std::size_t max_per_user = 0;
    rank_store.add(rank_cmd);
    rank_cmd->add_option("--model", rank_model)->required();
    rank_cmd->add_option("--scores", rank_scores, "product-level score CSV")->required();
    rank_cmd->add_option("--pairs", rank_pairs, "JSON-lines {user_id, anchor_item_id}")->required();
    rank_cmd->add_option("--schema", rank_schema)->required();
    rank_cmd->add_option("--top-n", rank_options.top_n)->capture_default_str();
    rank_cmd->add_option("--min-s", rank_options.candidates.min_s)->capture_default_str();
    rank_cmd->add_option("--max-q", rank_options.candidates.max_q)->capture_default_str();
    rank_cmd->add_option("--max-per-user", max_per_user, "0 keeps every pair")->capture_default_str();
    rank_cmd->add_option("--out", rank_out, "default stdout");
    rank_cmd->callback([&] {
        action = [&] {
            return run_rank(rank_model, rank_scores, rank_pairs, rank_schema, rank_store, rank_options, max_per_user,
                            rank_out);
        };
    });

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic world or direct sample");
    std::string spec_path;
    std::string synth_dir;
    std::optional<std::uint64_t> synth_seed;
    synth->add_option("--spec", spec_path, "spec JSON; defaults when omitted");
    synth->add_option("--out-dir", synth_dir)->required();
    synth->add_option("--seed", synth_seed, "overrides the spec seed");
    synth->callback([&] { action = [&] { return run_synth(spec_path, synth_dir, synth_seed); }; });

    // eval
    auto* eval = app.add_subcommand("eval", "context curve, weight analysis and policy comparison");
    eval->require_subcommand(1);

    auto* curve = eval->add_subcommand("curve", "validation log-likelihood per feature set and k");
    std::string curve_examples;
    std::string curve_schema;
    std::string curve_dir;
    std::vector<std::string> sets{"full", "user-only", "product-only"};
    double slack = 0.002;
    CurveOptions curve_options;
    curve->add_option("--examples", curve_examples)->required();
    curve->add_option("--schema", curve_schema)->required();
    curve->add_option("--kmax", curve_options.k_max)->capture_default_str();
    curve->add_option("--sets", sets)->delimiter(',')->capture_default_str();
    curve->add_option("--restarts", curve_options.fit.restarts)->capture_default_str();
    curve->add_option("--seed", curve_options.fit.seed)->capture_default_str();
    curve->add_option("--tol", curve_options.fit.tolerance)->capture_default_str();
    curve->add_option("--max-iter", curve_options.fit.max_iterations)->capture_default_str();
    curve->add_option("--l2", curve_options.fit.l2)->capture_default_str();
    curve->add_option("--validation-fraction", curve_options.validation_fraction)->capture_default_str();
    curve->add_option("--split-seed", curve_options.split_seed)->capture_default_str();
    curve->add_option("--jobs", curve_options.jobs)->capture_default_str();
    curve->add_option("--slack", slack, "k selection slack in nats")->capture_default_str();
    curve->add_option("--out-dir", curve_dir)->required();
    curve->callback([&] {
        action = [&] { return run_curve(curve_examples, curve_schema, curve_options, sets, slack, curve_dir); };
    });

    auto* weights = eval->add_subcommand("weights", "per-context weight table");
    std::string weights_model;
    std::string weights_schema;
    std::string weights_out;
    weights->add_option("--model", weights_model)->required();
    weights->add_option("--schema", weights_schema)->required();
    weights->add_option("--out", weights_out)->required();
    weights->callback([&] { action = [&] { return run_weights(weights_model, weights_schema, weights_out); }; });

    auto* policies = eval->add_subcommand("policies", "simulated open rates per policy");
    std::string world_dir;
    std::string single;
    std::string selected;
    std::string policies_dir;
    PolicyOptions policy_options;
    policies->add_option("--world", world_dir, "directory written by synth")->required();
    policies->add_option("--single", single, "one-context model")->required();
    policies->add_option("--selected", selected, "model with the selected k")->required();
    policies->add_option("--sends", policy_options.sends)->capture_default_str();
    policies->add_option("--population", policy_options.population)->capture_default_str();
    policies->add_option("--seed", policy_options.seed)->capture_default_str();
    policies->add_option("--aa-repeats", policy_options.aa_repeats)->capture_default_str();
    policies->add_option("--out-dir", policies_dir)->required();
    policies->callback([&] {
        action = [&] { return run_policies(world_dir, single, selected, policy_options, policies_dir); };
    });

    CLI11_PARSE(app, argc, argv);
    try {
        return action ? action() : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
