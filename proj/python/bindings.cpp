#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pushmix/evaluation.hpp"
#include "pushmix/features.hpp"
#include "pushmix/graph_scoring.hpp"
#include "pushmix/ingestion.hpp"
#include "pushmix/mixture.hpp"
#include "pushmix/model_io.hpp"
#include "pushmix/ranker.hpp"
#include "pushmix/synthetic.hpp"

namespace py = pybind11;
using namespace pushmix;

namespace {

template <class F>
std::string to_text(F&& write) {
    std::ostringstream out;
    write(out);
    return out.str();
}

Dataset make_dataset(Eigen::MatrixXd x_hat, Eigen::MatrixXd x, Eigen::VectorXd y) {
    Dataset d{std::move(x_hat), std::move(x), std::move(y)};
    d.validate();
    return d;
}

FeatureStore world_store(const SyntheticWorld& w) {
    return FeatureStore::build(w.events, w.ref_time, w.feature_config, w.catalog, w.demographics);
}

}  // namespace

PYBIND11_MODULE(_pushmix, m) {
    m.doc() = "Complementary push recommendations with a mixture of logistic experts";

    // ingestion
    py::enum_<EventKind>(m, "EventKind").value("PURCHASE", EventKind::Purchase).value("VIEW", EventKind::View);
    py::class_<InteractionEvent>(m, "InteractionEvent")
        .def(py::init([](std::string user, std::string item, std::string category, EventKind kind, std::int64_t t) {
                 return InteractionEvent{std::move(user), std::move(item), std::move(category), kind, t};
             }),
             py::arg("user_id"), py::arg("item_id"), py::arg("category_id"), py::arg("kind"), py::arg("timestamp"))
        .def_readwrite("user_id", &InteractionEvent::user_id)
        .def_readwrite("item_id", &InteractionEvent::item_id)
        .def_readwrite("category_id", &InteractionEvent::category_id)
        .def_readwrite("kind", &InteractionEvent::kind)
        .def_readwrite("timestamp", &InteractionEvent::timestamp);
    py::class_<PushImpression>(m, "PushImpression")
        .def_readonly("user_id", &PushImpression::user_id)
        .def_readonly("anchor_item_id", &PushImpression::anchor_item_id)
        .def_readonly("pushed_item_id", &PushImpression::pushed_item_id)
        .def_readonly("opened", &PushImpression::opened)
        .def_readonly("timestamp", &PushImpression::timestamp);
    m.def(
        "read_events",
        [](const std::filesystem::path& path, bool strict) {
            auto r = parse_events_file(path, strict);
            return py::make_tuple(r.records, r.skipped());
        },
        py::arg("path"), py::arg("strict") = false, "Returns (events, skipped line count).");
    m.def(
        "read_impressions",
        [](const std::filesystem::path& path, bool strict) {
            auto r = parse_impressions_file(path, strict);
            return py::make_tuple(r.records, r.skipped());
        },
        py::arg("path"), py::arg("strict") = false, "Returns (impressions, skipped line count).");

    // graph scoring
    py::enum_<NodeKind>(m, "NodeKind").value("PRODUCT", NodeKind::Product).value("CATEGORY", NodeKind::Category);
    py::class_<CandidateFilter>(m, "CandidateFilter")
        .def(py::init([](double min_s, double max_q, std::size_t top_n) { return CandidateFilter{min_s, max_q, top_n}; }),
             py::arg("min_s") = 0.0, py::arg("max_q") = 0.1, py::arg("top_n") = 20)
        .def_readwrite("min_s", &CandidateFilter::min_s)
        .def_readwrite("max_q", &CandidateFilter::max_q)
        .def_readwrite("top_n", &CandidateFilter::top_n);
    py::class_<PairScores>(m, "PairScores")
        .def("p", [](const PairScores& s, const std::string& i, const std::string& j) { return s.co_purchase.get(i, j); })
        .def("q", [](const PairScores& s, const std::string& i, const std::string& j) { return s.substitutivity.get(i, j); })
        .def("s", [](const PairScores& s, const std::string& i, const std::string& j) { return s.complementarity.get(i, j); })
        .def("__len__", [](const PairScores& s) { return s.complementarity.size(); })
        .def("candidates",
             [](const PairScores& s, const std::string& anchor, const CandidateFilter& f) {
                 std::vector<std::pair<std::string, double>> out;
                 for (const auto& c : select_candidates(s, anchor, f)) {
                     out.emplace_back(c.candidate, c.complementarity);
                 }
                 return out;
             },
             py::arg("anchor"), py::arg("filter") = CandidateFilter{})
        .def("to_csv", [](const PairScores& s) { return to_text([&](std::ostream& o) { write_scores_csv(o, s); }); });
    m.def("score_pairs", [](const std::vector<InteractionEvent>& events, NodeKind kind) { return score_pairs(events, kind); },
          py::arg("events"), py::arg("level") = NodeKind::Product);

    // features
    py::class_<FeatureSchema>(m, "FeatureSchema")
        .def_static("standard", &FeatureSchema::standard, py::arg("cluster_count"),
                    py::arg("demographic_groups") = std::vector<std::pair<std::string, int>>{})
        .def_static("from_json", &FeatureSchema::from_json)
        .def_static("load", &FeatureSchema::load)
        .def("to_json", &FeatureSchema::to_json)
        .def("hash", &FeatureSchema::hash)
        .def_property_readonly("m", &FeatureSchema::assignment_dims)
        .def_property_readonly("n", &FeatureSchema::prediction_dims)
        .def("assignment_names", &FeatureSchema::assignment_names)
        .def("prediction_names", &FeatureSchema::prediction_names);
    py::class_<FeatureStore>(m, "FeatureStore")
        .def_property_readonly("ref_time", &FeatureStore::ref_time)
        .def_property_readonly("item_scores", &FeatureStore::item_scores, py::return_value_policy::reference_internal)
        .def("user_item_preference",
             [](const FeatureStore& s, const std::string& u, const std::string& i) {
                 return s.user_item_preference(u, i, Window::Day28);
             });
    m.def(
        "build_store",
        [](const std::vector<InteractionEvent>& events, std::int64_t ref_time, int cluster_count, std::uint64_t seed) {
            FeatureConfig c;
            c.cluster_count = cluster_count;
            c.seed = seed;
            return FeatureStore::build(events, ref_time, c);
        },
        py::arg("events"), py::arg("ref_time"), py::arg("cluster_count") = 8, py::arg("seed") = 1);
    m.def(
        "assemble",
        [](const std::vector<PushImpression>& impressions, const FeatureStore& store, const FeatureSchema& schema) {
            auto a = assemble_examples(impressions, store, schema);
            return py::make_tuple(Dataset::from_examples(a.examples), a.dropped);
        },
        py::arg("impressions"), py::arg("store"), py::arg("schema"), "Returns (dataset, dropped count).");

    // mixture
    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("x_hat"), py::arg("x"), py::arg("y"))
        .def_readonly("x_hat", &Dataset::x_hat)
        .def_readonly("x", &Dataset::x)
        .def_readonly("y", &Dataset::y)
        .def("__len__", &Dataset::size)
        .def("subset", [](const Dataset& d, std::vector<Eigen::Index> rows) { return d.subset(rows); });
    py::class_<MixtureParams>(m, "MixtureParams")
        .def(py::init([](Eigen::MatrixXd theta, Eigen::MatrixXd psi) {
                 MixtureParams p{std::move(theta), std::move(psi), 0};
                 p.validate();
                 return p;
             }),
             py::arg("theta"), py::arg("psi"))
        .def_static("zeros", &MixtureParams::zeros)
        .def_readwrite("theta", &MixtureParams::theta)
        .def_readwrite("psi", &MixtureParams::psi)
        .def_readwrite("schema_hash", &MixtureParams::schema_hash)
        .def_property_readonly("contexts", &MixtureParams::contexts);
    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init([](int contexts, double tolerance, int max_iterations, int restarts, std::uint64_t seed, double l2,
                         int threads, bool overrelax, const std::string& solver) {
                 FitConfig c;
                 c.contexts = contexts;
                 c.tolerance = tolerance;
                 c.max_iterations = max_iterations;
                 c.restarts = restarts;
                 c.seed = seed;
                 c.l2 = l2;
                 c.threads = threads;
                 c.overrelax = overrelax;
                 c.solver.method = parse_solver_method(solver);
                 return c;
             }),
             py::arg("contexts") = 2, py::arg("tolerance") = 1e-5, py::arg("max_iterations") = 200,
             py::arg("restarts") = 5, py::arg("seed") = 0, py::arg("l2") = 1e-6, py::arg("threads") = 1,
             py::arg("overrelax") = true, py::arg("solver") = "newton")
        .def_readwrite("contexts", &FitConfig::contexts)
        .def_readwrite("restarts", &FitConfig::restarts)
        .def_readwrite("seed", &FitConfig::seed)
        .def_readwrite("l2", &FitConfig::l2);
    py::class_<FitResult>(m, "FitResult")
        .def_readonly("params", &FitResult::params)
        .def_readonly("final_log_likelihood", &FitResult::final_log_likelihood)
        .def_readonly("best_restart", &FitResult::best_restart)
        .def_readonly("restart_log_likelihoods", &FitResult::restart_log_likelihoods)
        .def_property_readonly("converged", [](const FitResult& f) { return f.trace.converged; })
        .def_property_readonly("log_likelihood_trace", [](const FitResult& f) {
            std::vector<double> out;
            for (const auto& it : f.trace.iterations) {
                out.push_back(it.mean_log_likelihood);
            }
            return out;
        });
    m.def("em_fit", &em_fit, py::arg("data"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("log_likelihood", &log_likelihood);
    m.def("predict_open_rates", &predict_open_rates);
    m.def("e_step", &e_step);
    m.def("assignment_probs", [](const Eigen::MatrixXd& theta, const Eigen::VectorXd& x_hat) {
        return assignment_probs(theta, x_hat);
    });
    m.def("save_model", [](const std::filesystem::path& path, const MixtureParams& params, const FitConfig& config,
                           double ll) { save_model(path, {params, config, ll}); },
          py::arg("path"), py::arg("params"), py::arg("config") = FitConfig{}, py::arg("final_log_likelihood") = 0.0);
    m.def("load_model", [](const std::filesystem::path& path) { return load_model(path).params; });

    // ranker
    m.def(
        "rank",
        [](const std::string& user, const std::string& anchor, const MixtureParams& params, const FeatureStore& store,
           const FeatureSchema& schema, std::size_t top_n, const CandidateFilter& filter) {
            auto outcome = rank(user, anchor, params, store, schema, RankOptions{filter, top_n});
            std::vector<py::dict> out;
            for (const auto& c : outcome.ranked) {
                py::dict d;
                d["item_id"] = c.item_id;
                d["open_rate"] = c.open_rate;
                d["s"] = c.complementarity;
                d["rank"] = c.rank;
                out.push_back(d);
            }
            return out;
        },
        py::arg("user_id"), py::arg("anchor_item_id"), py::arg("params"), py::arg("store"), py::arg("schema"),
        py::arg("top_n") = 1, py::arg("filter") = CandidateFilter{});

    // synthetic worlds and evaluation
    py::class_<SyntheticWorld>(m, "SyntheticWorld")
        .def_readonly("events", &SyntheticWorld::events)
        .def_readonly("impressions", &SyntheticWorld::impressions)
        .def_readonly("schema", &SyntheticWorld::schema)
        .def_readonly("truth", &SyntheticWorld::truth)
        .def_readonly("ref_time", &SyntheticWorld::ref_time)
        .def_readonly("contexts", &SyntheticWorld::contexts)
        .def("write", [](const SyntheticWorld& w, const std::filesystem::path& dir) { write_world(dir, w); })
        .def("store", &world_store);
    m.def("generate_world", [](const std::string& spec) { return generate_world(SyntheticSpec::from_json(spec)); },
          py::arg("spec_json") = "{}", py::call_guard<py::gil_scoped_release>());
    m.def("load_world", &load_world);
    m.def(
        "generate_direct",
        [](const std::string& spec) {
            auto s = generate_direct(SyntheticSpec::from_json(spec));
            return py::make_tuple(s.data, s.truth, s.contexts);
        },
        py::arg("spec_json"), "Returns (dataset, planted params, sampled contexts).");

    py::enum_<FeatureSet>(m, "FeatureSet")
        .value("FULL", FeatureSet::Full)
        .value("USER_ONLY", FeatureSet::UserOnly)
        .value("PRODUCT_ONLY", FeatureSet::ProductOnly);
    py::class_<CurveCell>(m, "CurveCell")
        .def_readonly("set", &CurveCell::set)
        .def_readonly("k", &CurveCell::k)
        .def_readonly("train_log_likelihood", &CurveCell::train_log_likelihood)
        .def_readonly("validation_log_likelihood", &CurveCell::validation_log_likelihood)
        .def_readonly("converged", &CurveCell::converged)
        .def_readonly("params", &CurveCell::params);
    py::class_<ContextCurve>(m, "ContextCurve")
        .def_readonly("cells", &ContextCurve::cells)
        .def("cell", &ContextCurve::cell, py::return_value_policy::reference_internal)
        .def("select_k", [](const ContextCurve& c, FeatureSet set, double slack) { return select_k(c, set, slack); },
             py::arg("set") = FeatureSet::Full, py::arg("slack") = 0.002)
        .def("to_csv", [](const ContextCurve& c) { return to_text([&](std::ostream& o) { write_curve_csv(o, c); }); });
    m.def(
        "context_curve",
        [](const Dataset& data, const FeatureSchema& schema, int k_max, std::vector<FeatureSet> sets,
           const FitConfig& fit, double validation_fraction, std::uint64_t split_seed, int jobs) {
            CurveOptions o;
            o.k_max = k_max;
            o.sets = std::move(sets);
            o.fit = fit;
            o.validation_fraction = validation_fraction;
            o.split_seed = split_seed;
            o.jobs = jobs;
            py::gil_scoped_release release;
            return context_curve(data, schema, o);
        },
        py::arg("data"), py::arg("schema"), py::arg("k_max") = 8,
        py::arg("sets") = std::vector<FeatureSet>{FeatureSet::Full, FeatureSet::UserOnly, FeatureSet::ProductOnly},
        py::arg("fit") = FitConfig{}, py::arg("validation_fraction") = 0.3, py::arg("split_seed") = 1,
        py::arg("jobs") = 1);

    py::class_<ContextWeights>(m, "ContextWeights")
        .def_readonly("context", &ContextWeights::context)
        .def_readonly("active_weight", &ContextWeights::active_weight)
        .def_readonly("mean_psi_user_product", &ContextWeights::mean_psi_user_product)
        .def_readonly("mean_psi_product_product", &ContextWeights::mean_psi_product_product);
    py::class_<WeightReport>(m, "WeightReport")
        .def_readonly("rows", &WeightReport::rows)
        .def_readonly("notice", &WeightReport::notice)
        .def("correlation", &active_preference_correlation)
        .def("to_csv", [](const WeightReport& r) { return to_text([&](std::ostream& o) { write_weights_csv(o, r); }); });
    m.def("weight_analysis", &weight_analysis);

    py::class_<PolicyRow>(m, "PolicyRow")
        .def_property_readonly("policy", [](const PolicyRow& r) { return std::string(to_string(r.policy)); })
        .def_readonly("sends", &PolicyRow::sends)
        .def_readonly("opens", &PolicyRow::opens)
        .def_readonly("open_rate", &PolicyRow::open_rate)
        .def_readonly("expected_open_rate", &PolicyRow::expected_open_rate)
        .def_readonly("relative", &PolicyRow::relative)
        .def_readonly("p_value", &PolicyRow::p_value);
    py::class_<PolicyReport>(m, "PolicyReport")
        .def_readonly("rows", &PolicyReport::rows)
        .def_readonly("aa_relative", &PolicyReport::aa_relative)
        .def_readonly("aa_p_value", &PolicyReport::aa_p_value)
        .def_readonly("aa_ks_statistic", &PolicyReport::aa_ks_statistic)
        .def_readonly("aa_ks_critical", &PolicyReport::aa_ks_critical)
        .def("to_csv", [](const PolicyReport& r) { return to_text([&](std::ostream& o) { write_policy_csv(o, r); }); });
    m.def(
        "policy_compare",
        [](const SyntheticWorld& world, const FeatureStore& store, const MixtureParams& single,
           const MixtureParams& selected, std::size_t sends, std::size_t population, std::uint64_t seed,
           std::size_t aa_repeats) {
            PolicyOptions o;
            o.sends = sends;
            o.population = population;
            o.seed = seed;
            o.aa_repeats = aa_repeats;
            py::gil_scoped_release release;
            return policy_compare(world, store, single, selected, o);
        },
        py::arg("world"), py::arg("store"), py::arg("single_context"), py::arg("selected"), py::arg("sends") = 100000,
        py::arg("population") = 4000, py::arg("seed") = 11, py::arg("aa_repeats") = 200);
}
