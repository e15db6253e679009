#include "pushmix/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pushmix {

namespace {

std::string real(double v) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument("cannot serialize a non-finite value");
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_row_major(std::ostream& out, const Eigen::MatrixXd& m) {
    out << '[';
    bool first = true;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << (first ? "" : ", ") << real(m(r, c));
            first = false;
        }
    }
    out << ']';
}

Eigen::MatrixXd read_row_major(const nlohmann::json& arr, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols) {
        throw std::runtime_error(std::string("model field '") + what + "' has the wrong size");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = arr[k++].get<double>();
        }
    }
    return m;
}

}  // namespace

std::string model_to_json(const ModelFile& model) {
    const auto& p = model.params;
    p.validate();
    const auto& cfg = model.config;
    std::ostringstream out;
    out << "{\n";
    out << "  \"version\": " << kModelFormatVersion << ",\n";
    out << "  \"M\": " << p.contexts() << ",\n";
    out << "  \"m\": " << p.m() << ",\n";
    out << "  \"n\": " << p.n() << ",\n";
    out << "  \"schema_hash\": \"" << format_schema_hash(p.schema_hash) << "\",\n";
    out << "  \"theta\": ";
    write_row_major(out, p.theta);
    out << ",\n  \"psi\": ";
    write_row_major(out, p.psi);
    out << ",\n  \"config\": {";
    out << "\"contexts\": " << cfg.contexts << ", \"tolerance\": " << real(cfg.tolerance)
        << ", \"max_iterations\": " << cfg.max_iterations << ", \"restarts\": " << cfg.restarts
        << ", \"seed\": " << cfg.seed << ", \"l2\": " << real(cfg.l2)
        << ", \"solver_tolerance\": " << real(cfg.solver.gradient_tolerance)
        << ", \"solver_max_iterations\": " << cfg.solver.max_iterations << ", \"solver\": \""
        << to_string(cfg.solver.method) << "\", \"overrelax\": " << (cfg.overrelax ? "true" : "false") << "},\n";
    out << "  \"final_loglik\": " << real(model.final_log_likelihood) << "\n";
    out << "}\n";
    return out.str();
}

ModelFile model_from_json(const std::string& text) {
    auto doc = nlohmann::json::parse(text);
    if (doc.at("version").get<int>() != kModelFormatVersion) {
        throw std::runtime_error("unsupported model version");
    }
    const int contexts = doc.at("M").get<int>();
    const auto m = doc.at("m").get<Eigen::Index>();
    const auto n = doc.at("n").get<Eigen::Index>();
    if (contexts < 1 || m < 0 || n < 0) {
        throw std::runtime_error("model has invalid dimensions");
    }
    ModelFile model;
    model.params.theta = read_row_major(doc.at("theta"), contexts - 1, m, "theta");
    model.params.psi = read_row_major(doc.at("psi"), contexts, n, "psi");
    model.params.schema_hash = parse_schema_hash(doc.at("schema_hash").get<std::string>());
    model.params.validate();
    if (doc.contains("config")) {
        const auto& c = doc["config"];
        model.config.contexts = c.value("contexts", contexts);
        model.config.tolerance = c.value("tolerance", model.config.tolerance);
        model.config.max_iterations = c.value("max_iterations", model.config.max_iterations);
        model.config.restarts = c.value("restarts", model.config.restarts);
        model.config.seed = c.value("seed", model.config.seed);
        model.config.l2 = c.value("l2", model.config.l2);
        model.config.solver.gradient_tolerance = c.value("solver_tolerance", model.config.solver.gradient_tolerance);
        model.config.solver.max_iterations = c.value("solver_max_iterations", model.config.solver.max_iterations);
        if (c.contains("solver")) {
            model.config.solver.method = parse_solver_method(c["solver"].get<std::string>());
        }
        model.config.overrelax = c.value("overrelax", model.config.overrelax);
    }
    model.final_log_likelihood = doc.value("final_loglik", 0.0);
    return model;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << model_to_json(model);
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace pushmix
