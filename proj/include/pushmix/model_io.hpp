#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "pushmix/mixture.hpp"

namespace pushmix {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
    MixtureParams params;
    FitConfig config;
    double final_log_likelihood = 0.0;
};

// JSON with row-major flattened theta and psi; every real is written with 17
// significant digits so a reload is bit-exact.
std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace pushmix
