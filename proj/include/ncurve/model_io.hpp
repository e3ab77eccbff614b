#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "ncurve/fit.hpp"

namespace ncurve {

inline constexpr int kModelVersion = 1;

/// On-disk model. `mixture` is the fitted mixture for unconditional models;
/// for conditional models it is the prediction at the mean training
/// observation, and `conditional` carries the encoder.
struct ModelFile {
  NCurveMixture mixture;
  std::optional<ConditionalModel> conditional;
  nlohmann::json training = nlohmann::json::object();  // config echo
  std::uint64_t seed = 0;
};

nlohmann::json model_to_json(const ModelFile& model);

/// Validates version, shapes, the weight simplex and covariance positive definiteness.
ModelFile model_from_json(const nlohmann::json& j);

/// Canonical text: sorted keys, two-space indent, round-trip float formatting.
std::string model_to_text(const ModelFile& model);

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

nlohmann::json mixture_to_json(const NCurveMixture& mixture);
NCurveMixture mixture_from_json(const nlohmann::json& j);

}  // namespace ncurve
