#include "ncurve/model_io.hpp"

#include <fstream>
#include <sstream>

#include "ncurve/errors.hpp"

namespace ncurve {

namespace {

using nlohmann::json;

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = m(r, c);
    }
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from(const json& j, Eigen::Index dim) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim) {
    throw ShapeMismatch("covariance must have " + std::to_string(dim) + " rows");
  }
  Matrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    const auto row = j[static_cast<std::size_t>(r)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != dim) {
      throw ShapeMismatch("covariance row has the wrong length");
    }
    for (Eigen::Index c = 0; c < dim; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)];
    }
  }
  return m;
}

}  // namespace

json mixture_to_json(const NCurveMixture& mixture) {
  json comps = json::array();
  for (const auto& c : mixture.components()) {
    json controls = json::array();
    for (const auto& g : c.controls()) {
      controls.push_back({{"mean", vector_json(g.mean())}, {"cov", matrix_json(g.cov())}});
    }
    comps.push_back({{"controls", controls}});
  }
  return {{"d", mixture.dim()},
          {"N", mixture.degree()},
          {"K", mixture.size()},
          {"weights", mixture.weights()},
          {"components", comps}};
}

NCurveMixture mixture_from_json(const json& j) {
  try {
    const auto d = j.at("d").get<Eigen::Index>();
    const auto N = j.at("N").get<int>();
    const auto K = j.at("K").get<std::size_t>();
    auto weights = j.at("weights").get<std::vector<double>>();
    const auto& comps = j.at("components");
    if (weights.size() != K || comps.size() != K) {
      throw ShapeMismatch("model declares K=" + std::to_string(K) + " but lists " +
                          std::to_string(comps.size()) + " components and " +
                          std::to_string(weights.size()) + " weights");
    }
    std::vector<NCurve> curves;
    for (const auto& comp : comps) {
      const auto& controls = comp.at("controls");
      if (controls.size() != static_cast<std::size_t>(N) + 1) {
        throw ShapeMismatch("component has " + std::to_string(controls.size()) +
                            " control points, expected " + std::to_string(N + 1));
      }
      std::vector<GaussianDist> gs;
      for (const auto& ctrl : controls) {
        Vector mean = vector_from(ctrl.at("mean"));
        if (mean.size() != d) {
          throw ShapeMismatch("control mean has the wrong dimension");
        }
        GaussianDist g(std::move(mean), matrix_from(ctrl.at("cov"), d));
        cholesky_lower(g.cov());  // must be positive definite
        gs.push_back(std::move(g));
      }
      curves.emplace_back(std::move(gs));
    }
    return NCurveMixture(std::move(weights), std::move(curves));
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("malformed model: ") + e.what());
  }
}

json model_to_json(const ModelFile& model) {
  json j = mixture_to_json(model.mixture);
  j["version"] = kModelVersion;
  j["seed"] = model.seed;
  j["training"] = model.training;
  if (model.conditional) {
    const auto& cm = *model.conditional;
    const auto& cfg = cm.encoder.config();
    j["encoder"] = {{"hidden_sizes", cfg.hidden_sizes},
                    {"activation", to_string(cfg.activation)},
                    {"observed_steps", cfg.observed_steps},
                    {"dim", cfg.dim},
                    {"control_length", cfg.control_length},
                    {"output_size", cm.encoder.output_size()},
                    {"cov_mode", to_string(cm.layout.cov_mode())},
                    {"params", vector_json(cm.encoder.params())},
                    {"input_mean", vector_json(cm.encoder.input_mean())},
                    {"input_scale", vector_json(cm.encoder.input_scale())}};
  }
  return j;
}

ModelFile model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("version")) {
    throw ParseError(0, "model file has no version field");
  }
  if (j.at("version") != kModelVersion) {
    throw ParseError(0, "unsupported model version " + j.at("version").dump());
  }
  ModelFile m{mixture_from_json(j), std::nullopt, j.value("training", json::object()),
              j.value("seed", std::uint64_t{0})};
  if (j.contains("encoder")) {
    try {
      const auto& e = j.at("encoder");
      EncoderConfig cfg;
      cfg.hidden_sizes = e.at("hidden_sizes").get<std::vector<std::size_t>>();
      cfg.activation = activation_from_string(e.at("activation").get<std::string>());
      cfg.observed_steps = e.at("observed_steps").get<std::size_t>();
      cfg.dim = e.at("dim").get<Eigen::Index>();
      cfg.control_length = e.at("control_length").get<std::size_t>();
      const ParamLayout layout({m.mixture.size(), m.mixture.degree(), m.mixture.dim(),
                                covariance_mode_from_string(e.at("cov_mode").get<std::string>())});
      if (e.at("output_size").get<std::size_t>() != layout.size()) {
        throw ShapeMismatch("encoder output size does not match the mixture layout");
      }
      Encoder enc(cfg, layout.size());
      Vector params = vector_from(e.at("params"));
      if (params.size() != enc.params().size()) {
        throw ShapeMismatch("encoder parameter count mismatch");
      }
      enc.params() = std::move(params);
      enc.input_mean() = vector_from(e.at("input_mean"));
      enc.input_scale() = vector_from(e.at("input_scale"));
      if (enc.input_mean().size() != static_cast<Eigen::Index>(enc.input_size()) ||
          enc.input_scale().size() != static_cast<Eigen::Index>(enc.input_size())) {
        throw ShapeMismatch("encoder input statistics have the wrong length");
      }
      m.conditional = ConditionalModel{layout, std::move(enc)};
    } catch (const json::exception& ex) {
      throw ParseError(0, std::string("malformed encoder: ") + ex.what());
    }
  }
  return m;
}

std::string model_to_text(const ModelFile& model) { return model_to_json(model).dump(2) + "\n"; }

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCategory::Data, "cannot write " + path.string());
  }
  out << model_to_text(model);
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCategory::Data, "cannot open model " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("model is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace ncurve
