#include "edl/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json_fwd.hpp"

namespace edl {

using nlohmann::json;

namespace detail {

json spec_to_json(const NetworkSpec& spec) {
  return json{{"input_dim", spec.input_dim},
              {"hidden_layers", spec.hidden_layers},
              {"dropout_rate", spec.dropout_rate},
              {"dropout_placement", to_string(spec.dropout_placement)},
              {"evidence_activation", to_string(spec.evidence_activation)},
              {"head", to_string(spec.head)}};
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec spec;
  spec.input_dim = j.at("input_dim").get<std::size_t>();
  spec.hidden_layers = j.at("hidden_layers").get<std::vector<std::size_t>>();
  spec.dropout_rate = j.at("dropout_rate").get<double>();
  spec.dropout_placement = parse_dropout_placement(j.value("dropout_placement", "all_hidden"));
  spec.evidence_activation = parse_evidence_activation(j.at("evidence_activation").get<std::string>());
  spec.head = parse_head_kind(j.at("head").get<std::string>());
  spec.validate();
  return spec;
}

}  // namespace detail

std::string checkpoint_to_string(const ModelParams& params) {
  json layers = json::array();
  for (const auto& layer : params.layers) {
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(layer.weights(r, c));
    }
    std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back(json{{"rows", layer.weights.rows()},
                          {"cols", layer.weights.cols()},
                          {"weights", std::move(weights)},
                          {"bias", std::move(bias)}});
  }
  const json doc{{"format", "edl.checkpoint"},
                 {"version", kCheckpointVersion},
                 {"seed", params.seed},
                 {"spec", detail::spec_to_json(params.spec)},
                 {"layers", std::move(layers)}};
  return doc.dump(1) + "\n";
}

ModelParams checkpoint_from_string(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "edl.checkpoint") {
      throw std::runtime_error("checkpoint: unexpected format tag");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    ModelParams params;
    params.spec = detail::spec_from_json(doc.at("spec"));
    params.seed = doc.at("seed").get<std::uint64_t>();

    const auto expected = init_params(params.spec, 0);
    const auto& layers = doc.at("layers");
    if (layers.size() != expected.layers.size()) {
      throw std::runtime_error("checkpoint: layer count does not match spec");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& jl = layers[l];
      const auto rows = jl.at("rows").get<Eigen::Index>();
      const auto cols = jl.at("cols").get<Eigen::Index>();
      if (rows != expected.layers[l].weights.rows() || cols != expected.layers[l].weights.cols()) {
        throw std::runtime_error("checkpoint: layer " + std::to_string(l) + " shape does not match spec");
      }
      const auto weights = jl.at("weights").get<std::vector<double>>();
      const auto bias = jl.at("bias").get<std::vector<double>>();
      if (weights.size() != static_cast<std::size_t>(rows * cols) ||
          bias.size() != static_cast<std::size_t>(rows)) {
        throw std::runtime_error("checkpoint: layer " + std::to_string(l) + " has wrong value count");
      }
      DenseLayer layer;
      layer.weights.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          layer.weights(r, c) = weights[static_cast<std::size_t>(r * cols + c)];
        }
      }
      layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), rows);
      params.layers.push_back(std::move(layer));
    }
    if (!params.all_finite()) throw std::runtime_error("checkpoint: non-finite parameter");
    return params;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: schema error: ") + e.what());
  }
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << checkpoint_to_string(params);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace edl
