#include <cstdio>

#include <zlib.h>

#include "vizrank/error.hpp"
#include "vizrank/regressor.hpp"

namespace vizrank {

namespace {

constexpr const char* kFormatName = "vizrank-bundle";

std::string checksum_of(const std::string& canonical) {
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(canonical.data()),
                         static_cast<uInt>(canonical.size()));
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08lx", static_cast<unsigned long>(crc));
  return hex;
}

}  // namespace

std::string serialize_bundle(const ModelBundle& bundle) {
  nlohmann::ordered_json envelope;
  envelope["format"] = kFormatName;
  envelope["version"] = ModelBundle::kVersion;
  envelope["architecture"] = bundle.architecture.to_json();
  envelope["t_bar"] = to_json(bundle.feature_means);

  nlohmann::ordered_json metadata;
  metadata["train_config"] = bundle.config.to_json();
  nlohmann::ordered_json history = nlohmann::ordered_json::object();
  for (const auto& [type, h] : bundle.history) {
    history[std::string(to_string(type))] = {{"train_loss", h.train_loss},
                                             {"validation_loss", h.validation_loss},
                                             {"best_epoch", h.best_epoch}};
  }
  metadata["history"] = history;
  envelope["metadata"] = metadata;

  // Parameters in layer order: per layer, weights then biases.
  nlohmann::ordered_json models = nlohmann::ordered_json::object();
  for (const auto& [type, model] : bundle.models) {
    auto params = model.parameters();
    models[std::string(to_string(type))] = {
        {"head", {{"offset", model.head.offset}, {"scale", model.head.scale}}},
        {"parameters", std::vector<float>(params.begin(), params.end())}};
  }
  envelope["models"] = models;

  envelope["checksum"] = checksum_of(envelope.dump());
  return envelope.dump() + "\n";
}

ModelBundle deserialize_bundle(const std::string& text) {
  nlohmann::ordered_json envelope;
  try {
    envelope = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptBundle, std::string("unreadable bundle: ") + e.what());
  }
  if (!envelope.is_object() || envelope.value("format", "") != kFormatName ||
      !envelope.contains("version") || !envelope["version"].is_number_integer()) {
    throw Error(Errc::CorruptBundle, "not a model bundle");
  }
  const int version = envelope["version"].get<int>();
  if (version != ModelBundle::kVersion) {
    throw Error(Errc::VersionMismatch, "bundle version " + std::to_string(version) +
                                           ", supported " + std::to_string(ModelBundle::kVersion));
  }
  if (!envelope.contains("checksum") || !envelope["checksum"].is_string()) {
    throw Error(Errc::CorruptBundle, "bundle has no checksum");
  }
  const auto stored = envelope["checksum"].get<std::string>();
  envelope.erase("checksum");
  if (checksum_of(envelope.dump()) != stored) throw Error(Errc::CorruptBundle, "checksum mismatch");

  ModelBundle bundle;
  try {
    bundle.architecture = Architecture::from_json(envelope.at("architecture"));
    bundle.feature_means = feature_vector_from_json(envelope.at("t_bar"));
    const auto& metadata = envelope.at("metadata");
    bundle.config = TrainConfig::from_json(metadata.at("train_config"));
    for (const auto& [name, h] : metadata.at("history").items()) {
      const auto type = plot_type_from_string(name);
      if (!type) throw Error(Errc::CorruptBundle, "unknown plot type '" + name + "'");
      bundle.history[*type] = {h.at("train_loss").get<std::vector<double>>(),
                               h.at("validation_loss").get<std::vector<double>>(),
                               h.at("best_epoch").get<int>()};
    }
    for (const auto& [name, entry] : envelope.at("models").items()) {
      const auto type = plot_type_from_string(name);
      if (!type) throw Error(Errc::CorruptBundle, "unknown plot type '" + name + "'");
      ConvRegressor model{Network<float>(bundle.architecture), {}};
      const auto values = entry.at("parameters").get<std::vector<float>>();
      if (values.size() != model.parameters().size()) {
        throw Error(Errc::CorruptBundle, "parameter count mismatch for " + name);
      }
      std::copy(values.begin(), values.end(), model.network.parameters().begin());
      model.head.offset = entry.at("head").at("offset").get<std::array<double, kFeatureCount>>();
      model.head.scale = entry.at("head").at("scale").get<std::array<double, kFeatureCount>>();
      bundle.models.emplace(*type, std::move(model));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptBundle, std::string("malformed bundle: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::CorruptBundle) throw;
    throw Error(Errc::CorruptBundle, e.what());
  }
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  write_file(path, serialize_bundle(bundle));
}

ModelBundle load_bundle(const std::string& path) { return deserialize_bundle(read_file(path)); }

}  // namespace vizrank
