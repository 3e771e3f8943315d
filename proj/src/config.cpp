#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>

#include "vizrank/error.hpp"
#include "vizrank/service.hpp"

namespace vizrank {
namespace {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return std::string(text.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(Errc::InvalidConfig, "bad value for '" + key + "': '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(Errc::InvalidConfig, "bad value for '" + key + "': '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

std::string PipelineConfig::judgment_log() const {
  if (!log_path.empty()) return log_path;
  return (std::filesystem::path(data_dir) / "judgments.jsonl").string();
}

void PipelineConfig::validate(bool check_paths) const {
  if (port < 1 || port > 65535) throw Error(Errc::InvalidConfig, "port must lie in [1, 65535]");
  render.validate();
  train.validate();
  if (!check_paths) return;
  if (!std::filesystem::is_directory(data_dir)) {
    throw Error(Errc::InvalidConfig, "data directory '" + data_dir + "' does not exist");
  }
  for (const auto& path : model_paths) {
    if (!std::filesystem::is_regular_file(path)) {
      throw Error(Errc::InvalidConfig, "model bundle '" + path + "' does not exist");
    }
  }
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> values;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::MalformedInput, "config line " + std::to_string(number) + " lacks '='");
    }
    auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw Error(Errc::MalformedInput, "config line " + std::to_string(number) + " lacks a key");
    values[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return values;
}

void apply_config(PipelineConfig& config, const std::map<std::string, std::string>& values) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto& r = config.render;
  auto& t = config.train;
  const std::map<std::string, Setter> setters{
      {"data_dir", [&](auto&, auto& v) { config.data_dir = v; }},
      {"models", [&](auto&, auto& v) { config.model_paths = split_list(v); }},
      {"log", [&](auto&, auto& v) { config.log_path = v; }},
      {"host", [&](auto&, auto& v) { config.host = v; }},
      {"port", [&](auto& k, auto& v) { config.port = parse_number<int>(k, v); }},
      {"scoring", [&](auto&, auto& v) { config.scoring = Scoring::parse(v); }},
      {"render.width", [&](auto& k, auto& v) { r.width = parse_number<int>(k, v); }},
      {"render.height", [&](auto& k, auto& v) { r.height = parse_number<int>(k, v); }},
      {"render.marker_radius", [&](auto& k, auto& v) { r.marker_radius = parse_number<double>(k, v); }},
      {"render.line_thickness", [&](auto& k, auto& v) { r.line_thickness = parse_number<int>(k, v); }},
      {"render.density_bins", [&](auto& k, auto& v) { r.density_bins = parse_number<int>(k, v); }},
      {"render.density_sigma", [&](auto& k, auto& v) { r.density_sigma = parse_number<double>(k, v); }},
      {"train.learning_rate", [&](auto& k, auto& v) { t.learning_rate = parse_number<double>(k, v); }},
      {"train.momentum", [&](auto& k, auto& v) { t.momentum = parse_number<double>(k, v); }},
      {"train.batch_size", [&](auto& k, auto& v) { t.batch_size = parse_number<int>(k, v); }},
      {"train.epochs", [&](auto& k, auto& v) { t.epochs = parse_number<int>(k, v); }},
      {"train.seed", [&](auto& k, auto& v) { t.seed = parse_number<std::uint64_t>(k, v); }},
      {"train.smooth_l1_beta", [&](auto& k, auto& v) { t.smooth_l1_beta = parse_number<double>(k, v); }},
      {"train.weight_epsilon", [&](auto& k, auto& v) { t.weight_epsilon = parse_number<double>(k, v); }},
      {"train.max_grad_norm", [&](auto& k, auto& v) { t.max_grad_norm = parse_number<double>(k, v); }},
      {"train.keep_best", [&](auto& k, auto& v) { t.keep_best = parse_bool(k, v); }},
  };
  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(Errc::InvalidConfig, "unknown config key '" + key + "'");
    it->second(key, value);
  }
}

void apply_environment(PipelineConfig& config) {
  if (const char* port = std::getenv("VIZRANK_PORT"); port && *port) {
    config.port = parse_number<int>("VIZRANK_PORT", port);
  }
  if (const char* dir = std::getenv("VIZRANK_DATA_DIR"); dir && *dir) config.data_dir = dir;
}

}  // namespace vizrank
