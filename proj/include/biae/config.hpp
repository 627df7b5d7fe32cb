#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "biae/train.hpp"

namespace biae {

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  int turn_cap = 8;
  std::string persist_dir;  // empty: in-memory only
};

struct AppConfig {
  std::string data_dir = "data/sharc1-official/json";
  std::string labels = "labels.jsonl";
  std::string checkpoint = "checkpoint.json";
  std::string generator = "template";
  TrainConfig train;
  ServeConfig serve;
};

inline constexpr const char* kConfigEnvVar = "BIAE_CONFIG";

AppConfig config_from_json(const nlohmann::json& j, AppConfig base = {});
nlohmann::json to_json(const AppConfig& config);

// `explicit_path` wins over BIAE_CONFIG; with neither, defaults.
AppConfig load_config(const std::optional<std::filesystem::path>& explicit_path = std::nullopt);

}  // namespace biae
