#include "biae/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "biae/errors.hpp"

namespace biae {

AppConfig config_from_json(const nlohmann::json& j, AppConfig c) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const char* kKnown[] = {"data_dir", "labels", "checkpoint", "generator", "train", "serve"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(std::begin(kKnown), std::end(kKnown), it.key()) == std::end(kKnown))
      throw ValidationError("unknown config key: " + it.key());
  try {
    c.data_dir = j.value("data_dir", c.data_dir);
    c.labels = j.value("labels", c.labels);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.generator = j.value("generator", c.generator);
    if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train);
    if (j.contains("serve")) {
      const auto& s = j["serve"];
      c.serve.host = s.value("host", c.serve.host);
      c.serve.port = s.value("port", c.serve.port);
      c.serve.turn_cap = s.value("turn_cap", c.serve.turn_cap);
      c.serve.persist_dir = s.value("persist_dir", c.serve.persist_dir);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config: ") + e.what());
  }
  c.train.validate();
  return c;
}

nlohmann::json to_json(const AppConfig& c) {
  return {{"data_dir", c.data_dir},
          {"labels", c.labels},
          {"checkpoint", c.checkpoint},
          {"generator", c.generator},
          {"train", to_json(c.train)},
          {"serve",
           {{"host", c.serve.host},
            {"port", c.serve.port},
            {"turn_cap", c.serve.turn_cap},
            {"persist_dir", c.serve.persist_dir}}}};
}

AppConfig load_config(const std::optional<std::filesystem::path>& explicit_path) {
  std::filesystem::path path;
  if (explicit_path) {
    path = *explicit_path;
  } else if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    path = env;
  } else {
    return {};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return config_from_json(nlohmann::json::parse(buf.str()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace biae
