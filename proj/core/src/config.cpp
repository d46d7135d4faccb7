#include "fabric/config.hpp"

#include <cstdlib>

#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"

namespace fabric {

Config Config::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::invalid_config, "config must be an object");
  }
  Config cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "store_root") {
      cfg.store_root = value.get<std::string>();
    } else if (key == "listen_addr") {
      cfg.listen_addr = value.get<std::string>();
    } else if (key == "environment") {
      cfg.environment = value.get<std::string>();
    } else if (key == "key_file") {
      cfg.key_file = value.get<std::string>();
    } else {
      throw Error(ErrorCode::invalid_config, "unknown config key '" + key + "'");
    }
  }
  if (cfg.environment.empty()) {
    throw Error(ErrorCode::invalid_config, "environment must be non-empty");
  }
  return cfg;
}

Config Config::load(const std::optional<std::filesystem::path>& explicit_path) {
  std::filesystem::path file;
  if (explicit_path) {
    file = *explicit_path;
  } else if (const char* env = std::getenv("FABRIC_CONFIG"); env != nullptr && *env != '\0') {
    file = env;
  } else {
    return Config{};
  }
  if (!std::filesystem::exists(file)) {
    throw Error(ErrorCode::invalid_config, "config file " + file.string() + " does not exist");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_config, "config file " + file.string() + ": " + e.what());
  }
  return from_json(doc);
}

}  // namespace fabric
