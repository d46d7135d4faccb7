#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace fabric {

// Operator configuration. Sources, strongest first: explicit flags,
// a config file (--config or $FABRIC_CONFIG), built-in defaults.
struct Config {
  std::filesystem::path store_root = "fabric-store";
  std::string listen_addr = "127.0.0.1:8080";
  std::string environment = "dev";
  std::filesystem::path key_file;  // bearer-token key material; empty = auth unusable

  static Config from_json(const nlohmann::json& doc);
  // explicit_path wins over $FABRIC_CONFIG; absent both, defaults.
  static Config load(const std::optional<std::filesystem::path>& explicit_path);
};

}  // namespace fabric
