#include "fabric/pipeline/node.hpp"

#include <regex>
#include <set>

#include "fabric/error.hpp"
#include "fabric/model/field.hpp"

namespace fabric::pipeline {

std::string_view to_string(PortKind kind) {
  switch (kind) {
    case PortKind::table: return "table";
    case PortKind::blob: return "blob";
    case PortKind::scalar: return "scalar";
  }
  return "table";
}

std::optional<PortKind> port_kind_from_string(std::string_view text) {
  if (text == "table") return PortKind::table;
  if (text == "blob") return PortKind::blob;
  if (text == "scalar") return PortKind::scalar;
  return std::nullopt;
}

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::string_kind: return "string";
    case ParamKind::integer_kind: return "integer";
    case ParamKind::float_kind: return "float";
    case ParamKind::boolean_kind: return "boolean";
  }
  return "string";
}

std::optional<ParamKind> param_kind_from_string(std::string_view text) {
  if (text == "string") return ParamKind::string_kind;
  if (text == "integer") return ParamKind::integer_kind;
  if (text == "float") return ParamKind::float_kind;
  if (text == "boolean") return ParamKind::boolean_kind;
  return std::nullopt;
}

bool param_value_matches(ParamKind kind, const Json& value) {
  switch (kind) {
    case ParamKind::string_kind: return value.is_string();
    case ParamKind::integer_kind: return value.is_number_integer();
    case ParamKind::float_kind: return value.is_number();
    case ParamKind::boolean_kind: return value.is_boolean();
  }
  return false;
}

const Port* NodeManifest::find_input(std::string_view name) const {
  for (const auto& port : input_ports) {
    if (port.name == name) return &port;
  }
  return nullptr;
}

const Port* NodeManifest::find_output(std::string_view name) const {
  for (const auto& port : output_ports) {
    if (port.name == name) return &port;
  }
  return nullptr;
}

const ParamSpec* NodeManifest::find_parameter(std::string_view name) const {
  for (const auto& param : parameters) {
    if (param.name == name) return &param;
  }
  return nullptr;
}

Json NodeManifest::to_json() const {
  Json ports_in = Json::array();
  for (const auto& p : input_ports) {
    ports_in.push_back({{"name", p.name}, {"kind", std::string(to_string(p.kind))}});
  }
  Json ports_out = Json::array();
  for (const auto& p : output_ports) {
    ports_out.push_back({{"name", p.name}, {"kind", std::string(to_string(p.kind))}});
  }
  Json params = Json::array();
  for (const auto& p : parameters) {
    Json spec{{"name", p.name}, {"kind", std::string(to_string(p.kind))}};
    if (p.default_value) spec["default"] = *p.default_value;
    params.push_back(std::move(spec));
  }
  return Json{{"node_id", node_id},
              {"version", version},
              {"entrypoint", entrypoint},
              {"input_ports", std::move(ports_in)},
              {"output_ports", std::move(ports_out)},
              {"parameters", std::move(params)},
              {"env_requirements", env_requirements}};
}

NodeManifest NodeManifest::from_json(const Json& doc) {
  NodeManifest m;
  try {
    m.node_id = doc.at("node_id").get<std::string>();
    m.version = doc.at("version").get<std::string>();
    m.entrypoint = doc.at("entrypoint").get<std::string>();
    auto parse_ports = [](const Json& list) {
      std::vector<Port> ports;
      for (const auto& item : list) {
        auto kind = port_kind_from_string(item.at("kind").get<std::string>());
        if (!kind) {
          throw Error(ErrorCode::invalid_manifest,
                      "unknown port kind '" + item.at("kind").get<std::string>() + "'");
        }
        ports.push_back({item.at("name").get<std::string>(), *kind});
      }
      return ports;
    };
    m.input_ports = parse_ports(doc.value("input_ports", Json::array()));
    m.output_ports = parse_ports(doc.value("output_ports", Json::array()));
    for (const auto& item : doc.value("parameters", Json::array())) {
      ParamSpec param;
      param.name = item.at("name").get<std::string>();
      auto kind = param_kind_from_string(item.at("kind").get<std::string>());
      if (!kind) {
        throw Error(ErrorCode::invalid_manifest,
                    "unknown parameter kind '" + item.at("kind").get<std::string>() + "'");
      }
      param.kind = *kind;
      if (item.contains("default")) param.default_value = item.at("default");
      m.parameters.push_back(std::move(param));
    }
    m.env_requirements =
        doc.value("env_requirements", Json::array()).get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::invalid_manifest, std::string("bad node manifest: ") + e.what());
  }
  return m;
}

Artifact Artifact::make_table(Table t) {
  Artifact a;
  a.kind = PortKind::table;
  a.table = std::move(t);
  return a;
}

Artifact Artifact::make_blob(std::string bytes) {
  Artifact a;
  a.kind = PortKind::blob;
  a.blob = std::move(bytes);
  return a;
}

Artifact Artifact::make_scalar(Json value) {
  Artifact a;
  a.kind = PortKind::scalar;
  a.scalar = std::move(value);
  return a;
}

namespace {

void check_manifest(const NodeManifest& m) {
  if (!model::is_identifier(m.node_id)) {
    throw Error(ErrorCode::invalid_manifest, "node_id '" + m.node_id + "' is not an identifier");
  }
  static const std::regex semver(R"(^\d+\.\d+\.\d+$)");
  if (!std::regex_match(m.version, semver)) {
    throw Error(ErrorCode::invalid_manifest,
                "version '" + m.version + "' is not MAJOR.MINOR.PATCH");
  }
  if (m.entrypoint.empty()) {
    throw Error(ErrorCode::invalid_manifest, "entrypoint must be non-empty");
  }
  auto check_ports = [&](const std::vector<Port>& ports, const char* side) {
    std::set<std::string> seen;
    for (const auto& port : ports) {
      if (!model::is_identifier(port.name)) {
        throw Error(ErrorCode::invalid_manifest,
                    std::string(side) + " port '" + port.name + "' is not an identifier");
      }
      if (!seen.insert(port.name).second) {
        throw Error(ErrorCode::invalid_manifest,
                    "duplicate " + std::string(side) + " port '" + port.name + "'");
      }
    }
  };
  check_ports(m.input_ports, "input");
  check_ports(m.output_ports, "output");
  std::set<std::string> params;
  for (const auto& param : m.parameters) {
    if (!model::is_identifier(param.name)) {
      throw Error(ErrorCode::invalid_manifest,
                  "parameter '" + param.name + "' is not an identifier");
    }
    if (!params.insert(param.name).second) {
      throw Error(ErrorCode::invalid_manifest, "duplicate parameter '" + param.name + "'");
    }
    if (param.default_value && !param_value_matches(param.kind, *param.default_value)) {
      throw Error(ErrorCode::invalid_manifest,
                  "default for '" + param.name + "' does not match its kind");
    }
  }
}

}  // namespace

void NodeRegistry::register_node(const NodeManifest& manifest, NodeLogic logic) {
  check_manifest(manifest);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = nodes_.find(manifest.key());
  if (it != nodes_.end()) {
    if (it->second.first == manifest) return;  // identical re-registration
    throw Error(ErrorCode::conflict,
                manifest.key() + " is already registered with different content");
  }
  nodes_.emplace(manifest.key(), std::make_pair(manifest, std::move(logic)));
}

const NodeManifest* NodeRegistry::find(const std::string& node_id,
                                       const std::string& version) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = nodes_.find(node_id + "@" + version);
  return it == nodes_.end() ? nullptr : &it->second.first;
}

const NodeLogic* NodeRegistry::logic(const std::string& node_id,
                                     const std::string& version) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = nodes_.find(node_id + "@" + version);
  return it == nodes_.end() ? nullptr : &it->second.second;
}

std::vector<NodeManifest> NodeRegistry::list() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<NodeManifest> out;
  for (const auto& [key, value] : nodes_) {
    (void)key;
    out.push_back(value.first);
  }
  return out;
}

}  // namespace fabric::pipeline
