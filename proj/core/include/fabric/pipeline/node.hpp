#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fabric/model/catalog.hpp"
#include "fabric/model/vocabulary.hpp"
#include "fabric/store/datastore.hpp"
#include "fabric/table.hpp"

namespace fabric::pipeline {

enum class PortKind { table, blob, scalar };

std::string_view to_string(PortKind kind);
std::optional<PortKind> port_kind_from_string(std::string_view text);

struct Port {
  std::string name;
  PortKind kind = PortKind::table;

  bool operator==(const Port&) const = default;
};

enum class ParamKind { string_kind, integer_kind, float_kind, boolean_kind };

std::string_view to_string(ParamKind kind);
std::optional<ParamKind> param_kind_from_string(std::string_view text);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::string_kind;
  std::optional<Json> default_value;

  bool required() const { return !default_value.has_value(); }
  bool operator==(const ParamSpec&) const = default;
};

bool param_value_matches(ParamKind kind, const Json& value);

// Immutable description of a reusable node: what it consumes, what it
// produces, and how it is parameterized. The entrypoint names logic
// registered in the node registry; language bindings live behind it.
struct NodeManifest {
  std::string node_id;
  std::string version;  // semantic version, e.g. "1.0.0"
  std::string entrypoint;
  std::vector<Port> input_ports;
  std::vector<Port> output_ports;
  std::vector<ParamSpec> parameters;
  std::vector<std::string> env_requirements;

  std::string key() const { return node_id + "@" + version; }
  const Port* find_input(std::string_view name) const;
  const Port* find_output(std::string_view name) const;
  const ParamSpec* find_parameter(std::string_view name) const;

  Json to_json() const;
  static NodeManifest from_json(const Json& doc);
  bool operator==(const NodeManifest&) const = default;
};

// A value flowing through one port.
struct Artifact {
  PortKind kind = PortKind::table;
  Table table;
  std::string blob;
  Json scalar;

  static Artifact make_table(Table t);
  static Artifact make_blob(std::string bytes);
  static Artifact make_scalar(Json value);
};

// Everything a node sees while running. Nodes are deterministic
// functions of (inputs, params) plus read-only store access.
struct NodeContext {
  Json params = Json::object();
  store::DataStore* store = nullptr;
  model::SchemaCatalog* schemas = nullptr;
  model::VocabularyRegistry* vocabulary = nullptr;
  std::map<std::string, Artifact> inputs;
  std::map<std::string, Artifact> outputs;
  std::vector<std::string> consumed_entry_ids;  // source entries, for outbound marking
  std::string study_hint;                       // reader nodes name the study they read
};

using NodeLogic = std::function<void(NodeContext&)>;

// Shared node catalog. node_id+version is immutable: re-registering
// identical content is a no-op, different content is a conflict.
class NodeRegistry {
 public:
  void register_node(const NodeManifest& manifest, NodeLogic logic);

  const NodeManifest* find(const std::string& node_id, const std::string& version) const;
  const NodeLogic* logic(const std::string& node_id, const std::string& version) const;
  std::vector<NodeManifest> list() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::pair<NodeManifest, NodeLogic>> nodes_;
};

}  // namespace fabric::pipeline
