#include "fabric/pipeline/spec.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fabric/error.hpp"
#include "fabric/model/field.hpp"
#include "fabric/pipeline/graph.hpp"

namespace fabric::pipeline {

namespace {

Json node_to_json(const NodeInstanceSpec& node) {
  return Json{{"instance_id", node.instance_id},
              {"node", node.node_id + "@" + node.version},
              {"parameters", node.parameters}};
}

Json edges_to_json(const std::vector<EdgeSpec>& edges) {
  Json out = Json::array();
  for (const auto& e : edges) {
    out.push_back({{"from", e.from_instance + "." + e.from_port},
                   {"to", e.to_instance + "." + e.to_port}});
  }
  return out;
}

Json bindings_to_json(const std::vector<OutputBindingSpec>& bindings) {
  Json out = Json::object();
  for (const auto& b : bindings) {
    out[b.instance_id + "." + b.port] = b.code_schema_ref.display();
  }
  return out;
}

// "a.b" -> (a, b); anything else is a malformed reference.
std::pair<std::string, std::string> split_ref(const std::string& ref, const char* what) {
  const auto dot = ref.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size() ||
      ref.find('.', dot + 1) != std::string::npos) {
    throw Error(ErrorCode::parse_error,
                std::string(what) + " reference '" + ref + "' must be instance.port");
  }
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

// "node_id@1.2.3" -> (node_id, 1.2.3)
std::pair<std::string, std::string> split_node_ref(const std::string& ref) {
  const auto at = ref.find('@');
  if (at == std::string::npos || at == 0 || at + 1 == ref.size()) {
    throw Error(ErrorCode::parse_error,
                "node reference '" + ref + "' must be node_id@version");
  }
  return {ref.substr(0, at), ref.substr(at + 1)};
}

// "schema_id@vN" -> SchemaRef
model::SchemaRef split_schema_ref(const std::string& ref) {
  const auto parsed = model::schema_ref_from_display(ref);
  if (!parsed) {
    throw Error(ErrorCode::parse_error,
                "schema reference '" + ref + "' must be schema_id@vN");
  }
  return *parsed;
}

}  // namespace

Json PipelineSpec::to_json() const {
  Json nodes_json = Json::array();
  for (const auto& node : nodes) nodes_json.push_back(node_to_json(node));
  return Json{{"pipeline_id", pipeline_id},
              {"version", version},
              {"nodes", std::move(nodes_json)},
              {"edges", edges_to_json(edges)},
              {"output_binding", bindings_to_json(output_bindings)}};
}

Json PipelineSpec::canonical_json() const {
  PipelineSpec sorted = *this;
  std::sort(sorted.nodes.begin(), sorted.nodes.end(),
            [](const auto& a, const auto& b) { return a.instance_id < b.instance_id; });
  std::sort(sorted.edges.begin(), sorted.edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.from_instance, a.from_port, a.to_instance, a.to_port) <
           std::tie(b.from_instance, b.from_port, b.to_instance, b.to_port);
  });
  std::sort(sorted.output_bindings.begin(), sorted.output_bindings.end(),
            [](const auto& a, const auto& b) {
              return std::tie(a.instance_id, a.port) < std::tie(b.instance_id, b.port);
            });
  return sorted.to_json();
}

PipelineSpec load_pipeline(const std::string& document, const NodeRegistry& registry) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("pipeline document: ") + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::parse_error, "pipeline document must be an object");
  }
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "pipeline_id" && key != "version" && key != "nodes" && key != "edges" &&
        key != "output_binding") {
      throw Error(ErrorCode::parse_error, "unknown pipeline key '" + key + "'");
    }
  }

  PipelineSpec spec;
  try {
    spec.pipeline_id = doc.at("pipeline_id").get<std::string>();
    spec.version = doc.at("version").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("pipeline header: ") + e.what());
  }
  if (!model::is_identifier(spec.pipeline_id)) {
    throw Error(ErrorCode::parse_error,
                "pipeline_id '" + spec.pipeline_id + "' is not an identifier");
  }
  if (spec.version.empty()) {
    throw Error(ErrorCode::parse_error, "pipeline version must be non-empty");
  }

  if (!doc.contains("nodes") || !doc.at("nodes").is_array() || doc.at("nodes").empty()) {
    throw Error(ErrorCode::parse_error, "pipeline needs a non-empty nodes array");
  }
  std::set<std::string> instance_ids;
  for (const auto& item : doc.at("nodes")) {
    NodeInstanceSpec node;
    try {
      node.instance_id = item.at("instance_id").get<std::string>();
      auto [node_id, version] = split_node_ref(item.at("node").get<std::string>());
      node.node_id = node_id;
      node.version = version;
      node.parameters = item.value("parameters", Json::object());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::parse_error, std::string("pipeline node: ") + e.what());
    }
    if (!model::is_identifier(node.instance_id)) {
      throw Error(ErrorCode::parse_error,
                  "instance_id '" + node.instance_id + "' is not an identifier");
    }
    if (!instance_ids.insert(node.instance_id).second) {
      throw Error(ErrorCode::parse_error, "duplicate instance_id '" + node.instance_id + "'");
    }
    if (!node.parameters.is_object()) {
      throw Error(ErrorCode::parse_error,
                  "parameters of '" + node.instance_id + "' must be an object");
    }
    spec.nodes.push_back(std::move(node));
  }

  // Node references and parameter assignments.
  std::map<std::string, const NodeManifest*> manifests;
  for (const auto& node : spec.nodes) {
    const NodeManifest* manifest = registry.find(node.node_id, node.version);
    if (manifest == nullptr) {
      throw Error(ErrorCode::unknown_node,
                  "node '" + node.node_id + "@" + node.version + "' (instance '" +
                      node.instance_id + "') is not registered");
    }
    manifests[node.instance_id] = manifest;
    for (const auto& [name, value] : node.parameters.items()) {
      const ParamSpec* param = manifest->find_parameter(name);
      if (param == nullptr) {
        throw Error(ErrorCode::parse_error,
                    "instance '" + node.instance_id + "' assigns unknown parameter '" + name +
                        "'");
      }
      if (!param_value_matches(param->kind, value)) {
        throw Error(ErrorCode::parse_error,
                    "parameter '" + name + "' of '" + node.instance_id + "' must be " +
                        std::string(to_string(param->kind)));
      }
    }
    for (const auto& param : manifest->parameters) {
      if (param.required() && !node.parameters.contains(param.name)) {
        throw Error(ErrorCode::parse_error,
                    "instance '" + node.instance_id + "' misses required parameter '" +
                        param.name + "'");
      }
    }
  }

  // Edges: endpoint existence, port kinds, single writer per input.
  std::set<std::pair<std::string, std::string>> bound_inputs;
  for (const auto& item : doc.value("edges", Json::array())) {
    EdgeSpec edge;
    try {
      auto [fi, fp] = split_ref(item.at("from").get<std::string>(), "edge from");
      auto [ti, tp] = split_ref(item.at("to").get<std::string>(), "edge to");
      edge = {fi, fp, ti, tp};
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::parse_error, std::string("pipeline edge: ") + e.what());
    }
    const std::string display =
        edge.from_instance + "." + edge.from_port + " -> " + edge.to_instance + "." +
        edge.to_port;
    auto from_it = manifests.find(edge.from_instance);
    auto to_it = manifests.find(edge.to_instance);
    if (from_it == manifests.end() || to_it == manifests.end()) {
      throw Error(ErrorCode::parse_error, "edge " + display + " references unknown instance");
    }
    const Port* from_port = from_it->second->find_output(edge.from_port);
    const Port* to_port = to_it->second->find_input(edge.to_port);
    if (from_port == nullptr || to_port == nullptr) {
      throw Error(ErrorCode::parse_error, "edge " + display + " references unknown port");
    }
    if (from_port->kind != to_port->kind) {
      throw Error(ErrorCode::port_kind_mismatch,
                  "edge " + display + " connects " + std::string(to_string(from_port->kind)) +
                      " to " + std::string(to_string(to_port->kind)));
    }
    if (!bound_inputs.insert({edge.to_instance, edge.to_port}).second) {
      throw Error(ErrorCode::parse_error,
                  "input " + edge.to_instance + "." + edge.to_port + " has two incoming edges");
    }
    spec.edges.push_back(std::move(edge));
  }
  for (const auto& node : spec.nodes) {
    for (const auto& port : manifests[node.instance_id]->input_ports) {
      if (!bound_inputs.count({node.instance_id, port.name})) {
        throw Error(ErrorCode::parse_error,
                    "input " + node.instance_id + "." + port.name + " is unconnected");
      }
    }
  }

  Graph graph;
  for (const auto& node : spec.nodes) graph.add_node(node.instance_id);
  for (const auto& edge : spec.edges) graph.add_edge(edge.from_instance, edge.to_instance);
  if (graph.has_cycle()) {
    throw Error(ErrorCode::cycle_detected, "pipeline graph contains a cycle");
  }

  const Json bindings = doc.value("output_binding", Json::object());
  if (!bindings.is_object() || bindings.empty()) {
    throw Error(ErrorCode::unbound_output,
                "at least one output must be bound to a CODE schema");
  }
  for (const auto& [port_ref, schema_ref] : bindings.items()) {
    OutputBindingSpec binding;
    auto [instance, port] = split_ref(port_ref, "output binding");
    binding.instance_id = instance;
    binding.port = port;
    if (!schema_ref.is_string()) {
      throw Error(ErrorCode::parse_error, "output binding '" + port_ref + "' must name a schema");
    }
    binding.code_schema_ref = split_schema_ref(schema_ref.get<std::string>());
    auto it = manifests.find(binding.instance_id);
    if (it == manifests.end()) {
      throw Error(ErrorCode::parse_error,
                  "output binding '" + port_ref + "' references unknown instance");
    }
    const Port* bound = it->second->find_output(binding.port);
    if (bound == nullptr) {
      throw Error(ErrorCode::parse_error,
                  "output binding '" + port_ref + "' references unknown port");
    }
    if (bound->kind != PortKind::table) {
      throw Error(ErrorCode::port_kind_mismatch,
                  "output binding '" + port_ref + "' must bind a table port");
    }
    spec.output_bindings.push_back(std::move(binding));
  }

  return spec;
}

std::string export_pipeline(const PipelineSpec& spec) {
  const Json canonical = spec.canonical_json();

  // Per-task input map: input port -> upstream instance.port.
  std::map<std::string, Json> inputs;
  for (const auto& edge : spec.edges) {
    inputs[edge.to_instance][edge.to_port] = edge.from_instance + "." + edge.from_port;
  }

  Json tasks = Json::array();
  for (const auto& node : canonical.at("nodes")) {
    const std::string id = node.at("instance_id").get<std::string>();
    tasks.push_back({{"id", id},
                     {"node", node.at("node")},
                     {"image", "placeholder/" + node.at("node").get<std::string>()},
                     {"parameters", node.at("parameters")},
                     {"inputs", inputs.count(id) ? inputs[id] : Json::object()}});
  }

  std::set<std::pair<std::string, std::string>> dep_set;
  for (const auto& edge : spec.edges) {
    dep_set.insert({edge.from_instance, edge.to_instance});
  }
  Json deps = Json::array();
  for (const auto& [up, down] : dep_set) {
    deps.push_back({{"upstream", up}, {"downstream", down}});
  }

  Json doc{{"format", "generic-dag/v1"},
           {"pipeline_id", spec.pipeline_id},
           {"version", spec.version},
           {"tasks", std::move(tasks)},
           {"deps", std::move(deps)},
           {"output_binding", canonical.at("output_binding")}};
  return doc.dump(2) + "\n";
}

PipelineSpec import_pipeline(const std::string& document, const NodeRegistry& registry) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("export document: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "generic-dag/v1") {
    throw Error(ErrorCode::parse_error, "not a generic-dag/v1 document");
  }

  Json pipeline_doc;
  try {
    pipeline_doc["pipeline_id"] = doc.at("pipeline_id");
    pipeline_doc["version"] = doc.at("version");
    Json nodes = Json::array();
    Json edges = Json::array();
    for (const auto& task : doc.at("tasks")) {
      nodes.push_back({{"instance_id", task.at("id")},
                       {"node", task.at("node")},
                       {"parameters", task.at("parameters")}});
      for (const auto& [port, source] : task.at("inputs").items()) {
        edges.push_back({{"from", source.get<std::string>()},
                         {"to", task.at("id").get<std::string>() + "." + port}});
      }
    }
    pipeline_doc["nodes"] = std::move(nodes);
    pipeline_doc["edges"] = std::move(edges);
    pipeline_doc["output_binding"] = doc.at("output_binding");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("export document: ") + e.what());
  }
  return load_pipeline(pipeline_doc.dump(), registry);
}

}  // namespace fabric::pipeline
