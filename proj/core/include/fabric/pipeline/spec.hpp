#pragma once

#include <string>
#include <vector>

#include "fabric/model/schema.hpp"
#include "fabric/pipeline/node.hpp"

namespace fabric::pipeline {

struct NodeInstanceSpec {
  std::string instance_id;
  std::string node_id;
  std::string version;
  Json parameters = Json::object();

  bool operator==(const NodeInstanceSpec&) const = default;
};

struct EdgeSpec {
  std::string from_instance;
  std::string from_port;
  std::string to_instance;
  std::string to_port;

  bool operator==(const EdgeSpec&) const = default;
};

struct OutputBindingSpec {
  std::string instance_id;
  std::string port;
  model::SchemaRef code_schema_ref;

  bool operator==(const OutputBindingSpec&) const = default;
};

struct PipelineSpec {
  std::string pipeline_id;
  std::string version;
  std::vector<NodeInstanceSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::vector<OutputBindingSpec> output_bindings;

  Json to_json() const;  // document form, element order preserved

  // Canonical form: nodes by instance_id, edges by endpoints, bindings by
  // port ref. Structural equality means equal canonical JSON.
  Json canonical_json() const;
};

// Parses and fully validates a pipeline document against the registry.
// Error codes, in check order: PARSE_ERROR (shape, parameters, edge
// references), UNKNOWN_NODE, PORT_KIND_MISMATCH, CYCLE_DETECTED,
// UNBOUND_OUTPUT. Diagnostics name the offending node or edge.
PipelineSpec load_pipeline(const std::string& document, const NodeRegistry& registry);

// Self-contained DAG document for external workflow engines: tasks[] with
// parameters and per-port inputs, plus node-level deps[].
std::string export_pipeline(const PipelineSpec& spec);

// Rebuilds a PipelineSpec from an export document and re-validates it.
// import(export(p)) is structurally equal to canonical(p).
PipelineSpec import_pipeline(const std::string& document, const NodeRegistry& registry);

}  // namespace fabric::pipeline
