#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fabric/model/catalog.hpp"
#include "fabric/model/vocabulary.hpp"
#include "fabric/pipeline/node.hpp"
#include "fabric/pipeline/spec.hpp"
#include "fabric/store/datastore.hpp"
#include "fabric/time.hpp"

namespace fabric::pipeline {

enum class NodeStatus { succeeded, failed, skipped };

std::string_view to_string(NodeStatus status);

struct NodeOutcome {
  std::string instance_id;
  NodeStatus status = NodeStatus::succeeded;
  int attempts = 0;
  std::string error;                       // set when status == failed
  std::string skipped_on;                  // failed upstream instance when skipped
  std::map<std::string, store::BlobRef> artifacts;  // port name -> persisted artifact

  Json to_json() const;
  static NodeOutcome from_json(const Json& doc);
};

struct PublishedDataset {
  std::string dataset_id;
  std::string environment;
  std::string instance_id;
  std::string port;

  Json to_json() const;
  static PublishedDataset from_json(const Json& doc);
};

struct RunRecord {
  std::string run_id;
  std::string pipeline_id;
  std::string pipeline_version;
  bool succeeded = false;
  std::string error;  // run-level failure (node failure, output gate)
  Instant started_at;
  Instant finished_at;
  std::vector<NodeOutcome> outcomes;
  std::vector<PublishedDataset> published;
  std::vector<std::string> consumed_entry_ids;

  const NodeOutcome* outcome_for(const std::string& instance_id) const;

  Json to_json() const;
  static RunRecord from_json(const Json& doc);
};

struct ExecuteOptions {
  std::string environment = "dev";
  std::string study_id;                    // discovery hint; nodes may refine it
  std::string dataset_id;                  // default: CODE schema id of the binding
  std::map<std::string, Json> overrides;   // "instance.param" -> value
  bool dry_run = false;                    // plan + validate only, no node runs
};

// Plans and executes validated pipelines against a datastore.
class Engine {
 public:
  Engine(store::DataStore& store, model::SchemaCatalog& schemas,
         model::VocabularyRegistry& vocabulary, const NodeRegistry& nodes,
         std::function<Instant()> clock = now_utc);

  // Stage layers in execution order; lexicographic within a stage.
  std::vector<std::vector<std::string>> plan(const PipelineSpec& spec) const;

  RunRecord execute(const PipelineSpec& spec, const ExecuteOptions& options = {});

 private:
  store::DataStore& store_;
  model::SchemaCatalog& schemas_;
  model::VocabularyRegistry& vocabulary_;
  const NodeRegistry& nodes_;
  std::function<Instant()> clock_;
};

// Discovery sidecar for a published dataset: enough to find and interpret it,
// nothing that identifies participants.
Json build_discovery_sidecar(const model::CodeSchema& schema, const Table& table,
                             const PipelineSpec& spec, const std::string& dataset_id,
                             const std::string& run_id, Instant generated_at);

}  // namespace fabric::pipeline
