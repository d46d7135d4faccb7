#include "fabric/pipeline/engine.hpp"

#include <algorithm>
#include <set>

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/model/validation.hpp"
#include "fabric/pipeline/graph.hpp"

namespace fabric::pipeline {

std::string_view to_string(NodeStatus status) {
  switch (status) {
    case NodeStatus::succeeded: return "succeeded";
    case NodeStatus::failed: return "failed";
    case NodeStatus::skipped: return "skipped";
  }
  return "failed";
}

namespace {

NodeStatus node_status_from_string(const std::string& text) {
  if (text == "succeeded") return NodeStatus::succeeded;
  if (text == "failed") return NodeStatus::failed;
  if (text == "skipped") return NodeStatus::skipped;
  throw Error(ErrorCode::parse_error, "unknown node status '" + text + "'");
}

}  // namespace

Json NodeOutcome::to_json() const {
  Json artifacts_json = Json::object();
  for (const auto& [port, ref] : artifacts) artifacts_json[port] = ref.to_json();
  return Json{{"instance_id", instance_id}, {"status", std::string(to_string(status))},
              {"attempts", attempts},       {"error", error},
              {"skipped_on", skipped_on},   {"artifacts", std::move(artifacts_json)}};
}

NodeOutcome NodeOutcome::from_json(const Json& doc) {
  NodeOutcome out;
  out.instance_id = doc.at("instance_id").get<std::string>();
  out.status = node_status_from_string(doc.at("status").get<std::string>());
  out.attempts = doc.at("attempts").get<int>();
  out.error = doc.value("error", "");
  out.skipped_on = doc.value("skipped_on", "");
  for (const auto& [port, ref] : doc.at("artifacts").items()) {
    out.artifacts[port] = store::BlobRef::from_json(ref);
  }
  return out;
}

Json PublishedDataset::to_json() const {
  return Json{{"dataset_id", dataset_id},
              {"environment", environment},
              {"instance_id", instance_id},
              {"port", port}};
}

PublishedDataset PublishedDataset::from_json(const Json& doc) {
  return {doc.at("dataset_id").get<std::string>(), doc.at("environment").get<std::string>(),
          doc.at("instance_id").get<std::string>(), doc.at("port").get<std::string>()};
}

const NodeOutcome* RunRecord::outcome_for(const std::string& instance_id) const {
  for (const auto& outcome : outcomes) {
    if (outcome.instance_id == instance_id) return &outcome;
  }
  return nullptr;
}

Json RunRecord::to_json() const {
  Json outcomes_json = Json::array();
  for (const auto& outcome : outcomes) outcomes_json.push_back(outcome.to_json());
  Json published_json = Json::array();
  for (const auto& dataset : published) published_json.push_back(dataset.to_json());
  return Json{{"run_id", run_id},
              {"pipeline_id", pipeline_id},
              {"pipeline_version", pipeline_version},
              {"succeeded", succeeded},
              {"error", error},
              {"started_at", started_at.to_rfc3339()},
              {"finished_at", finished_at.to_rfc3339()},
              {"outcomes", std::move(outcomes_json)},
              {"published", std::move(published_json)},
              {"consumed_entry_ids", consumed_entry_ids}};
}

RunRecord RunRecord::from_json(const Json& doc) {
  RunRecord record;
  record.run_id = doc.at("run_id").get<std::string>();
  record.pipeline_id = doc.at("pipeline_id").get<std::string>();
  record.pipeline_version = doc.at("pipeline_version").get<std::string>();
  record.succeeded = doc.at("succeeded").get<bool>();
  record.error = doc.value("error", "");
  auto started = parse_rfc3339(doc.at("started_at").get<std::string>());
  auto finished = parse_rfc3339(doc.at("finished_at").get<std::string>());
  if (!started || !finished) {
    throw Error(ErrorCode::parse_error, "run record has bad timestamps");
  }
  record.started_at = *started;
  record.finished_at = *finished;
  for (const auto& item : doc.at("outcomes")) {
    record.outcomes.push_back(NodeOutcome::from_json(item));
  }
  for (const auto& item : doc.at("published")) {
    record.published.push_back(PublishedDataset::from_json(item));
  }
  record.consumed_entry_ids = doc.at("consumed_entry_ids").get<std::vector<std::string>>();
  return record;
}

Engine::Engine(store::DataStore& store, model::SchemaCatalog& schemas,
               model::VocabularyRegistry& vocabulary, const NodeRegistry& nodes,
               std::function<Instant()> clock)
    : store_(store), schemas_(schemas), vocabulary_(vocabulary), nodes_(nodes),
      clock_(std::move(clock)) {}

std::vector<std::vector<std::string>> Engine::plan(const PipelineSpec& spec) const {
  Graph graph;
  for (const auto& node : spec.nodes) graph.add_node(node.instance_id);
  for (const auto& edge : spec.edges) graph.add_edge(edge.from_instance, edge.to_instance);
  return graph.stages();
}

namespace {

std::string content_type_for(PortKind kind) {
  switch (kind) {
    case PortKind::table: return "text/csv";
    case PortKind::blob: return "application/octet-stream";
    case PortKind::scalar: return "application/json";
  }
  return "application/octet-stream";
}

std::string artifact_bytes(const Artifact& artifact) {
  switch (artifact.kind) {
    case PortKind::table: return to_csv(artifact.table);
    case PortKind::blob: return artifact.blob;
    case PortKind::scalar: return artifact.scalar.dump() + "\n";
  }
  return {};
}

}  // namespace

RunRecord Engine::execute(const PipelineSpec& spec, const ExecuteOptions& options) {
  RunRecord record;
  record.run_id = "r" + random_hex(12);
  record.pipeline_id = spec.pipeline_id;
  record.pipeline_version = spec.version;
  record.started_at = clock_();

  const auto stages = plan(spec);
  if (options.dry_run) {
    record.finished_at = clock_();
    record.succeeded = true;
    return record;
  }

  std::map<std::string, const NodeInstanceSpec*> instances;
  std::map<std::string, const NodeManifest*> manifests;
  for (const auto& node : spec.nodes) {
    instances[node.instance_id] = &node;
    manifests[node.instance_id] = nodes_.find(node.node_id, node.version);
    if (manifests[node.instance_id] == nullptr) {
      throw Error(ErrorCode::unknown_node, "node '" + node.node_id + "@" + node.version +
                                               "' vanished from the registry");
    }
  }

  // Incoming edges per instance, port -> (upstream instance, upstream port).
  std::map<std::string, std::map<std::string, std::pair<std::string, std::string>>> incoming;
  for (const auto& edge : spec.edges) {
    incoming[edge.to_instance][edge.to_port] = {edge.from_instance, edge.from_port};
  }

  std::map<std::string, std::map<std::string, Artifact>> produced;  // instance -> port -> value
  std::map<std::string, std::string> blocked_by;  // instance -> root failed instance
  std::set<std::string> consumed;
  std::string study_hint = options.study_id;

  for (const auto& stage : stages) {
    for (const auto& instance_id : stage) {
      const NodeInstanceSpec& node = *instances[instance_id];
      const NodeManifest& manifest = *manifests[instance_id];
      NodeOutcome outcome;
      outcome.instance_id = instance_id;

      // A failed upstream (direct or transitive) blocks this node.
      std::string root;
      for (const auto& [port, source] : incoming[instance_id]) {
        (void)port;
        auto it = blocked_by.find(source.first);
        if (it != blocked_by.end()) {
          root = it->second;
          break;
        }
      }
      if (!root.empty()) {
        outcome.status = NodeStatus::skipped;
        outcome.skipped_on = root;
        blocked_by[instance_id] = root;
        record.outcomes.push_back(std::move(outcome));
        continue;
      }

      NodeContext ctx;
      ctx.store = &store_;
      ctx.schemas = &schemas_;
      ctx.vocabulary = &vocabulary_;
      for (const auto& param : manifest.parameters) {
        if (param.default_value) ctx.params[param.name] = *param.default_value;
      }
      for (const auto& [name, value] : node.parameters.items()) ctx.params[name] = value;
      for (const auto& [key, value] : options.overrides) {
        const auto dot = key.find('.');
        if (dot != std::string::npos && key.substr(0, dot) == instance_id) {
          ctx.params[key.substr(dot + 1)] = value;
        }
      }
      for (const auto& [port, source] : incoming[instance_id]) {
        ctx.inputs[port] = produced[source.first][source.second];
      }

      const NodeLogic* logic = nodes_.logic(node.node_id, node.version);
      std::string failure;
      for (int attempt = 1; attempt <= 2; ++attempt) {
        outcome.attempts = attempt;
        failure.clear();
        NodeContext fresh = ctx;  // retries never see partial output
        try {
          (*logic)(fresh);
          for (const auto& port : manifest.output_ports) {
            auto it = fresh.outputs.find(port.name);
            if (it == fresh.outputs.end()) {
              throw Error(ErrorCode::node_failure,
                          "node left output port '" + port.name + "' empty");
            }
            if (it->second.kind != port.kind) {
              throw Error(ErrorCode::node_failure,
                          "node produced wrong kind on port '" + port.name + "'");
            }
          }
          ctx = std::move(fresh);
        } catch (const std::exception& e) {
          failure = e.what();
          continue;
        }
        break;
      }

      if (!failure.empty()) {
        outcome.status = NodeStatus::failed;
        outcome.error = failure;
        blocked_by[instance_id] = instance_id;
        record.outcomes.push_back(std::move(outcome));
        continue;
      }

      if (study_hint.empty()) study_hint = ctx.study_hint;
      consumed.insert(ctx.consumed_entry_ids.begin(), ctx.consumed_entry_ids.end());

      // Persist every output so the run is replayable from its record.
      store::BlobKeyHint hint;
      hint.study_id = study_hint.empty() ? std::string("pipeline") : study_hint;
      hint.participant_id = spec.pipeline_id;
      hint.date = record.started_at.date();
      for (const auto& port : manifest.output_ports) {
        const Artifact& artifact = ctx.outputs[port.name];
        hint.task_id = instance_id + "-" + port.name;
        outcome.artifacts[port.name] =
            store_.put_object(artifact_bytes(artifact), content_type_for(port.kind), hint);
        produced[instance_id][port.name] = artifact;
      }
      outcome.status = NodeStatus::succeeded;
      record.outcomes.push_back(std::move(outcome));
    }
  }

  record.consumed_entry_ids.assign(consumed.begin(), consumed.end());

  bool all_nodes_ok = true;
  for (const auto& outcome : record.outcomes) {
    if (outcome.status != NodeStatus::succeeded) {
      all_nodes_ok = false;
      if (outcome.status == NodeStatus::failed && record.error.empty()) {
        record.error = "node '" + outcome.instance_id + "' failed: " + outcome.error;
      }
    }
  }

  if (all_nodes_ok) {
    // Output gate: every bound table must satisfy its CODE schema before
    // anything becomes visible outbound.
    PipelineSpec canonical = spec;
    std::sort(canonical.output_bindings.begin(), canonical.output_bindings.end(),
              [](const auto& a, const auto& b) {
                return std::tie(a.instance_id, a.port) < std::tie(b.instance_id, b.port);
              });
    std::vector<std::pair<const OutputBindingSpec*, store::OutboundRequest>> staged;
    for (const auto& binding : canonical.output_bindings) {
      const auto schema = schemas_.code(binding.code_schema_ref);
      if (!schema) {
        record.error = "output gate: CODE schema " + binding.code_schema_ref.display() +
                       " is not published";
        break;
      }
      const Table& table = produced[binding.instance_id][binding.port].table;
      const auto report = model::validate_output(table, *schema, vocabulary_,
                                                 binding.instance_id + "." + binding.port);
      if (!report.valid()) {
        std::string detail;
        for (const auto& v : report.violations) {
          if (!detail.empty()) detail += "; ";
          detail += v.field + " " + model::to_string(v.code);
        }
        record.error = "output gate: " + binding.instance_id + "." + binding.port +
                       " failed CODE validation (" + detail + ")";
        break;
      }

      std::string dataset_id = schema->schema_id;
      if (!options.dataset_id.empty() && canonical.output_bindings.size() == 1) {
        dataset_id = options.dataset_id;
      }
      store::OutboundRequest request;
      request.environment = options.environment;
      request.dataset_id = dataset_id;
      request.study_id = study_hint.empty() ? std::string("pipeline") : study_hint;
      request.code_schema_ref = binding.code_schema_ref;
      request.csv = to_csv(table);
      request.sidecar = build_discovery_sidecar(*schema, table, spec, dataset_id,
                                                record.run_id, clock_());
      request.row_count = table.row_count();
      request.code_validated = true;
      request.run_id = record.run_id;
      request.generated_at = clock_();
      staged.emplace_back(&binding, std::move(request));
    }

    if (record.error.empty()) {
      for (auto& [binding, request] : staged) {
        store_.publish_outbound(request);
        record.published.push_back({request.dataset_id, request.environment,
                                    binding->instance_id, binding->port});
      }
      if (!record.consumed_entry_ids.empty()) {
        store_.mark_outbound(record.consumed_entry_ids, options.environment);
      }
      record.succeeded = true;
    }
  }

  record.finished_at = clock_();
  store_.save_run(record.run_id, record.to_json());
  return record;
}

Json build_discovery_sidecar(const model::CodeSchema& schema, const Table& table,
                             const PipelineSpec& spec, const std::string& dataset_id,
                             const std::string& run_id, Instant generated_at) {
  std::vector<std::string> terms;
  for (const auto& [field, term] : schema.vocabulary_bindings) {
    (void)field;
    terms.push_back(term);
  }
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  // Coverage comes from the first timestamp column the schema declares.
  Json coverage;
  for (const auto& field : schema.fields) {
    if (field.kind != model::FieldKind::timestamp_kind) continue;
    const auto col = table.column_index(field.name);
    if (!col) break;
    std::optional<Instant> lo, hi;
    for (const auto& row : table.rows) {
      const Json& cell = row[*col];
      if (!cell.is_string()) continue;
      const auto ts = parse_rfc3339(cell.get<std::string>());
      if (!ts) continue;
      if (!lo || *ts < *lo) lo = *ts;
      if (!hi || *ts > *hi) hi = *ts;
    }
    if (lo) coverage = Json{{"from", lo->to_rfc3339()}, {"to", hi->to_rfc3339()}};
    break;
  }

  return Json{{"dataset_id", dataset_id},
              {"code_schema_ref", schema.ref().display()},
              {"vocabulary_terms", terms},
              {"row_count", table.row_count()},
              {"time_coverage", coverage},
              {"pipeline", Json{{"pipeline_id", spec.pipeline_id}, {"version", spec.version}}},
              {"run_id", run_id},
              {"generated_at", generated_at.to_rfc3339()}};
}

}  // namespace fabric::pipeline
