#pragma once

// Shared test scaffolding: scratch directories, record builders, and a
// handful of tiny schema/pipeline fixtures used across suites.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fabric/error.hpp"
#include "fabric/gateway/record.hpp"
#include "fabric/model/schema.hpp"
#include "fabric/pipeline/node.hpp"
#include "fabric/table.hpp"
#include "fabric/time.hpp"

namespace testsup {

using fabric::Json;

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fabric-test") {
    static std::atomic<uint64_t> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path_ = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& sub) const { return path_ / sub; }

 private:
  std::filesystem::path path_;
};

inline fabric::Instant at(const char* rfc3339) {
  auto t = fabric::parse_rfc3339(rfc3339);
  if (!t) throw std::runtime_error(std::string("bad test timestamp: ") + rfc3339);
  return *t;
}

// Fixed instant well in the future, for tokens that must not expire.
inline fabric::Instant far_future() { return fabric::Instant::from_millis(4102444800000LL); }

// ---- schema fixtures ---------------------------------------------------

// CIDE document with one field per kind, exercising every constraint knob.
inline std::string wide_cide_doc(const std::string& schema_id = "kitchen_sink", int version = 1) {
  Json doc{
      {"schema_id", schema_id},
      {"version", version},
      {"kind", "cide"},
      {"task_id", "sink_task"},
      {"fields",
       Json::array({
           Json{{"name", "label"},
                {"kind", "string"},
                {"required", true},
                {"constraints", Json{{"max_length", 8}}}},
           Json{{"name", "count"},
                {"kind", "integer"},
                {"required", true},
                {"unit", "items"},
                {"constraints", Json{{"min", 0}, {"max", 100}}}},
           Json{{"name", "ratio"},
                {"kind", "float"},
                {"required", false},
                {"constraints", Json{{"min", 0.0}, {"max", 1.0}}}},
           Json{{"name", "enabled"}, {"kind", "boolean"}, {"required", false}},
           Json{{"name", "seen_at"}, {"kind", "timestamp"}, {"required", false}},
           Json{{"name", "mode"},
                {"kind", "enum"},
                {"required", false},
                {"constraints", Json{{"values", Json::array({"fast", "slow"})}}}},
           Json{{"name", "attachment"}, {"kind", "blob_ref"}, {"required", false}},
       })},
  };
  return doc.dump();
}

inline fabric::model::CideSchema wide_cide(const std::string& schema_id = "kitchen_sink") {
  return std::get<fabric::model::CideSchema>(fabric::model::parse_schema(wide_cide_doc(schema_id)));
}

// Valid payload for wide_cide.
inline Json wide_payload() {
  return Json{{"label", "ok"},     {"count", 5},
              {"ratio", 0.5},      {"enabled", true},
              {"seen_at", "2024-03-01T08:00:00Z"}, {"mode", "fast"},
              {"attachment", "deadbeef"}};
}

// Minimal CODE document whose columns are bound to two terms.
inline std::string small_code_doc(const std::string& schema_id = "daily_counts") {
  Json doc{{"schema_id", schema_id},
           {"version", 1},
           {"kind", "code"},
           {"pipeline_id", "counting"},
           {"fields",
            Json::array({
                Json{{"name", "day"}, {"kind", "timestamp"}, {"required", true}},
                Json{{"name", "total"},
                     {"kind", "integer"},
                     {"required", true},
                     {"unit", "items"}},
            })},
           {"vocabulary_bindings", Json{{"day", "observation_day"}, {"total", "item_total"}}}};
  return doc.dump();
}

// ---- record builders -----------------------------------------------------

inline fabric::gateway::Record make_record(const std::string& participant, const char* when,
                                           Json payload, const std::string& task = "sink_task",
                                           const std::string& study = "teststudy") {
  fabric::gateway::Record r;
  r.study_id = study;
  r.participant_id = participant;
  r.device_id = "dev-1";
  r.task_id = task;
  r.capture_time = at(when);
  r.payload = std::move(payload);
  return r;
}

// ---- pipeline node fixtures ------------------------------------------

// const_table: no inputs, emits a fixed two-column table on port "out".
// pass: copies "in" -> "out". flaky: fails the first N calls per process
// epoch (controlled through a shared counter). boom: always fails.
// to_blob: table in, blob out (for kind-mismatch cases).
struct TestNodes {
  fabric::pipeline::NodeRegistry registry;
  std::shared_ptr<std::atomic<int>> flaky_failures = std::make_shared<std::atomic<int>>(0);

  TestNodes() {
    using namespace fabric::pipeline;
    NodeManifest const_table;
    const_table.node_id = "const_table";
    const_table.version = "1.0.0";
    const_table.entrypoint = "test:const_table";
    const_table.output_ports = {{"out", PortKind::table}};
    const_table.parameters = {{"rows", ParamKind::integer_kind, Json(2)}};
    registry.register_node(const_table, [](NodeContext& ctx) {
      fabric::Table t;
      t.columns = {"day", "total"};
      const auto n = ctx.params.at("rows").get<int64_t>();
      for (int64_t i = 0; i < n; ++i) {
        t.rows.push_back({Json("2024-03-0" + std::to_string(1 + i % 9) + "T00:00:00Z"),
                          Json(10 * (i + 1))});
      }
      ctx.outputs["out"] = Artifact::make_table(std::move(t));
    });

    NodeManifest pass;
    pass.node_id = "pass";
    pass.version = "1.0.0";
    pass.entrypoint = "test:pass";
    pass.input_ports = {{"in", PortKind::table}};
    pass.output_ports = {{"out", PortKind::table}};
    registry.register_node(pass, [](NodeContext& ctx) {
      ctx.outputs["out"] = ctx.inputs.at("in");
    });

    NodeManifest boom;
    boom.node_id = "boom";
    boom.version = "1.0.0";
    boom.entrypoint = "test:boom";
    boom.input_ports = {{"in", PortKind::table}};
    boom.output_ports = {{"out", PortKind::table}};
    registry.register_node(boom, [](NodeContext&) {
      throw fabric::Error(fabric::ErrorCode::node_failure, "boom node always fails");
    });

    NodeManifest flaky;
    flaky.node_id = "flaky";
    flaky.version = "1.0.0";
    flaky.entrypoint = "test:flaky";
    flaky.input_ports = {{"in", PortKind::table}};
    flaky.output_ports = {{"out", PortKind::table}};
    auto counter = flaky_failures;
    registry.register_node(flaky, [counter](NodeContext& ctx) {
      if (counter->fetch_sub(1) > 0) {
        throw fabric::Error(fabric::ErrorCode::node_failure, "flaky transient");
      }
      ctx.outputs["out"] = ctx.inputs.at("in");
    });

    NodeManifest to_blob;
    to_blob.node_id = "to_blob";
    to_blob.version = "1.0.0";
    to_blob.entrypoint = "test:to_blob";
    to_blob.input_ports = {{"in", PortKind::table}};
    to_blob.output_ports = {{"out", PortKind::blob}};
    registry.register_node(to_blob, [](NodeContext& ctx) {
      ctx.outputs["out"] = Artifact::make_blob(fabric::to_csv(ctx.inputs.at("in").table));
    });
  }
};

// Pipeline document over TestNodes: const_table -> pass, bound to a CODE ref.
inline std::string two_node_pipeline_doc(const std::string& binding = "daily_counts@v1") {
  Json doc{{"pipeline_id", "two_node"},
           {"version", "1.0.0"},
           {"nodes", Json::array({Json{{"instance_id", "src"},
                                       {"node", "const_table@1.0.0"},
                                       {"parameters", Json::object()}},
                                  Json{{"instance_id", "sink"},
                                       {"node", "pass@1.0.0"},
                                       {"parameters", Json::object()}}})},
           {"edges", Json::array({Json{{"from", "src.out"}, {"to", "sink.in"}}})},
           {"output_binding", Json{{"sink.out", binding}}}};
  return doc.dump();
}

}  // namespace testsup
