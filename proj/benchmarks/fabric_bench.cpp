// Microbenchmarks for the hot paths: record validation, blob writes,
// pipeline staging, and series queries.

#include <benchmark/benchmark.h>
#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "fabric/access/query.hpp"
#include "fabric/model/schema.hpp"
#include "fabric/model/validation.hpp"
#include "fabric/pipeline/graph.hpp"
#include "fabric/store/datastore.hpp"
#include "fabric/time.hpp"

namespace {

std::string bench_cide_doc() {
  return fabric::Json{
      {"schema_id", "bench_reading"},
      {"version", 1},
      {"kind", "cide"},
      {"task_id", "bench"},
      {"fields",
       fabric::Json::array({
           fabric::Json{{"name", "heart_rate"},
                        {"kind", "integer"},
                        {"required", true},
                        {"unit", "bpm"},
                        {"constraints", fabric::Json{{"min", 30}, {"max", 200}}}},
           fabric::Json{{"name", "movement"},
                        {"kind", "float"},
                        {"required", true},
                        {"constraints", fabric::Json{{"min", 0}, {"max", 1}}}},
           fabric::Json{{"name", "posture"},
                        {"kind", "enum"},
                        {"required", false},
                        {"constraints",
                         fabric::Json{{"values",
                                       fabric::Json::array({"supine", "lateral", "prone"})}}}},
       })},
  }
      .dump();
}

std::filesystem::path scratch_dir(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() /
             (std::string("fabric-bench-") + tag + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void BM_validate_record(benchmark::State& state) {
  auto schema = std::get<fabric::model::CideSchema>(fabric::model::parse_schema(bench_cide_doc()));
  fabric::Json payload{{"heart_rate", 71}, {"movement", 0.25}, {"posture", "lateral"}};
  for (auto _ : state) {
    auto report = fabric::model::validate_record(payload, schema);
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_validate_record);

void BM_blob_put(benchmark::State& state) {
  auto dir = scratch_dir("blob");
  fabric::store::DataStore store(dir);
  std::mt19937_64 rng(7);
  std::string payload(static_cast<std::size_t>(state.range(0)), '\0');
  for (auto& c : payload) c = static_cast<char>(rng() & 0xff);
  std::size_t salt = 0;
  for (auto _ : state) {
    payload[0] = static_cast<char>(salt++ & 0xff);
    auto ref = store.put_object(payload, "application/octet-stream",
                                {"bench", "blob", "sample", "2024-03-01"});
    benchmark::DoNotOptimize(ref);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_blob_put)->Arg(1 << 10)->Arg(1 << 16);

void BM_plan_stages(benchmark::State& state) {
  fabric::pipeline::Graph graph;
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) graph.add_node("n" + std::to_string(i));
  std::mt19937_64 rng(11);
  for (int v = 1; v < n; ++v) {
    int fan = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < fan; ++k) {
      int u = static_cast<int>(rng() % static_cast<uint64_t>(v));
      graph.add_edge("n" + std::to_string(u), "n" + std::to_string(v));
    }
  }
  for (auto _ : state) {
    auto stages = graph.stages();
    benchmark::DoNotOptimize(stages);
  }
}
BENCHMARK(BM_plan_stages)->Arg(16)->Arg(128);

void BM_query_series(benchmark::State& state) {
  auto dir = scratch_dir("query");
  fabric::store::DataStore store(dir);
  fabric::model::SchemaCatalog schemas(dir / "schemas");
  const int rows = static_cast<int>(state.range(0));
  std::string csv = "capture_time,value\n";
  std::mt19937_64 rng(13);
  for (int i = 0; i < rows; ++i) {
    auto t = fabric::Instant::from_millis(1709251200000LL + i * 60000LL);
    csv += t.to_rfc3339() + "," + std::to_string(rng() % 500) + "\n";
  }
  fabric::store::OutboundRequest req;
  req.dataset_id = "bench_series";
  req.environment = "dev";
  req.study_id = "bench";
  req.run_id = "r0";
  req.code_schema_ref = {"bench_series", 1};
  req.csv = csv;
  req.row_count = static_cast<std::uint64_t>(rows);
  req.sidecar = fabric::Json{{"dataset_id", "bench_series"}};
  req.code_validated = true;
  req.generated_at = fabric::Instant::from_millis(0);
  store.save_run("r0", fabric::Json{{"run_id", "r0"}, {"succeeded", true}});
  store.publish_outbound(req);

  fabric::access::DatasetCatalog catalog(store, schemas);
  fabric::access::QueryRequest query;
  query.dataset_id = "bench_series";
  query.field = "value";
  query.from = fabric::Instant::from_millis(1709251200000LL);
  query.to = fabric::Instant::from_millis(1709251200000LL + rows * 60000LL);
  query.group_by = fabric::access::GroupBy::hour;
  query.aggregate = fabric::access::Aggregate::mean;

  fabric::access::AccessToken token;
  token.scopes = {{"dev", "bench"}};
  token.expires_at = fabric::Instant::from_millis(4102444800000LL);
  for (auto _ : state) {
    auto resp = catalog.query_series(query, token);
    benchmark::DoNotOptimize(resp);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * rows);
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_query_series)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
