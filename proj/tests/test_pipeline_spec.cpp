// Pipeline documents: parsing/validation order, canonicalization, graph
// staging, and the export/import round trip.
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "fabric/error.hpp"
#include "fabric/pipeline/graph.hpp"
#include "fabric/pipeline/spec.hpp"
#include "support.hpp"

using namespace fabric;
using namespace fabric::pipeline;

namespace {

void expect_code(const std::string& document, const NodeRegistry& registry, ErrorCode want) {
  try {
    load_pipeline(document, registry);
    FAIL("expected " << to_string(want));
  } catch (const Error& e) {
    CHECK(std::string(to_string(e.code())) == std::string(to_string(want)));
  }
}

Json base_doc() { return Json::parse(testsup::two_node_pipeline_doc()); }

}  // namespace

TEST_CASE("a well-formed pipeline document loads completely") {
  testsup::TestNodes nodes;
  auto spec = load_pipeline(testsup::two_node_pipeline_doc(), nodes.registry);
  CHECK(spec.pipeline_id == "two_node");
  CHECK(spec.version == "1.0.0");
  REQUIRE(spec.nodes.size() == 2);
  CHECK(spec.nodes[0].instance_id == "src");
  CHECK(spec.nodes[0].node_id == "const_table");
  CHECK(spec.nodes[0].version == "1.0.0");
  REQUIRE(spec.edges.size() == 1);
  CHECK(spec.edges[0].from_instance == "src");
  CHECK(spec.edges[0].to_port == "in");
  REQUIRE(spec.output_bindings.size() == 1);
  CHECK(spec.output_bindings[0].instance_id == "sink");
  CHECK(spec.output_bindings[0].code_schema_ref.schema_id == "daily_counts");
  CHECK(spec.output_bindings[0].code_schema_ref.version == 1);
}

TEST_CASE("document defects are reported in a fixed order") {
  testsup::TestNodes nodes;
  const auto& reg = nodes.registry;

  SUBCASE("unparseable text") { expect_code("{nope", reg, ErrorCode::parse_error); }
  SUBCASE("non-object document") { expect_code("[1,2]", reg, ErrorCode::parse_error); }
  SUBCASE("unknown top-level key") {
    auto doc = base_doc();
    doc["notes"] = "hi";
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("missing header") {
    auto doc = base_doc();
    doc.erase("version");
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("pipeline_id must be an identifier") {
    auto doc = base_doc();
    doc["pipeline_id"] = "Has-Caps";
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("empty nodes array") {
    auto doc = base_doc();
    doc["nodes"] = Json::array();
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("duplicate instance ids") {
    auto doc = base_doc();
    doc["nodes"][1]["instance_id"] = "src";
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("node reference without a version") {
    auto doc = base_doc();
    doc["nodes"][0]["node"] = "const_table";
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }

  SUBCASE("unknown node wins over a broken edge") {
    auto doc = base_doc();
    doc["nodes"][0]["node"] = "phantom@1.0.0";
    doc["edges"][0]["from"] = "ghost.out";  // also wrong, reported later
    expect_code(doc.dump(), reg, ErrorCode::unknown_node);
  }
  SUBCASE("unknown version of a known node") {
    auto doc = base_doc();
    doc["nodes"][0]["node"] = "const_table@9.9.9";
    expect_code(doc.dump(), reg, ErrorCode::unknown_node);
  }

  SUBCASE("unknown parameter name") {
    auto doc = base_doc();
    doc["nodes"][0]["parameters"] = Json{{"bogus", 1}};
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("parameter kind mismatch") {
    auto doc = base_doc();
    doc["nodes"][0]["parameters"] = Json{{"rows", "three"}};
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("missing required parameter") {
    testsup::TestNodes local;
    NodeManifest needy;
    needy.node_id = "needy";
    needy.version = "1.0.0";
    needy.entrypoint = "test:needy";
    needy.output_ports = {{"out", PortKind::table}};
    needy.parameters = {{"must_have", ParamKind::string_kind, std::nullopt}};
    local.registry.register_node(needy, [](NodeContext&) {});
    auto doc = base_doc();
    doc["nodes"][0]["node"] = "needy@1.0.0";
    expect_code(doc.dump(), local.registry, ErrorCode::parse_error);
  }

  SUBCASE("edge to an unknown instance") {
    auto doc = base_doc();
    doc["edges"][0]["to"] = "ghost.in";
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("edge to an unknown port") {
    auto doc = base_doc();
    doc["edges"][0]["to"] = "sink.intake";
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("malformed edge reference") {
    auto doc = base_doc();
    doc["edges"][0]["from"] = "src.out.extra";
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }

  SUBCASE("port kinds must agree") {
    auto doc = base_doc();
    doc["nodes"].push_back(Json{{"instance_id", "conv"},
                                {"node", "to_blob@1.0.0"},
                                {"parameters", Json::object()}});
    doc["edges"] = Json::array({Json{{"from", "src.out"}, {"to", "conv.in"}},
                                Json{{"from", "conv.out"}, {"to", "sink.in"}}});
    expect_code(doc.dump(), reg, ErrorCode::port_kind_mismatch);
  }

  SUBCASE("an input may have only one incoming edge") {
    auto doc = base_doc();
    doc["nodes"].push_back(Json{{"instance_id", "src2"},
                                {"node", "const_table@1.0.0"},
                                {"parameters", Json::object()}});
    doc["edges"].push_back(Json{{"from", "src2.out"}, {"to", "sink.in"}});
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("every declared input must be connected") {
    auto doc = base_doc();
    doc["edges"] = Json::array();
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }

  SUBCASE("cycles are reported before binding problems") {
    Json doc{{"pipeline_id", "loop"},
             {"version", "1.0.0"},
             {"nodes", Json::array({Json{{"instance_id", "a"},
                                         {"node", "pass@1.0.0"},
                                         {"parameters", Json::object()}},
                                    Json{{"instance_id", "b"},
                                         {"node", "pass@1.0.0"},
                                         {"parameters", Json::object()}}})},
             {"edges", Json::array({Json{{"from", "a.out"}, {"to", "b.in"}},
                                    Json{{"from", "b.out"}, {"to", "a.in"}}})},
             {"output_binding", Json::object()}};  // also defective, loses
    expect_code(doc.dump(), reg, ErrorCode::cycle_detected);
  }

  SUBCASE("at least one output must be bound") {
    auto doc = base_doc();
    doc["output_binding"] = Json::object();
    expect_code(doc.dump(), reg, ErrorCode::unbound_output);
    doc.erase("output_binding");
    expect_code(doc.dump(), reg, ErrorCode::unbound_output);
  }
  SUBCASE("binding must reference a real port") {
    auto doc = base_doc();
    doc["output_binding"] = Json{{"sink.sideways", "daily_counts@v1"}};
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("binding must name a schema ref") {
    auto doc = base_doc();
    doc["output_binding"] = Json{{"sink.out", "daily_counts"}};
    expect_code(doc.dump(), reg, ErrorCode::parse_error);
  }
  SUBCASE("only table ports are bindable") {
    auto doc = base_doc();
    doc["nodes"].push_back(Json{{"instance_id", "conv"},
                                {"node", "to_blob@1.0.0"},
                                {"parameters", Json::object()}});
    doc["edges"].push_back(Json{{"from", "src.out"}, {"to", "conv.in"}});
    doc["output_binding"] = Json{{"conv.out", "daily_counts@v1"}};
    expect_code(doc.dump(), reg, ErrorCode::port_kind_mismatch);
  }
}

TEST_CASE("canonical form is invariant under element permutation") {
  testsup::TestNodes nodes;

  Json doc{{"pipeline_id", "diamond"},
           {"version", "2.1.0"},
           {"nodes", Json::array({Json{{"instance_id", "root"},
                                       {"node", "const_table@1.0.0"},
                                       {"parameters", Json{{"rows", 3}}}},
                                  Json{{"instance_id", "left"},
                                       {"node", "pass@1.0.0"},
                                       {"parameters", Json::object()}},
                                  Json{{"instance_id", "right"},
                                       {"node", "pass@1.0.0"},
                                       {"parameters", Json::object()}}})},
           {"edges", Json::array({Json{{"from", "root.out"}, {"to", "left.in"}},
                                  Json{{"from", "root.out"}, {"to", "right.in"}}})},
           {"output_binding",
            Json{{"left.out", "daily_counts@v1"}, {"right.out", "daily_counts@v1"}}}};

  auto spec = load_pipeline(doc.dump(), nodes.registry);

  Json shuffled = doc;
  std::swap(shuffled["nodes"][0], shuffled["nodes"][2]);
  std::swap(shuffled["edges"][0], shuffled["edges"][1]);
  auto spec2 = load_pipeline(shuffled.dump(), nodes.registry);

  // Document form preserves author order, canonical form does not care.
  CHECK(spec.to_json() != spec2.to_json());
  CHECK(spec.canonical_json() == spec2.canonical_json());

  // Canonical ordering is by id, endpoints, and port ref.
  auto canon = spec2.canonical_json();
  CHECK(canon["nodes"][0]["instance_id"] == "left");
  CHECK(canon["nodes"][1]["instance_id"] == "right");
  CHECK(canon["nodes"][2]["instance_id"] == "root");
}

TEST_CASE("export documents rebuild into the canonical pipeline") {
  testsup::TestNodes nodes;
  auto spec = load_pipeline(testsup::two_node_pipeline_doc(), nodes.registry);

  const std::string exported = export_pipeline(spec);
  auto doc = Json::parse(exported);
  CHECK(doc["format"] == "generic-dag/v1");
  CHECK(doc["tasks"].size() == 2);
  CHECK(doc["deps"][0]["upstream"] == "src");
  CHECK(doc["deps"][0]["downstream"] == "sink");

  auto rebuilt = import_pipeline(exported, nodes.registry);
  CHECK(rebuilt.canonical_json() == spec.canonical_json());

  SUBCASE("import refuses other formats") {
    auto other = doc;
    other["format"] = "somebody-elses/v2";
    CHECK_THROWS_AS(import_pipeline(other.dump(), nodes.registry), Error);
  }
  SUBCASE("import re-validates structure") {
    auto broken = doc;
    broken["output_binding"] = Json::object();
    CHECK_THROWS_AS(import_pipeline(broken.dump(), nodes.registry), Error);
  }
}

TEST_CASE("randomized pipelines survive the export round trip") {
  testsup::TestNodes nodes;
  std::mt19937_64 rng(20240319);

  for (int trial = 0; trial < 40; ++trial) {
    // A random chain-of-custody DAG: one source, k pass stages, each fed
    // by one earlier node, a random nonempty subset of leaves bound.
    const int extra = 1 + static_cast<int>(rng() % 6);
    Json node_list = Json::array();
    node_list.push_back(Json{{"instance_id", "n0"},
                             {"node", "const_table@1.0.0"},
                             {"parameters", Json{{"rows", 1 + static_cast<int>(rng() % 4)}}}});
    Json edge_list = Json::array();
    for (int i = 1; i <= extra; ++i) {
      const std::string id = "n" + std::to_string(i);
      node_list.push_back(
          Json{{"instance_id", id}, {"node", "pass@1.0.0"}, {"parameters", Json::object()}});
      const std::string upstream = "n" + std::to_string(rng() % i);
      edge_list.push_back(Json{{"from", upstream + ".out"}, {"to", id + ".in"}});
    }
    Json bindings = Json::object();
    bindings["n" + std::to_string(extra) + ".out"] = "daily_counts@v1";
    if (rng() % 2) bindings["n0.out"] = "daily_counts@v1";

    Json doc{{"pipeline_id", "randomized"},
             {"version", "1.0." + std::to_string(trial)},
             {"nodes", node_list},
             {"edges", edge_list},
             {"output_binding", bindings}};

    auto spec = load_pipeline(doc.dump(), nodes.registry);
    auto rebuilt = import_pipeline(export_pipeline(spec), nodes.registry);
    CAPTURE(trial);
    CHECK(rebuilt.canonical_json() == spec.canonical_json());
  }
}

namespace {

// Reachability closure as an independent cycle detector.
bool brute_force_cyclic(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (const auto& [u, v] : edges) reach[u][v] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  for (int i = 0; i < n; ++i)
    if (reach[i][i]) return true;
  return false;
}

}  // namespace

TEST_CASE("graph cycle detection and staging agree with brute force") {
  std::mt19937_64 rng(77);

  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        if (u != v && rng() % 4 == 0) edges.push_back({u, v});
      }
    }

    Graph g;
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) {
      names.push_back("v" + std::to_string(i));
      g.add_node(names.back());
    }
    for (const auto& [u, v] : edges) g.add_edge(names[u], names[v]);

    const bool expect_cycle = brute_force_cyclic(n, edges);
    CAPTURE(trial);
    CHECK(g.has_cycle() == expect_cycle);

    if (expect_cycle) {
      CHECK_THROWS_AS(g.stages(), Error);
      continue;
    }
    auto stages = g.stages();
    std::map<std::string, std::size_t> stage_of;
    std::size_t total = 0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      CHECK(std::is_sorted(stages[s].begin(), stages[s].end()));
      for (const auto& id : stages[s]) {
        CHECK_FALSE(stage_of.count(id));
        stage_of[id] = s;
        ++total;
      }
    }
    CHECK(total == names.size());
    for (const auto& [u, v] : edges) {
      CHECK(stage_of.at(names[u]) < stage_of.at(names[v]));
    }
  }
}
