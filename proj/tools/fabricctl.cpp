// Operator CLI: every subcommand is a thin shell over the library. Exit
// codes: 0 success, 1 domain failure, 2 usage error, 3 I/O or transport.

#include <CLI11.hpp>
#include <httplib.h>

#include <iostream>
#include <optional>
#include <set>

#include "fabric/access/http.hpp"
#include "fabric/access/query.hpp"
#include "fabric/access/token.hpp"
#include "fabric/config.hpp"
#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"
#include "fabric/gateway/http.hpp"
#include "fabric/gateway/ingest_service.hpp"
#include "fabric/model/catalog.hpp"
#include "fabric/model/validation.hpp"
#include "fabric/model/vocabulary.hpp"
#include "fabric/pipeline/builtin_nodes.hpp"
#include "fabric/pipeline/engine.hpp"
#include "fabric/sim/replay.hpp"
#include "fabric/sim/simulator.hpp"
#include "fabric/sim/study_assets.hpp"
#include "fabric/store/datastore.hpp"

namespace {

using namespace fabric;

struct GlobalOpts {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::filesystem::path> store_override;
  std::optional<std::string> env_override;
  std::optional<std::filesystem::path> key_override;
  bool verbose = false;

  Config resolve() const {
    Config config = Config::load(config_path);
    if (store_override) config.store_root = *store_override;
    if (env_override) config.environment = *env_override;
    if (key_override) config.key_file = *key_override;
    return config;
  }
};

// Shared lazily-built handles over one store root.
struct Context {
  explicit Context(const Config& config)
      : config(config),
        store(config.store_root),
        schemas(config.store_root / "schemas"),
        vocabulary(config.store_root / "vocabulary" / "ledger.jsonl") {
    pipeline::register_builtin_nodes(nodes);
  }

  Config config;
  store::DataStore store;
  model::SchemaCatalog schemas;
  model::VocabularyRegistry vocabulary;
  pipeline::NodeRegistry nodes;
};

model::SchemaRef parse_ref_arg(const std::string& text) {
  const auto ref = model::schema_ref_from_display(text);
  if (!ref) throw Error(ErrorCode::parse_error, "expected schema_id@vN, got '" + text + "'");
  return *ref;
}

Json parse_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

std::pair<std::string, int> split_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw Error(ErrorCode::invalid_config, "listen address must be host:port, got '" + addr + "'");
  }
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_config, "bad port in '" + addr + "'");
  }
  return {addr.substr(0, colon), port};
}

// ---- schema ----------------------------------------------------------

int cmd_schema_publish(const GlobalOpts& opts, const std::string& file) {
  Context ctx(opts.resolve());
  const auto ref = ctx.schemas.publish(read_file(file));
  std::cout << "published " << ref.display() << "\n";
  return 0;
}

int cmd_schema_show(const GlobalOpts& opts, const std::string& ref_text) {
  Context ctx(opts.resolve());
  const auto ref = parse_ref_arg(ref_text);
  if (const auto cide = ctx.schemas.cide(ref)) {
    std::cout << model::serialize_schema(model::ParsedSchema(*cide));
    return 0;
  }
  if (const auto code = ctx.schemas.code(ref)) {
    std::cout << model::serialize_schema(model::ParsedSchema(*code));
    return 0;
  }
  throw Error(ErrorCode::schema_not_found, ref.display() + " is not published");
}

// ---- vocab -----------------------------------------------------------

model::VocabularyTerm term_from_doc(const Json& doc, const std::string& actor) {
  model::VocabularyTerm term;
  term.canonical_name = doc.at("canonical_name").get<std::string>();
  term.definition = doc.at("definition").get<std::string>();
  const auto kind = model::field_kind_from_string(doc.at("kind").get<std::string>());
  if (!kind) {
    throw Error(ErrorCode::parse_error, "unknown kind '" + doc.at("kind").get<std::string>() + "'");
  }
  term.kind = *kind;
  if (doc.contains("unit") && !doc.at("unit").is_null()) {
    term.unit = doc.at("unit").get<std::string>();
  }
  if (doc.contains("aliases")) {
    term.aliases = doc.at("aliases").get<std::vector<std::string>>();
  }
  term.proposed_by = actor;
  term.proposed_at = now_utc();
  return term;
}

int cmd_vocab_propose(const GlobalOpts& opts, const std::string& file,
                      const std::string& actor) {
  Context ctx(opts.resolve());
  const auto term = term_from_doc(parse_json_file(file), actor);
  const auto outcome = ctx.vocabulary.register_term(term);
  if (outcome.status == model::RegisterStatus::conflict) {
    std::cerr << "conflict with '" << outcome.conflict_with << "': " << outcome.message << "\n";
    return 1;
  }
  std::cout << "proposed " << term.canonical_name << "\n";
  return 0;
}

int cmd_vocab_accept(const GlobalOpts& opts, const std::string& name, const std::string& actor) {
  Context ctx(opts.resolve());
  const auto term = ctx.vocabulary.accept(name, actor);
  std::cout << "accepted " << term.canonical_name << "\n";
  return 0;
}

int cmd_vocab_list(const GlobalOpts& opts) {
  Context ctx(opts.resolve());
  for (const auto& term : ctx.vocabulary.list()) {
    std::cout << term.canonical_name << "\t" << model::to_string(term.kind) << "\t"
              << term.unit.value_or("-") << "\t" << model::to_string(term.status) << "\n";
  }
  return 0;
}

// ---- ingest ----------------------------------------------------------

int cmd_ingest_record(const GlobalOpts& opts, const std::string& file) {
  Context ctx(opts.resolve());
  gateway::IngestService ingest(ctx.store, ctx.schemas);
  const auto result = ingest.submit_json(parse_json_file(file));
  std::cout << result.to_json().dump(2) << "\n";
  return result.status == gateway::SubmitStatus::rejected ? 1 : 0;
}

int cmd_ingest_batch(const GlobalOpts& opts, const std::string& dir) {
  Context ctx(opts.resolve());
  gateway::IngestService ingest(ctx.store, ctx.schemas);
  gateway::BatchInput files;
  for (const auto& rel : list_files_recursive(dir)) {
    files[rel.generic_string()] = read_file(std::filesystem::path(dir) / rel);
  }
  const auto report = ingest.submit_batch(files);
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

// ---- store -----------------------------------------------------------

int cmd_store_promote(const GlobalOpts& opts, std::vector<std::string> entry_ids,
                      bool all_valid) {
  Context ctx(opts.resolve());
  if (all_valid) {
    store::MetadataFilter filter;
    filter.lifecycle = store::Lifecycle::staging;
    for (const auto& entry : ctx.store.query_metadata(filter)) {
      if (entry.valid()) entry_ids.push_back(entry.entry_id);
    }
  }
  const auto report = ctx.store.promote(entry_ids);
  for (const auto& item : report.items) {
    if (item.status == store::PromoteStatus::skipped) {
      std::cout << "skipped " << item.entry_id << ": " << item.reason << "\n";
    }
  }
  std::cout << "promoted " << report.promoted << " skipped " << report.skipped << "\n";
  return 0;
}

int cmd_store_audit(const GlobalOpts& opts) {
  Context ctx(opts.resolve());
  const auto violations = ctx.store.audit();
  for (const auto& violation : violations) std::cout << violation << "\n";
  std::cout << violations.size() << " violations\n";
  return violations.empty() ? 0 : 1;
}

struct QueryFilterFlags {
  std::string study, participant, task, lifecycle, from, to;

  store::MetadataFilter to_filter() const {
    store::MetadataFilter filter;
    if (!study.empty()) filter.study_id = study;
    if (!participant.empty()) filter.participant_id = participant;
    if (!task.empty()) filter.task_id = task;
    if (!lifecycle.empty()) {
      if (lifecycle == "staging") {
        filter.lifecycle = store::Lifecycle::staging;
      } else if (lifecycle == "production") {
        filter.lifecycle = store::Lifecycle::production;
      } else {
        throw Error(ErrorCode::parse_error, "lifecycle must be staging or production");
      }
    }
    if (!from.empty()) {
      const auto t = parse_rfc3339(from);
      if (!t) throw Error(ErrorCode::parse_error, "--from is not RFC 3339 UTC");
      filter.from = *t;
    }
    if (!to.empty()) {
      const auto t = parse_rfc3339(to);
      if (!t) throw Error(ErrorCode::parse_error, "--to is not RFC 3339 UTC");
      filter.to = *t;
    }
    return filter;
  }
};

int cmd_store_query(const GlobalOpts& opts, const QueryFilterFlags& flags) {
  Context ctx(opts.resolve());
  const auto entries = ctx.store.query_metadata(flags.to_filter());
  for (const auto& entry : entries) std::cout << entry.to_json().dump() << "\n";
  std::cerr << entries.size() << " entries\n";
  return 0;
}

// ---- pipeline --------------------------------------------------------

int cmd_pipeline_validate(const GlobalOpts& opts, const std::string& file) {
  Context ctx(opts.resolve());
  const auto spec = pipeline::load_pipeline(read_file(file), ctx.nodes);
  std::cout << "valid " << spec.pipeline_id << "@" << spec.version << "\n";
  return 0;
}

int cmd_pipeline_plan(const GlobalOpts& opts, const std::string& file) {
  Context ctx(opts.resolve());
  const auto spec = pipeline::load_pipeline(read_file(file), ctx.nodes);
  pipeline::Engine engine(ctx.store, ctx.schemas, ctx.vocabulary, ctx.nodes);
  const auto stages = engine.plan(spec);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    std::cout << "stage " << i + 1 << ":";
    for (const auto& instance : stages[i]) std::cout << " " << instance;
    std::cout << "\n";
  }
  return 0;
}

int cmd_pipeline_run(const GlobalOpts& opts, const std::string& file,
                     const std::string& dataset_id, const std::string& study_id) {
  Context ctx(opts.resolve());
  const auto spec = pipeline::load_pipeline(read_file(file), ctx.nodes);
  pipeline::Engine engine(ctx.store, ctx.schemas, ctx.vocabulary, ctx.nodes);
  pipeline::ExecuteOptions options;
  options.environment = ctx.config.environment;
  options.dataset_id = dataset_id;
  options.study_id = study_id;
  const auto record = engine.execute(spec, options);

  for (const auto& outcome : record.outcomes) {
    std::cout << "node " << outcome.instance_id << ": " << pipeline::to_string(outcome.status);
    if (outcome.status == pipeline::NodeStatus::skipped) {
      std::cout << " (blocked by " << outcome.skipped_on << ")";
    } else if (outcome.attempts > 1) {
      std::cout << " (attempts " << outcome.attempts << ")";
    }
    std::cout << "\n";
  }
  for (const auto& dataset : record.published) {
    std::cout << "published " << dataset.environment << "/" << dataset.dataset_id << "\n";
  }
  if (opts.verbose) std::cerr << "run_id " << record.run_id << "\n";
  if (!record.succeeded) {
    std::cerr << "run failed: " << record.error << "\n";
    return 1;
  }
  std::cout << "run succeeded\n";
  return 0;
}

int cmd_pipeline_export(const GlobalOpts& opts, const std::string& file,
                        const std::string& out) {
  Context ctx(opts.resolve());
  const auto spec = pipeline::load_pipeline(read_file(file), ctx.nodes);
  const auto document = pipeline::export_pipeline(spec);
  if (out.empty()) {
    std::cout << document;
  } else {
    write_file_atomic(out, document);
    std::cout << "exported " << spec.pipeline_id << "@" << spec.version << "\n";
  }
  return 0;
}

// ---- publish / query -------------------------------------------------

int cmd_publish(const GlobalOpts& opts, const std::string& dataset_id,
                const std::string& schema_ref_text, const std::string& csv_file,
                const std::string& study_id, const std::string& sidecar_file) {
  Context ctx(opts.resolve());
  const auto ref = parse_ref_arg(schema_ref_text);
  const auto schema = ctx.schemas.code(ref);
  if (!schema) throw Error(ErrorCode::schema_not_found, ref.display() + " is not published");

  const std::string csv = read_file(csv_file);
  const Table table = model::coerce_csv_table(from_csv(csv), *schema);
  const auto report = model::validate_output(table, *schema, ctx.vocabulary, dataset_id);
  if (!report.valid()) {
    std::cerr << report.to_json().dump(2) << "\n";
    return 1;
  }

  // Manual publishes still leave a run record so the audit can trace
  // every outbound dataset to a successful gated run.
  pipeline::RunRecord run;
  run.run_id = "r" + random_hex(12);
  run.pipeline_id = "manual_publish";
  run.pipeline_version = "0";
  run.succeeded = true;
  run.started_at = now_utc();
  run.finished_at = run.started_at;

  store::OutboundRequest request;
  request.environment = ctx.config.environment;
  request.dataset_id = dataset_id;
  request.study_id = study_id;
  request.code_schema_ref = ref;
  request.csv = to_csv(table);
  if (sidecar_file.empty()) {
    pipeline::PipelineSpec synthetic;
    synthetic.pipeline_id = run.pipeline_id;
    synthetic.version = run.pipeline_version;
    request.sidecar = pipeline::build_discovery_sidecar(*schema, table, synthetic, dataset_id,
                                                        run.run_id, now_utc());
  } else {
    request.sidecar = parse_json_file(sidecar_file);
  }
  request.row_count = table.row_count();
  request.code_validated = true;
  request.run_id = run.run_id;
  request.generated_at = now_utc();

  ctx.store.save_run(run.run_id, run.to_json());
  const auto manifest = ctx.store.publish_outbound(request);
  std::cout << "published " << manifest.environment << "/" << manifest.dataset_id << " rows "
            << manifest.row_count << "\n";
  return 0;
}

int cmd_query(const GlobalOpts& opts, const std::string& dataset_id, const std::string& field,
              const std::string& aggregate, const std::string& group_by,
              const std::string& from, const std::string& to) {
  Context ctx(opts.resolve());
  Json doc{{"dataset_id", dataset_id}, {"field", field},       {"aggregate", aggregate},
           {"group_by", group_by},     {"from", from},         {"to", to}};
  const auto request = access::QueryRequest::from_json(doc);

  // The operator owns the store; synthesize a token covering everything
  // actually published so the scoped read path stays the only read path.
  access::AccessToken token;
  token.expires_at = Instant::from_millis(now_utc().millis() + 3600000);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& manifest : ctx.store.list_outbound()) {
    if (seen.insert({manifest.environment, manifest.study_id}).second) {
      token.scopes.push_back({manifest.environment, manifest.study_id});
    }
  }

  access::DatasetCatalog catalog(ctx.store, ctx.schemas);
  const auto series = catalog.query_series(request, token);
  std::cout << series.to_json().dump(2) << "\n";
  return 0;
}

// ---- sim -------------------------------------------------------------

int cmd_sim_generate(const GlobalOpts& opts, std::uint64_t seed, int participants, int days,
                     double corruption_rate, const std::string& out_dir) {
  (void)opts;
  sim::SimConfig config;
  config.seed = seed;
  config.participants = participants;
  config.days = days;
  config.corruption_rate = corruption_rate;
  const auto stream = sim::generate(config);
  sim::write_stream(stream, out_dir);

  const auto ledger = stream.ledger();
  std::cout << "records " << ledger.at("totals").at("records").get<std::int64_t>()
            << " expected_accepted "
            << ledger.at("totals").at("expected_accepted").get<std::int64_t>()
            << " expected_rejected "
            << ledger.at("totals").at("expected_rejected").get<std::int64_t>() << "\n";
  return 0;
}

int cmd_sim_replay(const GlobalOpts& opts, const std::string& stream_dir,
                   const std::string& mode, const std::string& host, int port,
                   const std::string& token, const std::string& token_file) {
  (void)opts;
  const auto stream = sim::read_stream(stream_dir);
  sim::ReplayOptions options;
  options.host = host;
  options.port = port;
  options.token = token_file.empty() ? token : read_file(token_file);
  while (!options.token.empty() &&
         (options.token.back() == '\n' || options.token.back() == '\r')) {
    options.token.pop_back();
  }
  if (mode == "batch") {
    options.mode = sim::ReplayMode::batch;
  } else if (mode == "realtime") {
    options.mode = sim::ReplayMode::realtime;
  } else {
    throw Error(ErrorCode::parse_error, "mode must be batch or realtime");
  }
  const auto totals = sim::replay(stream, options);
  std::cout << totals.to_json().dump(2) << "\n";
  return 0;
}

// ---- serve -----------------------------------------------------------

int cmd_serve(const GlobalOpts& opts, const std::string& addr_flag) {
  Context ctx(opts.resolve());
  if (ctx.config.key_file.empty()) {
    throw Error(ErrorCode::invalid_config,
                "serve needs key material (--key-file or key_file in the config)");
  }
  const std::string key = access::load_key_material(ctx.config.key_file);
  const auto [host, port] = split_addr(addr_flag.empty() ? ctx.config.listen_addr : addr_flag);

  gateway::IngestService ingest(ctx.store, ctx.schemas);
  access::DatasetCatalog catalog(ctx.store, ctx.schemas);

  httplib::Server server;
  gateway::GatewayContext gateway_ctx;
  gateway_ctx.ingest = &ingest;
  gateway_ctx.schemas = &ctx.schemas;
  gateway_ctx.verifier = access::TokenVerifier(key);
  gateway_ctx.environment = ctx.config.environment;
  gateway::mount_gateway_routes(server, gateway_ctx);

  access::AccessContext access_ctx;
  access_ctx.catalog = &catalog;
  access_ctx.verifier = access::TokenVerifier(key);
  access::mount_access_routes(server, access_ctx);

  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::transport_error, "cannot bind " + host);
  } else if (!server.bind_to_port(host, port)) {
    throw Error(ErrorCode::transport_error, "cannot bind " + host + ":" + std::to_string(port));
  }
  std::cerr << "listening on " << host << ":" << bound << "\n";
  if (!server.listen_after_bind()) {
    throw Error(ErrorCode::transport_error, "server stopped unexpectedly");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fabric operator CLI"};
  app.require_subcommand(1);

  GlobalOpts opts;
  app.add_option("--config", opts.config_path, "config file (default: $FABRIC_CONFIG)");
  app.add_option("--store", opts.store_override, "store root directory");
  app.add_option("--env", opts.env_override, "environment name for scoping");
  app.add_option("--key-file", opts.key_override, "bearer-token key material");
  app.add_flag("--verbose", opts.verbose, "print timestamps and run ids to stderr");

  std::function<int()> run;

  // schema
  auto* schema = app.add_subcommand("schema", "publish and inspect schemas");
  schema->require_subcommand(1);
  {
    static std::string file;
    auto* publish = schema->add_subcommand("publish", "publish a schema document");
    publish->add_option("file", file, "schema JSON document")->required();
    publish->callback([&] { run = [&] { return cmd_schema_publish(opts, file); }; });

    static std::string ref;
    auto* show = schema->add_subcommand("show", "print a published schema");
    show->add_option("ref", ref, "schema_id@vN")->required();
    show->callback([&] { run = [&] { return cmd_schema_show(opts, ref); }; });
  }

  // vocab
  auto* vocab = app.add_subcommand("vocab", "vocabulary registry");
  vocab->require_subcommand(1);
  {
    static std::string file, actor = "operator", name;
    auto* propose = vocab->add_subcommand("propose", "propose a term from a JSON document");
    propose->add_option("file", file, "term document")->required();
    propose->add_option("--actor", actor, "proposer identity");
    propose->callback([&] { run = [&] { return cmd_vocab_propose(opts, file, actor); }; });

    auto* accept = vocab->add_subcommand("accept", "accept a proposed term");
    accept->add_option("name", name, "canonical term name")->required();
    accept->add_option("--actor", actor, "deciding identity");
    accept->callback([&] { run = [&] { return cmd_vocab_accept(opts, name, actor); }; });

    auto* list = vocab->add_subcommand("list", "list terms");
    list->callback([&] { run = [&] { return cmd_vocab_list(opts); }; });
  }

  // ingest
  auto* ingest = app.add_subcommand("ingest", "submit records");
  ingest->require_subcommand(1);
  {
    static std::string file, dir;
    auto* record = ingest->add_subcommand("record", "submit one record document");
    record->add_option("file", file, "record JSON document")->required();
    record->callback([&] { run = [&] { return cmd_ingest_record(opts, file); }; });

    auto* batch = ingest->add_subcommand("batch", "submit a batch directory");
    batch->add_option("dir", dir, "directory with batch.json and files")->required();
    batch->callback([&] { run = [&] { return cmd_ingest_batch(opts, dir); }; });
  }

  // store
  auto* store_cmd = app.add_subcommand("store", "datastore operations");
  store_cmd->require_subcommand(1);
  {
    static std::vector<std::string> ids;
    static bool all_valid = false;
    auto* promote = store_cmd->add_subcommand("promote", "promote staging entries");
    promote->add_option("entry_ids", ids, "entry ids to promote");
    promote->add_flag("--all-valid", all_valid, "promote every valid staging entry");
    promote->callback([&] { run = [&] { return cmd_store_promote(opts, ids, all_valid); }; });

    auto* audit = store_cmd->add_subcommand("audit", "full-scan integrity audit");
    audit->callback([&] { run = [&] { return cmd_store_audit(opts); }; });

    static QueryFilterFlags flags;
    auto* query = store_cmd->add_subcommand("query", "query metadata entries");
    query->add_option("--study", flags.study, "study id");
    query->add_option("--participant", flags.participant, "participant id");
    query->add_option("--task", flags.task, "task id");
    query->add_option("--lifecycle", flags.lifecycle, "staging or production");
    query->add_option("--from", flags.from, "capture time lower bound (RFC 3339)");
    query->add_option("--to", flags.to, "capture time upper bound (RFC 3339)");
    query->callback([&] { run = [&] { return cmd_store_query(opts, flags); }; });
  }

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "pipeline operations");
  pipeline_cmd->require_subcommand(1);
  {
    static std::string file, dataset, study, out;
    auto* validate = pipeline_cmd->add_subcommand("validate", "validate a pipeline document");
    validate->add_option("file", file, "pipeline JSON document")->required();
    validate->callback([&] { run = [&] { return cmd_pipeline_validate(opts, file); }; });

    auto* plan = pipeline_cmd->add_subcommand("plan", "print the stage plan");
    plan->add_option("file", file, "pipeline JSON document")->required();
    plan->callback([&] { run = [&] { return cmd_pipeline_plan(opts, file); }; });

    auto* run_cmd = pipeline_cmd->add_subcommand("run", "execute a pipeline");
    run_cmd->add_option("file", file, "pipeline JSON document")->required();
    run_cmd->add_option("--dataset", dataset, "dataset id override (single binding only)");
    run_cmd->add_option("--study", study, "study id for discovery metadata");
    run_cmd->callback([&] { run = [&] { return cmd_pipeline_run(opts, file, dataset, study); }; });

    auto* export_cmd = pipeline_cmd->add_subcommand("export", "export to the generic DAG format");
    export_cmd->add_option("file", file, "pipeline JSON document")->required();
    export_cmd->add_option("--out", out, "write to a file instead of stdout");
    export_cmd->callback([&] { run = [&] { return cmd_pipeline_export(opts, file, out); }; });
  }

  // publish
  {
    static std::string dataset, schema_ref, csv, study = "adhoc", sidecar;
    auto* publish = app.add_subcommand("publish", "publish a CODE-validated dataset");
    publish->add_option("--dataset", dataset, "dataset id")->required();
    publish->add_option("--schema", schema_ref, "CODE schema (schema_id@vN)")->required();
    publish->add_option("--csv", csv, "dataset object file")->required();
    publish->add_option("--study", study, "study id for scoping");
    publish->add_option("--sidecar", sidecar, "discovery sidecar JSON (default: derived)");
    publish->callback(
        [&] { run = [&] { return cmd_publish(opts, dataset, schema_ref, csv, study, sidecar); }; });
  }

  // query
  {
    static std::string dataset, field, aggregate = "count", group_by = "none", from, to;
    auto* query = app.add_subcommand("query", "aggregate a published dataset");
    query->add_option("--dataset", dataset, "dataset id")->required();
    query->add_option("--field", field, "field to aggregate")->required();
    query->add_option("--aggregate", aggregate, "count|mean|min|max|sum");
    query->add_option("--group-by", group_by, "none|hour|day");
    query->add_option("--from", from, "range start (RFC 3339, inclusive)")->required();
    query->add_option("--to", to, "range end (RFC 3339, inclusive)")->required();
    query->callback([&] {
      run = [&] { return cmd_query(opts, dataset, field, aggregate, group_by, from, to); };
    });
  }

  // sim
  auto* sim_cmd = app.add_subcommand("sim", "study simulator");
  sim_cmd->require_subcommand(1);
  {
    static std::uint64_t seed = 42;
    static int participants = 3, days = 7, port = 8080;
    static double rate = 0.0;
    static std::string out_dir, stream_dir, mode = "batch", host = "127.0.0.1", token,
                       token_file;
    auto* generate = sim_cmd->add_subcommand("generate", "generate a deterministic stream");
    generate->add_option("--seed", seed, "random seed");
    generate->add_option("--participants", participants, "participant count");
    generate->add_option("--days", days, "days per participant");
    generate->add_option("--corruption-rate", rate, "fraction of records corrupted [0,1]");
    generate->add_option("--out", out_dir, "output directory")->required();
    generate->callback([&] {
      run = [&] { return cmd_sim_generate(opts, seed, participants, days, rate, out_dir); };
    });

    auto* replay = sim_cmd->add_subcommand("replay", "replay a stream against a gateway");
    replay->add_option("--stream", stream_dir, "stream directory")->required();
    replay->add_option("--mode", mode, "batch|realtime");
    replay->add_option("--host", host, "gateway host");
    replay->add_option("--port", port, "gateway port")->required();
    replay->add_option("--token", token, "bearer token");
    replay->add_option("--token-file", token_file, "file holding the bearer token");
    replay->callback([&] {
      run = [&] {
        return cmd_sim_replay(opts, stream_dir, mode, host, port, token, token_file);
      };
    });
  }

  // serve
  {
    static std::string addr;
    auto* serve = app.add_subcommand("serve", "run the gateway and access services");
    serve->add_option("--addr", addr, "host:port (port 0 picks a free port)");
    serve->callback([&] { run = [&] { return cmd_serve(opts, addr); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run ? run() : 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::storage_io:
      case ErrorCode::transport_error:
        return 3;
      default:
        return 1;
    }
  } catch (const Json::exception& e) {
    std::cerr << "PARSE_ERROR: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
