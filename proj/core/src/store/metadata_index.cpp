#include "fabric/store/metadata_index.hpp"

#include <sqlite3.h>

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"

namespace fabric::store {

std::string_view to_string(Lifecycle lc) {
  return lc == Lifecycle::staging ? "staging" : "production";
}

Lifecycle lifecycle_from_string(std::string_view text) {
  if (text == "staging") return Lifecycle::staging;
  if (text == "production") return Lifecycle::production;
  throw Error(ErrorCode::parse_error, "unknown lifecycle '" + std::string(text) + "'");
}

Json MetadataEntry::to_json() const {
  Json doc{{"entry_id", entry_id},
           {"study_id", study_id},
           {"participant_id", participant_id},
           {"device_id", device_id},
           {"task_id", task_id},
           {"schema_ref", schema_ref.to_json()},
           {"capture_time", capture_time.to_rfc3339()},
           {"ingest_time", ingest_time.to_rfc3339()},
           {"inline_fields", inline_fields},
           {"lifecycle", std::string(to_string(lifecycle))},
           {"outbound_envs", outbound_envs},
           {"validation", validation.to_json()}};
  doc["blob"] = blob ? blob->to_json() : Json(nullptr);
  return doc;
}

MetadataEntry MetadataEntry::from_json(const Json& doc) {
  MetadataEntry entry;
  try {
    entry.entry_id = doc.at("entry_id").get<std::string>();
    entry.study_id = doc.at("study_id").get<std::string>();
    entry.participant_id = doc.at("participant_id").get<std::string>();
    entry.device_id = doc.at("device_id").get<std::string>();
    entry.task_id = doc.at("task_id").get<std::string>();
    entry.schema_ref = model::SchemaRef::from_json(doc.at("schema_ref"));
    auto capture = parse_rfc3339(doc.at("capture_time").get<std::string>());
    auto ingest = parse_rfc3339(doc.at("ingest_time").get<std::string>());
    if (!capture || !ingest) {
      throw Error(ErrorCode::parse_error, "entry timestamps must be RFC 3339 UTC");
    }
    entry.capture_time = *capture;
    entry.ingest_time = *ingest;
    if (doc.contains("blob") && !doc.at("blob").is_null()) {
      entry.blob = BlobRef::from_json(doc.at("blob"));
    }
    entry.inline_fields = doc.value("inline_fields", Json::object());
    entry.lifecycle = lifecycle_from_string(doc.at("lifecycle").get<std::string>());
    for (const auto& env : doc.value("outbound_envs", Json::array())) {
      entry.outbound_envs.insert(env.get<std::string>());
    }
    entry.validation = model::ValidationReport::from_json(doc.at("validation"));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("bad metadata entry: ") + e.what());
  }
  return entry;
}

std::string idempotency_key(const MetadataEntry& entry) {
  const std::string content_hash =
      entry.blob ? entry.blob->checksum : sha256_hex(entry.inline_fields.dump());
  return entry.participant_id + '\x1f' + entry.task_id + '\x1f' +
         std::to_string(entry.capture_time.millis()) + '\x1f' + content_hash;
}

std::string derive_entry_id(const std::string& idem_key) {
  return "e" + sha256_hex(idem_key).substr(0, 24);
}

Json PromotionReport::to_json() const {
  Json out{{"promoted", promoted}, {"skipped", skipped}, {"items", Json::array()}};
  for (const auto& item : items) {
    Json row{{"entry_id", item.entry_id},
             {"status", item.status == PromoteStatus::promoted ? "promoted" : "skipped"}};
    if (!item.reason.empty()) row["reason"] = item.reason;
    out["items"].push_back(std::move(row));
  }
  return out;
}

namespace {

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::storage_io, std::string("prepare: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  void bind(int idx, const std::string& value) {
    check(sqlite3_bind_text(stmt_, idx, value.data(), static_cast<int>(value.size()),
                            SQLITE_TRANSIENT));
  }
  void bind(int idx, std::int64_t value) { check(sqlite3_bind_int64(stmt_, idx, value)); }
  void bind_null(int idx) { check(sqlite3_bind_null(stmt_, idx)); }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(ErrorCode::storage_io, std::string("step: ") + sqlite3_errmsg(db_));
  }

  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }
  std::string text(int col) const {
    const unsigned char* p = sqlite3_column_text(stmt_, col);
    if (p == nullptr) return {};
    return std::string(reinterpret_cast<const char*>(p),
                       static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)));
  }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) {
      throw Error(ErrorCode::storage_io, std::string("bind: ") + sqlite3_errmsg(db_));
    }
  }
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string message = err ? err : "unknown sqlite error";
    sqlite3_free(err);
    throw Error(ErrorCode::storage_io, "exec: " + message);
  }
}

constexpr const char* kColumns =
    "entry_id, study_id, participant_id, device_id, task_id, schema_id, schema_version, "
    "capture_ms, ingest_ms, blob_json, inline_json, lifecycle, outbound_json, validation_json";

MetadataEntry entry_from_row(const Stmt& stmt) {
  MetadataEntry entry;
  entry.entry_id = stmt.text(0);
  entry.study_id = stmt.text(1);
  entry.participant_id = stmt.text(2);
  entry.device_id = stmt.text(3);
  entry.task_id = stmt.text(4);
  entry.schema_ref = {stmt.text(5), static_cast<int>(stmt.int64(6))};
  entry.capture_time = Instant::from_millis(stmt.int64(7));
  entry.ingest_time = Instant::from_millis(stmt.int64(8));
  if (!stmt.is_null(9)) entry.blob = BlobRef::from_json(Json::parse(stmt.text(9)));
  entry.inline_fields = Json::parse(stmt.text(10));
  entry.lifecycle = lifecycle_from_string(stmt.text(11));
  for (const auto& env : Json::parse(stmt.text(12))) {
    entry.outbound_envs.insert(env.get<std::string>());
  }
  entry.validation = model::ValidationReport::from_json(Json::parse(stmt.text(13)));
  return entry;
}

}  // namespace

struct MetadataIndex::Impl {
  sqlite3* db = nullptr;
  ~Impl() {
    if (db != nullptr) sqlite3_close(db);
  }
};

MetadataIndex::MetadataIndex(const std::filesystem::path& db_file) : impl_(new Impl) {
  ensure_dir(db_file.parent_path());
  if (sqlite3_open(db_file.string().c_str(), &impl_->db) != SQLITE_OK) {
    throw Error(ErrorCode::storage_io, "cannot open index at " + db_file.string());
  }
  sqlite3_busy_timeout(impl_->db, 5000);
  exec(impl_->db, "PRAGMA journal_mode=WAL");
  exec(impl_->db, "PRAGMA synchronous=NORMAL");
  exec(impl_->db,
       "CREATE TABLE IF NOT EXISTS entries ("
       " entry_id TEXT PRIMARY KEY,"
       " idem_key TEXT NOT NULL UNIQUE,"
       " study_id TEXT NOT NULL,"
       " participant_id TEXT NOT NULL,"
       " device_id TEXT NOT NULL,"
       " task_id TEXT NOT NULL,"
       " schema_id TEXT NOT NULL,"
       " schema_version INTEGER NOT NULL,"
       " capture_ms INTEGER NOT NULL,"
       " ingest_ms INTEGER NOT NULL,"
       " blob_json TEXT,"
       " inline_json TEXT NOT NULL,"
       " lifecycle TEXT NOT NULL CHECK (lifecycle IN ('staging','production')),"
       " outbound_json TEXT NOT NULL,"
       " validation_json TEXT NOT NULL,"
       " valid INTEGER NOT NULL CHECK (valid IN (0,1) AND"
       "   NOT (lifecycle = 'production' AND valid = 0)))");
  exec(impl_->db,
       "CREATE INDEX IF NOT EXISTS idx_entries_scope"
       " ON entries (study_id, task_id, lifecycle, capture_ms)");
  exec(impl_->db,
       "CREATE INDEX IF NOT EXISTS idx_entries_order ON entries (capture_ms, entry_id)");
}

MetadataIndex::~MetadataIndex() = default;

PutOutcome MetadataIndex::put(const MetadataEntry& entry) {
  for (const auto& [name, value] :
       {std::pair<const char*, const std::string&>{"study_id", entry.study_id},
        {"participant_id", entry.participant_id},
        {"device_id", entry.device_id},
        {"task_id", entry.task_id}}) {
    if (value.empty()) {
      throw Error(ErrorCode::constraint_violation, std::string(name) + " must be non-empty");
    }
  }
  const std::string idem = idempotency_key(entry);
  const std::string entry_id = derive_entry_id(idem);

  std::lock_guard<std::mutex> lock(mu_);
  {
    Stmt existing(impl_->db, "SELECT entry_id FROM entries WHERE idem_key = ?1");
    existing.bind(1, idem);
    if (existing.step()) return {existing.text(0), false};
  }
  Stmt insert(impl_->db,
              "INSERT INTO entries (entry_id, idem_key, study_id, participant_id, device_id,"
              " task_id, schema_id, schema_version, capture_ms, ingest_ms, blob_json,"
              " inline_json, lifecycle, outbound_json, validation_json, valid)"
              " VALUES (?1,?2,?3,?4,?5,?6,?7,?8,?9,?10,?11,?12,'staging','[]',?13,?14)");
  insert.bind(1, entry_id);
  insert.bind(2, idem);
  insert.bind(3, entry.study_id);
  insert.bind(4, entry.participant_id);
  insert.bind(5, entry.device_id);
  insert.bind(6, entry.task_id);
  insert.bind(7, entry.schema_ref.schema_id);
  insert.bind(8, static_cast<std::int64_t>(entry.schema_ref.version));
  insert.bind(9, entry.capture_time.millis());
  insert.bind(10, entry.ingest_time.millis());
  if (entry.blob) {
    insert.bind(11, entry.blob->to_json().dump());
  } else {
    insert.bind_null(11);
  }
  insert.bind(12, entry.inline_fields.dump());
  insert.bind(13, entry.validation.to_json().dump());
  insert.bind(14, static_cast<std::int64_t>(entry.validation.valid() ? 1 : 0));
  insert.step();
  return {entry_id, true};
}

std::optional<MetadataEntry> MetadataIndex::get(const std::string& entry_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt stmt(impl_->db,
            ("SELECT " + std::string(kColumns) + " FROM entries WHERE entry_id = ?1").c_str());
  stmt.bind(1, entry_id);
  if (!stmt.step()) return std::nullopt;
  return entry_from_row(stmt);
}

PromotionReport MetadataIndex::promote(const std::vector<std::string>& entry_ids) {
  PromotionReport report;
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& id : entry_ids) {
    PromotionItem item;
    item.entry_id = id;
    {
      Stmt update(impl_->db,
                  "UPDATE entries SET lifecycle = 'production'"
                  " WHERE entry_id = ?1 AND lifecycle = 'staging' AND valid = 1");
      update.bind(1, id);
      update.step();
    }
    if (sqlite3_changes(impl_->db) == 1) {
      item.status = PromoteStatus::promoted;
      report.promoted += 1;
    } else {
      item.status = PromoteStatus::skipped;
      Stmt probe(impl_->db, "SELECT lifecycle, valid FROM entries WHERE entry_id = ?1");
      probe.bind(1, id);
      if (!probe.step()) {
        item.reason = "NOT_FOUND";
      } else if (probe.text(0) == "production") {
        item.reason = "ALREADY_PRODUCTION";
      } else {
        item.reason = "NOT_VALID";
      }
      report.skipped += 1;
    }
    report.items.push_back(std::move(item));
  }
  return report;
}

std::vector<MetadataEntry> MetadataIndex::query(const MetadataFilter& filter) const {
  std::string sql = "SELECT " + std::string(kColumns) + " FROM entries";
  std::vector<std::string> clauses;
  if (filter.study_id) clauses.push_back("study_id = ?");
  if (filter.participant_id) clauses.push_back("participant_id = ?");
  if (filter.task_id) clauses.push_back("task_id = ?");
  if (filter.lifecycle) clauses.push_back("lifecycle = ?");
  if (filter.from) clauses.push_back("capture_ms >= ?");
  if (filter.to) clauses.push_back("capture_ms <= ?");
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    sql += (i == 0 ? " WHERE " : " AND ") + clauses[i];
  }
  sql += " ORDER BY capture_ms, entry_id";

  std::lock_guard<std::mutex> lock(mu_);
  Stmt stmt(impl_->db, sql.c_str());
  int idx = 1;
  if (filter.study_id) stmt.bind(idx++, *filter.study_id);
  if (filter.participant_id) stmt.bind(idx++, *filter.participant_id);
  if (filter.task_id) stmt.bind(idx++, *filter.task_id);
  if (filter.lifecycle) stmt.bind(idx++, std::string(to_string(*filter.lifecycle)));
  if (filter.from) stmt.bind(idx++, filter.from->millis());
  if (filter.to) stmt.bind(idx++, filter.to->millis());

  std::vector<MetadataEntry> out;
  while (stmt.step()) out.push_back(entry_from_row(stmt));
  return out;
}

void MetadataIndex::mark_outbound(const std::vector<std::string>& entry_ids,
                                  const std::string& environment) {
  std::lock_guard<std::mutex> lock(mu_);
  exec(impl_->db, "BEGIN IMMEDIATE");
  try {
    for (const auto& id : entry_ids) {
      Json envs;
      {
        Stmt select(impl_->db, "SELECT outbound_json FROM entries WHERE entry_id = ?1");
        select.bind(1, id);
        if (!select.step()) {
          throw Error(ErrorCode::not_found, "no entry " + id);
        }
        envs = Json::parse(select.text(0));
      }
      std::set<std::string> merged;
      for (const auto& env : envs) merged.insert(env.get<std::string>());
      merged.insert(environment);
      Stmt update(impl_->db, "UPDATE entries SET outbound_json = ?1 WHERE entry_id = ?2");
      update.bind(1, Json(merged).dump());
      update.bind(2, id);
      update.step();
    }
    exec(impl_->db, "COMMIT");
  } catch (...) {
    exec(impl_->db, "ROLLBACK");
    throw;
  }
}

std::vector<MetadataEntry> MetadataIndex::all() const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt stmt(impl_->db,
            ("SELECT " + std::string(kColumns) + " FROM entries ORDER BY entry_id").c_str());
  std::vector<MetadataEntry> out;
  while (stmt.step()) out.push_back(entry_from_row(stmt));
  return out;
}

std::size_t MetadataIndex::count() const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt stmt(impl_->db, "SELECT COUNT(*) FROM entries");
  stmt.step();
  return static_cast<std::size_t>(stmt.int64(0));
}

}  // namespace fabric::store
