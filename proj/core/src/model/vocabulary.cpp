#include "fabric/model/vocabulary.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <mutex>

#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"

namespace fabric::model {

std::string to_string(TermStatus status) {
  switch (status) {
    case TermStatus::proposed: return "proposed";
    case TermStatus::accepted: return "accepted";
    case TermStatus::rejected: return "rejected";
  }
  return "proposed";
}

std::optional<TermStatus> term_status_from_string(std::string_view text) {
  if (text == "proposed") return TermStatus::proposed;
  if (text == "accepted") return TermStatus::accepted;
  if (text == "rejected") return TermStatus::rejected;
  return std::nullopt;
}

Json VocabularyTerm::to_json() const {
  Json doc;
  doc["canonical_name"] = canonical_name;
  doc["definition"] = definition;
  doc["kind"] = to_string(kind);
  if (unit) doc["unit"] = *unit;
  doc["aliases"] = aliases;
  doc["status"] = to_string(status);
  doc["proposed_by"] = proposed_by;
  doc["proposed_at"] = proposed_at.to_rfc3339();
  if (decided_by) doc["decided_by"] = *decided_by;
  if (decided_at) doc["decided_at"] = decided_at->to_rfc3339();
  return doc;
}

VocabularyTerm VocabularyTerm::from_json(const Json& doc) {
  VocabularyTerm term;
  term.canonical_name = doc.at("canonical_name").get<std::string>();
  term.definition = doc.value("definition", std::string());
  const auto kind = field_kind_from_string(doc.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::parse_error, "term has unknown kind");
  term.kind = *kind;
  if (doc.contains("unit")) term.unit = doc["unit"].get<std::string>();
  if (doc.contains("aliases")) term.aliases = doc["aliases"].get<std::vector<std::string>>();
  const auto status = term_status_from_string(doc.value("status", "proposed"));
  if (!status) throw Error(ErrorCode::parse_error, "term has unknown status");
  term.status = *status;
  term.proposed_by = doc.value("proposed_by", std::string());
  if (doc.contains("proposed_at")) {
    const auto at = parse_rfc3339(doc["proposed_at"].get<std::string>());
    if (!at) throw Error(ErrorCode::parse_error, "term proposed_at is not RFC 3339 UTC");
    term.proposed_at = *at;
  }
  if (doc.contains("decided_by")) term.decided_by = doc["decided_by"].get<std::string>();
  if (doc.contains("decided_at")) {
    const auto at = parse_rfc3339(doc["decided_at"].get<std::string>());
    if (!at) throw Error(ErrorCode::parse_error, "term decided_at is not RFC 3339 UTC");
    term.decided_at = *at;
  }
  return term;
}

VocabularyRegistry::VocabularyRegistry() = default;

VocabularyRegistry::VocabularyRegistry(std::filesystem::path ledger_file)
    : ledger_file_(std::move(ledger_file)) {
  replay();
}

void VocabularyRegistry::replay() {
  if (ledger_file_.empty() || !std::filesystem::exists(ledger_file_)) return;
  std::ifstream in(ledger_file_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json event;
    try {
      event = Json::parse(line);
    } catch (const Json::parse_error&) {
      // A torn final line from an interrupted append is not replayable
      // state; everything before it is.
      break;
    }
    const auto type = event.value("event", std::string());
    if (type == "register") {
      register_locked(VocabularyTerm::from_json(event.at("term")), false);
    } else if (type == "accept" || type == "reject") {
      const auto at = parse_rfc3339(event.value("at", std::string()));
      decide_locked(event.at("name").get<std::string>(), event.value("actor", std::string()),
                    type == "accept" ? TermStatus::accepted : TermStatus::rejected, false, at);
    } else {
      throw Error(ErrorCode::parse_error,
                  "vocabulary ledger line " + std::to_string(line_no) + ": unknown event");
    }
  }
}

void VocabularyRegistry::append_event(const Json& event) {
  if (ledger_file_.empty()) return;
  ensure_dir(ledger_file_.parent_path());
  const std::string line = event.dump() + "\n";
  const int fd = ::open(ledger_file_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error(ErrorCode::storage_io, "cannot open " + ledger_file_.string());
  const ssize_t n = ::write(fd, line.data(), line.size());
  const bool ok = n == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw Error(ErrorCode::storage_io, "append failed " + ledger_file_.string());
}

RegisterOutcome VocabularyRegistry::register_term(VocabularyTerm term) {
  std::unique_lock lock(mutex_);
  return register_locked(std::move(term), true);
}

RegisterOutcome VocabularyRegistry::register_locked(VocabularyTerm term, bool persist) {
  if (!is_identifier(term.canonical_name)) {
    throw Error(ErrorCode::invariant_error,
                "canonical name '" + term.canonical_name + "' is not an identifier");
  }
  for (const auto& alias : term.aliases) {
    if (!is_identifier(alias)) {
      throw Error(ErrorCode::invariant_error, "alias '" + alias + "' is not an identifier");
    }
  }
  if (term.status != TermStatus::proposed) {
    throw Error(ErrorCode::invariant_error, "new terms must be proposed");
  }

  const auto collides = [&](const std::string& name) -> std::optional<std::string> {
    if (const auto it = terms_.find(name); it != terms_.end()) return it->first;
    if (const auto it = alias_to_canonical_.find(name); it != alias_to_canonical_.end()) {
      return it->second;
    }
    return std::nullopt;
  };

  if (const auto existing = collides(term.canonical_name)) {
    const VocabularyTerm& other = terms_.at(*existing);
    if (*existing == term.canonical_name && other.kind == term.kind && other.unit == term.unit) {
      // identical re-proposal, no-op
      return {RegisterStatus::proposed, "", "already registered"};
    }
    std::string why = *existing != term.canonical_name
                          ? "name collides with alias of '" + *existing + "'"
                          : (other.kind != term.kind ? "kind mismatch with existing term"
                                                     : "unit mismatch with existing term");
    return {RegisterStatus::conflict, *existing, why};
  }
  for (const auto& alias : term.aliases) {
    if (const auto existing = collides(alias)) {
      return {RegisterStatus::conflict, *existing,
              "alias '" + alias + "' collides with '" + *existing + "'"};
    }
    if (alias == term.canonical_name) {
      return {RegisterStatus::conflict, term.canonical_name, "alias equals canonical name"};
    }
  }

  if (persist) append_event(Json{{"event", "register"}, {"term", term.to_json()}});
  for (const auto& alias : term.aliases) alias_to_canonical_[alias] = term.canonical_name;
  terms_[term.canonical_name] = std::move(term);
  return {RegisterStatus::proposed, "", "registered"};
}

std::optional<VocabularyTerm> VocabularyRegistry::resolve(std::string_view name) const {
  std::shared_lock lock(mutex_);
  if (const auto it = terms_.find(name); it != terms_.end()) return it->second;
  if (const auto it = alias_to_canonical_.find(name); it != alias_to_canonical_.end()) {
    return terms_.at(it->second);
  }
  return std::nullopt;
}

VocabularyTerm VocabularyRegistry::accept(std::string_view name, std::string_view actor) {
  std::unique_lock lock(mutex_);
  return decide_locked(name, actor, TermStatus::accepted, true, std::nullopt);
}

VocabularyTerm VocabularyRegistry::reject(std::string_view name, std::string_view actor) {
  std::unique_lock lock(mutex_);
  return decide_locked(name, actor, TermStatus::rejected, true, std::nullopt);
}

VocabularyTerm VocabularyRegistry::decide_locked(std::string_view name, std::string_view actor,
                                                 TermStatus target, bool persist,
                                                 std::optional<Instant> at) {
  auto it = terms_.find(name);
  if (it == terms_.end()) {
    if (const auto alias = alias_to_canonical_.find(name); alias != alias_to_canonical_.end()) {
      it = terms_.find(alias->second);
    }
  }
  if (it == terms_.end()) {
    throw Error(ErrorCode::not_found, "vocabulary term '" + std::string(name) + "' not found");
  }
  if (it->second.status != TermStatus::proposed) {
    throw Error(ErrorCode::invalid_transition,
                "term '" + it->first + "' is already " + to_string(it->second.status));
  }
  const Instant when = at.value_or(now_utc());
  if (persist) {
    append_event(Json{{"event", target == TermStatus::accepted ? "accept" : "reject"},
                      {"name", it->first},
                      {"actor", std::string(actor)},
                      {"at", when.to_rfc3339()}});
  }
  it->second.status = target;
  it->second.decided_by = std::string(actor);
  it->second.decided_at = when;
  return it->second;
}

std::vector<VocabularyTerm> VocabularyRegistry::list() const {
  std::shared_lock lock(mutex_);
  std::vector<VocabularyTerm> out;
  out.reserve(terms_.size());
  for (const auto& [_, term] : terms_) out.push_back(term);
  return out;
}

std::size_t VocabularyRegistry::size() const {
  std::shared_lock lock(mutex_);
  return terms_.size();
}

}  // namespace fabric::model
