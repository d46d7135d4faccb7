#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "fabric/model/field.hpp"

namespace fabric::model {

enum class TermStatus { proposed, accepted, rejected };

std::string to_string(TermStatus status);
std::optional<TermStatus> term_status_from_string(std::string_view text);

// A crowdsourced canonical data-element definition. Once accepted it is
// immutable and every CODE column bound to it must match kind and unit.
struct VocabularyTerm {
  std::string canonical_name;
  std::string definition;
  FieldKind kind = FieldKind::string_kind;
  std::optional<std::string> unit;
  std::vector<std::string> aliases;
  TermStatus status = TermStatus::proposed;
  std::string proposed_by;
  Instant proposed_at;
  std::optional<std::string> decided_by;
  std::optional<Instant> decided_at;

  Json to_json() const;
  static VocabularyTerm from_json(const Json& doc);
};

enum class RegisterStatus { proposed, conflict };

struct RegisterOutcome {
  RegisterStatus status = RegisterStatus::proposed;
  std::string conflict_with;  // colliding canonical name when status == conflict
  std::string message;
};

// Registry of vocabulary terms, persisted as an append-only ledger of
// term events so any state is reproducible by replay. Mutations are
// serialized behind a single writer; reads see committed state only.
class VocabularyRegistry {
 public:
  // In-memory registry (tests, validation-only paths).
  VocabularyRegistry();
  // File-backed: replays the ledger if present, appends events on mutation.
  explicit VocabularyRegistry(std::filesystem::path ledger_file);

  RegisterOutcome register_term(VocabularyTerm term);

  // Resolves by canonical name or alias; alias resolution returns the
  // canonical term. Null when unknown.
  std::optional<VocabularyTerm> resolve(std::string_view name) const;

  VocabularyTerm accept(std::string_view name, std::string_view actor);
  VocabularyTerm reject(std::string_view name, std::string_view actor);

  std::vector<VocabularyTerm> list() const;  // sorted by canonical_name
  std::size_t size() const;

 private:
  RegisterOutcome register_locked(VocabularyTerm term, bool persist);
  VocabularyTerm decide_locked(std::string_view name, std::string_view actor, TermStatus target,
                               bool persist, std::optional<Instant> at);
  void append_event(const Json& event);
  void replay();

  mutable std::shared_mutex mutex_;
  std::filesystem::path ledger_file_;  // empty => in-memory
  std::map<std::string, VocabularyTerm, std::less<>> terms_;
  std::map<std::string, std::string, std::less<>> alias_to_canonical_;
};

}  // namespace fabric::model
