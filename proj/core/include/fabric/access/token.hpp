#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fabric/time.hpp"

namespace fabric::access {

struct TokenScope {
  std::string environment;
  std::string study_id;

  auto operator<=>(const TokenScope&) const = default;
};

struct AccessToken {
  std::vector<TokenScope> scopes;
  Instant expires_at;
  std::string subject;

  bool covers(const std::string& environment, const std::string& study_id) const;
};

// Bearer token: "fab1." + b64url(payload) + "." + b64url(mac) where mac =
// HMAC-SHA256(key, "fab1." + b64url(payload)). Issuance is an external
// concern; this helper exists for fixtures and operator tooling.
std::string sign_token(const std::string& key, const std::vector<TokenScope>& scopes,
                       Instant expires_at, const std::string& subject = "");

// Local verification against shared key material.
class TokenVerifier {
 public:
  TokenVerifier() = default;
  explicit TokenVerifier(std::string key, std::function<Instant()> clock = now_utc);

  // Throws Error(malformed_token | invalid_signature | expired).
  AccessToken verify(const std::string& token) const;

  bool configured() const { return !key_.empty(); }

 private:
  std::string key_;
  std::function<Instant()> clock_ = now_utc;
};

// Key bytes from a file, trailing newline trimmed.
std::string load_key_material(const std::filesystem::path& file);

}  // namespace fabric::access
