#include "fabric/access/token.hpp"

#include <openssl/crypto.h>

#include <nlohmann/json.hpp>

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/fsutil.hpp"

namespace fabric::access {

using Json = nlohmann::json;

namespace {
constexpr std::string_view kPrefix = "fab1.";
}

bool AccessToken::covers(const std::string& environment, const std::string& study_id) const {
  for (const auto& scope : scopes) {
    if (scope.environment == environment && scope.study_id == study_id) return true;
  }
  return false;
}

std::string sign_token(const std::string& key, const std::vector<TokenScope>& scopes,
                       Instant expires_at, const std::string& subject) {
  Json payload{{"scopes", Json::array()}, {"expires_at", expires_at.to_rfc3339()}};
  for (const auto& scope : scopes) {
    payload["scopes"].push_back(
        {{"environment", scope.environment}, {"study_id", scope.study_id}});
  }
  if (!subject.empty()) payload["subject"] = subject;
  const std::string body = std::string(kPrefix) + base64url_encode(payload.dump());
  return body + "." + base64url_encode(hmac_sha256(key, body));
}

TokenVerifier::TokenVerifier(std::string key, std::function<Instant()> clock)
    : key_(std::move(key)), clock_(std::move(clock)) {}

AccessToken TokenVerifier::verify(const std::string& token) const {
  if (key_.empty()) {
    throw Error(ErrorCode::invalid_config, "no token key material configured");
  }
  if (token.size() <= kPrefix.size() || token.substr(0, kPrefix.size()) != kPrefix) {
    throw Error(ErrorCode::malformed_token, "token must start with 'fab1.'");
  }
  const auto dot = token.find('.', kPrefix.size());
  if (dot == std::string::npos || dot + 1 >= token.size()) {
    throw Error(ErrorCode::malformed_token, "token must have payload and signature parts");
  }
  const std::string body = token.substr(0, dot);
  auto payload_bytes = base64url_decode(body.substr(kPrefix.size()));
  auto mac_bytes = base64url_decode(token.substr(dot + 1));
  if (!payload_bytes || !mac_bytes) {
    throw Error(ErrorCode::malformed_token, "token parts are not valid base64url");
  }
  const std::string expected = hmac_sha256(key_, body);
  if (mac_bytes->size() != expected.size() ||
      CRYPTO_memcmp(mac_bytes->data(), expected.data(), expected.size()) != 0) {
    throw Error(ErrorCode::invalid_signature, "token signature does not verify");
  }

  Json payload;
  try {
    payload = Json::parse(*payload_bytes);
  } catch (const Json::exception&) {
    throw Error(ErrorCode::malformed_token, "token payload is not valid JSON");
  }
  if (!payload.is_object() || !payload.contains("scopes") || !payload.contains("expires_at")) {
    throw Error(ErrorCode::malformed_token, "token payload lacks scopes or expires_at");
  }

  AccessToken out;
  try {
    for (const auto& scope : payload.at("scopes")) {
      out.scopes.push_back({scope.at("environment").get<std::string>(),
                            scope.at("study_id").get<std::string>()});
    }
    auto expiry = parse_rfc3339(payload.at("expires_at").get<std::string>());
    if (!expiry) {
      throw Error(ErrorCode::malformed_token, "expires_at must be RFC 3339 UTC");
    }
    out.expires_at = *expiry;
    out.subject = payload.value("subject", "");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::malformed_token, std::string("bad token payload: ") + e.what());
  }

  if (clock_() >= out.expires_at) {
    throw Error(ErrorCode::expired, "token expired at " + out.expires_at.to_rfc3339());
  }
  return out;
}

std::string load_key_material(const std::filesystem::path& file) {
  std::string key = read_file(file);
  while (!key.empty() && (key.back() == '\n' || key.back() == '\r')) key.pop_back();
  if (key.empty()) {
    throw Error(ErrorCode::invalid_config, "key file " + file.string() + " is empty");
  }
  return key;
}

}  // namespace fabric::access
