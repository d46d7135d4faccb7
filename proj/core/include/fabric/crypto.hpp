#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace fabric {

// SHA-256 lowercase hex of the given bytes.
std::string sha256_hex(std::string_view bytes);

// Incremental SHA-256 for hashing large or composite state.
class Sha256Stream {
 public:
  Sha256Stream();
  ~Sha256Stream();
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;

  void update(std::string_view bytes);
  std::string hex_digest();  // finalizes; further updates are invalid

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string hmac_sha256(std::string_view key, std::string_view message);

std::string to_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);
std::optional<std::string> base64_decode(std::string_view text);

// URL-safe alphabet, no padding.
std::string base64url_encode(std::string_view bytes);
std::optional<std::string> base64url_decode(std::string_view text);

// Non-deterministic process-unique hex string (run ids, batch nonces).
std::string random_hex(std::size_t n_bytes);

}  // namespace fabric
