#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fabric {

enum class ErrorCode {
  parse_error,
  invariant_error,
  conflict,
  not_found,
  invalid_transition,
  constraint_violation,
  storage_io,
  dangling_blob,
  checksum_mismatch,
  code_not_validated,
  malformed_envelope,
  schema_not_found,
  malformed_manifest,
  missing_file,
  invalid_manifest,
  unknown_node,
  cycle_detected,
  port_kind_mismatch,
  unbound_output,
  node_failure,
  code_validation_failed,
  invalid_config,
  transport_error,
  unauthorized,
  unknown_dataset,
  unknown_field,
  bad_range,
  malformed_token,
  invalid_signature,
  expired,
};

std::string_view to_string(ErrorCode code);

// Hard failure carrying a stable machine-readable code. Data-quality
// outcomes (validation reports, promotion skips, batch rejects) are
// values, not errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(std::move(message)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fabric
