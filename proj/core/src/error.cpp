#include "fabric/error.hpp"

namespace fabric {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return "PARSE_ERROR";
    case ErrorCode::invariant_error: return "INVARIANT_ERROR";
    case ErrorCode::conflict: return "CONFLICT";
    case ErrorCode::not_found: return "NOT_FOUND";
    case ErrorCode::invalid_transition: return "INVALID_TRANSITION";
    case ErrorCode::constraint_violation: return "CONSTRAINT_VIOLATION";
    case ErrorCode::storage_io: return "STORAGE_IO";
    case ErrorCode::dangling_blob: return "DANGLING_BLOB";
    case ErrorCode::checksum_mismatch: return "CHECKSUM_MISMATCH";
    case ErrorCode::code_not_validated: return "CODE_NOT_VALIDATED";
    case ErrorCode::malformed_envelope: return "MALFORMED_ENVELOPE";
    case ErrorCode::schema_not_found: return "SCHEMA_NOT_FOUND";
    case ErrorCode::malformed_manifest: return "MALFORMED_MANIFEST";
    case ErrorCode::missing_file: return "MISSING_FILE";
    case ErrorCode::invalid_manifest: return "INVALID_MANIFEST";
    case ErrorCode::unknown_node: return "UNKNOWN_NODE";
    case ErrorCode::cycle_detected: return "CYCLE_DETECTED";
    case ErrorCode::port_kind_mismatch: return "PORT_KIND_MISMATCH";
    case ErrorCode::unbound_output: return "UNBOUND_OUTPUT";
    case ErrorCode::node_failure: return "NODE_FAILURE";
    case ErrorCode::code_validation_failed: return "CODE_VALIDATION_FAILED";
    case ErrorCode::invalid_config: return "INVALID_CONFIG";
    case ErrorCode::transport_error: return "TRANSPORT_ERROR";
    case ErrorCode::unauthorized: return "UNAUTHORIZED";
    case ErrorCode::unknown_dataset: return "UNKNOWN_DATASET";
    case ErrorCode::unknown_field: return "UNKNOWN_FIELD";
    case ErrorCode::bad_range: return "BAD_RANGE";
    case ErrorCode::malformed_token: return "MALFORMED";
    case ErrorCode::invalid_signature: return "INVALID_SIGNATURE";
    case ErrorCode::expired: return "EXPIRED";
  }
  return "UNKNOWN";
}

}  // namespace fabric
