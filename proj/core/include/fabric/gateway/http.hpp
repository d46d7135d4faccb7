#pragma once

#include <string>

#include "fabric/access/token.hpp"
#include "fabric/gateway/ingest_service.hpp"

namespace httplib {
class Server;
}

namespace fabric::gateway {

struct GatewayContext {
  IngestService* ingest = nullptr;
  model::SchemaCatalog* schemas = nullptr;
  access::TokenVerifier verifier;
  std::string environment;  // scope checks are (environment, study_id)
};

// Routes: POST /api/v1/records, POST /api/v1/batches (multipart, one part
// per batch file, part name = relative path), GET /api/v1/schemas/{task}.
// All require a Bearer token; record submission additionally requires a
// scope covering (environment, record.study_id).
void mount_gateway_routes(httplib::Server& server, GatewayContext context);

}  // namespace fabric::gateway
