#pragma once

#include "fabric/access/query.hpp"
#include "fabric/access/token.hpp"

namespace httplib {
class Server;
}

namespace fabric::access {

struct AccessContext {
  const DatasetCatalog* catalog = nullptr;
  TokenVerifier verifier;
};

// Routes: GET /api/v1/datasets, POST /api/v1/query. Bearer token required
// on both; scope decides visibility.
void mount_access_routes(httplib::Server& server, AccessContext context);

}  // namespace fabric::access
