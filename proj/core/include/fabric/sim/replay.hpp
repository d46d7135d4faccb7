#pragma once

#include <cstdint>
#include <string>

#include "fabric/sim/simulator.hpp"

namespace fabric::sim {

enum class ReplayMode { batch, realtime };

struct ReplayOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;  // bearer token presented on every request
  ReplayMode mode = ReplayMode::batch;
};

struct ReplayTotals {
  std::int64_t received = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t duplicate = 0;

  Json to_json() const;
};

// Drives a generated stream through the ingestion API. Batch mode posts
// one multipart batch per participant-day (blob bytes ride as separate
// parts); realtime mode posts records one by one in capture order.
// Throws Error(transport_error) if the gateway is unreachable or answers
// outside the ingestion contract.
ReplayTotals replay(const SimStream& stream, const ReplayOptions& options);

}  // namespace fabric::sim
