#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fabric/gateway/record.hpp"

namespace fabric::sim {

struct SimConfig {
  std::uint64_t seed = 42;
  int participants = 3;
  int days = 7;
  double corruption_rate = 0.0;
  Instant start = Instant::from_millis(1709251200000);  // 2024-03-01T00:00:00Z

  Json to_json() const;
  static SimConfig from_json(const Json& doc);
};

struct SimRecord {
  gateway::Record record;
  bool expect_valid = true;
  std::string corruption;  // empty, or the injected defect tag
};

// A generated capture stream plus the expected ingestion outcome for
// every record. The ledger is the oracle the store is audited against
// after a replay.
struct SimStream {
  SimConfig config;
  std::vector<SimRecord> records;  // capture order

  Json ledger() const;
};

// Deterministic: the same config always yields byte-identical records.
SimStream generate(const SimConfig& config);

// Layout: <dir>/records/rec-00001.json ... plus <dir>/ledger.json.
void write_stream(const SimStream& stream, const std::filesystem::path& dir);
SimStream read_stream(const std::filesystem::path& dir);

}  // namespace fabric::sim
