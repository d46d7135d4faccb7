#pragma once

#include "fabric/pipeline/node.hpp"

namespace fabric::pipeline {

// Registers the built-in node library (all version 1.0.0):
//   production_table_reader  production metadata rows -> table
//   daily_window_stats       per-UTC-day aggregates of one value column
//   resample                 hour/day bucket aggregation of one column
//   join_on                  inner join of two tables on one key column
//   threshold_flags          adds a boolean in-range column
//   code_formatter           selects/renames columns for a CODE schema
void register_builtin_nodes(NodeRegistry& registry);

}  // namespace fabric::pipeline
