#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fabric::pipeline {

// Directed graph over instance ids, small enough for exact algorithms.
class Graph {
 public:
  void add_node(std::string id);
  void add_edge(const std::string& from, const std::string& to);

  bool has_cycle() const;

  // Kahn stages: a stage holds every node whose predecessors all sit in
  // earlier stages; nodes within a stage are mutually independent and
  // sorted lexicographically. Throws Error(cycle_detected).
  std::vector<std::vector<std::string>> stages() const;

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<std::pair<std::string, std::string>>& edges() const { return edges_; }

 private:
  std::vector<std::string> nodes_;
  std::vector<std::pair<std::string, std::string>> edges_;
};

}  // namespace fabric::pipeline
