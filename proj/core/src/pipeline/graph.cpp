#include "fabric/pipeline/graph.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fabric/error.hpp"

namespace fabric::pipeline {

void Graph::add_node(std::string id) {
  if (std::find(nodes_.begin(), nodes_.end(), id) == nodes_.end()) {
    nodes_.push_back(std::move(id));
  }
}

void Graph::add_edge(const std::string& from, const std::string& to) {
  add_node(from);
  add_node(to);
  if (std::find(edges_.begin(), edges_.end(), std::make_pair(from, to)) == edges_.end()) {
    edges_.emplace_back(from, to);
  }
}

bool Graph::has_cycle() const {
  std::map<std::string, int> indegree;
  for (const auto& n : nodes_) indegree[n] = 0;
  for (const auto& [from, to] : edges_) indegree[to] += 1;

  std::set<std::string> frontier;
  for (const auto& [n, d] : indegree) {
    if (d == 0) frontier.insert(n);
  }
  std::size_t removed = 0;
  while (!frontier.empty()) {
    const std::string n = *frontier.begin();
    frontier.erase(frontier.begin());
    removed += 1;
    for (const auto& [from, to] : edges_) {
      if (from == n && --indegree[to] == 0) frontier.insert(to);
    }
  }
  return removed != nodes_.size();
}

std::vector<std::vector<std::string>> Graph::stages() const {
  std::map<std::string, int> indegree;
  for (const auto& n : nodes_) indegree[n] = 0;
  for (const auto& [from, to] : edges_) indegree[to] += 1;

  std::set<std::string> remaining(nodes_.begin(), nodes_.end());
  std::vector<std::vector<std::string>> stages;
  while (!remaining.empty()) {
    std::vector<std::string> stage;
    for (const auto& n : remaining) {
      if (indegree[n] == 0) stage.push_back(n);  // std::set iterates sorted
    }
    if (stage.empty()) {
      throw Error(ErrorCode::cycle_detected, "graph contains a cycle");
    }
    for (const auto& n : stage) {
      remaining.erase(n);
      for (const auto& [from, to] : edges_) {
        if (from == n) indegree[to] -= 1;
      }
    }
    stages.push_back(std::move(stage));
  }
  return stages;
}

}  // namespace fabric::pipeline
