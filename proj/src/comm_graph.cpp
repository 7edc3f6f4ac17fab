#include "lyapmarl/comm_graph.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>

namespace lyapmarl {

CommGraph::CommGraph(int n_agents,
                     const std::vector<std::pair<int, int>>& edges) {
  if (n_agents <= 0) {
    throw std::invalid_argument("CommGraph: n_agents must be positive");
  }
  adjacency_.assign(n_agents, {});
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n_agents || b < 0 || b >= n_agents) {
      throw std::invalid_argument("CommGraph: edge endpoint " +
                                  std::to_string(a < 0 || a >= n_agents ? a : b) +
                                  " out of range");
    }
    if (a == b) {
      throw std::invalid_argument("CommGraph: self loop at agent " +
                                  std::to_string(a));
    }
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nbrs : adjacency_) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
}

CommGraph CommGraph::complete(int n_agents) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n_agents; ++i) {
    for (int j = i + 1; j < n_agents; ++j) {
      edges.emplace_back(i, j);
    }
  }
  return CommGraph(n_agents, edges);
}

const std::vector<int>& CommGraph::neighbors(int i) const {
  return adjacency_.at(i);
}

bool CommGraph::has_edge(int i, int j) const {
  const auto& nbrs = adjacency_.at(i);
  return std::binary_search(nbrs.begin(), nbrs.end(), j);
}

bool CommGraph::is_connected() const {
  std::vector<bool> seen(adjacency_.size(), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n_agents();
}

int CommGraph::edge_count() const {
  int total = 0;
  for (const auto& nbrs : adjacency_) {
    total += static_cast<int>(nbrs.size());
  }
  return total / 2;
}

}  // namespace lyapmarl
