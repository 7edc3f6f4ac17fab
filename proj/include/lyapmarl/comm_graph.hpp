#pragma once

#include <vector>

namespace lyapmarl {

// Undirected communication topology over agent indices 0..n_agents-1.
// Edges are stored symmetrically and neighbor lists are kept sorted so
// observation layouts are stable.
class CommGraph {
 public:
  // Builds the graph from an explicit edge list. Self loops and indices
  // outside [0, n_agents) are rejected; duplicate edges (in either
  // orientation) collapse to one.
  CommGraph(int n_agents, const std::vector<std::pair<int, int>>& edges);

  // Complete graph on n_agents vertices.
  static CommGraph complete(int n_agents);

  int n_agents() const { return static_cast<int>(adjacency_.size()); }

  // Neighbor indices of agent i, ascending.
  const std::vector<int>& neighbors(int i) const;

  bool has_edge(int i, int j) const;

  // True when every agent is reachable from agent 0 (single agent counts
  // as connected).
  bool is_connected() const;

  // Number of undirected edges.
  int edge_count() const;

 private:
  std::vector<std::vector<int>> adjacency_;
};

}  // namespace lyapmarl
