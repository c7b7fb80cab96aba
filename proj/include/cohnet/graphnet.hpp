#pragma once

#include <Eigen/Dense>
#include <set>
#include <utility>
#include <vector>

#include "cohnet/dsp.hpp"

namespace cohnet {

// Undirected simple graph; edges stored as sorted (i, j) pairs with i < j.
struct Graph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;
};

// Selects the k = round(target_mean_degree * n / 2) strongest off-diagonal
// pairs as edges. Coherence ties break lexicographically on (i, j).
Graph build_graph(const CoherenceMatrix& matrix, double target_mean_degree);

std::vector<int> node_degrees(const Graph& g);

struct NodeApls {
  // Mean shortest-path length to the other nodes of each node's component,
  // for nodes with at least one reachable peer; `nodes` lists their indices.
  std::vector<double> apl;
  std::vector<int> nodes;
  std::set<int> excluded;  // isolated nodes
};

NodeApls node_apls(const Graph& g);

inline const std::vector<double> kDefaultCostLevels = {6.0, 6.5, 7.0, 7.5};

struct GraphVariabilityFeatures {
  std::string band;
  // [std_APL@c0, std_degree@c0, std_APL@c1, std_degree@c1, ...]
  Eigen::VectorXd values;
};

GraphVariabilityFeatures variability_features(
    const CoherenceMatrix& matrix,
    const std::vector<double>& cost_levels = kDefaultCostLevels);

}  // namespace cohnet
