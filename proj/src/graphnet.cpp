#include "cohnet/graphnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <tuple>

#include "cohnet/errors.hpp"
#include "cohnet/util.hpp"

namespace cohnet {

Graph build_graph(const CoherenceMatrix& matrix, double target_mean_degree) {
  const int n = static_cast<int>(matrix.values.rows());
  if (!(target_mean_degree > 0.0 && target_mean_degree < n - 1))
    throw ValidationError("target mean degree " + format_full(target_mean_degree) +
                          " outside (0, " + std::to_string(n - 1) + ")");
  const auto k = std::llround(target_mean_degree * n / 2.0);
  const long long n_pairs = static_cast<long long>(n) * (n - 1) / 2;
  if (k > n_pairs)
    throw ValidationError("cost " + format_full(target_mean_degree) + " needs " +
                          std::to_string(k) + " edges but only " +
                          std::to_string(n_pairs) + " pairs exist");

  struct Entry {
    double value;
    int i, j;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(n_pairs));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      entries.push_back({matrix.values(i, j), i, j});
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.value != b.value) return a.value > b.value;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });

  Graph g;
  g.n_nodes = n;
  g.edges.reserve(static_cast<std::size_t>(k));
  for (long long e = 0; e < k; ++e)
    g.edges.emplace_back(entries[static_cast<std::size_t>(e)].i,
                         entries[static_cast<std::size_t>(e)].j);
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

std::vector<int> node_degrees(const Graph& g) {
  std::vector<int> deg(static_cast<std::size_t>(g.n_nodes), 0);
  for (const auto& [i, j] : g.edges) {
    ++deg[static_cast<std::size_t>(i)];
    ++deg[static_cast<std::size_t>(j)];
  }
  return deg;
}

NodeApls node_apls(const Graph& g) {
  const int n = g.n_nodes;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [i, j] : g.edges) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }

  NodeApls out;
  std::vector<int> dist(static_cast<std::size_t>(n));
  for (int start = 0; start < n; ++start) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(start)] = 0;
    std::queue<int> frontier;
    frontier.push(start);
    std::int64_t total = 0;
    int reached = 0;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const int v : adj[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(v)] != -1) continue;
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        total += dist[static_cast<std::size_t>(v)];
        ++reached;
        frontier.push(v);
      }
    }
    if (reached == 0) {
      out.excluded.insert(start);
    } else {
      out.nodes.push_back(start);
      out.apl.push_back(static_cast<double>(total) / reached);
    }
  }
  return out;
}

namespace {

double std_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return population_std(
      Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

}  // namespace

GraphVariabilityFeatures variability_features(
    const CoherenceMatrix& matrix, const std::vector<double>& cost_levels) {
  if (cost_levels.empty())
    throw ValidationError("graph variability requires at least one cost level");
  GraphVariabilityFeatures out;
  out.band = matrix.band;
  out.values.resize(2 * static_cast<Eigen::Index>(cost_levels.size()));
  for (std::size_t c = 0; c < cost_levels.size(); ++c) {
    const Graph g = build_graph(matrix, cost_levels[c]);
    const NodeApls apls = node_apls(g);
    const std::vector<int> degrees = node_degrees(g);
    std::vector<double> deg_real(degrees.begin(), degrees.end());
    out.values[2 * static_cast<Eigen::Index>(c)] = std_of(apls.apl);
    out.values[2 * static_cast<Eigen::Index>(c) + 1] = std_of(deg_real);
  }
  return out;
}

}  // namespace cohnet
