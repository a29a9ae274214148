#include "aospr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace aospr {

namespace {

// Kahn's algorithm over the raw input; throws on any directed cycle.
std::vector<int> topological_order(int vertex_count,
                                   const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> indegree(vertex_count, 0);
  std::vector<std::vector<int>> adj(vertex_count);
  for (const auto& [u, v] : edges) {
    adj[static_cast<std::size_t>(u)].push_back(v);
    ++indegree[static_cast<std::size_t>(v)];
  }
  std::vector<int> order;
  order.reserve(vertex_count);
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int v = 0; v < vertex_count; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
  }
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int u : adj[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(u)] == 0) ready.push(u);
    }
  }
  if (static_cast<int>(order.size()) != vertex_count) {
    throw CycleDetected("input graph has a directed cycle");
  }
  return order;
}

std::vector<char> reachable_from(int start, int vertex_count,
                                 const std::vector<std::pair<int, int>>& edges,
                                 bool reverse) {
  std::vector<std::vector<int>> adj(vertex_count);
  for (const auto& [u, v] : edges) {
    if (reverse) {
      adj[static_cast<std::size_t>(v)].push_back(u);
    } else {
      adj[static_cast<std::size_t>(u)].push_back(v);
    }
  }
  std::vector<char> seen(vertex_count, 0);
  std::vector<int> stack{start};
  seen[static_cast<std::size_t>(start)] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        stack.push_back(u);
      }
    }
  }
  return seen;
}

}  // namespace

Dag Dag::build(int vertex_count, const std::vector<std::pair<int, int>>& edges,
               int source, int destination, PruneReport* report) {
  if (edges.empty()) throw ConfigError("graph: edge list is empty");
  if (source == destination) throw ConfigError("graph: source equals destination");
  if (source < 0 || source >= vertex_count || destination < 0 ||
      destination >= vertex_count) {
    throw ConfigError("graph: source/destination vertex out of range");
  }
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= vertex_count || v < 0 || v >= vertex_count) {
      throw ConfigError("graph: edge endpoint out of range");
    }
  }

  const std::vector<int> full_topo = topological_order(vertex_count, edges);

  // Keep only edges on some s->d path: from-vertex reachable from s and
  // to-vertex reaching d.
  const std::vector<char> from_s = reachable_from(source, vertex_count, edges, false);
  const std::vector<char> to_d = reachable_from(destination, vertex_count, edges, true);

  Dag dag;
  dag.vertex_count_ = vertex_count;
  dag.source_ = source;
  dag.destination_ = destination;
  dag.edges_.push_back(Edge{});  // slot 0 unused
  if (report != nullptr) {
    report->input_edges = static_cast<int>(edges.size());
    report->removed.clear();
  }
  for (const auto& [u, v] : edges) {
    if (from_s[static_cast<std::size_t>(u)] && to_d[static_cast<std::size_t>(v)]) {
      dag.edges_.push_back(Edge{u, v});
    } else if (report != nullptr) {
      report->removed.emplace_back(u, v);
    }
  }
  if (dag.edge_count() == 0 || !from_s[static_cast<std::size_t>(destination)]) {
    throw NoPath("graph: no path from source to destination");
  }

  dag.out_edges_.assign(static_cast<std::size_t>(vertex_count), {});
  for (EdgeId e = 1; e <= dag.edge_count(); ++e) {
    dag.out_edges_[static_cast<std::size_t>(dag.edge(e).from)].push_back(e);
  }
  dag.topo_ = full_topo;
  return dag;
}

Dag build_dag(const std::vector<std::pair<int, int>>& edges, int source, int destination,
              PruneReport* report) {
  int max_vertex = std::max(source, destination);
  for (const auto& [u, v] : edges) max_vertex = std::max({max_vertex, u, v});
  return Dag::build(max_vertex + 1, edges, source, destination, report);
}

Path::Path(std::vector<EdgeId> edges, int n)
    : edges_(std::move(edges)), mask_(static_cast<std::size_t>(n) + 1, 0) {
  for (EdgeId e : edges_) {
    if (e < 1 || e > n) throw InternalInvariant("path: edge id out of range");
    if (mask_[static_cast<std::size_t>(e)]) throw InternalInvariant("path: repeated edge");
    mask_[static_cast<std::size_t>(e)] = 1;
  }
  if (edges_.empty()) throw InternalInvariant("path: empty");
}

PathSet::PathSet(std::vector<Path> paths, int n) : paths_(std::move(paths)), n_(n) {
  if (paths_.size() < 2) throw InternalInvariant("path set: fewer than 2 paths");
  incidence_.assign(static_cast<std::size_t>(n) + 1, {});
  std::vector<char> covered(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < size(); ++i) {
    const Path& p = paths_[static_cast<std::size_t>(i)];
    k_ = std::max(k_, p.length());
    for (EdgeId e : p.edges()) {
      incidence_[static_cast<std::size_t>(e)].push_back(i);
      covered[static_cast<std::size_t>(e)] = 1;
    }
  }
  for (EdgeId e = 1; e <= n; ++e) {
    if (!covered[static_cast<std::size_t>(e)]) {
      throw InternalInvariant("path set: edge " + std::to_string(e) +
                              " not on any path");
    }
  }
}

std::uint64_t count_paths(const Dag& dag) {
  // Paths-to-destination counts accumulated in reverse topological order.
  std::vector<std::uint64_t> count(static_cast<std::size_t>(dag.vertex_count()), 0);
  count[static_cast<std::size_t>(dag.destination())] = 1;
  const auto& topo = dag.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if (*it == dag.destination()) continue;
    std::uint64_t total = 0;
    for (EdgeId e : dag.out_edges(*it)) {
      const std::uint64_t add = count[static_cast<std::size_t>(dag.edge(e).to)];
      if (total > std::numeric_limits<std::uint64_t>::max() - add) {
        throw NumericOverflow("path count overflows uint64");
      }
      total += add;
    }
    count[static_cast<std::size_t>(*it)] = total;
  }
  return count[static_cast<std::size_t>(dag.source())];
}

PathSet enumerate_paths(const Dag& dag, std::uint64_t cap) {
  const std::uint64_t total = count_paths(dag);
  if (total > cap) {
    throw PathExplosion("path count " + std::to_string(total) + " exceeds cap " +
                        std::to_string(cap));
  }
  std::vector<Path> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<EdgeId> current;
  // DFS taking out-edges in ascending id emits lexicographic order.
  auto dfs = [&](auto&& self, int vertex) -> void {
    if (vertex == dag.destination()) {
      out.emplace_back(current, dag.edge_count());
      return;
    }
    for (EdgeId e : dag.out_edges(vertex)) {
      current.push_back(e);
      self(self, dag.edge(e).to);
      current.pop_back();
    }
  };
  dfs(dfs, dag.source());
  return PathSet(std::move(out), dag.edge_count());
}

bool CoveringSet::is_member(int path_index) const {
  return std::find(members_.begin(), members_.end(), path_index) != members_.end();
}

int CoveringSet::member_pos(int path_index) const {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i] == path_index) return static_cast<int>(i);
  }
  return -1;
}

CoveringSet covering_set(const PathSet& paths) {
  const int n = paths.edge_count();
  CoveringSet cover;
  cover.designated_.assign(static_cast<std::size_t>(n) + 1, -1);
  std::vector<char> covered(static_cast<std::size_t>(n) + 1, 0);
  int remaining = n;
  while (remaining > 0) {
    int best = -1;
    int best_gain = 0;
    for (int i = 0; i < paths.size(); ++i) {
      int gain = 0;
      for (EdgeId e : paths.path(i).edges()) {
        if (!covered[static_cast<std::size_t>(e)]) ++gain;
      }
      if (gain > best_gain) {  // ties keep the lowest path index
        best_gain = gain;
        best = i;
      }
    }
    if (best < 0) throw InternalInvariant("covering set: uncoverable edge");
    cover.members_.push_back(best);
    cover.designated_edges_.emplace_back();
    for (EdgeId e : paths.path(best).edges()) {
      if (!covered[static_cast<std::size_t>(e)]) {
        covered[static_cast<std::size_t>(e)] = 1;
        cover.designated_[static_cast<std::size_t>(e)] = best;
        cover.designated_edges_.back().push_back(e);
        --remaining;
      }
    }
  }
  return cover;
}

Path shortest_path(const Dag& dag, std::span<const double> weights) {
  if (static_cast<int>(weights.size()) != dag.edge_count() + 1) {
    throw InternalInvariant("shortest_path: weight vector size mismatch");
  }
  for (EdgeId e = 1; e <= dag.edge_count(); ++e) {
    const double w = weights[static_cast<std::size_t>(e)];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("shortest_path: weights must be finite and nonnegative");
    }
  }

  // Backward pass over reverse topological order keeps, per vertex, the
  // best (distance, lexicographically-smallest edge sequence) to d.
  const int vcount = dag.vertex_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(vcount), kInf);
  std::vector<std::vector<EdgeId>> best_seq(static_cast<std::size_t>(vcount));
  dist[static_cast<std::size_t>(dag.destination())] = 0.0;

  const auto& topo = dag.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const int v = *it;
    if (v == dag.destination()) continue;
    for (EdgeId e : dag.out_edges(v)) {
      const int u = dag.edge(e).to;
      if (dist[static_cast<std::size_t>(u)] == kInf) continue;
      const double cand = weights[static_cast<std::size_t>(e)] + dist[static_cast<std::size_t>(u)];
      bool take = false;
      if (cand < dist[static_cast<std::size_t>(v)]) {
        take = true;
      } else if (cand == dist[static_cast<std::size_t>(v)]) {
        std::vector<EdgeId> seq{e};
        seq.insert(seq.end(), best_seq[static_cast<std::size_t>(u)].begin(),
                   best_seq[static_cast<std::size_t>(u)].end());
        take = seq < best_seq[static_cast<std::size_t>(v)];
      }
      if (take) {
        dist[static_cast<std::size_t>(v)] = cand;
        best_seq[static_cast<std::size_t>(v)].assign(1, e);
        best_seq[static_cast<std::size_t>(v)].insert(
            best_seq[static_cast<std::size_t>(v)].end(),
            best_seq[static_cast<std::size_t>(u)].begin(),
            best_seq[static_cast<std::size_t>(u)].end());
      }
    }
  }
  if (dist[static_cast<std::size_t>(dag.source())] == kInf) {
    throw InternalInvariant("shortest_path: destination unreachable");
  }
  return Path(best_seq[static_cast<std::size_t>(dag.source())], dag.edge_count());
}

}  // namespace aospr
